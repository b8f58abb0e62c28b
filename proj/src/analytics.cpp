#include "mfdlab/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mfdlab/parallel.hpp"
#include "mfdlab/runner.hpp"

namespace mfdlab {

namespace {

constexpr std::uint64_t kNetworkTag = 1;
constexpr std::uint64_t kStateTag = 2;

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void check_grid(const std::vector<double>& densities) {
  if (densities.empty()) throw ParameterError("densities", "grid is empty");
  for (std::size_t i = 0; i < densities.size(); ++i) {
    const double k = densities[i];
    if (!(k >= 0.0 && k <= 1.0)) throw ParameterError("densities", "must lie in [0,1]");
    if (i > 0 && !(k > densities[i - 1]))
      throw ParameterError("densities", "must be strictly increasing");
  }
}

}  // namespace

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ParameterError("values", "no samples");
  if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("q", "must lie in [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<Band> summarize(const std::vector<double>& densities,
                            const std::vector<std::vector<double>>& flows) {
  if (densities.size() != flows.size())
    throw StructuralError("one flow sample list per density expected");
  std::vector<Band> bands;
  bands.reserve(densities.size());
  for (std::size_t i = 0; i < densities.size(); ++i) {
    Band b;
    b.k = densities[i];
    b.mean = mean_of(flows[i]);
    b.p5 = percentile(flows[i], 0.05);
    b.p95 = percentile(flows[i], 0.95);
    // Keep p5 <= mean <= p95 despite rounding in the sum.
    b.mean = std::clamp(b.mean, b.p5, b.p95);
    bands.push_back(b);
  }
  return bands;
}

MfdEstimate estimate_mfd(const NetworkConfig& cfg, const Policy& policy, const MfdOptions& opts) {
  cfg.validate();
  check_grid(opts.densities);
  if (opts.reps < 2) throw ParameterError("reps", "must be at least 2");
  if (opts.warmup_cycles < 0) throw ParameterError("warmup_cycles", "must be nonnegative");
  if (opts.measure_cycles < 1) throw ParameterError("measure_cycles", "must be at least 1");

  const int g = decision_interval(policy, cfg);
  const int warmup = opts.warmup_cycles * 2 * g;
  const int measure = opts.measure_cycles * 2 * g;
  const std::size_t nk = opts.densities.size();
  const auto reps = static_cast<std::size_t>(opts.reps);

  MfdEstimate est;
  est.policy = std::string(to_string(policy.kind()));
  est.lambda = cfg.lambda;
  est.delta = cfg.delta;
  est.turn_prob = cfg.turn_prob;
  est.densities = opts.densities;
  est.flows.assign(nk, std::vector<double>(reps));
  est.realized_density.assign(nk, std::vector<double>(reps));

  parallel_for(nk * reps, opts.jobs, [&](std::size_t task) {
    const std::size_t i = task / reps;
    const std::size_t r = task % reps;
    NetworkConfig c = cfg;
    c.seed = derive_seed(opts.seed, task, kNetworkTag);
    const Network net = build_network(c);
    NetworkState s = init_bernoulli(net, opts.densities[i], derive_seed(opts.seed, task, kStateTag));
    est.realized_density[i][r] = s.density();
    advance(s, net, policy, warmup, g);
    const std::size_t moved = advance(s, net, policy, measure, g);
    est.flows[i][r] =
        static_cast<double>(moved) / (static_cast<double>(net.total_cells()) * measure);
  });
  est.bands = summarize(est.densities, est.flows);
  return est;
}

CutEstimate extreme_cuts(double lambda, double delta) {
  if (!(lambda > 0.0)) throw ParameterError("lambda", "must be positive");
  if (!(delta >= 0.0)) throw ParameterError("delta", "must be nonnegative");
  const double v = 4.0 * lambda / (delta * delta + 2.0 * lambda + 1.0);
  return {v, v};
}

bool overlap_test(const MfdEstimate& a, const MfdEstimate& b, double lo, double hi) {
  std::vector<const Band*> ba;
  std::vector<const Band*> bb;
  for (const auto& x : a.bands)
    if (x.k >= lo && x.k <= hi) ba.push_back(&x);
  for (const auto& x : b.bands)
    if (x.k >= lo && x.k <= hi) bb.push_back(&x);
  if (ba.size() != bb.size() || ba.empty())
    throw StructuralError("density grids differ on the compared range");
  for (std::size_t i = 0; i < ba.size(); ++i) {
    if (std::abs(ba[i]->k - bb[i]->k) > 1e-12)
      throw StructuralError("density grids differ on the compared range");
    if (std::max(ba[i]->p5, bb[i]->p5) > std::min(ba[i]->p95, bb[i]->p95)) return false;
  }
  return true;
}

const char* to_string(Skew s) noexcept {
  switch (s) {
    case Skew::Left: return "left";
    case Skew::Symmetric: return "symmetric";
    case Skew::Right: return "right";
  }
  return "?";
}

double peak_density(const MfdEstimate& mfd) {
  const auto& b = mfd.bands;
  if (b.empty()) throw StructuralError("empty MFD");
  std::size_t best = 0;
  for (std::size_t i = 1; i < b.size(); ++i)
    if (b[i].mean > b[best].mean) best = i;
  if (best == 0 || best + 1 == b.size()) return b[best].k;
  const double x0 = b[best - 1].k, x1 = b[best].k, x2 = b[best + 1].k;
  const double y0 = b[best - 1].mean, y1 = b[best].mean, y2 = b[best + 1].mean;
  // Vertex of the interpolating parabola on a possibly uneven grid.
  const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
  const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
  if (den == 0.0) return x1;
  return std::clamp(x1 - 0.5 * num / den, x0, x2);
}

Skew skewness(const MfdEstimate& mfd, double tau) {
  const auto& b = mfd.bands;
  if (b.size() < 5 || b.front().k > 0.1 + 1e-9 || b.back().k < 0.9 - 1e-9)
    throw StructuralError("skewness needs at least 5 densities spanning [0.1, 0.9]");
  const double k = peak_density(mfd);
  if (k < 0.5 - tau) return Skew::Left;
  if (k > 0.5 + tau) return Skew::Right;
  return Skew::Symmetric;
}

DetachingReport detect_detaching(const NetworkConfig& cfg, const Policy& policy, double k,
                                 int horizon, std::uint64_t seed, const DetachingOptions& opts) {
  cfg.validate();
  if (!(k > 0.0 && k < 1.0)) throw ParameterError("k", "must lie in (0,1)");
  if (horizon < 4) throw ParameterError("horizon", "must be at least 4 steps");
  if (opts.reps < 1) throw ParameterError("reps", "must be at least 1");

  const auto reps = static_cast<std::size_t>(opts.reps);
  const int head = horizon - horizon / 4;
  const int tail = horizon - head;
  struct Rep {
    bool permanent = false;
    double green_fraction = 0;
    double flow = 0;
    double lqf_flow = 0;
  };
  std::vector<Rep> out(reps);

  parallel_for(reps, opts.jobs, [&](std::size_t r) {
    NetworkConfig c = cfg;
    c.seed = derive_seed(seed, r, kNetworkTag);
    const Network net = build_network(c);
    const NetworkState init = init_bernoulli(net, k, derive_seed(seed, r, kStateTag));
    const double cells = static_cast<double>(net.total_cells());

    NetworkState s = init;
    const int g = decision_interval(policy, cfg);
    advance(s, net, policy, head, g);
    const std::vector<Phase> start = s.phase;
    std::vector<std::uint8_t> changed(start.size(), 0);
    std::size_t moved = 0;
    StepMetrics m;
    for (int t = 0; t < tail; ++t) {
      if (s.clock > 0 && s.clock % g == 0) apply_decisions(s, net, policy);
      for (std::size_t v = 0; v < start.size(); ++v)
        if (s.phase[v] != start[v]) changed[v] = 1;
      step(s, net, m);
      moved += m.moved;
    }
    Rep& rep = out[r];
    rep.permanent = std::none_of(changed.begin(), changed.end(), [](auto x) { return x != 0; });
    rep.flow = static_cast<double>(moved) / (cells * tail);

    int green_streets = 0;
    for (int row = 0; row < net.rows(); ++row) {
      bool green = true;
      for (int col = 0; col < net.cols() && green; ++col) {
        const auto v = static_cast<std::size_t>(net.node(row, col));
        green = !changed[v] && start[v] == Phase::EastWestGreen;
      }
      green_streets += green;
    }
    for (int col = 0; col < net.cols(); ++col) {
      bool green = true;
      for (int row = 0; row < net.rows() && green; ++row) {
        const auto v = static_cast<std::size_t>(net.node(row, col));
        green = !changed[v] && start[v] == Phase::NorthSouthGreen;
      }
      green_streets += green;
    }
    rep.green_fraction = static_cast<double>(green_streets) / (net.rows() + net.cols());

    const Policy lqf = Policy::lqf();
    NetworkState base = init;
    const int gl = decision_interval(lqf, cfg);
    advance(base, net, lqf, head, gl);
    rep.lqf_flow = static_cast<double>(advance(base, net, lqf, tail, gl)) / (cells * tail);
  });

  DetachingReport rep;
  rep.permanent_colors = std::all_of(out.begin(), out.end(), [](const Rep& x) { return x.permanent; });
  for (const auto& x : out) {
    rep.green_street_fraction += x.green_fraction / static_cast<double>(reps);
    rep.mean_flow += x.flow / static_cast<double>(reps);
    rep.lqf_mean_flow += x.lqf_flow / static_cast<double>(reps);
  }
  rep.detaching = rep.mean_flow > rep.lqf_mean_flow;
  return rep;
}

}  // namespace mfdlab
