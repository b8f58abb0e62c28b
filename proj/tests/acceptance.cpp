// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Criteria can be selected by number on the
// command line, e.g. `acceptance 1 2 9`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mfdlab/analytics.hpp"
#include "mfdlab/bernoulli.hpp"
#include "mfdlab/cli.hpp"
#include "mfdlab/lattice.hpp"
#include "mfdlab/learning.hpp"
#include "mfdlab/network.hpp"
#include "mfdlab/policy.hpp"
#include "mfdlab/runner.hpp"
#include "mfdlab/simulation.hpp"

using namespace mfdlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> grid9() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

// 8x8 torus, ell 10, delta 0, p 0.75, lambda 1.
NetworkConfig reference_net(double lambda = 1.0) {
  NetworkConfig c;
  c.lambda = lambda;
  return c;
}

MfdOptions reference_mfd(std::vector<double> densities = grid9()) {
  MfdOptions o;
  o.densities = std::move(densities);
  o.reps = 50;
  return o;
}

// Shared by criteria 11, 12 and 14.
const MfdEstimate& lqf_reference() {
  static const MfdEstimate e = estimate_mfd(reference_net(), Policy::lqf(), reference_mfd());
  return e;
}

double worst_ratio(const MfdEstimate& cand, const MfdEstimate& lqf) {
  double w = INFINITY;
  for (std::size_t i = 0; i < lqf.bands.size(); ++i)
    if (lqf.bands[i].mean > 0) w = std::min(w, cand.bands[i].mean / lqf.bands[i].mean);
  return w;
}

// --- 1 ---------------------------------------------------------------------

Outcome truth_table() {
  // Next state of the middle cell for neighbourhoods 111 .. 000.
  const bool expected[8] = {true, false, true, true, true, false, false, false};
  int bad = 0;
  for (int i = 0; i < 8; ++i) {
    const int pattern = 7 - i;
    const bool l = pattern & 4, c = pattern & 2, r = pattern & 1;
    bad += rule184_cell(l, c, r) != expected[i];
    // Same neighbourhood on a three-cell ring, middle cell.
    Lane lane(3);
    lane.set(0, l);
    lane.set(1, c);
    lane.set(2, r);
    bad += rule184_step(lane, Periodic{}).get(1) != expected[i];
  }
  return {bad == 0, fmt("%d mismatches over 8 neighbourhoods", bad)};
}

// --- 2 ---------------------------------------------------------------------

Outcome ring_diagram() {
  constexpr int L = 100;
  std::mt19937_64 rng(2);
  double worst = 0;
  for (int n = 10; n <= 90; n += 10) {
    const double k = n / double(L);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<int> cells(L);
      for (int i = 0; i < L; ++i) cells[i] = i;
      std::shuffle(cells.begin(), cells.end(), rng);
      Lane lane(L);
      for (int i = 0; i < n; ++i) lane.set(static_cast<std::size_t>(cells[i]), true);
      for (int t = 0; t < 200; ++t) lane.advance(Periodic{});
      for (int t = 0; t < 100; ++t) {
        const double q = static_cast<double>(lane.advance(Periodic{})) / L;
        worst = std::max(worst, std::abs(q - std::min(k, 1 - k)));
      }
    }
  }
  return {worst <= 1e-12, fmt("max |q - min(k,1-k)| = %.3g", worst)};
}

// --- 3, 4 ------------------------------------------------------------------

Outcome cuts() {
  const auto c = extreme_cuts(1, 0);
  return {c.u0 == 4.0 / 3.0 && c.w0 == 4.0 / 3.0, fmt("u0 = %.17g, w0 = %.17g", c.u0, c.w0)};
}

Outcome green_times() {
  const int a = min_green(PolicyKind::Lqf, 10, 1);
  const int b = min_green(PolicyKind::Random, 10, 1);
  return {a == 20 && b == 10, fmt("LQF %d, RND %d", a, b)};
}

// --- 5 ---------------------------------------------------------------------

Outcome congested_equivalence() {
  bool ok = true;
  std::string detail;
  for (double lambda : {1.0, 2.0}) {
    const auto o = reference_mfd({0.8, 0.9});
    const MfdEstimate lqf = estimate_mfd(reference_net(lambda), Policy::lqf(), o);
    const MfdEstimate rnd = estimate_mfd(reference_net(lambda), Policy::random(), o);
    const bool overlap = overlap_test(lqf, rnd);
    ok &= overlap;
    for (std::size_t i = 0; i < 2; ++i) {
      const double d = std::abs(lqf.bands[i].mean - rnd.bands[i].mean);
      ok &= d <= 0.02;
      detail += fmt("lambda=%g k=%g |dmean|=%.4f%s; ", lambda, o.densities[i], d,
                    overlap ? "" : " (no overlap)");
    }
  }
  return {ok, detail};
}

// --- 6 ---------------------------------------------------------------------

Outcome conservation() {
  std::mt19937_64 rng(6);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto pick = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };
  int violations = 0;
  long long checks = 0;
  for (int pair = 0; pair < 20; ++pair) {
    NetworkConfig c;
    c.rows = pick(2, 6);
    c.cols = pick(2, 6);
    c.mean_block_length = pick(6, 14);
    c.lambda = uni(0.25, 3.0);
    c.delta = uni(0.0, 0.4);
    c.turn_prob = uni(0.0, 1.0);
    c.seed = rng();
    const double k = uni(0.0, 1.0);
    const Network net = build_network(c);
    const std::vector<Policy> policies = {Policy::lqf(), Policy::sqf(), Policy::random(),
                                          Policy::neural(sample_weights(c.seed, 1.0))};
    for (const Policy& p : policies) {
      NetworkState s = init_bernoulli(net, k, c.seed ^ 0x5eed);
      const std::size_t n0 = s.vehicle_count();
      const int g = decision_interval(p, c);
      for (int t = 0; t < 10000; ++t) {
        advance(s, net, p, 1, g);
        violations += s.vehicle_count() != n0;
        ++checks;
      }
    }
  }
  return {violations == 0, fmt("%d violations in %lld step checks", violations, checks)};
}

// --- 7 ---------------------------------------------------------------------

std::vector<double> enumerate_pmf(int n, double p) {
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1, 0.0);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    const int s = __builtin_popcount(mask);
    pmf[s] += std::pow(p, s) * std::pow(1 - p, n - s);
  }
  return pmf;
}

std::vector<double> enumerate_extreme(const std::vector<double>& pmf, int copies, bool take_max) {
  const std::size_t m = pmf.size();
  std::vector<double> out(m, 0.0);
  std::vector<std::size_t> idx(static_cast<std::size_t>(copies), 0);
  while (true) {
    double w = 1.0;
    std::size_t ext = idx[0];
    for (std::size_t i : idx) {
      w *= pmf[i];
      ext = take_max ? std::max(ext, i) : std::min(ext, i);
    }
    out[ext] += w;
    std::size_t d = 0;
    while (d < idx.size() && ++idx[d] == m) idx[d++] = 0;
    if (d == idx.size()) break;
  }
  return out;
}

double cdf_at(const std::vector<double>& pmf, long x) {
  if (x < 0) return 0.0;
  double s = 0;
  for (long i = 0; i <= x && i < static_cast<long>(pmf.size()); ++i) s += pmf[i];
  return std::min(1.0, s);
}

long quantile_of(const std::vector<double>& pmf, double q) {
  const long top = static_cast<long>(pmf.size()) - 1;
  for (long n = 0; n < top; ++n)
    if (cdf_at(pmf, n) >= q - 1e-12) return n;
  return top;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-11 * std::max(1.0, std::abs(b)); }

Outcome binomial_oracles() {
  const double ks[] = {0.0, 0.1, 0.3, 0.5, 0.77, 1.0};
  const double qs[] = {0.05, 0.25, 0.5, 0.75, 0.95};
  int bad = 0;
  long compared = 0;
  for (int ell = 1; ell <= 6; ++ell)
    for (double k : ks) {
      const auto base = enumerate_pmf(2 * ell, k);
      for (long n = -1; n <= 2 * ell; ++n, ++compared) bad += !close(binom_cdf(2 * ell, k, n), cdf_at(base, n));
      for (int j : {1, 2}) {
        const auto mx = enumerate_extreme(base, 2 * j, true);
        const auto mn = enumerate_extreme(base, 2 * j, false);
        for (long n = -1; n <= 2 * ell; ++n, compared += 2) {
          bad += !close(fn_j(PolicyKind::Lqf, j, ell, k, n), cdf_at(mx, n));
          bad += !close(fn_j(PolicyKind::Sqf, j, ell, k, n), cdf_at(mn, n));
        }
        const auto ql = flow_quantiles(PolicyKind::Lqf, j, ell, k, qs);
        const auto qsq = flow_quantiles(PolicyKind::Sqf, j, ell, k, qs);
        const auto qr = flow_quantiles(PolicyKind::Random, j, ell, k, qs);
        for (std::size_t i = 0; i < std::size(qs); ++i, compared += 3) {
          bad += ql[i] != quantile_of(mx, qs[i]) / (8.0 * ell);
          bad += qsq[i] != quantile_of(mn, qs[i]) / (8.0 * ell);
          bad += qr[i] != quantile_of(base, qs[i]) / (8.0 * ell);
        }
      }
      const auto two = enumerate_extreme(base, 2, false);
      const auto m2 = min_two_binomials_quantiles(ell, k, qs);
      for (std::size_t i = 0; i < std::size(qs); ++i, ++compared) bad += m2[i] != quantile_of(two, qs[i]);
    }

  // Monte Carlo, 1e6 samples per case, every support point within 3 SE.
  constexpr int N = 1000000;
  std::mt19937_64 rng(7);
  struct Case {
    int ell;
    double k;
    int copies;
    bool take_max;
    std::function<double(long)> cdf;
  };
  const std::vector<Case> cases = {
      {10, 0.3, 4, true, [](long n) { return fn_j(PolicyKind::Lqf, 2, 10, 0.3, n); }},
      {10, 0.6, 2, false, [](long n) { return fn_j(PolicyKind::Sqf, 1, 10, 0.6, n); }},
      {10, 0.45, 1, false, [](long n) { return fn_j(PolicyKind::Random, 3, 10, 0.45, n); }},
      {8, 0.45, 2, false, [](long m) {
         const double f = binom_cdf(16, 0.45, m);
         return 1.0 - (1.0 - f) * (1.0 - f);
       }}};
  int mc_bad = 0, mc_points = 0;
  for (const auto& c : cases) {
    std::binomial_distribution<int> draw(2 * c.ell, c.k);
    std::vector<long> hist(static_cast<std::size_t>(2 * c.ell) + 1, 0);
    for (int s = 0; s < N; ++s) {
      int ext = draw(rng);
      for (int i = 1; i < c.copies; ++i) {
        const int x = draw(rng);
        ext = c.take_max ? std::max(ext, x) : std::min(ext, x);
      }
      ++hist[ext];
    }
    long acc = 0;
    for (long n = 0; n <= 2 * c.ell; ++n) {
      acc += hist[n];
      const double f = c.cdf(n);
      // The standard error is meaningful only where both tails hold a
      // reasonable expected count.
      if (N * std::min(f, 1 - f) < 10) continue;
      const double se = std::sqrt(f * (1 - f) / N);
      mc_bad += std::abs(static_cast<double>(acc) / N - f) > 3 * se;
      ++mc_points;
    }
  }
  return {bad == 0 && mc_bad == 0,
          fmt("%d/%ld enumeration mismatches, %d/%d Monte-Carlo points outside 3 SE", bad, compared,
              mc_bad, mc_points)};
}

// --- 8 ---------------------------------------------------------------------

Outcome dominance() {
  int bad = 0;
  long n_checks = 0;
  for (int ell : {1, 3, 6, 10, 20})
    for (double k : {0.05, 0.2, 0.5, 0.8, 0.95})
      for (long n = 0; n <= 2 * ell; ++n)
        for (int j = 1; j < 8; ++j, n_checks += 2) {
          bad += fn_j(PolicyKind::Lqf, j + 1, ell, k, n) > fn_j(PolicyKind::Lqf, j, ell, k, n);
          bad += fn_j(PolicyKind::Sqf, j + 1, ell, k, n) < fn_j(PolicyKind::Sqf, j, ell, k, n);
        }
  return {bad == 0, fmt("%d violations in %ld comparisons", bad, n_checks)};
}

// --- 9 ---------------------------------------------------------------------

Outcome gradients() {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> cnt(0, 10);
  const long double h = 1e-4L;
  long double worst = 0;
  int failures = 0;
  for (int t = 0; t < 100; ++t) {
    Vector<long double> th(MlpLayout{}.size());
    for (auto& x : th) x = 0.3L * nd(gen);
    Observation o;
    for (int i = 0; i < kObservationSize; ++i) o[i] = cnt(gen);
    const Action a = t % 2 ? Action::NsRed : Action::NsGreen;
    const Vector<long double> g = grad_log_prob(th, o, a);
    for (Eigen::Index i = 0; i < th.size(); ++i) {
      const long double x = th[i];
      const auto f = [&](long double d) {
        th[i] = x + d;
        return log_prob(th, o, a);
      };
      // Five-point central difference.
      const long double fd = (f(-2 * h) - 8 * f(-h) + 8 * f(h) - f(2 * h)) / (12 * h);
      th[i] = x;
      const long double err = std::abs(fd - g[i]);
      const long double scale = std::max(std::abs(fd), std::abs(g[i]));
      // Components that vanish analytically are compared absolutely.
      if (scale == 0) {
        failures += err > 1e-13L;
        continue;
      }
      failures += err > 1e-5L * scale && err > 1e-13L;
      if (err > 1e-13L) worst = std::max(worst, err / scale);
    }
  }
  return {failures == 0, fmt("max relative error %.3Lg, %d components out of tolerance", worst, failures)};
}

// --- 10 --------------------------------------------------------------------

Outcome reinforce_fidelity() {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> n;
  int bad = 0;
  for (int t = 0; t < 100; ++t) {
    TrainerState st;
    st.theta = sample_weights(t, 1.0);
    st.eta = n(rng);
    const double R = n(rng);
    Eigen::VectorXd grad(st.theta.size());
    for (auto& g : grad) g = n(rng);
    const double eta0 = st.eta;
    const Eigen::VectorXd theta0 = st.theta;
    const double G = reinforce_td_update(st, R, grad);
    const double G_ref = R - eta0;
    bad += G != G_ref;
    bad += st.eta != eta0 + st.beta * G_ref;
    bad += (st.theta - (theta0 + st.alpha * G_ref * grad)).lpNorm<Eigen::Infinity>() != 0.0;
  }
  double eta_err = 0, g_last = 0;
  for (double c : {-0.3, 0.05, 1.5}) {
    TrainerState st;
    st.theta = Eigen::VectorXd::Zero(MlpLayout{}.size());
    const Eigen::VectorXd grad = Eigen::VectorXd::Constant(st.theta.size(), 0.1);
    double G = 0;
    for (int i = 0; i < 800; ++i) G = reinforce_td_update(st, c, grad);
    eta_err = std::max(eta_err, std::abs(st.eta - c));
    g_last = std::max(g_last, std::abs(G));
  }
  const bool ok = bad == 0 && eta_err <= 1e-12 && g_last <= 1e-12;
  return {ok, fmt("%d injected mismatches; constant reward |eta-c| = %.2g, |G| = %.2g", bad,
                  eta_err, g_last)};
}

// --- 11 --------------------------------------------------------------------

Outcome supervised() {
  const auto [s1, s2] = extreme_states(10);
  const Eigen::VectorXd th = train_supervised(s1, s2, initial_weights(1), 0.01);
  const double p1 = policy_forward(th, s1), p2 = policy_forward(th, s2);
  const MfdEstimate nn = estimate_mfd(reference_net(), Policy::neural(th), reference_mfd());
  const bool comp = is_competitive(nn, lqf_reference());
  return {p1 >= 0.99 && p2 <= 0.01 && comp,
          fmt("pi(s1) = %.4f, pi(s2) = %.4f, worst mean ratio to LQF %.3f", p1, p2,
              worst_ratio(nn, lqf_reference()))};
}

// --- 12 --------------------------------------------------------------------

struct RlRun {
  TrainerState st;
  double tail_distance;  // mean of max(1 - pi(s1), pi(s2)) over the last tenth
  double grad_ratio;     // last-tenth mean gradient norm / first-tenth mean
};

RlRun train_at(double k, std::uint64_t seed) {
  const NetworkConfig cfg = reference_net();
  const RewardSpec reward =
      RewardSpec::from_mfd(lqf_reference(), min_green(PolicyKind::Neural, 10, cfg.lambda));
  ReinforceOptions o;
  o.iterations = 20000;
  o.seed = seed;
  RlRun r{reinforce_td(cfg, k, initial_weights(seed), reward, o), 0, 0};
  const auto& tr = r.st.traces;
  const std::size_t w = tr.size() / 10;
  double dist = 0, first = 0, last = 0;
  for (std::size_t i = 0; i < w; ++i) {
    const auto& t = tr[tr.size() - w + i];
    dist += std::max(1 - t.pi_s1, t.pi_s2);
    last += t.grad_norm;
    first += tr[i].grad_norm;
  }
  r.tail_distance = dist / w;
  r.grad_ratio = last / first;
  return r;
}

Outcome drl_collapse() {
  int congested_ok = 0, free_ok = 0;
  std::string detail = "k=0.8:";
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const RlRun r = train_at(0.8, s);
    const bool away = r.tail_distance > 0.05;
    const bool decays = r.grad_ratio <= 0.5;
    congested_ok += away && decays;
    detail += fmt(" [d=%.3f g=%.2f]", r.tail_distance, r.grad_ratio);
  }
  detail += " k=0.2:";
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const RlRun r = train_at(0.2, s);
    const MfdEstimate nn = estimate_mfd(reference_net(), Policy::neural(r.st.theta), reference_mfd());
    free_ok += is_competitive(nn, lqf_reference());
    detail += fmt(" %.3f", worst_ratio(nn, lqf_reference()));
  }
  detail += fmt(" (congested %d/5, free-flow competitive %d/5)", congested_ok, free_ok);
  return {congested_ok >= 3 && free_ok >= 3, detail};
}

// --- 13 --------------------------------------------------------------------

Outcome detaching() {
  NetworkConfig c = reference_net(0.5);
  c.turn_prob = 0.2;
  const auto r = detect_detaching(c, Policy::sqf(), 0.7, 4000, 1);
  const bool ok = r.permanent_colors && r.green_street_fraction <= 0.5 && r.detaching;
  return {ok, fmt("k=0.7: permanent %d, green-street fraction %.3f, SQF %.4f vs LQF %.4f",
                  int{r.permanent_colors}, r.green_street_fraction, r.mean_flow, r.lqf_mean_flow)};
}

// --- 14 --------------------------------------------------------------------

Outcome random_search_rate() {
  const auto trials = random_search(100, 1, reference_net(), reference_mfd(), lqf_reference());
  int hits = 0;
  double best = 0;
  for (const auto& t : trials) {
    hits += t.competitive;
    best = std::max(best, worst_ratio(t.mfd, lqf_reference()));
  }
  const double frac = hits / 100.0;
  return {frac >= 0.05 && frac <= 0.30,
          fmt("%d/100 competitive, best worst-density ratio %.3f", hits, best)};
}

// --- 15 --------------------------------------------------------------------

std::vector<std::string> csv_body(const fs::path& p) {
  std::vector<std::string> lines;
  std::ifstream is(p);
  for (std::string line; std::getline(is, line);)
    if (line.empty() || line[0] != '#') lines.push_back(line);
  return lines;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mfdlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_subcommand(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome reproducibility() {
  const fs::path root = fs::temp_directory_path() / "mfdlab_acceptance_repro";
  fs::remove_all(root);
  const std::vector<std::vector<std::string>> runs = {
      {"mfd", "--policy", "lqf,sqf,rnd", "--reps", "10", "--seed", "15"},
      {"simulate", "--policy", "rnd", "--k", "0.35", "--steps", "500", "--seed", "15"},
      {"detect", "--policy", "sqf,rnd", "--densities", "0.5,0.7", "--horizon", "800", "--p", "0.2",
       "--lambda", "0.5", "--seed", "15"},
      {"random-search", "--trials", "4", "--reps", "4", "--rows", "4", "--cols", "4", "--seed",
       "15"},
  };
  int mismatched = 0, files = 0, failed = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    std::vector<fs::path> dirs;
    for (const char* jobs : {"1", "1", "2", "4"}) {
      dirs.push_back(root / fmt("run%zu_%zu", r, dirs.size()));
      auto args = runs[r];
      args.insert(args.end(), {"--jobs", jobs, "--out", dirs.back().string()});
      failed += run_cli(args) != 0;
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      ++files;
      const auto ref = csv_body(entry.path());
      for (std::size_t d = 1; d < dirs.size(); ++d)
        mismatched += csv_body(dirs[d] / entry.path().filename()) != ref;
    }
  }
  fs::remove_all(root);
  return {failed == 0 && mismatched == 0 && files >= 7,
          fmt("%d files x 3 repeats (serial and 2/4 workers), %d mismatches, %d failed runs", files,
              mismatched, failed)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, truth_table},        {2, ring_diagram},      {3, cuts},
      {4, green_times},        {5, congested_equivalence}, {6, conservation},
      {7, binomial_oracles},   {8, dominance},         {9, gradients},
      {10, reinforce_fidelity}, {11, supervised},      {12, drl_collapse},
      {13, detaching},         {14, random_search_rate}, {15, reproducibility},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  (" << fmt("%.2fs", secs)
              << ")  " << o.detail << std::endl;
  }
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed"
                       : std::string("acceptance: all criteria passed"))
            << std::endl;
  return failed ? 1 : 0;
}
