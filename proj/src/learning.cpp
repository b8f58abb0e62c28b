#include "mfdlab/learning.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "mfdlab/parallel.hpp"
#include "mfdlab/runner.hpp"

namespace mfdlab {

namespace {

constexpr std::uint64_t kTrainNetworkTag = 11;
constexpr std::uint64_t kTrainStateTag = 12;
constexpr std::uint64_t kTrialTag = 13;
constexpr std::uint64_t kInitTag = 21;

}  // namespace

double RewardSpec::baseline(double k) const {
  if (!(k >= 0.0 && k <= 1.0)) throw ParameterError("k", "density must lie in [0,1]");
  std::vector<double> xs;
  std::vector<double> ys;
  if (densities.empty() || densities.front() > 0.0) {
    xs.push_back(0.0);
    ys.push_back(0.0);
  }
  xs.insert(xs.end(), densities.begin(), densities.end());
  ys.insert(ys.end(), flows.begin(), flows.end());
  if (xs.back() < 1.0) {
    xs.push_back(1.0);
    ys.push_back(0.0);
  }
  const auto it = std::upper_bound(xs.begin(), xs.end(), k);
  if (it == xs.end()) return ys.back();
  const auto i = static_cast<std::size_t>(it - xs.begin());
  const double t = (k - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

RewardSpec RewardSpec::from_mfd(const MfdEstimate& lqf, int g) {
  if (g < 1) throw ParameterError("g", "must be at least 1");
  RewardSpec spec;
  spec.g = g;
  for (const auto& b : lqf.bands) {
    spec.densities.push_back(b.k);
    spec.flows.push_back(b.mean);
  }
  return spec;
}

double advantage_reward(int crossings, double k, const RewardSpec& spec) {
  if (spec.g < 1) throw ParameterError("g", "must be at least 1");
  // Four incoming lanes per intersection.
  return static_cast<double>(crossings) / (4.0 * spec.g) - spec.baseline(k);
}

double reinforce_td_update(TrainerState& st, double reward, const Eigen::VectorXd& grad_log_pi) {
  const double G = reward - st.eta;
  st.eta += st.beta * G;
  st.theta += st.alpha * G * grad_log_pi;
  ++st.iteration;
  return G;
}

TrainerState reinforce_td(const NetworkConfig& cfg, double k, Eigen::VectorXd theta0,
                          const RewardSpec& reward, const ReinforceOptions& opts, int hidden) {
  cfg.validate();
  if (!(k >= 0.0 && k <= 1.0)) throw ParameterError("k", "density must lie in [0,1]");
  if (opts.iterations < 1) throw ParameterError("iterations", "must be at least 1");
  if (!(opts.alpha > 0.0)) throw ParameterError("alpha", "must be positive");
  if (!(opts.beta > 0.0)) throw ParameterError("beta", "must be positive");
  MlpLayout{hidden}.check(theta0.size());

  NetworkConfig c = cfg;
  c.seed = derive_seed(opts.seed, 0, kTrainNetworkTag);
  const Network net = build_network(c);
  if (opts.monitored_node < 0 || opts.monitored_node >= net.num_intersections())
    throw ParameterError("monitored_node", "not an intersection of the network");
  NetworkState s = init_bernoulli(net, k, derive_seed(opts.seed, 0, kTrainStateTag));

  TrainerState st;
  st.theta = std::move(theta0);
  st.hidden = hidden;
  st.alpha = opts.alpha;
  st.beta = opts.beta;
  st.traces.reserve(static_cast<std::size_t>(opts.iterations));

  const auto [s1, s2] = extreme_states(cfg.mean_block_length);
  const auto m = static_cast<std::size_t>(opts.monitored_node);
  StepMetrics metrics;

  for (std::int64_t it = 0; it < opts.iterations; ++it) {
    const Policy policy = Policy::neural(st.theta, hidden);
    const Observation S = observe(s, net, opts.monitored_node);
    for (int v = 0; v < net.num_intersections(); ++v) {
      if (static_cast<std::size_t>(v) == m) continue;
      const auto i = static_cast<std::size_t>(v);
      s.set_phase(v, decide(policy, observe(s, net, v), s.phase[i], s.rngs[i]));
    }
    const double pi = policy_forward(st.theta, S, hidden);
    const Action A = uniform01(s.rngs[m]) < pi ? Action::NsRed : Action::NsGreen;
    s.set_phase(opts.monitored_node, phase_for(A));

    int crossings = 0;
    for (int t = 0; t < reward.g; ++t) {
      step(s, net, metrics);
      crossings += metrics.crossings[m];
    }
    const double R = advantage_reward(crossings, k, reward);
    const Eigen::VectorXd grad = grad_log_prob(st.theta, S, A, hidden);
    reinforce_td_update(st, R, grad);
    if (!st.theta.allFinite()) {
      std::ostringstream os;
      os << "weights diverged at iteration " << st.iteration;
      throw std::runtime_error(os.str());
    }

    TraceRecord rec;
    rec.iteration = st.iteration;
    rec.eta = st.eta;
    rec.grad_norm = grad.norm();
    rec.pi_s1 = policy_forward(st.theta, s1, hidden);
    rec.pi_s2 = policy_forward(st.theta, s2, hidden);
    st.traces.push_back(rec);
  }
  return st;
}

double supervised_loss(const Eigen::VectorXd& theta, const Observation& s1,
                       const Observation& s2, int hidden) {
  return -log_prob(theta, s1, Action::NsRed, hidden) - log_prob(theta, s2, Action::NsGreen, hidden);
}

Eigen::VectorXd train_supervised(const Observation& s1, const Observation& s2,
                                 Eigen::VectorXd theta0, double tolerance,
                                 const SupervisedOptions& opts, int hidden) {
  if (s1 == s2) throw ParameterError("examples", "s1 and s2 must differ");
  if (!(tolerance > 0.0 && tolerance < 0.5)) throw ParameterError("tolerance", "must lie in (0,0.5)");
  if (!(opts.step > 0.0)) throw ParameterError("step", "must be positive");
  MlpLayout{hidden}.check(theta0.size());

  Eigen::VectorXd theta = std::move(theta0);
  double p1 = 0.0;
  double p2 = 0.0;
  for (std::int64_t it = 0; it <= opts.max_iterations; ++it) {
    p1 = policy_forward(theta, s1, hidden);
    p2 = policy_forward(theta, s2, hidden);
    if (p1 >= 1.0 - tolerance && p2 <= tolerance) return theta;
    if (it == opts.max_iterations) break;
    // Descent on -log pi(s1) - log(1 - pi(s2)).
    theta += opts.step * (grad_log_prob(theta, s1, Action::NsRed, hidden) +
                          grad_log_prob(theta, s2, Action::NsGreen, hidden));
  }
  std::ostringstream os;
  os << "supervised training did not reach tolerance " << tolerance << " (pi(s1)=" << p1
     << ", pi(s2)=" << p2 << ")";
  throw ConvergenceError(os.str(), p1, p2);
}

bool is_competitive(const MfdEstimate& candidate, const MfdEstimate& lqf, double ratio) {
  if (candidate.bands.size() != lqf.bands.size())
    throw StructuralError("MFD density grids differ");
  for (std::size_t i = 0; i < lqf.bands.size(); ++i) {
    if (std::abs(candidate.bands[i].k - lqf.bands[i].k) > 1e-12)
      throw StructuralError("MFD density grids differ");
    if (candidate.bands[i].mean < ratio * lqf.bands[i].mean) return false;
  }
  return true;
}

Eigen::VectorXd sample_weights(std::uint64_t seed, double scale, int hidden) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd theta(MlpLayout{hidden}.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = normal(rng);
  return theta;
}

Eigen::VectorXd initial_weights(std::uint64_t seed, double scale, int hidden) {
  return sample_weights(derive_seed(seed, 0, kInitTag), scale, hidden);
}

std::vector<RandomSearchTrial> random_search(int trials, std::uint64_t seed,
                                             const NetworkConfig& cfg,
                                             const MfdOptions& mfd_opts,
                                             const MfdEstimate& lqf, int hidden) {
  if (trials < 1) throw ParameterError("trials", "must be at least 1");
  std::vector<RandomSearchTrial> out(static_cast<std::size_t>(trials));
  MfdOptions inner = mfd_opts;
  inner.jobs = 1;
  parallel_for(out.size(), mfd_opts.jobs, [&](std::size_t t) {
    auto& trial = out[t];
    trial.theta = sample_weights(derive_seed(seed, t, kTrialTag), 1.0, hidden);
    trial.mfd = estimate_mfd(cfg, Policy::neural(trial.theta, hidden), inner);
    trial.competitive = is_competitive(trial.mfd, lqf);
  });
  return out;
}

}  // namespace mfdlab
