#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mfdlab/analytics.hpp"
#include "mfdlab/network.hpp"
#include "mfdlab/policy.hpp"

namespace mfdlab {

/// Supervised training stopped at its iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double pi_s1, double pi_s2)
      : std::runtime_error(what), pi_s1(pi_s1), pi_s2(pi_s2) {}
  double pi_s1;
  double pi_s2;
};

/// LQF-MFD mean curve used as the reward baseline, plus the decision
/// interval over which crossings are counted.
struct RewardSpec {
  std::vector<double> densities;  // strictly increasing
  std::vector<double> flows;
  int g = 1;

  /// Piecewise-linear interpolation; the curve is pinned to zero flow at
  /// k = 0 and k = 1 when those points were not sampled.
  double baseline(double k) const;

  static RewardSpec from_mfd(const MfdEstimate& lqf, int g);
};

/// Average advantage flow per lane: crossings / (4 g) - baseline(k).
double advantage_reward(int crossings, double k, const RewardSpec& spec);

struct TraceRecord {
  std::int64_t iteration = 0;
  double eta = 0;
  double grad_norm = 0;
  double pi_s1 = 0;
  double pi_s2 = 0;
};

struct TrainerState {
  Eigen::VectorXd theta;
  int hidden = kDefaultHidden;
  double eta = 0.0;
  double alpha = 0.2;
  double beta = 0.05;
  std::int64_t iteration = 0;
  std::vector<TraceRecord> traces;
};

/// One REINFORCE-TD update from an observed reward and the score vector of
/// the action taken:
///   G <- R - eta;  eta <- eta + beta G;  theta <- theta + alpha G grad.
/// Returns G.
double reinforce_td_update(TrainerState& st, double reward, const Eigen::VectorXd& grad_log_pi);

struct ReinforceOptions {
  double alpha = 0.2;
  double beta = 0.05;
  std::int64_t iterations = 1000;
  int monitored_node = 0;
  std::uint64_t seed = 1;
};

/// Trains a shared policy on a torus held at constant density k. Every
/// intersection acts with the current weights; the monitored intersection
/// supplies (S, A, R) for the update after each g-step interval.
TrainerState reinforce_td(const NetworkConfig& cfg, double k, Eigen::VectorXd theta0,
                          const RewardSpec& reward, const ReinforceOptions& opts,
                          int hidden = kDefaultHidden);

struct SupervisedOptions {
  double step = 0.5;
  std::int64_t max_iterations = 100000;
};

/// Full-batch gradient descent on the summed cross-entropy of the two
/// labelled states (s1 -> 1, s2 -> 0). Returns as soon as both outputs are
/// within `tolerance` of their targets; throws ConvergenceError at the cap.
Eigen::VectorXd train_supervised(const Observation& s1, const Observation& s2,
                                 Eigen::VectorXd theta0, double tolerance,
                                 const SupervisedOptions& opts = {},
                                 int hidden = kDefaultHidden);

/// Summed cross-entropy of the two-example task.
double supervised_loss(const Eigen::VectorXd& theta, const Observation& s1,
                       const Observation& s2, int hidden = kDefaultHidden);

inline constexpr double kCompetitiveRatio = 0.9;

/// Mean flow at least `ratio` times the LQF mean at every density.
bool is_competitive(const MfdEstimate& candidate, const MfdEstimate& lqf,
                    double ratio = kCompetitiveRatio);

struct RandomSearchTrial {
  Eigen::VectorXd theta;
  MfdEstimate mfd;
  bool competitive = false;
};

/// Samples theta ~ N(0, I) per trial and scores the deployed policy's MFD
/// against `lqf`, which must use the same density grid.
std::vector<RandomSearchTrial> random_search(int trials, std::uint64_t seed,
                                             const NetworkConfig& cfg,
                                             const MfdOptions& mfd_opts,
                                             const MfdEstimate& lqf,
                                             int hidden = kDefaultHidden);

/// theta ~ N(0, scale^2 I) from a seeded stream.
Eigen::VectorXd sample_weights(std::uint64_t seed, double scale = 1.0,
                               int hidden = kDefaultHidden);

/// Default spread of the trainers' starting weights. Small enough that the
/// initial policy is close to a fair coin in every state.
inline constexpr double kInitScale = 0.01;

/// Starting weights of a training run with master seed `seed`.
Eigen::VectorXd initial_weights(std::uint64_t seed, double scale = kInitScale,
                                int hidden = kDefaultHidden);

}  // namespace mfdlab
