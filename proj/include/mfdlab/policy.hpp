#pragma once

#include <Eigen/Core>
#include <cmath>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <utility>

#include "mfdlab/errors.hpp"
#include "mfdlab/simulation.hpp"

namespace mfdlab {

inline constexpr int kObservationSize = 8;
inline constexpr int kDefaultHidden = 16;
inline constexpr int kWeightsLayoutVersion = 1;

/// Vehicle counts on the approaches of one intersection, in the order
/// [NS-in(N), NS-in(S), EW-in(E), EW-in(W), NS-out(N), NS-out(S),
///  EW-out(E), EW-out(W)], where the heading is the direction of travel.
using Observation = Eigen::Matrix<int, kObservationSize, 1>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class PolicyKind { Lqf, Sqf, Random, Neural };

/// Binary action of the neural head. NsRed hands the green to EW.
enum class Action { NsRed, NsGreen };

constexpr Phase phase_for(Action a) noexcept {
  return a == Action::NsRed ? Phase::EastWestGreen : Phase::NorthSouthGreen;
}

std::string_view to_string(PolicyKind kind) noexcept;
/// Accepts lqf, sqf, rnd (or random) and neural. Throws ParameterError.
PolicyKind parse_policy_kind(std::string_view name);

/// Offsets into the flat weight vector for hidden width H:
///   [ W1 (H x 8) | b1 (H) | W2 (H x H) | b2 (H) ]
/// Matrices are stored column-major, matching Eigen's default.
struct MlpLayout {
  int hidden = kDefaultHidden;

  Eigen::Index w1() const noexcept { return 0; }
  Eigen::Index b1() const noexcept { return Eigen::Index{hidden} * kObservationSize; }
  Eigen::Index w2() const noexcept { return b1() + hidden; }
  Eigen::Index b2() const noexcept { return w2() + Eigen::Index{hidden} * hidden; }
  Eigen::Index size() const noexcept { return b2() + hidden; }

  /// Throws StructuralError unless `n` equals size().
  void check(Eigen::Index n) const;
};

/// Pre-sigmoid output: sum over the second linear layer of tanh features.
template <typename Scalar>
Scalar policy_logit(const Vector<Scalar>& theta, const Observation& obs,
                    int hidden = kDefaultHidden) {
  const MlpLayout L{hidden};
  L.check(theta.size());
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Map<const Mat> w1(theta.data() + L.w1(), hidden, kObservationSize);
  const auto b1 = theta.segment(L.b1(), hidden);
  const Eigen::Map<const Mat> w2(theta.data() + L.w2(), hidden, hidden);
  const auto b2 = theta.segment(L.b2(), hidden);
  const Vector<Scalar> h = (w1 * obs.cast<Scalar>() + b1).array().tanh().matrix();
  return (w2 * h + b2).sum();
}

/// Logistic function evaluated without overflow for either sign.
template <typename Scalar>
Scalar sigmoid(Scalar z) {
  using std::exp;
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-z));
  const Scalar e = exp(z);
  return e / (Scalar(1) + e);
}

/// Probability of NS-red. Clamped to the open interval (0,1) at the
/// resolution of Scalar so saturated networks never report certainty.
template <typename Scalar>
Scalar policy_forward(const Vector<Scalar>& theta, const Observation& obs,
                      int hidden = kDefaultHidden) {
  const Scalar pi = sigmoid(policy_logit(theta, obs, hidden));
  const Scalar lo = std::numeric_limits<Scalar>::min();
  const Scalar hi = Scalar(1) - std::numeric_limits<Scalar>::epsilon() / Scalar(2);
  return pi < lo ? lo : (pi > hi ? hi : pi);
}

/// log pi(action | obs; theta), computed from the logit so it stays finite
/// where the probability itself would round to 0 or 1.
template <typename Scalar>
Scalar log_prob(const Vector<Scalar>& theta, const Observation& obs, Action action,
                int hidden = kDefaultHidden) {
  using std::exp;
  using std::log1p;
  const Scalar z = policy_logit(theta, obs, hidden);
  // log sigmoid(x) = -softplus(-x)
  const Scalar x = action == Action::NsRed ? z : -z;
  return x >= Scalar(0) ? -log1p(exp(-x)) : x - log1p(exp(x));
}

/// Exact gradient of log pi(action | obs; theta) by backpropagation.
template <typename Scalar>
Vector<Scalar> grad_log_prob(const Vector<Scalar>& theta, const Observation& obs,
                             Action action, int hidden = kDefaultHidden) {
  const MlpLayout L{hidden};
  L.check(theta.size());
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Map<const Mat> w1(theta.data() + L.w1(), hidden, kObservationSize);
  const auto b1 = theta.segment(L.b1(), hidden);
  const Eigen::Map<const Mat> w2(theta.data() + L.w2(), hidden, hidden);
  const auto b2 = theta.segment(L.b2(), hidden);

  const Vector<Scalar> x = obs.cast<Scalar>();
  const Vector<Scalar> h = (w1 * x + b1).array().tanh().matrix();
  const Scalar z = (w2 * h + b2).sum();
  // d log sigmoid(z) / dz = 1 - sigmoid(z);  d log(1 - sigmoid(z)) / dz = -sigmoid(z)
  const Scalar dz = action == Action::NsRed ? sigmoid(-z) : -sigmoid(z);

  Vector<Scalar> g(L.size());
  const Vector<Scalar> dh = w2.colwise().sum().transpose() * dz;
  const Vector<Scalar> dpre = (Scalar(1) - h.array().square()).matrix().cwiseProduct(dh);
  Eigen::Map<Mat>(g.data() + L.w1(), hidden, kObservationSize) = dpre * x.transpose();
  g.segment(L.b1(), hidden) = dpre;
  Eigen::Map<Mat>(g.data() + L.w2(), hidden, hidden) =
      Vector<Scalar>::Constant(hidden, dz) * h.transpose();
  g.segment(L.b2(), hidden).setConstant(dz);
  return g;
}

/// Signal control policy shared by every intersection.
class Policy {
 public:
  static Policy lqf() { return Policy(PolicyKind::Lqf); }
  static Policy sqf() { return Policy(PolicyKind::Sqf); }
  static Policy random() { return Policy(PolicyKind::Random); }
  /// Throws StructuralError on a size mismatch, ParameterError on
  /// non-finite weights.
  static Policy neural(Eigen::VectorXd theta, int hidden = kDefaultHidden);
  /// LQF, SQF or RND by name; neural policies need weights.
  static Policy baseline(PolicyKind kind);

  PolicyKind kind() const noexcept { return kind_; }
  const Eigen::VectorXd& theta() const noexcept { return theta_; }
  int hidden() const noexcept { return hidden_; }

 private:
  explicit Policy(PolicyKind kind) : kind_(kind) {}
  PolicyKind kind_;
  Eigen::VectorXd theta_;
  int hidden_ = kDefaultHidden;
};

/// Minimum green (decision interval) in steps: round(2 ell / lambda), or
/// round(ell / lambda) for the random policy; never below 1.
int min_green(PolicyKind kind, int ell, double lambda);

/// Counts vehicles on the eight approaches of `node`.
Observation observe(const NetworkState& state, const Network& net, int node);

/// Next phase for one intersection. `rng` is only drawn from by the random
/// and neural policies.
Phase decide(const Policy& policy, const Observation& obs, Phase current, Rng& rng);

/// The two hand-labelled training states: s1 has both NS approaches empty
/// and both EW approaches at jam density, s2 the reverse; all outgoing
/// approaches are empty.
std::pair<Observation, Observation> extreme_states(int ell);

void write_weights(std::ostream& os, const Eigen::VectorXd& theta, int hidden);
/// Returns (theta, hidden). Throws StructuralError on malformed input.
std::pair<Eigen::VectorXd, int> read_weights(std::istream& is);

}  // namespace mfdlab
