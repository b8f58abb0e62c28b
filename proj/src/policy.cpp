#include "mfdlab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace mfdlab {

std::string_view to_string(PolicyKind kind) noexcept {
  switch (kind) {
    case PolicyKind::Lqf: return "lqf";
    case PolicyKind::Sqf: return "sqf";
    case PolicyKind::Random: return "rnd";
    case PolicyKind::Neural: return "neural";
  }
  return "?";
}

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "lqf" || name == "LQF") return PolicyKind::Lqf;
  if (name == "sqf" || name == "SQF") return PolicyKind::Sqf;
  if (name == "rnd" || name == "RND" || name == "random") return PolicyKind::Random;
  if (name == "neural") return PolicyKind::Neural;
  throw ParameterError("policy", "unknown policy '" + std::string(name) + "'");
}

void MlpLayout::check(Eigen::Index n) const {
  if (hidden < 1) throw StructuralError("hidden width must be positive");
  if (n != size()) {
    std::ostringstream os;
    os << "weight vector has " << n << " entries, hidden width " << hidden
       << " needs " << size();
    throw StructuralError(os.str());
  }
}

Policy Policy::neural(Eigen::VectorXd theta, int hidden) {
  MlpLayout{hidden}.check(theta.size());
  if (!theta.allFinite()) throw ParameterError("weights", "must be finite");
  Policy p(PolicyKind::Neural);
  p.theta_ = std::move(theta);
  p.hidden_ = hidden;
  return p;
}

Policy Policy::baseline(PolicyKind kind) {
  if (kind == PolicyKind::Neural)
    throw ParameterError("policy", "neural policy requires weights");
  return Policy(kind);
}

int min_green(PolicyKind kind, int ell, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ParameterError("lambda", "must be a positive finite number");
  if (ell < 1) throw ParameterError("ell", "must be positive");
  const double g = (kind == PolicyKind::Random ? 1.0 : 2.0) * ell / lambda;
  return std::max(1, static_cast<int>(std::lround(g)));
}

Observation observe(const NetworkState& state, const Network& net, int node) {
  Observation obs;
  const auto count = [&](int block) {
    return static_cast<int>(state.lanes[static_cast<std::size_t>(block)].count());
  };
  obs << count(net.incoming(node, Heading::North)), count(net.incoming(node, Heading::South)),
      count(net.incoming(node, Heading::East)), count(net.incoming(node, Heading::West)),
      count(Network::outgoing(node, Heading::North)), count(Network::outgoing(node, Heading::South)),
      count(Network::outgoing(node, Heading::East)), count(Network::outgoing(node, Heading::West));
  return obs;
}

Phase decide(const Policy& policy, const Observation& obs, Phase current, Rng& rng) {
  const int ns = obs[0] + obs[1];
  const int ew = obs[2] + obs[3];
  switch (policy.kind()) {
    case PolicyKind::Lqf:
      if (ns == ew) return current;
      return ns > ew ? Phase::NorthSouthGreen : Phase::EastWestGreen;
    case PolicyKind::Sqf:
      if (ns == ew) return current;
      return ns < ew ? Phase::NorthSouthGreen : Phase::EastWestGreen;
    case PolicyKind::Random:
      return (rng() >> 63) ? Phase::NorthSouthGreen : Phase::EastWestGreen;
    case PolicyKind::Neural: {
      const double pi = policy_forward(policy.theta(), obs, policy.hidden());
      return phase_for(uniform01(rng) < pi ? Action::NsRed : Action::NsGreen);
    }
  }
  return current;
}

std::pair<Observation, Observation> extreme_states(int ell) {
  if (ell < 1) throw ParameterError("ell", "must be positive");
  Observation s1;
  Observation s2;
  s1 << 0, 0, ell, ell, 0, 0, 0, 0;
  s2 << ell, ell, 0, 0, 0, 0, 0, 0;
  return {s1, s2};
}

void write_weights(std::ostream& os, const Eigen::VectorXd& theta, int hidden) {
  const MlpLayout L{hidden};
  L.check(theta.size());
  os << "# mfdlab policy weights\n";
  os << "# layout_version " << kWeightsLayoutVersion << '\n';
  os << "# hidden " << hidden << '\n';
  os << "# order W1(" << hidden << "x8,col-major) b1(" << hidden << ") W2(" << hidden << 'x'
     << hidden << ",col-major) b2(" << hidden << ")\n";
  os << theta.size() << '\n';
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < theta.size(); ++i) os << theta[i] << '\n';
}

std::pair<Eigen::VectorXd, int> read_weights(std::istream& is) {
  int hidden = -1;
  int version = -1;
  std::string line;
  Eigen::Index n = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      hs >> key;
      if (key == "hidden") hs >> hidden;
      if (key == "layout_version") hs >> version;
      continue;
    }
    std::istringstream ns(line);
    if (!(ns >> n)) throw StructuralError("weights: expected entry count");
    break;
  }
  if (version != kWeightsLayoutVersion)
    throw StructuralError("weights: unsupported or missing layout_version");
  if (hidden < 1) throw StructuralError("weights: missing hidden width");
  MlpLayout{hidden}.check(n);
  Eigen::VectorXd theta(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(is >> theta[i])) throw StructuralError("weights: truncated value list");
  return {std::move(theta), hidden};
}

}  // namespace mfdlab
