#include "mfdlab/runner.hpp"

#include "mfdlab/errors.hpp"

namespace mfdlab {

int decision_interval(const Policy& policy, const NetworkConfig& cfg) {
  return min_green(policy.kind(), cfg.mean_block_length, cfg.lambda);
}

void apply_decisions(NetworkState& state, const Network& net, const Policy& policy) {
  for (int v = 0; v < net.num_intersections(); ++v) {
    const auto i = static_cast<std::size_t>(v);
    state.set_phase(v, decide(policy, observe(state, net, v), state.phase[i], state.rngs[i]));
  }
}

std::size_t advance(NetworkState& state, const Network& net, const Policy& policy,
                    int steps, int interval) {
  if (interval < 1) throw ParameterError("interval", "must be at least 1");
  StepMetrics m;
  std::size_t moved = 0;
  for (int t = 0; t < steps; ++t) {
    if (state.clock > 0 && state.clock % interval == 0) apply_decisions(state, net, policy);
    step(state, net, m);
    moved += m.moved;
  }
  return moved;
}

RunResult run(NetworkState state, const Network& net, const Policy& policy, int steps) {
  if (steps < 1) throw ParameterError("steps", "horizon must be at least 1");
  const int g = decision_interval(policy, net.config());
  RunResult out;
  out.series.reserve(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    if (state.clock > 0 && state.clock % g == 0) apply_decisions(state, net, policy);
    out.series.push_back(step(state, net));
  }
  out.state = std::move(state);
  return out;
}

}  // namespace mfdlab
