#pragma once

#include <cstdint>
#include <vector>

#include "mfdlab/network.hpp"
#include "mfdlab/policy.hpp"
#include "mfdlab/simulation.hpp"

namespace mfdlab {

/// Decision interval of `policy` on networks built from `cfg`.
int decision_interval(const Policy& policy, const NetworkConfig& cfg);

/// Lets every intersection pick its phase for the next interval, in node
/// order, each drawing from its own random stream.
void apply_decisions(NetworkState& state, const Network& net, const Policy& policy);

/// Advances `steps` steps, consulting the policy whenever the shared clock
/// is a multiple of `interval`. Returns the total number of moved vehicles.
std::size_t advance(NetworkState& state, const Network& net, const Policy& policy,
                    int steps, int interval);

struct RunResult {
  NetworkState state;
  std::vector<StepMetrics> series;
};

/// Same as advance() with the policy's own decision interval, recording
/// the metrics of every step.
RunResult run(NetworkState state, const Network& net, const Policy& policy, int steps);

}  // namespace mfdlab
