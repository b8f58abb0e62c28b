#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mfdlab/lattice.hpp"
#include "mfdlab/network.hpp"

namespace mfdlab {

enum class Phase : std::uint8_t { NorthSouthGreen = 0, EastWestGreen = 1 };

constexpr Axis green_axis(Phase p) noexcept {
  return p == Phase::NorthSouthGreen ? Axis::NorthSouth : Axis::EastWest;
}

using Rng = std::mt19937_64;

/// Uniform double in [0,1) from the top 53 bits of one engine draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Full dynamic state of a network: one lane per block (indexed like
/// Network::blocks()), one phase, phase age and random stream per
/// intersection.
struct NetworkState {
  std::vector<Lane> lanes;
  std::vector<Phase> phase;
  std::vector<int> time_in_phase;
  std::vector<Rng> rngs;
  std::int64_t clock = 0;

  std::size_t vehicle_count() const noexcept;
  double density() const noexcept;

  /// Sets the phase of `node`, resetting its age only on an actual change.
  void set_phase(int node, Phase p) noexcept;

  // Per-block gate flags reused across steps.
  std::vector<std::uint8_t> inflow_scratch;
  std::vector<std::uint8_t> outflow_scratch;
};

struct StepMetrics {
  std::size_t moved = 0;                // vehicles advanced one cell
  std::vector<std::uint8_t> crossings;  // per intersection, at most 4
};

/// Independent seed for a named stream, derived through std::seed_seq.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t tag = 0);

/// Every cell independently occupied with probability k; all phases
/// NS-green with age 0.
NetworkState init_bernoulli(const Network& net, double k, std::uint64_t seed);

/// Advances `state` by one time step in place using its current phases.
/// Intersection intents are computed from the pre-step occupancy and then
/// committed together with the in-block Rule 184 update.
void step(NetworkState& state, const Network& net, StepMetrics& metrics);
StepMetrics step(NetworkState& state, const Network& net);

/// Vehicles that advanced between two consecutive states divided by the
/// number of cells. Throws StructuralError if the states do not match.
double measure_flow(const NetworkState& before, const NetworkState& after);

/// One line of '0'/'1' per block, upstream cell first.
std::string dump_state(const NetworkState& state);

}  // namespace mfdlab
