#include "mfdlab/simulation.hpp"

#include <array>
#include <bit>

#include "mfdlab/errors.hpp"

namespace mfdlab {

namespace {

// Stream tags passed to derive_seed.
constexpr std::uint64_t kInitStream = 0xB0u;
constexpr std::uint64_t kNodeStream = 0xA1u;

Heading sample_heading(Heading arriving, double turn_prob, Rng& rng) {
  if (!(uniform01(rng) < turn_prob)) return arriving;
  switch (rng() % 3) {
    case 0: return turn_left(arriving);
    case 1: return turn_right(arriving);
    default: return opposite(arriving);
  }
}

}  // namespace

std::size_t NetworkState::vehicle_count() const noexcept {
  std::size_t n = 0;
  for (const auto& lane : lanes) n += lane.count();
  return n;
}

double NetworkState::density() const noexcept {
  std::size_t cells = 0;
  for (const auto& lane : lanes) cells += lane.length();
  return cells == 0 ? 0.0 : static_cast<double>(vehicle_count()) / static_cast<double>(cells);
}

void NetworkState::set_phase(int node, Phase p) noexcept {
  auto& cur = phase[static_cast<std::size_t>(node)];
  if (cur != p) {
    cur = p;
    time_in_phase[static_cast<std::size_t>(node)] = 0;
  }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (std::uint64_t{out[0]} << 32) | out[1];
}

NetworkState init_bernoulli(const Network& net, double k, std::uint64_t seed) {
  if (!(k >= 0.0 && k <= 1.0)) throw ParameterError("k", "density must lie in [0,1]");
  NetworkState s;
  Rng init(derive_seed(seed, kInitStream));
  s.lanes.reserve(static_cast<std::size_t>(net.num_blocks()));
  for (const auto& b : net.blocks()) {
    Lane lane(static_cast<std::size_t>(b.length));
    for (std::size_t i = 0; i < lane.length(); ++i) lane.set(i, uniform01(init) < k);
    s.lanes.push_back(std::move(lane));
  }
  const auto n = static_cast<std::size_t>(net.num_intersections());
  s.phase.assign(n, Phase::NorthSouthGreen);
  s.time_in_phase.assign(n, 0);
  s.rngs.reserve(n);
  for (std::size_t v = 0; v < n; ++v) s.rngs.emplace_back(derive_seed(seed, kNodeStream, v));
  return s;
}

void step(NetworkState& state, const Network& net, StepMetrics& metrics) {
  const auto nblocks = static_cast<std::size_t>(net.num_blocks());
  const auto nnodes = static_cast<std::size_t>(net.num_intersections());
  if (state.lanes.size() != nblocks || state.phase.size() != nnodes)
    throw StructuralError("state does not belong to this network");

  auto& inflow = state.inflow_scratch;
  auto& outflow = state.outflow_scratch;
  inflow.assign(nblocks, 0);
  outflow.assign(nblocks, 0);
  metrics.crossings.assign(nnodes, 0);
  const double p = net.config().turn_prob;

  // Intents from the pre-step occupancy; red approaches stay closed.
  for (std::size_t v = 0; v < nnodes; ++v) {
    const int node = static_cast<int>(v);
    Rng& rng = state.rngs[v];
    const std::array<Heading, 2> green =
        state.phase[v] == Phase::NorthSouthGreen
            ? std::array<Heading, 2>{Heading::North, Heading::South}
            : std::array<Heading, 2>{Heading::East, Heading::West};
    std::array<int, 2> from{-1, -1};
    std::array<int, 2> to{-1, -1};
    for (int i = 0; i < 2; ++i) {
      const int in = net.incoming(node, green[static_cast<std::size_t>(i)]);
      if (!state.lanes[static_cast<std::size_t>(in)].back()) continue;
      const Heading h = sample_heading(green[static_cast<std::size_t>(i)], p, rng);
      const int out = Network::outgoing(node, h);
      if (state.lanes[static_cast<std::size_t>(out)].front()) continue;
      from[static_cast<std::size_t>(i)] = in;
      to[static_cast<std::size_t>(i)] = out;
    }
    if (to[0] >= 0 && to[0] == to[1]) {
      const std::size_t loser = (rng() >> 63) ? 0 : 1;
      to[loser] = -1;
    }
    for (std::size_t i = 0; i < 2; ++i) {
      if (to[i] < 0) continue;
      outflow[static_cast<std::size_t>(from[i])] = 1;
      inflow[static_cast<std::size_t>(to[i])] = 1;
      ++metrics.crossings[v];
    }
  }

  std::size_t moved = 0;
  for (std::size_t b = 0; b < nblocks; ++b)
    moved += state.lanes[b].advance(Gated{inflow[b] != 0, outflow[b] != 0});
  metrics.moved = moved;

  for (auto& t : state.time_in_phase) ++t;
  ++state.clock;
}

StepMetrics step(NetworkState& state, const Network& net) {
  StepMetrics m;
  step(state, net, m);
  return m;
}

double measure_flow(const NetworkState& before, const NetworkState& after) {
  if (before.lanes.size() != after.lanes.size())
    throw StructuralError("states refer to different networks");
  std::size_t arrivals = 0;
  std::size_t cells = 0;
  for (std::size_t b = 0; b < before.lanes.size(); ++b) {
    const auto& x = before.lanes[b];
    const auto& y = after.lanes[b];
    if (x.length() != y.length()) throw StructuralError("states refer to different networks");
    cells += x.length();
    // Every advancing vehicle lands in a cell that was empty before.
    const auto wx = x.words();
    const auto wy = y.words();
    for (std::size_t w = 0; w < wx.size(); ++w)
      arrivals += static_cast<std::size_t>(std::popcount(~wx[w] & wy[w]));
  }
  return cells == 0 ? 0.0 : static_cast<double>(arrivals) / static_cast<double>(cells);
}

std::string dump_state(const NetworkState& state) {
  std::string out;
  for (const auto& lane : state.lanes) {
    out += lane.to_string();
    out += '\n';
  }
  return out;
}

}  // namespace mfdlab
