#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mfdlab {

// Unit-free scaling of the triangular fundamental diagram. Speeds are in
// cells per step, flows in vehicles per step per lane.
struct ScalingConstants {
  static constexpr double free_flow_speed = 1.0;
  static constexpr double wave_speed = 1.0;
  static constexpr double saturation_flow =
      free_flow_speed * wave_speed / (free_flow_speed + wave_speed);
  static constexpr double jam_density = 1.0;
};

static_assert(ScalingConstants::saturation_flow == 0.5);

/// Ring boundary: the downstream end feeds the upstream end.
struct Periodic {};

/// Open-ended lane. `inflow` places a vehicle in the (empty) first cell;
/// a closed outflow behaves like an occupied virtual cell past the last one.
struct Gated {
  bool inflow = false;
  bool outflow_open = false;
};

using Boundary = std::variant<Periodic, Gated>;

/// A single-lane road stored as a packed bit vector. Cell 0 is the most
/// upstream cell; vehicles move toward higher indices.
class Lane {
 public:
  Lane() = default;
  explicit Lane(std::size_t length);

  /// Parses a string of '0'/'1' characters, upstream first.
  static Lane from_string(std::string_view bits);

  std::size_t length() const noexcept { return length_; }
  bool get(std::size_t i) const noexcept {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  void set(std::size_t i, bool occupied) noexcept;

  bool front() const noexcept { return get(0); }
  bool back() const noexcept { return get(length_ - 1); }

  /// Number of occupied cells.
  std::size_t count() const noexcept;

  std::span<const std::uint64_t> words() const noexcept { return words_; }

  /// Advances one Rule 184 step in place and returns the number of vehicles
  /// that moved one cell, including a vehicle leaving through an open
  /// outflow. A vehicle admitted through `inflow` is not counted here.
  std::size_t advance(const Boundary& boundary) noexcept;

  std::string to_string() const;

  friend bool operator==(const Lane&, const Lane&) = default;

 private:
  std::size_t length_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Rule 184 on a single neighborhood (c_{i-1}, c_i, c_{i+1}).
constexpr bool rule184_cell(bool left, bool self, bool right) noexcept {
  return (left && !self) || (self && right);
}

/// Pure form of Lane::advance.
Lane rule184_step(const Lane& lane, const Boundary& boundary);

}  // namespace mfdlab
