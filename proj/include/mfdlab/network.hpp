#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mfdlab {

/// Direction of travel. Rows grow southward, columns grow eastward.
enum class Heading : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

enum class Axis : std::uint8_t { NorthSouth = 0, EastWest = 1 };

constexpr Axis axis_of(Heading h) noexcept {
  return (h == Heading::North || h == Heading::South) ? Axis::NorthSouth
                                                      : Axis::EastWest;
}
constexpr Heading opposite(Heading h) noexcept {
  return static_cast<Heading>((static_cast<int>(h) + 2) & 3);
}
constexpr Heading turn_left(Heading h) noexcept {
  return static_cast<Heading>((static_cast<int>(h) + 3) & 3);
}
constexpr Heading turn_right(Heading h) noexcept {
  return static_cast<Heading>((static_cast<int>(h) + 1) & 3);
}

inline constexpr std::array<Heading, 4> kHeadings = {
    Heading::North, Heading::East, Heading::South, Heading::West};

/// Torus grid parameters. The red/green ratio is fixed at one and therefore
/// not stored.
struct NetworkConfig {
  int rows = 8;
  int cols = 8;
  int mean_block_length = 10;  // ell, in cells
  double lambda = 1.0;         // E(block length) / E(green time), scaled
  double delta = 0.0;          // COV of block length
  double turn_prob = 0.75;
  std::uint64_t seed = 1;

  /// Throws ParameterError naming the first offending field.
  void validate() const;
};

/// Directed block from intersection `from` to intersection `to`.
struct Block {
  int from = 0;
  int to = 0;
  Heading heading = Heading::North;
  int length = 0;
};

/// Immutable torus network. Block ids are `node * 4 + heading`, i.e. each
/// intersection owns its four outgoing blocks.
class Network {
 public:
  Network(NetworkConfig cfg, std::vector<int> horizontal_lengths,
          std::vector<int> vertical_lengths);

  const NetworkConfig& config() const noexcept { return cfg_; }
  int rows() const noexcept { return cfg_.rows; }
  int cols() const noexcept { return cfg_.cols; }
  int num_intersections() const noexcept { return cfg_.rows * cfg_.cols; }
  int num_blocks() const noexcept { return static_cast<int>(blocks_.size()); }
  std::size_t total_cells() const noexcept { return total_cells_; }

  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  const Block& block(int id) const { return blocks_[static_cast<std::size_t>(id)]; }

  int node(int row, int col) const noexcept;
  int row_of(int node) const noexcept { return node / cfg_.cols; }
  int col_of(int node) const noexcept { return node % cfg_.cols; }
  int neighbor(int node, Heading h) const noexcept;

  static constexpr int outgoing(int node, Heading h) noexcept {
    return node * 4 + static_cast<int>(h);
  }
  /// Block arriving at `node` while travelling in heading `h`.
  int incoming(int node, Heading h) const noexcept {
    return outgoing(neighbor(node, opposite(h)), h);
  }

  /// Plain-text adjacency and length listing, stable across runs.
  std::string describe() const;

 private:
  NetworkConfig cfg_;
  std::vector<Block> blocks_;
  std::size_t total_cells_ = 0;
};

/// Draws `n` block lengths from the symmetric two-point law
/// {round(ell(1-delta)), round(ell(1+delta))}, each with probability 1/2.
std::vector<int> sample_block_lengths(int n, int mean_length, double delta,
                                      std::uint64_t seed);

/// Deterministic in `cfg.seed`. Opposite directions of a street segment
/// share one sampled length.
Network build_network(const NetworkConfig& cfg);

}  // namespace mfdlab
