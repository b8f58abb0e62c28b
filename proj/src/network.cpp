#include "mfdlab/network.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "mfdlab/errors.hpp"

namespace mfdlab {

namespace {

constexpr char heading_letter(Heading h) {
  constexpr char letters[] = {'N', 'E', 'S', 'W'};
  return letters[static_cast<int>(h)];
}

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

void check_lengths(int mean_length, double delta) {
  if (mean_length < 1) throw ParameterError("ell", "must be positive");
  if (!(delta >= 0.0)) throw ParameterError("delta", "must be nonnegative");
  if (mean_length * (1.0 - delta) < 2.0)
    throw ParameterError("delta", "ell*(1-delta) must be at least 2 cells");
}

}  // namespace

void NetworkConfig::validate() const {
  if (rows < 1) throw ParameterError("rows", "must be at least 1");
  if (cols < 1) throw ParameterError("cols", "must be at least 1");
  if (mean_block_length < 6) throw ParameterError("ell", "must be at least 6");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ParameterError("lambda", "must be a positive finite number");
  if (!(turn_prob >= 0.0 && turn_prob <= 1.0))
    throw ParameterError("p", "turning probability must lie in [0,1]");
  check_lengths(mean_block_length, delta);
}

std::vector<int> sample_block_lengths(int n, int mean_length, double delta,
                                      std::uint64_t seed) {
  if (n < 1) throw ParameterError("n", "must be at least 1");
  check_lengths(mean_length, delta);
  const int short_len = round_half_up(mean_length * (1.0 - delta));
  const int long_len = round_half_up(mean_length * (1.0 + delta));
  std::mt19937_64 rng(seed);
  std::vector<int> out(static_cast<std::size_t>(n));
  for (auto& len : out) len = (rng() >> 63) ? long_len : short_len;
  return out;
}

Network::Network(NetworkConfig cfg, std::vector<int> horizontal_lengths,
                 std::vector<int> vertical_lengths)
    : cfg_(cfg) {
  const auto n = static_cast<std::size_t>(cfg_.rows) * static_cast<std::size_t>(cfg_.cols);
  if (horizontal_lengths.size() != n || vertical_lengths.size() != n)
    throw StructuralError("segment length tables must have rows*cols entries");

  blocks_.resize(4 * n);
  for (int v = 0; v < num_intersections(); ++v) {
    for (Heading h : kHeadings) {
      Block& b = blocks_[static_cast<std::size_t>(outgoing(v, h))];
      b.from = v;
      b.to = neighbor(v, h);
      b.heading = h;
      // Horizontal segment (r,c) joins (r,c)-(r,c+1); vertical (r,c) joins
      // (r,c)-(r+1,c).
      switch (h) {
        case Heading::East:
          b.length = horizontal_lengths[static_cast<std::size_t>(v)];
          break;
        case Heading::West:
          b.length = horizontal_lengths[static_cast<std::size_t>(b.to)];
          break;
        case Heading::South:
          b.length = vertical_lengths[static_cast<std::size_t>(v)];
          break;
        case Heading::North:
          b.length = vertical_lengths[static_cast<std::size_t>(b.to)];
          break;
      }
      if (b.length < 1) throw StructuralError("block length must be positive");
      total_cells_ += static_cast<std::size_t>(b.length);
    }
  }
}

int Network::node(int row, int col) const noexcept {
  const int r = ((row % cfg_.rows) + cfg_.rows) % cfg_.rows;
  const int c = ((col % cfg_.cols) + cfg_.cols) % cfg_.cols;
  return r * cfg_.cols + c;
}

int Network::neighbor(int v, Heading h) const noexcept {
  const int r = row_of(v);
  const int c = col_of(v);
  switch (h) {
    case Heading::North: return node(r - 1, c);
    case Heading::South: return node(r + 1, c);
    case Heading::East: return node(r, c + 1);
    case Heading::West: return node(r, c - 1);
  }
  return v;
}

std::string Network::describe() const {
  std::ostringstream os;
  os << "# torus rows=" << cfg_.rows << " cols=" << cfg_.cols
     << " ell=" << cfg_.mean_block_length << " delta=" << cfg_.delta
     << " seed=" << cfg_.seed << " cells=" << total_cells_ << '\n';
  os << "block,from,to,heading,length\n";
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Block& b = blocks_[i];
    os << i << ',' << b.from << ',' << b.to << ',' << heading_letter(b.heading)
       << ',' << b.length << '\n';
  }
  return os.str();
}

Network build_network(const NetworkConfig& cfg) {
  cfg.validate();
  const int n = cfg.rows * cfg.cols;
  auto lengths = sample_block_lengths(2 * n, cfg.mean_block_length, cfg.delta, cfg.seed);
  std::vector<int> horizontal(lengths.begin(), lengths.begin() + n);
  std::vector<int> vertical(lengths.begin() + n, lengths.end());
  return Network(cfg, std::move(horizontal), std::move(vertical));
}

}  // namespace mfdlab
