#include "mfdlab/lattice.hpp"

#include <bit>

#include "mfdlab/errors.hpp"

namespace mfdlab {

namespace {

constexpr std::uint64_t tail_mask(std::size_t length) noexcept {
  const std::size_t rem = length & 63;
  return rem == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << rem) - 1;
}

}  // namespace

Lane::Lane(std::size_t length) : length_(length), words_((length + 63) / 64, 0) {
  if (length == 0) throw ParameterError("length", "lane needs at least one cell");
}

Lane Lane::from_string(std::string_view bits) {
  Lane lane(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1')
      throw ParameterError("cells", "expected only '0' and '1'");
    lane.set(i, bits[i] == '1');
  }
  return lane;
}

void Lane::set(std::size_t i, bool occupied) noexcept {
  const std::uint64_t bit = std::uint64_t{1} << (i & 63);
  if (occupied)
    words_[i >> 6] |= bit;
  else
    words_[i >> 6] &= ~bit;
}

std::size_t Lane::count() const noexcept {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::size_t Lane::advance(const Boundary& boundary) noexcept {
  bool upstream = false;    // virtual cell before cell 0
  bool downstream = false;  // virtual cell after the last cell
  if (std::holds_alternative<Periodic>(boundary)) {
    upstream = back();
    downstream = front();
  } else {
    const auto& g = std::get<Gated>(boundary);
    upstream = g.inflow;
    downstream = !g.outflow_open;
  }

  const std::size_t n = words_.size();
  const std::size_t top = (length_ - 1) & 63;
  std::size_t moved = 0;
  // High to low so the lower neighbor word is still unmodified when read;
  // the upper neighbor's old value is carried in `old_next`.
  std::uint64_t old_next = 0;
  for (std::size_t w = n; w-- > 0;) {
    const std::uint64_t c = words_[w];
    std::uint64_t left = c << 1;
    left |= w > 0 ? words_[w - 1] >> 63 : std::uint64_t{upstream};
    std::uint64_t right = (c >> 1) | (old_next << 63);
    if (w == n - 1) right |= std::uint64_t{downstream} << top;
    moved += static_cast<std::size_t>(std::popcount(c & ~right));
    std::uint64_t next = (left & ~c) | (c & right);
    if (w == n - 1) next &= tail_mask(length_);
    old_next = c;
    words_[w] = next;
  }
  return moved;
}

std::string Lane::to_string() const {
  std::string s(length_, '0');
  for (std::size_t i = 0; i < length_; ++i)
    if (get(i)) s[i] = '1';
  return s;
}

Lane rule184_step(const Lane& lane, const Boundary& boundary) {
  Lane next = lane;
  next.advance(boundary);
  return next;
}

}  // namespace mfdlab
