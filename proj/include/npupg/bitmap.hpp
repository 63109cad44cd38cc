#pragma once
// Fixed-width bitmap for systolic-array row/column masks. Widths up to 256
// (largest supported array width); index 0 is row 0 / column 0.

#include <array>
#include <cassert>
#include <cstdint>
#include <string>

namespace npupg {

class Bitmap {
public:
  static constexpr uint32_t kMaxWidth = 256;

  Bitmap() = default;
  explicit Bitmap(uint32_t width) : width_(width) { assert(width <= kMaxWidth); }

  uint32_t width() const { return width_; }

  void set(uint32_t i, bool v = true) {
    assert(i < width_);
    if (v)
      w_[i / 64] |= (1ull << (i % 64));
    else
      w_[i / 64] &= ~(1ull << (i % 64));
  }
  bool get(uint32_t i) const {
    assert(i < width_);
    return (w_[i / 64] >> (i % 64)) & 1ull;
  }

  uint32_t popcount() const {
    uint32_t n = 0;
    for (uint64_t w : w_) n += uint32_t(__builtin_popcountll(w));
    return n;
  }
  bool any() const {
    for (uint64_t w : w_)
      if (w) return true;
    return false;
  }
  bool none() const { return !any(); }

  // OR of bits [0, i]: 1 once any lower-or-equal index is set.
  Bitmap prefix_or() const {
    Bitmap r(width_);
    bool seen = false;
    for (uint32_t i = 0; i < width_; i++) {
      seen = seen || get(i);
      if (seen) r.set(i);
    }
    return r;
  }
  // OR of bits [i, width): 1 while any higher-or-equal index is set.
  Bitmap suffix_or() const {
    Bitmap r(width_);
    bool seen = false;
    for (uint32_t i = width_; i-- > 0;) {
      seen = seen || get(i);
      if (seen) r.set(i);
    }
    return r;
  }

  bool operator==(const Bitmap& o) const {
    if (width_ != o.width_) return false;
    for (size_t i = 0; i < w_.size(); i++)
      if (w_[i] != o.w_[i]) return false;
    return true;
  }
  bool operator!=(const Bitmap& o) const { return !(*this == o); }

  // Binary-literal convention used in mask listings: the leftmost written digit
  // is index 0. from_msb0(0b0100, 4) sets index 1 only.
  static Bitmap from_msb0(uint64_t literal, uint32_t width) {
    assert(width <= 64);
    Bitmap r(width);
    for (uint32_t i = 0; i < width; i++)
      if ((literal >> (width - 1 - i)) & 1ull) r.set(i);
    return r;
  }
  uint64_t to_msb0() const {
    assert(width_ <= 64);
    uint64_t v = 0;
    for (uint32_t i = 0; i < width_; i++)
      if (get(i)) v |= 1ull << (width_ - 1 - i);
    return v;
  }

  // Natural (index i == bit i) conversions, for unit-id bitmaps.
  static Bitmap from_lsb0(uint64_t bits, uint32_t width) {
    assert(width <= 64);
    Bitmap r(width);
    for (uint32_t i = 0; i < width; i++)
      if ((bits >> i) & 1ull) r.set(i);
    return r;
  }

  std::string to_string() const {  // msb0 digit order, for messages
    std::string s;
    for (uint32_t i = 0; i < width_; i++) s += get(i) ? '1' : '0';
    return s;
  }

private:
  uint32_t width_ = 0;
  std::array<uint64_t, kMaxWidth / 64> w_ = {};
};

}  // namespace npupg
