#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subpop/rng.hpp"

namespace subpop {

// Maximum BitString length accepted by constructors. Default 2^20 bits.
// Set once at startup if a larger instance is needed; not thread-safe to
// change while strings are being constructed.
std::size_t bitstring_max_length();
void set_bitstring_max_length(std::size_t n);

// Fixed-length bit vector packed into 64-bit words. Bit i lives in word i/64
// at bit position i%64, so the lowest index is the lowest bit of word 0.
// Length is immutable after construction; bit values are not. Tail bits past
// size() are kept zero, which lets word-level loops (Hamming, compare, merge)
// skip masking.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t n);

  // n uniform fair bits; consumes ceil(n/64) raw draws.
  static BitString random(std::size_t n, RngStream& rng);
  // Positions with mask bit 1 copy `value`, the rest are fair coins.
  // mask and value must have equal length and value must vanish off the mask.
  static BitString random_masked(const BitString& mask, const BitString& value,
                                 RngStream& rng);
  static BitString from_string(std::string_view chars);

  std::size_t size() const { return len_; }
  bool empty() const { return len_ == 0; }

  bool get(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  void set(std::size_t i, bool v) {
    const std::uint64_t m = std::uint64_t{1} << (i & 63);
    if (v)
      words_[i >> 6] |= m;
    else
      words_[i >> 6] &= ~m;
  }
  void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  std::size_t count_ones() const;
  BitString complemented() const;
  // Bitwise AND with an equal-length mask.
  BitString masked_by(const BitString& mask) const;
  // First n bits. n <= size().
  BitString prefix(std::size_t n) const;
  // Copy with one extra trailing bit.
  BitString appended(bool v) const;

  std::span<const std::uint64_t> words() const { return words_; }
  std::string to_string() const;

  bool operator==(const BitString&) const = default;

 private:
  std::size_t len_ = 0;
  std::vector<std::uint64_t> words_;
};

// Number of differing positions; requires equal lengths.
std::size_t hamming(const BitString& a, const BitString& b);

// Three-way order of a and b read as big-endian integers (index 0 is the most
// significant bit): -1 if a < b, 0 if equal, +1 if a > b. Equal lengths only.
int compare_bigendian(const BitString& a, const BitString& b);

}  // namespace subpop
