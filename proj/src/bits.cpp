#include "subpop/bits.hpp"

#include <stdexcept>

namespace subpop {
namespace {

std::size_t g_max_bits = std::size_t{1} << 20;

std::size_t word_count(std::size_t n) { return (n + 63) / 64; }

// Mask selecting the valid bits of the last word, all-ones if n % 64 == 0.
std::uint64_t tail_mask(std::size_t n) {
  const std::size_t rem = n & 63;
  return rem == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << rem) - 1;
}

void check_length(std::size_t n) {
  if (n > g_max_bits) throw std::length_error("BitString: length exceeds configured maximum");
}

}  // namespace

std::size_t bitstring_max_length() { return g_max_bits; }
void set_bitstring_max_length(std::size_t n) { g_max_bits = n; }

BitString::BitString(std::size_t n) : len_(n), words_(word_count(n), 0) {
  check_length(n);
}

BitString BitString::random(std::size_t n, RngStream& rng) {
  BitString out(n);
  if (n == 0) return out;
  for (auto& w : out.words_) w = rng.next_u64();
  out.words_.back() &= tail_mask(n);
  return out;
}

BitString BitString::random_masked(const BitString& mask, const BitString& value,
                                   RngStream& rng) {
  if (mask.len_ != value.len_)
    throw std::invalid_argument("random_masked: mask/value length mismatch");
  BitString out(mask.len_);
  if (mask.len_ == 0) return out;
  for (std::size_t w = 0; w < out.words_.size(); ++w) {
    out.words_[w] = (rng.next_u64() & ~mask.words_[w]) | value.words_[w];
  }
  out.words_.back() &= tail_mask(mask.len_);
  return out;
}

BitString BitString::from_string(std::string_view chars) {
  BitString out(chars.size());
  for (std::size_t i = 0; i < chars.size(); ++i) {
    if (chars[i] == '1')
      out.set(i, true);
    else if (chars[i] != '0')
      throw std::invalid_argument("BitString::from_string: character outside {0,1}");
  }
  return out;
}

std::size_t BitString::count_ones() const {
  std::size_t c = 0;
  for (std::uint64_t w : words_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

BitString BitString::complemented() const {
  BitString out(len_);
  for (std::size_t w = 0; w < words_.size(); ++w) out.words_[w] = ~words_[w];
  if (len_ != 0) out.words_.back() &= tail_mask(len_);
  return out;
}

BitString BitString::masked_by(const BitString& mask) const {
  if (mask.len_ != len_) throw std::invalid_argument("masked_by: length mismatch");
  BitString out(len_);
  for (std::size_t w = 0; w < words_.size(); ++w) out.words_[w] = words_[w] & mask.words_[w];
  return out;
}

BitString BitString::prefix(std::size_t n) const {
  if (n > len_) throw std::out_of_range("BitString::prefix: longer than string");
  BitString out(n);
  for (std::size_t w = 0; w < out.words_.size(); ++w) out.words_[w] = words_[w];
  if (n != 0) out.words_.back() &= tail_mask(n);
  return out;
}

BitString BitString::appended(bool v) const {
  BitString out(len_ + 1);
  for (std::size_t w = 0; w < words_.size(); ++w) out.words_[w] = words_[w];
  out.set(len_, v);
  return out;
}

std::string BitString::to_string() const {
  std::string s(len_, '0');
  for (std::size_t i = 0; i < len_; ++i)
    if (get(i)) s[i] = '1';
  return s;
}

std::size_t hamming(const BitString& a, const BitString& b) {
  if (a.size() != b.size()) throw std::invalid_argument("hamming: length mismatch");
  std::size_t c = 0;
  const auto wa = a.words();
  const auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i)
    c += static_cast<std::size_t>(std::popcount(wa[i] ^ wb[i]));
  return c;
}

int compare_bigendian(const BitString& a, const BitString& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("compare_bigendian: length mismatch");
  const auto wa = a.words();
  const auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) {
    const std::uint64_t diff = wa[i] ^ wb[i];
    if (diff != 0) {
      // Lowest set bit of the word is the most significant differing index.
      const int bit = std::countr_zero(diff);
      return ((wa[i] >> bit) & 1u) ? 1 : -1;
    }
  }
  return 0;
}

}  // namespace subpop
