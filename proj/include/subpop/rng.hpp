#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace subpop {

// Deterministic stream of pseudo-random draws, addressed by (seed, stream_id).
// Same pair, same sequence; distinct stream ids behave independently. The
// generator is xoshiro256++ whose state is filled by SplitMix64 keyed on both
// ids, so streams can be handed to concurrent workers without coordination.
//
// All sampling helpers are hand-rolled (no std::*_distribution) so output is
// identical across standard-library implementations.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0,1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Uniform on {0, ..., bound-1} via Lemire's multiply-then-reject. bound > 0.
  std::uint64_t uniform_below(std::uint64_t bound);

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> s_;
};

// O(1) categorical sampling over a fixed nonnegative weight vector
// (Vose alias method). Construction is deterministic: ties and stack order
// depend only on the input order.
class AliasTable {
 public:
  explicit AliasTable(std::span<const double> weights);

  int size() const { return static_cast<int>(prob_.size()); }

  int sample(RngStream& rng) const {
    const int i = static_cast<int>(rng.uniform_below(prob_.size()));
    return rng.next_double() < prob_[i] ? i : alias_[i];
  }

 private:
  std::vector<double> prob_;
  std::vector<int> alias_;
};

}  // namespace subpop
