// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace maxmart {

/// Philox4x32-10 block function (Salmon et al., SC'11). Pure: maps a
/// 128-bit counter and a 64-bit key to 128 random bits.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// splitmix64 finalizer; used only to derive keys, never as a generator.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Address of an independent random stream: a base seed (the Philox key)
/// and a stream index (the high half of the Philox counter). Distinct pairs
/// never share counter blocks.
struct SeedStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  /// Child stream `index` under a key derived from this (seed, stream) pair.
  /// Children of distinct parents live under distinct keys.
  [[nodiscard]] SeedStream split(std::uint64_t index) const {
    return {mix64(seed ^ mix64(stream + 0x632BE59BD9B4E019ull)), index};
  }

  friend bool operator==(const SeedStream&, const SeedStream&) = default;
};

/// Sequential generator over one SeedStream. Output depends only on the
/// stream address and the number of values drawn so far.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(SeedStream s)
      : key_{static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32)},
        stream_(s.stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    if (used_ >= 2) refill();
    const std::uint64_t out =
        (std::uint64_t{buffer_[2 * used_]} << 32) | buffer_[2 * used_ + 1];
    ++used_;
    return out;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  /// Standard normal by Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// +1 or -1 with equal probability, 64 signs per raw draw.
  double rademacher() {
    if (sign_bits_left_ == 0) {
      sign_bits_ = (*this)();
      sign_bits_left_ = 64;
    }
    const bool bit = sign_bits_ & 1u;
    sign_bits_ >>= 1;
    --sign_bits_left_;
    return bit ? 1.0 : -1.0;
  }

 private:
  void refill() {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                  static_cast<std::uint32_t>(block_ >> 32),
                                  static_cast<std::uint32_t>(stream_),
                                  static_cast<std::uint32_t>(stream_ >> 32)};
    buffer_ = Philox4x32::apply(ctr, key_);
    ++block_;
    used_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int used_ = 2;
  bool has_spare_ = false;
  double spare_ = 0.0;
  std::uint64_t sign_bits_ = 0;
  int sign_bits_left_ = 0;
};

}  // namespace maxmart
