#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace bbmwave::rng {

/// Philox4x32-10 counter-based generator. Output is a pure function of
/// (counter, key), which is what makes every draw addressable.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// What a draw is used for; keeps streams for different jobs disjoint.
enum class Purpose : std::uint32_t { step = 0, initial = 1, test = 2 };

/// Deterministic stream addressed by (seed, purpose, step, id).
class Stream {
 public:
  explicit Stream(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  /// Raw 128-bit block number `block` for the given address.
  Philox4x32::Counter raw(Purpose purpose, std::uint32_t block, std::uint32_t step,
                          std::uint64_t id) const {
    const Philox4x32::Counter ctr = {
        block, step, static_cast<std::uint32_t>(id),
        static_cast<std::uint32_t>((id >> 32) & 0x00FFFFFFu) |
            (static_cast<std::uint32_t>(purpose) << 24)};
    return Philox4x32::block(ctr, key_);
  }

  /// Uniform in (0, 1) with 52 random bits; the half-step offset is exact, so
  /// neither endpoint can be produced.
  static double to_open01(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
  }

  /// Two uniforms (event draw and spare) at the address.
  std::array<double, 2> uniforms(Purpose purpose, std::uint32_t block, std::uint32_t step,
                                 std::uint64_t id) const {
    const auto r = raw(purpose, block, step, id);
    return {to_open01(r[0], r[1]), to_open01(r[2], r[3])};
  }

  /// Standard normal variate by Box-Muller from one block.
  double normal(Purpose purpose, std::uint32_t block, std::uint32_t step,
                std::uint64_t id) const {
    const auto u = uniforms(purpose, block, step, id);
    return std::sqrt(-2.0 * std::log(u[0])) * std::cos(2.0 * std::numbers::pi * u[1]);
  }

 private:
  Philox4x32::Key key_;
};

}  // namespace bbmwave::rng
