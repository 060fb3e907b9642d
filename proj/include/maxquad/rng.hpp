#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace maxquad {

// Philox4x32-10 counter-based generator. Every draw is a pure function of
// (key, counter), so samples keyed by logical indices (seed, stream, t,
// omega, ...) are identical regardless of thread count or evaluation order.
namespace philox {

inline std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr,
                                     std::array<uint32_t, 2> key) {
  constexpr uint32_t mul_a = 0xD2511F53u, mul_b = 0xCD9E8D57u;
  constexpr uint32_t weyl_a = 0x9E3779B9u, weyl_b = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const uint64_t a = uint64_t(mul_a) * ctr[0];
    const uint64_t b = uint64_t(mul_b) * ctr[2];
    ctr = {uint32_t(b >> 32) ^ ctr[1] ^ key[0], uint32_t(b),
           uint32_t(a >> 32) ^ ctr[3] ^ key[1], uint32_t(a)};
    key[0] += weyl_a;
    key[1] += weyl_b;
  }
  return ctr;
}

}  // namespace philox

// Logical sub-streams drawn from one seed.
enum class RngStream : uint32_t {
  initial_state = 1,
  brownian_increment = 2,
  pair_states_shared = 3,
  pair_increments_shared = 4,
  pair_states_local = 5,
  pair_increments_local = 6,
};

/// Stateless generator: all methods are const and depend only on (seed, indices).
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed) : key_{uint32_t(seed), uint32_t(seed >> 32)} {}

  /// Uniform double in the open interval (0,1).
  double uniform(RngStream stream, uint32_t t, uint32_t omega, uint32_t aux) const {
    const auto r = raw(stream, t, omega, aux);
    return to_unit(r[0], r[1]);
  }

  /// Two independent standard normals (Box-Muller on one counter block).
  std::array<double, 2> normal_pair(RngStream stream, uint32_t t, uint32_t omega,
                                    uint32_t aux) const {
    const auto r = raw(stream, t, omega, aux);
    const double u1 = to_unit(r[0], r[1]);
    const double u2 = to_unit(r[2], r[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
  }

  /// Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
  uint64_t uniform_index(RngStream stream, uint32_t t, uint32_t omega, uint32_t aux,
                         uint64_t n) const {
    const auto r = raw(stream, t, omega, aux);
    const uint64_t v = (uint64_t(r[0]) << 32) | r[1];
    return v % n;
  }

 private:
  std::array<uint32_t, 4> raw(RngStream stream, uint32_t t, uint32_t omega,
                              uint32_t aux) const {
    const std::array<uint32_t, 4> ctr = {omega, (uint32_t(stream) << 24) | (t & 0xFFFFFFu),
                                         aux, 0u};
    return philox::block(ctr, key_);
  }

  static double to_unit(uint32_t hi, uint32_t lo) {
    const uint64_t v = (uint64_t(hi) << 32) | lo;
    // 53-bit mantissa, offset by half an ulp so 0 and 1 are never returned.
    return (double(v >> 11) + 0.5) * 0x1p-53;
  }

  std::array<uint32_t, 2> key_;
};

}  // namespace maxquad
