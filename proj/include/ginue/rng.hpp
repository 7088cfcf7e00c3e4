#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace ginue {

/// splitmix64 finalizer; used to whiten seeds into Philox keys.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Philox4x32-10 block function (Salmon et al., SC'11).
constexpr std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMulA = 0xD2511F53u, kMulB = 0xCD9E8D57u;
  constexpr std::uint32_t kWeylA = 0x9E3779B9u, kWeylB = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t pa = static_cast<std::uint64_t>(kMulA) * ctr[0];
    const std::uint64_t pb = static_cast<std::uint64_t>(kMulB) * ctr[2];
    const auto hi_a = static_cast<std::uint32_t>(pa >> 32), lo_a = static_cast<std::uint32_t>(pa);
    const auto hi_b = static_cast<std::uint32_t>(pb >> 32), lo_b = static_cast<std::uint32_t>(pb);
    ctr = {hi_b ^ ctr[1] ^ key[0], lo_b, hi_a ^ ctr[3] ^ key[1], lo_a};
    key[0] += kWeylA;
    key[1] += kWeylB;
  }
  return ctr;
}

/// Stateless-by-construction random stream. The 128-bit Philox counter
/// holds (block index, stream id); the key is derived from (seed, domain).
/// Two streams share no blocks unless (seed, domain, stream) coincide.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t domain = 0) : stream_(stream) {
    const std::uint64_t k = mix64(seed ^ mix64(domain + 0x5851F42D4C957F2DULL));
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  }

  std::array<std::uint32_t, 4> next_block() {
    const std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                              static_cast<std::uint32_t>(stream_),
                                              static_cast<std::uint32_t>(stream_ >> 32)};
    ++block_;
    return philox4x32(ctr, key_);
  }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double uniform() {
    if (!have_spare_uniform_) {
      const auto b = next_block();
      spare_uniform_ = to_unit(b[2], b[3]);
      have_spare_uniform_ = true;
      return to_unit(b[0], b[1]);
    }
    have_spare_uniform_ = false;
    return spare_uniform_;
  }

  /// Two independent standard normals from one Philox block (Box-Muller).
  std::array<double, 2> normal_pair() {
    const auto b = next_block();
    const double u1 = to_unit(b[0], b[1]);
    const double u2 = to_unit(b[2], b[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  double normal() {
    if (have_spare_normal_) {
      have_spare_normal_ = false;
      return spare_normal_;
    }
    const auto p = normal_pair();
    spare_normal_ = p[1];
    have_spare_normal_ = true;
    return p[0];
  }

  /// Standard complex normal u + iv, u, v ~ N(0, 1/2), so E|g|^2 = 1.
  std::complex<double> complex_normal() {
    const auto p = normal_pair();
    return {p[0] * std::numbers::sqrt2 * 0.5, p[1] * std::numbers::sqrt2 * 0.5};
  }

 private:
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  double spare_uniform_ = 0.0;
  double spare_normal_ = 0.0;
  bool have_spare_uniform_ = false;
  bool have_spare_normal_ = false;
};

// Stream domains keep unrelated consumers of one user seed apart.
namespace rng_domain {
inline constexpr std::uint64_t kEnsemble = 1;
inline constexpr std::uint64_t kKernelMc = 2;
inline constexpr std::uint64_t kOracle = 3;
inline constexpr std::uint64_t kTest = 4;
}  // namespace rng_domain

}  // namespace ginue
