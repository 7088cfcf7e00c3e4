#include <gtest/gtest.h>

#include <cmath>

#include "ginue/rng.hpp"

using namespace ginue;

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST(Philox, KnownAnswerVectors) {
  using A4 = std::array<std::uint32_t, 4>;
  EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}), (A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(CounterRng, StreamsAreReproducibleAndDistinct) {
  CounterRng a(7, 3), b(7, 3), c(7, 4), d(8, 3);
  for (int i = 0; i < 10; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_NE(x, c.uniform());
    EXPECT_NE(x, d.uniform());
  }
}

TEST(CounterRng, UniformInOpenUnitInterval) {
  CounterRng r(1, 0);
  double mean = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    mean += u;
  }
  mean /= n;
  EXPECT_NEAR(mean, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(CounterRng, ComplexNormalMoments) {
  CounterRng r(2, 0);
  const int n = 200000;
  double sre = 0, sim = 0, s2 = 0, sre2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const auto g = r.complex_normal();
    sre += g.real();
    sim += g.imag();
    s2 += std::norm(g);
    sre2 += g.real() * g.real();
    s4 += std::norm(g) * std::norm(g);
  }
  // E re = E im = 0, E|g|^2 = 1 (sd 1/sqrt(n)), E re^2 = 1/2, E|g|^4 = 2
  EXPECT_NEAR(sre / n, 0.0, 5.0 * std::sqrt(0.5 / n));
  EXPECT_NEAR(sim / n, 0.0, 5.0 * std::sqrt(0.5 / n));
  EXPECT_NEAR(s2 / n, 1.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(sre2 / n, 0.5, 5.0 * std::sqrt(0.5 / n));
  EXPECT_NEAR(s4 / n, 2.0, 5.0 * std::sqrt(20.0 / n));
}
