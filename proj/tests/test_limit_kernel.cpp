#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "ginue/limit_kernel.hpp"
#include "test_support.hpp"

using namespace ginue;
using namespace std::complex_literals;

namespace {

constexpr double kPi = std::numbers::pi;

KernelParams params(cplx chi, double tau_hat, std::size_t r0, std::size_t n) {
  KernelParams p;
  p.chi = chi;
  p.tau_hat = tau_hat;
  p.r0 = r0;
  p.n = n;
  return p;
}

ComplexMatrix random_strict_upper(CounterRng& rng, std::size_t n) {
  ComplexMatrix t(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) t(i, j) = rng.complex_normal();
  return t;
}

// Prefactor exponent by matrix traces, kept complex to expose any imaginary part.
cplx prefactor_exponent_traces(const std::vector<cplx>& zh, const KernelParams& p) {
  const ComplexMatrix z = ComplexMatrix::diagonal(zh), zs = z.adjoint();
  const cplx chi = p.chi, chib = std::conj(p.chi);
  const ComplexMatrix q = chib * (z * z) + 2.0 * (z * zs) + chi * (zs * zs);
  cplx e = -0.5 * (q * q).trace() + chib * (z * z * z * zs).trace() + 1.5 * ((z * zs) * (z * zs)).trace() +
           chi * (z * zs * zs * zs).trace();
  e += -0.5 * static_cast<double>(p.n) * p.tau_hat * p.tau_hat -
       p.tau_hat * (chi * (zs * zs) + z * zs + chib * (z * z)).trace();
  return e;
}

// Remark integrand D for n = 1 at u = |y|^2, s = ||W||^2.
double remark_bracket(double u, double s, cplx z, cplx chi) {
  return std::norm(u + s - 2.0 * std::conj(chi) * z * z - std::norm(z)) + 4.0 * u * std::norm(chi * std::conj(z) + z);
}

// Composite Simpson on a fixed box in (u, s) with k panels per axis.
double I1_simpson_k(cplx z, const KernelParams& p, int k) {
  const cplx chi = p.chi;
  const double m2 = std::norm(z);
  const double bu = p.tau_hat + (chi * std::conj(z) * std::conj(z)).real() + m2 + (std::conj(chi) * z * z).real();
  const double bs = p.tau_hat + (chi * std::conj(z) * std::conj(z)).real() + 2.0 * m2 + (std::conj(chi) * z * z).real();
  const double U = 14.0, S = 14.0, hu = U / k, hs = S / k;
  auto wt = [k](int i) { return (i == 0 || i == k) ? 1.0 : (i % 2 ? 4.0 : 2.0); };
  double fact = 1.0;
  for (std::size_t i = 2; i < p.r0; ++i) fact *= static_cast<double>(i);
  double total = 0.0;
  for (int i = 0; i <= k; ++i) {
    const double u = i * hu;
    const double gu = std::pow(m2 + u, static_cast<double>(p.r0) - 1.0) * std::exp(-0.5 * u * u + bu * u);
    if (p.r0 == 0) {
      if (u == 0.0 && m2 == 0.0) continue;  // integrand -> 0 there
      total += wt(i) * remark_bracket(u, 0.0, z, chi) * gu;
      continue;
    }
    double inner = 0.0;
    for (int j = 0; j <= k; ++j) {
      const double s = j * hs;
      inner += wt(j) * remark_bracket(u, s, z, chi) * std::pow(s, static_cast<double>(p.r0) - 1.0) *
               std::exp(-0.5 * s * s - bs * s);
    }
    total += wt(i) * gu * inner * hs / 3.0;
  }
  total *= hu / 3.0;
  // pi from d^2y, pi^{r0} s^{r0-1}/(r0-1)! from d^2W
  const double c = 1.0 / (std::sqrt(2.0 * kPi) * std::pow(kPi, p.r0 + 2.0)) * kPi *
                   (p.r0 == 0 ? 1.0 : std::pow(kPi, static_cast<double>(p.r0)) / fact);
  return c * total;
}

// Independent oracle for I_1: Richardson-extrapolated Simpson.
double I1_simpson(cplx z, const KernelParams& p) {
  return (16.0 * I1_simpson_k(z, p, 2400) - I1_simpson_k(z, p, 1200)) / 15.0;
}

// Macroscopic density of the limiting spectral measure at z, for atoms
// +-1 with tau = 1: (1/pi) d/dz of sum c (z - a) / (|z - a|^2 + t).
double macroscopic_density_pair(cplx z) {
  const double f1 = std::norm(z - 1.0), f2 = std::norm(z + 1.0);
  auto g = [&](double t) { return 0.5 / (f1 + t) + 0.5 / (f2 + t) - 1.0; };
  double lo = 0.0, hi = 10.0;
  if (g(0.0) <= 0.0) return 0.0;
  for (int it = 0; it < 200; ++it) (g(0.5 * (lo + hi)) > 0.0 ? lo : hi) = 0.5 * (lo + hi);
  const double t = 0.5 * (lo + hi);
  const double s2 = 0.5 / std::pow(f1 + t, 2) + 0.5 / std::pow(f2 + t, 2);
  const double sf = 0.5 * f1 / std::pow(f1 + t, 2) + 0.5 * f2 / std::pow(f2 + t, 2);
  const cplx sz = 0.5 * (z - 1.0) / std::pow(f1 + t, 2) + 0.5 * (z + 1.0) / std::pow(f2 + t, 2);
  return (1.0 - sf + std::norm(sz) / s2) / kPi;
}

}  // namespace

TEST(Prefactor, Examples) {
  EXPECT_DOUBLE_EQ(prefactor({0.0}, params(1.0, 0.0, 0, 1)), 1.0);
  EXPECT_NEAR(prefactor({1.0}, params(1.0, 0.0, 0, 1)), std::exp(-4.5), 1e-15);
  EXPECT_EQ(prefactor({0.3 + 0.2i, 0.3 + 0.2i}, params(1.0, 0.0, 0, 2)), 0.0);
  EXPECT_THROW((void)prefactor({0.0}, params(1.0, 0.0, 0, 2)), Error);
}

TEST(Prefactor, ExponentIsRealAndMatchesTraces) {
  auto rng = test::test_rng(41);
  for (int k = 0; k < 50; ++k) {
    const cplx chi = std::polar(rng.uniform(), 6.283 * rng.uniform());
    const auto p = params(chi, rng.normal(), 0, 3);
    const std::vector<cplx> z = {rng.complex_normal(), rng.complex_normal(), rng.complex_normal()};
    const cplx e = prefactor_exponent_traces(z, p);
    EXPECT_LT(std::abs(e.imag()), 1e-12 * (1.0 + std::abs(e)));
    double vdm = 1.0;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) vdm *= std::norm(z[i] - z[j]);
    const double want = vdm * std::exp(e.real());
    EXPECT_NEAR(prefactor(z, p), want, 1e-12 * want);
  }
}

TEST(FAction, ZeroInputs) {
  const auto p = params(0.3 + 0.4i, 0.7, 2, 2);
  EXPECT_EQ(f_action(ComplexMatrix(2, 2), ComplexMatrix(2, 2), ComplexMatrix(2, 2), {0.0, 0.0}, p), cplx(0.0));
}

TEST(FAction, ShapeAndTriangularityChecks) {
  const auto p = params(1.0, 0.0, 1, 2);
  EXPECT_THROW((void)f_action(ComplexMatrix(2, 2), ComplexMatrix(2, 2), ComplexMatrix(2, 2), {0.0, 0.0}, p), Error);
  ComplexMatrix t(2, 2);
  t(1, 0) = 1.0;
  EXPECT_THROW((void)f_action(ComplexMatrix(2, 1), t, ComplexMatrix(2, 2), {0.0, 0.0}, p), Error);
}

TEST(FAction, OnePointMatchesRemarkExponent) {
  auto rng = test::test_rng(42);
  for (int k = 0; k < 20; ++k) {
    const cplx chi = std::polar(rng.uniform(), 6.283 * rng.uniform());
    const double th = rng.normal();
    const cplx z = rng.complex_normal(), y = rng.complex_normal();
    const double u = std::norm(y);
    const double bu = th + (chi * std::conj(z) * std::conj(z)).real() + std::norm(z) + (std::conj(chi) * z * z).real();
    const cplx f0 = f_action(ComplexMatrix(1, 0), ComplexMatrix(1, 1), ComplexMatrix(1, 1, {y}), {z}, params(chi, th, 0, 1));
    EXPECT_NEAR(f0.real(), -0.5 * u * u + bu * u, 1e-12);
    EXPECT_NEAR(f0.imag(), 0.0, 1e-12);

    // with W (r0 = 2): extra -s^2/2 - (tau_hat + chi zbar^2 + 2|z|^2 + chibar z^2) s
    const ComplexMatrix w(1, 2, {rng.complex_normal(), rng.complex_normal()});
    const double s = std::norm(w(0, 0)) + std::norm(w(0, 1));
    const double bs = bu + std::norm(z);
    const cplx f2 = f_action(w, ComplexMatrix(1, 1), ComplexMatrix(1, 1, {y}), {z}, params(chi, th, 2, 1));
    EXPECT_NEAR(f2.real(), -0.5 * u * u + bu * u - 0.5 * s * s - bs * s, 1e-12);
  }
}

TEST(FAction, DecreasesWithoutBoundAlongY) {
  const auto p = params(0.5 - 0.2i, 0.3, 2, 2);
  const ComplexMatrix w = ComplexMatrix::from_rows({{0.1, 0.2i}, {-0.3, 0.4}});
  const ComplexMatrix t = ComplexMatrix::from_rows({{0, 0.5 + 0.1i}, {0, 0}});
  const std::vector<cplx> z = {0.4 + 0.3i, -0.2};
  double prev = 1e300;
  for (double s = 2.0; s <= 64.0; s *= 2.0) {
    const double f = f_action(w, t, s * ComplexMatrix::identity(2), z, p).real();
    EXPECT_LT(f, prev);
    prev = f;
  }
  EXPECT_LT(prev, -1e6);
}

TEST(HDet, OnePointMatchesRemarkBracket) {
  auto rng = test::test_rng(43);
  for (int k = 0; k < 20; ++k) {
    const cplx chi = std::polar(rng.uniform(), 6.283 * rng.uniform());
    const cplx z = rng.complex_normal(), y = rng.complex_normal();
    const ComplexMatrix w(1, 3, {rng.complex_normal(), rng.complex_normal(), rng.complex_normal()});
    const double s = std::pow(w.frobenius_norm(), 2);
    const cplx d = h_det(w, ComplexMatrix(1, 1), ComplexMatrix(1, 1, {y}), {z}, params(chi, 0.0, 3, 1));
    const double want = remark_bracket(std::norm(y), s, z, chi);
    EXPECT_NEAR(d.real(), want, 1e-11 * (1.0 + want));
    EXPECT_NEAR(d.imag(), 0.0, 1e-11 * (1.0 + want));
  }
}

TEST(HDet, ZeroInputsGiveZero) {
  const auto p = params(1.0, 0.0, 0, 2);
  EXPECT_EQ(h_det(ComplexMatrix(2, 0), ComplexMatrix(2, 2), ComplexMatrix(2, 2), {0.0, 0.0}, p), cplx(0.0));
}

TEST(HDet, FullAndReducedAgreeAtSimplePoint) {
  const auto p = params(0.0, 0.0, 0, 1);
  const ComplexMatrix w(1, 0), t(1, 1), y(1, 1);
  const cplx full = h_det(w, t, y, {1.0}, p) / std::pow(e0_det(y, {1.0}), 1);
  const cplx red = h_det_reduced(t, y, {1.0}, p);
  EXPECT_LT(std::abs(full - red), 1e-12);
  EXPECT_LT(std::abs(red - 1.0), 1e-12);
}

TEST(HDet, ProductFormReductionAtRandomInputs) {
  auto rng = test::test_rng(44);
  for (std::size_t n = 1; n <= 3; ++n)
    for (int k = 0; k < 10; ++k) {
      const cplx chi = std::polar(rng.uniform(), 6.283 * rng.uniform());
      const auto p = params(chi, rng.normal(), 0, n);
      const ComplexMatrix t = random_strict_upper(rng, n);
      const ComplexMatrix y = test::random_matrix(rng, n, n);
      std::vector<cplx> z(n);
      for (auto& v : z) v = rng.complex_normal();
      const cplx e0 = e0_det(y, z);
      ASSERT_GT(std::abs(e0), 1e-3);
      const cplx lhs = h_det(ComplexMatrix(n, 0), t, y, z, p) / detail::ipow(e0, n);
      const cplx rhs = h_det_reduced(t, y, z, p);
      EXPECT_LT(std::abs(lhs - rhs), 1e-10 * std::abs(rhs));
    }
}

TEST(Density1, AnchorValue) {
  const double v = density1_quadrature(0.0, params(1.0, 0.0, 0, 1));
  EXPECT_NEAR(v, 1.0 / (kPi * std::sqrt(2.0 * kPi)), 1e-9);
}

TEST(Density1, Symmetries) {
  for (std::size_t r0 : {0u, 1u, 2u}) {
    const auto p = params(1.0, 0.4, r0, 1);
    for (cplx z : {0.3 + 0.7i, -1.1 + 0.2i, 0.9i}) {
      const double v = density1_quadrature(z, p);
      EXPECT_NEAR(density1_quadrature(-z, p), v, 1e-9);
      EXPECT_NEAR(density1_quadrature(std::conj(z), p), v, 1e-9);
    }
  }
}

TEST(Density1, DecaysTowardExterior) {
  // For atoms +-1 the imaginary axis leaves the support.
  EXPECT_LT(density1_quadrature(3.0i, params(1.0, 0.0, 0, 1)), 1e-3);
  EXPECT_LT(density1_quadrature(-3.0i, params(1.0, 0.0, 0, 1)), 1e-3);
}

TEST(Density1, MatchesMacroscopicDensityTowardBulk) {
  // Along the real axis the rescaled limit must connect to the bulk:
  // N^{1/2} rho(N^{-1/4} x) with rho the macroscopic density, as N -> inf.
  const double n = 1e16;
  for (double x : {3.0, 4.0}) {
    const double macro = std::sqrt(n) * macroscopic_density_pair(std::pow(n, -0.25) * x);
    EXPECT_NEAR(density1_quadrature(x, params(1.0, 0.0, 0, 1)) / macro, 1.0, 0.01) << "x=" << x;
  }
}

TEST(Density1, AgreesWithSimpsonOracle) {
  for (std::size_t r0 : {0u, 1u, 2u, 3u})
    for (cplx z : {0.0 + 0.0i, 0.5 - 0.3i, 1.0 + 0.4i}) {
      const auto p = params(0.6 + 0.3i, -0.3, r0, 1);
      EXPECT_NEAR(I1_quadrature(z, p), I1_simpson(z, p), 1e-8) << "r0=" << r0 << " z=" << z;
    }
}

TEST(Density1, RejectsMultiPoint) { EXPECT_THROW((void)density1_quadrature(0.0, params(1.0, 0.0, 0, 2)), Error); }

TEST(DensityLimit, DelegationAndPositivity) {
  const auto p = params(1.0, 0.0, 0, 1);
  const auto one = density_limit({{0.0}}, p);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], density1_quadrature(0.0, p));
  std::vector<std::vector<cplx>> grid;
  for (int i = -6; i <= 6; ++i)
    for (int j = -6; j <= 6; ++j) grid.push_back({cplx(0.25 * i, 0.25 * j)});
  for (double v : density_limit(grid, p)) EXPECT_GE(v, 0.0);
}

TEST(DensityLimit, RestrictedRankRejected) {
  McConfig mc;
  mc.samples = 1024;
  EXPECT_THROW((void)density_limit({{0.0, 1.0}}, params(1.0, 0.0, 1, 2), mc), Error);
}

TEST(InMc, AnchorWithinThreeSigma) {
  McConfig mc;
  mc.samples = 200000;
  mc.seed = 7;
  const auto e = In_mc({0.0}, params(1.0, 0.0, 0, 1), mc);
  EXPECT_LT(std::abs(e.value.real() - 1.0 / (kPi * std::sqrt(2.0 * kPi))), 3.0 * e.stderr);
  EXPECT_LE(std::abs(e.value.imag()), 3.0 * e.stderr_imag + 1e-15);
  EXPECT_FALSE(e.warning.has_value());
}

TEST(InMc, AgreesWithQuadratureAndProposalScale) {
  McConfig mc;
  mc.samples = 200000;
  mc.seed = 8;
  for (std::size_t r0 : {0u, 2u}) {
    const auto p = params(1.0, 0.0, r0, 1);
    for (cplx z : {0.4 + 0.2i, -0.7i}) {
      const double q = I1_quadrature(z, p);
      const auto a = In_mc({z}, p, mc);
      EXPECT_LT(std::abs(a.value.real() - q), 3.0 * a.stderr) << "r0=" << r0 << " z=" << z;
      McConfig wide = mc;
      wide.sigma = 1.6;
      wide.seed = 9;
      const auto b = In_mc({z}, p, wide);
      EXPECT_LT(std::abs(a.value.real() - b.value.real()), 3.0 * std::hypot(a.stderr, b.stderr));
    }
  }
}

TEST(InMc, FullDeterminantPathMatchesReduced) {
  McConfig mc;
  mc.samples = 100000;
  mc.seed = 10;
  const auto p = params(1.0, 0.0, 0, 1);
  const auto a = In_mc({0.5}, p, mc);
  mc.reduced = false;
  const auto b = In_mc({0.5}, p, mc);
  // same samples, algebraically identical integrands
  EXPECT_NEAR(a.value.real(), b.value.real(), 1e-9 * std::abs(a.value));
}

TEST(InMc, DeterministicAcrossThreads) {
  McConfig mc;
  mc.samples = 20000;
  mc.seed = 3;
  mc.threads = 1;
  const auto p = params(0.5 + 0.5i, 0.2, 0, 2);
  const auto a = In_mc({0.2, -0.3i}, p, mc);
  mc.threads = 4;
  const auto b = In_mc({0.2, -0.3i}, p, mc);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.stderr, b.stderr);
}

TEST(InMc, Preconditions) {
  McConfig mc;
  mc.samples = 1000;
  EXPECT_THROW((void)In_mc({0.0, 0.0}, params(1.0, 0.0, 1, 2), mc), Error);
  mc.batches = 8;
  EXPECT_THROW((void)In_mc({0.0}, params(1.0, 0.0, 0, 1), mc), Error);
  EXPECT_THROW((void)In_mc({0.0}, params(2.0, 0.0, 0, 1)), Error);
}
