#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ginue/error.hpp"
#include "ginue/linalg.hpp"
#include "ginue/parallel.hpp"
#include "ginue/rng.hpp"

namespace ginue {

struct KernelParams {
  cplx chi = 1.0;
  double tau_hat = 0.0;
  std::size_t r0 = 0;
  std::size_t n = 1;

  void validate() const {
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "n must be positive");
    if (!(std::abs(chi) <= 1.0 + 1e-12)) throw Error(ErrorKind::InvalidArgument, "|chi| must not exceed 1");
    if (!std::isfinite(tau_hat)) throw Error(ErrorKind::InvalidArgument, "tau_hat must be finite");
  }
};

struct MCEstimate {
  cplx value = 0.0;
  double stderr = 0.0;       // of the real part
  double stderr_imag = 0.0;  // of the imaginary part
  std::size_t samples = 0;
  double ess = 0.0;  // (sum |w|)^2 / sum |w|^2
  std::optional<std::string> warning;
};

struct McConfig {
  std::size_t samples = 1000000;
  double sigma = 0.8;
  std::uint64_t seed = 0;
  std::size_t batches = 64;
  unsigned threads = 0;
  bool reduced = true;  // use the product-form determinant when r0 == 0
};

/// Logarithm of the prefactor in front of I_n (-inf when two points coincide).
inline double log_prefactor(const std::vector<cplx>& zhat, const KernelParams& p) {
  if (zhat.size() != p.n) throw Error(ErrorKind::DimensionMismatch, "prefactor needs n points");
  const cplx chib = std::conj(p.chi);
  double e = 0.0;
  for (std::size_t i = 0; i < zhat.size(); ++i)
    for (std::size_t j = i + 1; j < zhat.size(); ++j) e += std::log(std::norm(zhat[i] - zhat[j]));
  e += -0.5 * static_cast<double>(p.n) * p.tau_hat * p.tau_hat;
  for (const cplx& z : zhat) {
    const cplx zb = std::conj(z);
    const double m2 = std::norm(z);
    const double q = (chib * z * z + 2.0 * m2 + p.chi * zb * zb).real();
    e += -0.5 * q * q + 2.0 * (chib * z * z * z * zb).real() + 1.5 * m2 * m2;
    e -= p.tau_hat * (p.chi * zb * zb + m2 + chib * z * z).real();
  }
  return e;
}

/// Vandermonde factor times the two exponentials in front of I_n.
inline double prefactor(const std::vector<cplx>& zhat, const KernelParams& p) {
  return std::exp(log_prefactor(zhat, p));
}

namespace detail {

inline void check_kernel_shapes(const ComplexMatrix& w, const ComplexMatrix& t, const ComplexMatrix& y,
                                const std::vector<cplx>& zhat, const KernelParams& p) {
  const std::size_t n = p.n;
  if (zhat.size() != n) throw Error(ErrorKind::DimensionMismatch, "zhat must have n entries");
  if (w.rows() != n || w.cols() != p.r0) throw Error(ErrorKind::DimensionMismatch, "W must be n x r0");
  if (t.rows() != n || t.cols() != n) throw Error(ErrorKind::DimensionMismatch, "T must be n x n");
  if (y.rows() != n || y.cols() != n) throw Error(ErrorKind::DimensionMismatch, "Y must be n x n");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      if (t(i, j) != cplx(0.0)) throw Error(ErrorKind::InvalidArgument, "T must be strictly upper triangular");
}

inline cplx ipow(cplx b, std::size_t e) {
  cplx r = 1.0;
  while (e) {
    if (e & 1) r *= b;
    b *= b;
    e >>= 1;
  }
  return r;
}

}  // namespace detail

/// The action F(W, T, Y) assembled from K1, K2, K3 and the Y-terms.
inline cplx f_action(const ComplexMatrix& w, const ComplexMatrix& t, const ComplexMatrix& y,
                     const std::vector<cplx>& zhat, const KernelParams& p) {
  detail::check_kernel_shapes(w, t, y, zhat, p);
  const cplx chi = p.chi, chib = std::conj(p.chi);
  const double th = p.tau_hat;
  const ComplexMatrix z = ComplexMatrix::diagonal(zhat);
  const ComplexMatrix zs = z.adjoint();
  const ComplexMatrix ts = t.adjoint();
  const ComplexMatrix v = z + chi * zs;   // Z + chi Z*
  const ComplexMatrix vs = v.adjoint();
  const ComplexMatrix z2 = z * z, zs2 = zs * zs, zzs = z * zs;
  const ComplexMatrix ww = w * w.adjoint();
  const ComplexMatrix tts = t * ts;
  const ComplexMatrix quad = chi * zs2 + 2.0 * zzs + chib * z2;

  const ComplexMatrix k1 = chib * (t * t) + chi * (ts * ts) + ts * t + vs * t + ts * v + 0.5 * (t * vs) +
                           0.5 * (v * ts) + quad;
  const ComplexMatrix k2 = tts + ww + 0.5 * (v * ts) + 0.5 * (t * (z + chib * zs).adjoint());
  const ComplexMatrix m = z * t + 0.5 * (t * z) + t * t;
  const ComplexMatrix k3 = -0.25 * (t * quad * ts) + (1.0 - std::norm(chi)) * (m * m.adjoint()) - th * tts;

  const ComplexMatrix yys = y * y.adjoint();
  const ComplexMatrix ysy = y.adjoint() * y;
  cplx f = -th * ww.trace() - (k2 * (0.5 * k2 + k1)).trace() + k3.trace();
  f += -0.5 * (yys * yys).trace() + chib * (ysy * z2).trace() + (y * z * y.adjoint() * zs).trace() +
       chi * (yys * zs2).trace() + th * yys.trace();
  return f;
}

/// det [[Z, -Y*], [Y, Z*]].
inline cplx e0_det(const ComplexMatrix& y, const std::vector<cplx>& zhat) {
  const ComplexMatrix z = ComplexMatrix::diagonal(zhat);
  return det(block2x2(z, -y.adjoint(), y, z.adjoint()));
}

/// det h(W, T, Y), the 2n^2 x 2n^2 block determinant.
inline cplx h_det(const ComplexMatrix& w, const ComplexMatrix& t, const ComplexMatrix& y,
                  const std::vector<cplx>& zhat, const KernelParams& p) {
  detail::check_kernel_shapes(w, t, y, zhat, p);
  const cplx chi = p.chi, chib = std::conj(p.chi);
  const std::size_t n = p.n;
  const ComplexMatrix id = ComplexMatrix::identity(n);
  const ComplexMatrix z = ComplexMatrix::diagonal(zhat);
  const ComplexMatrix zs = z.adjoint();
  const ComplexMatrix ts = t.adjoint();
  const ComplexMatrix ys = y.adjoint();

  const ComplexMatrix f11 = kron(id, w * w.adjoint()) - chib * kron(z * z, id) - kron(z, chib * z + zs + ts + chib * t);
  const ComplexMatrix f12 = kron(ys, chi * (zs + ts) + (z + t));
  const ComplexMatrix a = kron(ys * y, id) + f11;
  const ComplexMatrix b = f12 + kron(z * ys + chi * (ys * zs), id);
  const ComplexMatrix c = -f12.adjoint() - kron(zs * y + chib * (y * z), id);
  const ComplexMatrix d = kron(y * ys, id) + f11.adjoint();
  return det(block2x2(a, b, c, d));
}

/// Product-form determinant valid for r0 = 0:
/// det [[K11, Y* (x) I], [-Y (x) I, K11*]] = det(E0)^{-n} det h(0, T, Y).
inline cplx h_det_reduced(const ComplexMatrix& t, const ComplexMatrix& y, const std::vector<cplx>& zhat,
                          const KernelParams& p) {
  if (p.r0 != 0) throw Error(ErrorKind::Precondition, "reduced determinant requires r0 = 0");
  detail::check_kernel_shapes(ComplexMatrix(p.n, 0), t, y, zhat, p);
  const cplx chib = std::conj(p.chi);
  const std::size_t n = p.n;
  const ComplexMatrix id = ComplexMatrix::identity(n);
  const ComplexMatrix z = ComplexMatrix::diagonal(zhat);
  const ComplexMatrix k11 = -kron(id, chib * (z + t) + z.adjoint() + t.adjoint()) - chib * kron(z, id);
  return det(block2x2(k11, kron(y.adjoint(), id), -kron(y, id), k11.adjoint()));
}

/// Normalizing constant 1 / ((2 pi)^{n/2} pi^{n(n + r0) + n(n+1)/2}).
inline double in_constant(const KernelParams& p) {
  const double n = static_cast<double>(p.n), r0 = static_cast<double>(p.r0);
  return 1.0 / (std::pow(2.0 * std::numbers::pi, 0.5 * n) * std::pow(std::numbers::pi, n * (n + r0) + 0.5 * n * (n + 1.0)));
}

/// Integrand of I_n without the constant: det(E0)^{r0-n} det h exp F.
inline cplx in_integrand(const ComplexMatrix& w, const ComplexMatrix& t, const ComplexMatrix& y,
                         const std::vector<cplx>& zhat, const KernelParams& p, bool reduced = true) {
  const cplx f = f_action(w, t, y, zhat, p);
  cplx d;
  if (p.r0 == 0 && reduced) {
    d = h_det_reduced(t, y, zhat, p);
  } else {
    if (p.r0 < p.n && p.r0 != 0) throw Error(ErrorKind::Precondition, "0 < r0 < n is not supported");
    d = h_det(w, t, y, zhat, p);
    if (p.r0 >= p.n) {
      d *= detail::ipow(e0_det(y, zhat), p.r0 - p.n);
    } else {
      d /= detail::ipow(e0_det(y, zhat), p.n);
    }
  }
  return d * std::exp(f);
}

/// Importance-sampled I_n: every real coordinate of (W, T, Y) is drawn from
/// N(0, sigma^2). Batches use independent counter streams, so the result
/// depends only on (seed, samples, batches).
inline MCEstimate In_mc(const std::vector<cplx>& zhat, const KernelParams& p, const McConfig& mc = {}) {
  p.validate();
  if (zhat.size() != p.n) throw Error(ErrorKind::DimensionMismatch, "zhat must have n entries");
  if (p.r0 != 0 && p.r0 < p.n) {
    throw Error(ErrorKind::Precondition,
                "I_n sampler supports r0 = 0 or r0 >= n only (det(E0)^{r0-n} has a negative power otherwise)");
  }
  if (mc.batches < 16) throw Error(ErrorKind::InvalidArgument, "batch means need at least 16 batches");
  if (!(mc.sigma > 0.0)) throw Error(ErrorKind::InvalidArgument, "proposal scale must be positive");
  if (mc.samples < mc.batches) throw Error(ErrorKind::InvalidArgument, "fewer samples than batches");

  const std::size_t n = p.n;
  const std::size_t per_batch = mc.samples / mc.batches;
  const std::size_t dim = 2 * (n * p.r0 + n * (n - 1) / 2 + n * n);
  const double s2 = mc.sigma * mc.sigma;
  const double log_norm = 0.5 * static_cast<double>(dim) * std::log(2.0 * std::numbers::pi * s2);
  const double cst = in_constant(p);

  struct Batch {
    cplx mean = 0.0;
    double sum_abs = 0.0;
    double sum_abs2 = 0.0;
  };
  std::vector<Batch> batches(mc.batches);
  parallel_for(mc.batches, mc.threads, [&](std::size_t b) {
    CounterRng rng(mc.seed, b, rng_domain::kKernelMc);
    ComplexMatrix w(n, p.r0), t(n, n), y(n, n);
    Batch acc;
    cplx sum = 0.0;
    for (std::size_t k = 0; k < per_batch; ++k) {
      double r2 = 0.0;
      auto draw = [&]() {
        const double re = mc.sigma * rng.normal(), im = mc.sigma * rng.normal();
        r2 += re * re + im * im;
        return cplx(re, im);
      };
      for (auto& v : w.data()) v = draw();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) t(i, j) = draw();
      for (auto& v : y.data()) v = draw();

      const cplx f = f_action(w, t, y, zhat, p);
      cplx d;
      if (p.r0 == 0 && mc.reduced) {
        d = h_det_reduced(t, y, zhat, p);
      } else {
        d = h_det(w, t, y, zhat, p);
        if (p.r0 >= n) d *= detail::ipow(e0_det(y, zhat), p.r0 - n);
        else d /= detail::ipow(e0_det(y, zhat), n);
      }
      // integrand / proposal density, combined in log-space
      const double lw = f.real() + 0.5 * r2 / s2 + log_norm;
      const cplx wgt = d * std::exp(lw) * std::polar(1.0, f.imag()) * cst;
      sum += wgt;
      acc.sum_abs += std::abs(wgt);
      acc.sum_abs2 += std::norm(wgt);
    }
    acc.mean = sum / static_cast<double>(per_batch);
    batches[b] = acc;
  });

  MCEstimate est;
  est.samples = per_batch * mc.batches;
  const double nb = static_cast<double>(mc.batches);
  cplx mean = 0.0;
  double sa = 0.0, sa2 = 0.0;
  for (const Batch& b : batches) {
    mean += b.mean;
    sa += b.sum_abs;
    sa2 += b.sum_abs2;
  }
  mean /= nb;
  double vr = 0.0, vi = 0.0;
  for (const Batch& b : batches) {
    vr += std::pow(b.mean.real() - mean.real(), 2);
    vi += std::pow(b.mean.imag() - mean.imag(), 2);
  }
  est.value = mean;
  est.stderr = std::sqrt(vr / (nb - 1.0) / nb);
  est.stderr_imag = std::sqrt(vi / (nb - 1.0) / nb);
  est.ess = sa2 > 0.0 ? sa * sa / sa2 : 0.0;
  if (est.ess < 0.01 * static_cast<double>(est.samples)) {
    est.warning = "effective sample size " + std::to_string(est.ess) + " is below 1% of " +
                  std::to_string(est.samples) + " samples";
  }
  return est;
}

namespace detail {

// Upper limit U with -U^2/2 + b U = (peak exponent) - 40.
inline double truncation_point(double b) { return b > 0.0 ? b + std::sqrt(80.0) : b + std::sqrt(b * b + 80.0); }

inline double factorial(std::size_t k) {
  double f = 1.0;
  for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
  return f;
}

}  // namespace detail

inline constexpr double kQuadratureTol = 1e-9;

namespace detail {

// I_1 = exp(log_scale) * integral, with the integral's absolute error
// estimate in the same scaled units. The integrand exponent is shifted by
// its peak so that large |zhat| does not overflow.
struct ScaledIntegral {
  double log_scale;
  double integral;
  double error;
};

inline ScaledIntegral I1_scaled(cplx zhat, const KernelParams& p) {
  p.validate();
  if (p.n != 1) throw Error(ErrorKind::Precondition, "one-point quadrature requires n = 1");
  using boost::math::quadrature::gauss_kronrod;
  const cplx chi = p.chi, chib = std::conj(p.chi);
  const double m2 = std::norm(zhat);
  const double re2 = (chib * zhat * zhat).real();
  const double bu = p.tau_hat + m2 + 2.0 * re2;
  const double bs = p.tau_hat + 2.0 * m2 + 2.0 * re2;
  const cplx c2 = 2.0 * chib * zhat * zhat;
  const double cross = std::norm(chi * std::conj(zhat) + zhat);
  const double uu = truncation_point(bu);
  const double peak = bu > 0.0 ? 0.5 * bu * bu : 0.0;
  constexpr double rel = 1e-13;
  constexpr unsigned depth = 15;

  ScaledIntegral out{peak, 0.0, 0.0};
  if (p.r0 == 0) {
    // D(u, 0) / (|z|^2 + u) equals |2 chibar z + zbar|^2 + u identically.
    const double k = std::norm(2.0 * chib * zhat + std::conj(zhat));
    auto fu = [&](double u) { return (k + u) * std::exp(-0.5 * u * u + bu * u - peak); };
    out.integral = gauss_kronrod<double, 31>::integrate(fu, 0.0, uu, depth, rel, &out.error);
    out.log_scale -= std::log(std::sqrt(2.0 * std::numbers::pi) * std::numbers::pi);
    return out;
  }
  const double su = truncation_point(-bs);
  const double speak = bs < 0.0 ? 0.5 * bs * bs : 0.0;
  const std::size_t r0 = p.r0;
  double inner_err = 0.0;
  auto fu = [&](double u) {
    auto fs = [&](double s) {
      const double d = std::norm(u + s - c2 - m2) + 4.0 * u * cross;
      return d * std::pow(s, static_cast<double>(r0 - 1)) * std::exp(-0.5 * s * s - bs * s - speak);
    };
    double e = 0.0;
    const double inner = gauss_kronrod<double, 31>::integrate(fs, 0.0, su, depth, rel, &e);
    const double wgt = std::pow(m2 + u, static_cast<double>(r0 - 1)) * std::exp(-0.5 * u * u + bu * u - peak);
    inner_err = std::max(inner_err, e * wgt);
    return inner * wgt;
  };
  out.integral = gauss_kronrod<double, 31>::integrate(fu, 0.0, uu, depth, rel, &out.error);
  out.error += inner_err * uu;
  out.log_scale += speak - std::log(std::sqrt(2.0 * std::numbers::pi) * std::numbers::pi * factorial(r0 - 1));
  return out;
}

}  // namespace detail

/// I_1 reduced to a 2D integral over u = |y|^2 and s = ||W||^2 (a 1D
/// integral over u when r0 = 0). Accuracy target is 1e-9 relative to
/// max(1, I_1).
inline double I1_quadrature(cplx zhat, const KernelParams& p) {
  const auto r = detail::I1_scaled(zhat, p);
  const double scale = std::exp(r.log_scale);
  const double value = scale * r.integral, err = scale * r.error;
  if (!std::isfinite(value) || !(err <= kQuadratureTol * std::max(1.0, std::abs(value)))) {
    throw Error(ErrorKind::QuadratureFailure,
                "I_1 quadrature error estimate " + std::to_string(err) + " exceeds target for value " + std::to_string(value));
  }
  return value;
}

/// Limiting one-point density at zhat: prefactor times I_1, to 1e-9 absolute.
inline double density1_quadrature(cplx zhat, const KernelParams& p) {
  if (p.n != 1) throw Error(ErrorKind::Precondition, "one-point quadrature requires n = 1");
  const auto r = detail::I1_scaled(zhat, p);
  const double scale = std::exp(log_prefactor({zhat}, p) + r.log_scale);
  const double value = scale * r.integral, err = scale * r.error;
  if (!std::isfinite(value) || !(err <= kQuadratureTol)) {
    throw Error(ErrorKind::QuadratureFailure,
                "one-point quadrature reached only " + std::to_string(err) + " absolute accuracy (target 1e-9)");
  }
  return value;
}

/// Limiting n-point function at each tuple: quadrature for n = 1,
/// importance sampling otherwise (real part of the estimate).
inline std::vector<double> density_limit(const std::vector<std::vector<cplx>>& points, const KernelParams& p,
                                         const McConfig& mc = {}) {
  p.validate();
  if (p.n > 1 && p.r0 != 0 && p.r0 < p.n) {
    throw Error(ErrorKind::Precondition, "n-point evaluation supports r0 = 0 or r0 >= n only");
  }
  std::vector<double> out(points.size());
  parallel_for(points.size(), p.n == 1 ? mc.threads : 1u, [&](std::size_t i) {
    if (points[i].size() != p.n) throw Error(ErrorKind::DimensionMismatch, "each point must have n coordinates");
    if (p.n == 1) {
      out[i] = density1_quadrature(points[i][0], p);
    } else {
      out[i] = prefactor(points[i], p) * In_mc(points[i], p, mc).value.real();
    }
  });
  return out;
}

/// Bin-averaged one-point density over the square of side w centred at c,
/// by 3x3 Gauss-Legendre.
inline double density1_bin_average(cplx c, double w, const KernelParams& p) {
  static constexpr double x[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static constexpr double g[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += g[i] * g[j] * density1_quadrature(c + 0.5 * w * cplx(x[i], x[j]), p);
  return s / 4.0;
}

}  // namespace ginue
