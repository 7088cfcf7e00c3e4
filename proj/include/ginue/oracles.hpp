#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "ginue/eigen.hpp"
#include "ginue/ensemble.hpp"
#include "ginue/error.hpp"
#include "ginue/limit_kernel.hpp"
#include "ginue/linalg.hpp"
#include "ginue/parallel.hpp"
#include "ginue/rng.hpp"
#include "ginue/spectral_geometry.hpp"

namespace ginue {

/// Outcome of one verification check: named numeric values plus a verdict.
struct CheckReport {
  std::string name;
  bool passed = false;
  std::vector<std::pair<std::string, double>> values;
  std::string message;

  void set(const std::string& key, double v) {
    for (auto& [k, old] : values) {
      if (k == key) {
        old = v;
        return;
      }
    }
    values.emplace_back(key, v);
  }
  double get(const std::string& key) const {
    for (const auto& [k, v] : values)
      if (k == key) return v;
    throw Error(ErrorKind::InvalidArgument, "report " + name + " has no value " + key);
  }
};

/// Variables of the quadratic-form maximum lemma: one upper-triangular T per
/// atom, A (n x l1), B (n x l2) and a diagonal D (l2 x l2).
struct ConstraintPoint {
  std::vector<ComplexMatrix> t_list;
  ComplexMatrix a_mat;
  ComplexMatrix b_mat;
  ComplexMatrix d_mat;
};

namespace detail {

inline double top_eigenvalue(const ComplexMatrix& h) { return hermitian_eigenvalues(h).back(); }

inline ComplexMatrix constraint_sum(const ConstraintPoint& p) {
  const std::size_t n = p.a_mat.rows();
  ComplexMatrix s(n, n);
  for (const ComplexMatrix& t : p.t_list) s += t * t.adjoint();
  s += p.a_mat * p.a_mat.adjoint();
  s += p.b_mat * p.b_mat.adjoint();
  return s;
}

inline void scale_point(ConstraintPoint& p, double s) {
  for (ComplexMatrix& t : p.t_list) t *= s;
  p.a_mat *= s;
  p.b_mat *= s;
}

/// Scales the point onto the boundary of the constraint set when it lies
/// outside it (or when `to_boundary` is set).
inline void project_point(ConstraintPoint& p, bool to_boundary) {
  const double top = top_eigenvalue(constraint_sum(p));
  if (top > 1.0 || (to_boundary && top > 0.0)) scale_point(p, 1.0 / std::sqrt(top));
}

inline void check_point_shapes(const ConstraintPoint& p, std::size_t atoms, cplx z0) {
  const std::size_t n = p.a_mat.rows();
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "constraint point needs n >= 1");
  if (p.t_list.size() != atoms) throw Error(ErrorKind::DimensionMismatch, "one T matrix per atom is required");
  for (const ComplexMatrix& t : p.t_list) {
    if (t.rows() != n || t.cols() != n) throw Error(ErrorKind::DimensionMismatch, "T matrices must be n x n");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(t(i, i).real() > 0.0) || t(i, i).imag() != 0.0) {
        throw Error(ErrorKind::Precondition, "T diagonals must be positive reals");
      }
      for (std::size_t j = 0; j < i; ++j)
        if (t(i, j) != cplx(0.0)) throw Error(ErrorKind::Precondition, "T matrices must be upper triangular");
    }
  }
  if (p.b_mat.rows() != n) throw Error(ErrorKind::DimensionMismatch, "B must have n rows");
  const std::size_t l2 = p.b_mat.cols();
  if (p.d_mat.rows() != l2 || p.d_mat.cols() != l2) throw Error(ErrorKind::DimensionMismatch, "D must be l2 x l2");
  for (std::size_t i = 0; i < l2; ++i) {
    for (std::size_t j = 0; j < l2; ++j)
      if (i != j && p.d_mat(i, j) != cplx(0.0)) throw Error(ErrorKind::Precondition, "D must be diagonal");
    if (p.d_mat(i, i) == z0) throw Error(ErrorKind::Precondition, "z0 must not be an eigenvalue of D");
  }
}

}  // namespace detail

inline double jn_value(const ConstraintPoint& point, const SpectralMeasure& measure, cplx z0, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
  detail::check_point_shapes(point, measure.size(), z0);
  const std::size_t n = point.a_mat.rows();
  const ComplexMatrix s = detail::constraint_sum(point);
  const double top = detail::top_eigenvalue(s);
  if (top > 1.0 + 1e-10) {
    throw Error(ErrorKind::Precondition, "constraint violated: top eigenvalue of sum TT* + AA* + BB* is " + std::to_string(top));
  }
  double j = 0.0;
  ComplexMatrix m(n, n);
  for (std::size_t al = 0; al < measure.size(); ++al) {
    const Atom& a = measure.atoms()[al];
    const ComplexMatrix& t = point.t_list[al];
    const ComplexMatrix tt = t * t.adjoint();
    double logdet = 0.0;
    for (std::size_t i = 0; i < n; ++i) logdet += 2.0 * std::log(t(i, i).real());
    j += tau * a.weight * logdet - std::norm(z0 - a.location) * tt.trace().real();
    m += a.location * tt;
  }
  j += std::norm(z0) * s.trace().real();
  const std::size_t l2 = point.b_mat.cols();
  ComplexMatrix zd(l2, l2);
  for (std::size_t i = 0; i < l2; ++i) zd(i, i) = z0 - point.d_mat(i, i);
  j -= (point.b_mat * zd.adjoint() * zd * point.b_mat.adjoint()).trace().real();
  m += z0 * (point.a_mat * point.a_mat.adjoint());
  m += point.b_mat * point.d_mat * point.b_mat.adjoint();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = r + 1; c < n; ++c) j += std::norm(m(r, c));
  return j;
}

inline double jn_bound(std::size_t n, const SpectralMeasure& measure, cplx z0, double tau) {
  const double t0 = solve_t0(measure, z0, tau);
  double s = 0.0;
  for (const Atom& a : measure.atoms()) {
    const double tc = tau * a.weight;
    s += tc * std::log(tc / (std::norm(z0 - a.location) + t0));
  }
  return static_cast<double>(n) * (s + t0 + std::norm(z0) - tau);
}

/// A = 0, B = 0, T_a = sqrt(tau c_a / (f_a + t0)) I.
inline ConstraintPoint jn_claimed_maximizer(std::size_t n, const SpectralMeasure& measure, cplx z0, double tau,
                                            const ComplexMatrix& d_mat, std::size_t l1) {
  const double t0 = solve_t0(measure, z0, tau);
  ConstraintPoint p;
  for (const Atom& a : measure.atoms())
    p.t_list.push_back(std::sqrt(tau * a.weight / (std::norm(z0 - a.location) + t0)) * ComplexMatrix::identity(n));
  p.a_mat = ComplexMatrix(n, l1);
  p.b_mat = ComplexMatrix(n, d_mat.rows());
  p.d_mat = d_mat;
  return p;
}

struct JnCheckOptions {
  std::size_t restarts = 64;
  std::size_t random_points = 10000;
  std::size_t l1 = 1;
  std::size_t l2 = 1;
  std::size_t ascent_iterations = 200;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

namespace detail {

// Unconstrained coordinates: log of each T diagonal, then real/imag parts
// of the strict upper triangles, A and B.
inline std::vector<double> pack_point(const ConstraintPoint& p) {
  std::vector<double> x;
  const std::size_t n = p.a_mat.rows();
  for (const ComplexMatrix& t : p.t_list) {
    for (std::size_t i = 0; i < n; ++i) x.push_back(std::log(t(i, i).real()));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        x.push_back(t(i, j).real());
        x.push_back(t(i, j).imag());
      }
  }
  for (const ComplexMatrix* m : {&p.a_mat, &p.b_mat})
    for (const cplx& v : m->data()) {
      x.push_back(v.real());
      x.push_back(v.imag());
    }
  return x;
}

inline void unpack_point(const std::vector<double>& x, ConstraintPoint& p) {
  std::size_t k = 0;
  const std::size_t n = p.a_mat.rows();
  for (ComplexMatrix& t : p.t_list) {
    for (std::size_t i = 0; i < n; ++i) t(i, i) = std::exp(x[k++]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        t(i, j) = cplx(x[k], x[k + 1]);
        k += 2;
      }
  }
  for (ComplexMatrix* m : {&p.a_mat, &p.b_mat})
    for (cplx& v : m->data()) {
      v = cplx(x[k], x[k + 1]);
      k += 2;
    }
}

inline double projected_jn(const std::vector<double>& x, ConstraintPoint& scratch, const SpectralMeasure& measure,
                           cplx z0, double tau) {
  unpack_point(x, scratch);
  project_point(scratch, false);
  return jn_value(scratch, measure, z0, tau);
}

/// Finite-difference gradient ascent on J composed with the scaling
/// projection, with backtracking steps.
inline std::pair<double, ConstraintPoint> jn_local_ascent(ConstraintPoint start, const SpectralMeasure& measure, cplx z0,
                                                          double tau, std::size_t iterations) {
  project_point(start, false);
  ConstraintPoint scratch = start;
  std::vector<double> x = pack_point(start);
  double fx = jn_value(start, measure, z0, tau);
  double step = 0.1;
  const double h = 1e-6;
  std::vector<double> g(x.size()), trial(x.size());
  for (std::size_t it = 0; it < iterations && step > 1e-14; ++it) {
    double g2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double xi = x[i];
      x[i] = xi + h;
      const double fp = projected_jn(x, scratch, measure, z0, tau);
      x[i] = xi - h;
      const double fm = projected_jn(x, scratch, measure, z0, tau);
      x[i] = xi;
      g[i] = (fp - fm) / (2.0 * h);
      g2 += g[i] * g[i];
    }
    if (!(g2 > 1e-24)) break;
    bool moved = false;
    while (step > 1e-14) {
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + step * g[i];
      const double ft = projected_jn(trial, scratch, measure, z0, tau);
      if (ft > fx + 1e-4 * step * g2) {
        x = pack_point(scratch);
        fx = ft;
        step *= 2.0;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  unpack_point(x, scratch);
  return {fx, scratch};
}

inline ConstraintPoint random_feasible_point(CounterRng& rng, std::size_t n, std::size_t atoms, std::size_t l1,
                                             const ComplexMatrix& d_mat) {
  ConstraintPoint p;
  for (std::size_t a = 0; a < atoms; ++a) {
    ComplexMatrix t(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      t(i, i) = std::exp(0.5 * rng.normal());
      for (std::size_t j = i + 1; j < n; ++j) t(i, j) = 0.5 * rng.complex_normal();
    }
    p.t_list.push_back(std::move(t));
  }
  p.a_mat = ComplexMatrix(n, l1);
  p.b_mat = ComplexMatrix(n, d_mat.rows());
  for (ComplexMatrix* m : {&p.a_mat, &p.b_mat})
    for (cplx& v : m->data()) v = 0.5 * rng.complex_normal();
  p.d_mat = d_mat;
  project_point(p, true);
  return p;
}

}  // namespace detail

/// Searches the constraint set for points beating the closed-form maximum:
/// random boundary points, local ascent from random starts, and local
/// ascent from the claimed maximizer.
inline CheckReport jn_max_check(std::size_t n, const SpectralMeasure& measure, cplx z0, double tau,
                                const JnCheckOptions& opt = {}) {
  if (n == 0 || n > 3 || measure.size() > 3 || opt.l1 > 2 || opt.l2 > 2) {
    throw Error(ErrorKind::Precondition, "jn_max_check is limited to n <= 3, t <= 3, l1, l2 <= 2");
  }
  std::vector<cplx> d;
  for (std::size_t k = 0; k < opt.l2; ++k) d.push_back(z0 + cplx(0.5 + 0.25 * static_cast<double>(k), 0.3));
  const ComplexMatrix d_mat = ComplexMatrix::diagonal(d);
  const double bound = jn_bound(n, measure, z0, tau);

  const ConstraintPoint claimed = jn_claimed_maximizer(n, measure, z0, tau, d_mat, opt.l1);
  const double claimed_value = jn_value(claimed, measure, z0, tau);
  const double from_claimed = detail::jn_local_ascent(claimed, measure, z0, tau, opt.ascent_iterations).first;

  const std::size_t batches = 100;
  std::vector<double> random_max(batches, -std::numeric_limits<double>::infinity());
  parallel_for(batches, opt.threads, [&](std::size_t b) {
    CounterRng rng(opt.seed, 1000000 + b, rng_domain::kOracle);
    for (std::size_t k = b; k < opt.random_points; k += batches) {
      const ConstraintPoint p = detail::random_feasible_point(rng, n, measure.size(), opt.l1, d_mat);
      random_max[b] = std::max(random_max[b], jn_value(p, measure, z0, tau));
    }
  });
  std::vector<double> ascent_max(opt.restarts, -std::numeric_limits<double>::infinity());
  parallel_for(opt.restarts, opt.threads, [&](std::size_t k) {
    CounterRng rng(opt.seed, k, rng_domain::kOracle);
    const ConstraintPoint p = detail::random_feasible_point(rng, n, measure.size(), opt.l1, d_mat);
    ascent_max[k] = detail::jn_local_ascent(p, measure, z0, tau, opt.ascent_iterations).first;
  });
  const double best_random = *std::max_element(random_max.begin(), random_max.end());
  const double best_ascent = opt.restarts ? *std::max_element(ascent_max.begin(), ascent_max.end())
                                          : -std::numeric_limits<double>::infinity();
  const double max_found = std::max({best_random, best_ascent, from_claimed});

  CheckReport r;
  r.name = "jn-max-n" + std::to_string(n);
  r.set("bound", bound);
  r.set("max_found", max_found);
  r.set("gap", bound - max_found);
  r.set("claimed_value", claimed_value);
  r.set("ascent_from_claimed", from_claimed);
  r.set("best_random", best_random);
  r.set("best_ascent", best_ascent);
  const bool not_exceeded = max_found <= bound + 1e-9;
  const bool attained = std::abs(claimed_value - bound) < 1e-6 && std::abs(from_claimed - bound) < 1e-6;
  r.passed = not_exceeded && attained;
  if (!not_exceeded) r.message = "a feasible point exceeds the bound";
  else if (!attained) r.message = "claimed maximizer does not attain the bound";
  return r;
}

/// Projected gradient ascent of sum c log det(f I + H) - Tr H / tau over
/// the PSD cone from random starts.
inline CheckReport log_potential_max_check(const SpectralMeasure& measure, cplx z0, double tau, std::size_t n,
                                           std::size_t restarts = 8, std::uint64_t seed = 0) {
  if (n == 0 || n > 4) throw Error(ErrorKind::Precondition, "log_potential_max_check needs 1 <= n <= 4");
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
  std::vector<double> f, c;
  double curvature = 0.0;
  for (const Atom& a : measure.atoms()) {
    f.push_back(std::norm(z0 - a.location));
    c.push_back(a.weight);
    if (!(f.back() > 0.0)) throw Error(ErrorKind::Precondition, "z0 must not be an atom");
    curvature += a.weight / (f.back() * f.back());
  }
  const double t0 = solve_t0(measure, z0, tau);
  auto phi_of = [&](const std::vector<double>& lam) {
    double v = 0.0;
    for (double l : lam) {
      for (std::size_t a = 0; a < f.size(); ++a) v += c[a] * std::log(f[a] + l);
      v -= l / tau;
    }
    return v;
  };
  const double eta = 1.0 / curvature;
  double max_dist = 0.0;
  double best_phi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < restarts; ++k) {
    CounterRng rng(seed, k, rng_domain::kOracle);
    ComplexMatrix l(n, n);
    for (cplx& v : l.data()) v = rng.complex_normal();
    ComplexMatrix h = l * l.adjoint();
    for (int it = 0; it < 200000; ++it) {
      HermitianEigen e = hermitian_eigen(h);
      ComplexMatrix grad(n, n);
      for (std::size_t i = 0; i < n; ++i) {
        double g = -1.0 / tau;
        for (std::size_t a = 0; a < f.size(); ++a) g += c[a] / (f[a] + std::max(0.0, e.values[i]));
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t s = 0; s < n; ++s) grad(r, s) += g * e.vectors(r, i) * std::conj(e.vectors(s, i));
      }
      const HermitianEigen step = hermitian_eigen(h + eta * grad);
      ComplexMatrix next(n, n);
      for (std::size_t i = 0; i < n; ++i) {
        const double lam = std::max(0.0, step.values[i]);
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t s = 0; s < n; ++s) next(r, s) += lam * step.vectors(r, i) * std::conj(step.vectors(s, i));
      }
      const double moved = (next - h).frobenius_norm();
      h = std::move(next);
      if (moved < 1e-15) break;
    }
    std::vector<double> lam = hermitian_eigenvalues(h);
    for (double& v : lam) v = std::max(0.0, v);
    best_phi = std::max(best_phi, phi_of(lam));
    max_dist = std::max(max_dist, (h - t0 * ComplexMatrix::identity(n)).frobenius_norm());
  }
  CheckReport r;
  r.name = "log-potential-n" + std::to_string(n);
  r.set("t0", t0);
  r.set("max_distance", max_dist);
  r.set("phi_at_t0", phi_of(std::vector<double>(n, t0)));
  r.set("best_phi", best_phi);
  r.passed = max_dist < 1e-5;
  if (!r.passed) r.message = "argmax is not within 1e-5 of t0 I";
  return r;
}

inline double cone_closed_form(std::size_t n, std::size_t r0, const std::vector<double>& diag) {
  double v = std::pow(std::numbers::pi, static_cast<double>(n * (n - 1) / 2)) /
             std::pow(detail::factorial(r0 - 1), static_cast<double>(n));
  for (std::size_t k = 1; k <= n; ++k) v *= detail::factorial(r0 - k);
  for (double h : diag) v *= std::pow(h, static_cast<double>(r0 - 1));
  return v;
}

/// Monte Carlo of the integral of det(H)^(r0-n) over the off-diagonal
/// entries of non-positive Hermitian H with prescribed diagonal.
inline CheckReport cone_integral_check(std::size_t n, std::size_t r0, const std::vector<double>& diag,
                                       std::size_t samples, std::uint64_t seed = 0, unsigned threads = 0) {
  if (n == 0 || n > 3) throw Error(ErrorKind::Precondition, "cone integral check supports n in {1, 2, 3}");
  if (r0 < n) throw Error(ErrorKind::Precondition, "cone integral needs r0 >= n");
  if (diag.size() != n) throw Error(ErrorKind::DimensionMismatch, "diagonal must have n entries");
  for (double h : diag)
    if (!(h < 0.0)) throw Error(ErrorKind::InvalidArgument, "diagonal entries must be negative");
  CheckReport r;
  r.name = "cone-integral-n" + std::to_string(n) + "-r" + std::to_string(r0);
  const double closed = cone_closed_form(n, r0, diag);
  r.set("closed_form", closed);
  if (n == 1) {
    r.set("mc", std::pow(diag[0], static_cast<double>(r0 - 1)));
    r.set("sigma", 0.0);
    r.set("acceptance", 1.0);
    r.passed = r.get("mc") == closed;
    return r;
  }
  if (samples < 2) throw Error(ErrorKind::InvalidArgument, "need at least 2 samples");
  std::vector<std::pair<std::size_t, std::size_t>> offd;
  double volume = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      offd.emplace_back(i, j);
      volume *= 4.0 * diag[i] * diag[j];
    }
  const std::size_t batches = 64;
  struct Acc {
    double sum = 0.0, sum2 = 0.0;
    std::size_t accepted = 0;
  };
  std::vector<Acc> acc(batches);
  parallel_for(batches, threads, [&](std::size_t b) {
    CounterRng rng(seed, b, rng_domain::kOracle);
    ComplexMatrix h(n, n);
    for (std::size_t i = 0; i < n; ++i) h(i, i) = diag[i];
    for (std::size_t k = b; k < samples; k += batches) {
      for (auto [i, j] : offd) {
        const double half = std::sqrt(diag[i] * diag[j]);
        const double re = (2.0 * rng.uniform() - 1.0) * half;
        const double im = (2.0 * rng.uniform() - 1.0) * half;
        h(i, j) = cplx(re, im);
        h(j, i) = cplx(re, -im);
      }
      if (detail::top_eigenvalue(h) > 0.0) continue;
      const double v = std::pow(det(h).real(), static_cast<double>(r0 - n));
      acc[b].sum += v;
      acc[b].sum2 += v * v;
      ++acc[b].accepted;
    }
  });
  Acc tot;
  for (const Acc& a : acc) {
    tot.sum += a.sum;
    tot.sum2 += a.sum2;
    tot.accepted += a.accepted;
  }
  const double m = static_cast<double>(samples);
  const double rate = static_cast<double>(tot.accepted) / m;
  if (rate < 1e-3) {
    throw Error(ErrorKind::Precondition, "cone integral acceptance rate " + std::to_string(rate) +
                                             " below 0.1%; use a tighter proposal box");
  }
  const double mean = tot.sum / m;
  const double var = std::max(0.0, (tot.sum2 / m - mean * mean) * m / (m - 1.0));
  r.set("mc", volume * mean);
  r.set("sigma", volume * std::sqrt(var / m));
  r.set("acceptance", rate);
  r.set("samples", m);
  r.passed = std::abs(r.get("mc") - closed) <= 3.0 * r.get("sigma");
  if (!r.passed) r.message = "Monte Carlo value differs from the closed form by more than 3 sigma";
  return r;
}

/// Perfect-shuffle permutation of size pm: row i*m + k of a p-by-m block
/// layout goes to row k*p + i.
inline ComplexMatrix perfect_shuffle(std::size_t p, std::size_t m) {
  ComplexMatrix s(p * m, p * m);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t k = 0; k < m; ++k) s(k * p + i, i * m + k) = 1.0;
  return s;
}

inline CheckReport tensor_permutation_check(const ComplexMatrix& a, const ComplexMatrix& b) {
  const std::size_t p = a.rows(), q = a.cols(), m = b.rows(), n = b.cols();
  const ComplexMatrix left = perfect_shuffle(p, m);
  const ComplexMatrix right = perfect_shuffle(q, n);
  const ComplexMatrix lhs = left * kron(a, b) * right.transpose();
  const ComplexMatrix rhs = kron(b, a);
  CheckReport r;
  r.name = "tensor-permutation";
  r.set("max_diff", max_abs_diff(lhs, rhs));
  r.set("inverse_defect", max_abs_diff(right * right.transpose(), ComplexMatrix::identity(q * n)));
  r.passed = r.get("max_diff") <= 1e-14 && r.get("inverse_defect") == 0.0;
  if (!r.passed) r.message = "shuffle conjugation does not swap the Kronecker factors";
  return r;
}

inline CheckReport tensor_permutation_check(std::size_t p, std::size_t q, std::size_t m, std::size_t n,
                                            std::uint64_t seed = 0) {
  if (p == 0 || q == 0 || m == 0 || n == 0 || p > 6 || q > 6 || m > 6 || n > 6) {
    throw Error(ErrorKind::Precondition, "tensor permutation dims must lie in [1, 6]");
  }
  CounterRng rng(seed, 0, rng_domain::kOracle);
  ComplexMatrix a(p, q), b(m, n);
  for (cplx& v : a.data()) v = rng.complex_normal();
  for (cplx& v : b.data()) v = rng.complex_normal();
  return tensor_permutation_check(a, b);
}

struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

struct FiniteNOptions {
  std::size_t empirical_samples = 4000000;
  double disk_radius = 0.05;
  std::size_t inner_samples = 4000;
  std::size_t outer_grid = 64;  // radial x angular nodes for r = 1; per-axis nodes / 4 for r = 2
  std::optional<std::size_t> block_rank;  // force the size of the nonzero block after translation
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

/// One-point density from samples of X0 + sqrt(tau/N) G: mean eigenvalue
/// count in the disk |lambda - z| < radius divided by its area. The
/// standard error is floored at one count's worth so that an empty disk
/// does not report zero uncertainty.
inline Estimate empirical_one_point(const ComplexMatrix& x0, double tau, cplx z, double radius, std::size_t samples,
                                    std::uint64_t seed, unsigned threads = 0) {
  if (!x0.is_square()) throw Error(ErrorKind::NotSquare, "deformation must be square");
  if (!(radius > 0.0) || samples < 2) throw Error(ErrorKind::InvalidArgument, "need radius > 0 and >= 2 samples");
  const std::size_t chunks = 256;
  std::vector<std::array<double, 2>> acc(chunks, {0.0, 0.0});
  const double scale = std::sqrt(tau / static_cast<double>(x0.rows()));
  parallel_for(chunks, threads, [&](std::size_t c) {
    for (std::size_t k = c; k < samples; k += chunks) {
      CounterRng rng(seed, k, rng_domain::kOracle);
      ComplexMatrix x(x0);
      for (cplx& v : x.data()) v += scale * rng.complex_normal();
      double hits = 0.0;
      for (const cplx& l : eigenvalues(x))
        if (std::abs(l - z) < radius) hits += 1.0;
      acc[c][0] += hits;
      acc[c][1] += hits * hits;
    }
  });
  double s = 0.0, s2 = 0.0;
  for (const auto& a : acc) {
    s += a[0];
    s2 += a[1];
  }
  const double m = static_cast<double>(samples);
  const double area = std::numbers::pi * radius * radius;
  const double mean = s / m;
  const double var = std::max(0.0, (s2 / m - mean * mean) * m / (m - 1.0));
  return {mean / area, std::max(std::sqrt(var / m), 1.0 / m) / area};
}

namespace detail {

inline cplx small_det(const std::array<cplx, 9>& a, std::size_t n) {
  switch (n) {
    case 0:
      return 1.0;
    case 1:
      return a[0];
    case 2:
      return a[0] * a[3] - a[1] * a[2];
    case 3:
      return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) + a[2] * (a[3] * a[7] - a[4] * a[6]);
    default:
      throw Error(ErrorKind::InvalidArgument, "small_det supports n <= 3");
  }
}

struct OuterNode {
  std::vector<cplx> q;
  double weight;
};

template <std::size_t P>
std::vector<std::pair<double, double>> unit_interval_rule() {
  using rule = boost::math::quadrature::gauss<double, P>;
  std::vector<std::pair<double, double>> out;
  const auto& x = rule::abscissa();
  const auto& w = rule::weights();
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.emplace_back(0.5 * (1.0 + x[i]), 0.5 * w[i]);
    if (x[i] != 0.0) out.emplace_back(0.5 * (1.0 - x[i]), 0.5 * w[i]);
  }
  return out;
}

inline std::vector<std::pair<double, double>> unit_interval_rule(std::size_t p) {
  switch (p) {
    case 8:
      return unit_interval_rule<8>();
    case 16:
      return unit_interval_rule<16>();
    case 32:
      return unit_interval_rule<32>();
    case 64:
      return unit_interval_rule<64>();
    default:
      throw Error(ErrorKind::InvalidArgument, "Gauss-Legendre order must be one of 8, 16, 32, 64");
  }
}

/// Product rule on the unit ball of C^r: polar for r = 1, and
/// (|q1|^2, |q2|^2, arg q1, arg q2) coordinates for r = 2.
inline std::vector<OuterNode> ball_nodes(std::size_t r, std::size_t grid) {
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<OuterNode> nodes;
  if (r == 0) {
    nodes.push_back({{}, 1.0});
  } else if (r == 1) {
    for (auto [rho, wr] : unit_interval_rule(grid))
      for (std::size_t k = 0; k < grid; ++k) {
        const double phi = two_pi * static_cast<double>(k) / static_cast<double>(grid);
        nodes.push_back({{std::polar(rho, phi)}, wr * rho * two_pi / static_cast<double>(grid)});
      }
  } else if (r == 2) {
    const std::size_t g = grid / 4;
    const auto rule = unit_interval_rule(g);
    const double wphi = two_pi / static_cast<double>(g);
    for (auto [u, wu] : rule)
      for (auto [v, wv] : rule) {
        const double s1 = u, s2 = (1.0 - u) * v;
        const double w = 0.25 * wu * wv * (1.0 - u) * wphi * wphi;
        for (std::size_t k1 = 0; k1 < g; ++k1)
          for (std::size_t k2 = 0; k2 < g; ++k2)
            nodes.push_back({{std::polar(std::sqrt(s1), wphi * static_cast<double>(k1)),
                              std::polar(std::sqrt(s2), wphi * static_cast<double>(k2))},
                             w});
      }
  } else {
    throw Error(ErrorKind::Precondition, "Q ball quadrature supports r <= 2");
  }
  return nodes;
}

}  // namespace detail

/// One-point function of X0 = diag(A0, 0) at z from its integral
/// representation over Q in the unit ball of C^{1 x r}, with the inner
/// expectation over GinUE_{N-1}(X~0) estimated by Monte Carlo.
inline Estimate finite_n_representation(const ComplexMatrix& a0, std::size_t big_n, double tau, cplx z,
                                        const FiniteNOptions& opt = {}) {
  const std::size_t r = a0.rows();
  if (!a0.is_square()) throw Error(ErrorKind::NotSquare, "A0 must be square");
  if (big_n < 2 || big_n > 4) throw Error(ErrorKind::Precondition, "finite-N cross-check needs 2 <= N <= 4");
  if (r > 2 || r + 1 > big_n) throw Error(ErrorKind::Precondition, "finite-N cross-check needs r <= 2 and r + 1 <= N");
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
  if (opt.inner_samples < 2) throw Error(ErrorKind::InvalidArgument, "need at least 2 inner samples");
  const double nn = static_cast<double>(big_n);
  const std::size_t m = big_n - 1;
  const double log_c = nn * std::log(tau) + static_cast<double>(r + 1) * std::log(std::numbers::pi) - std::log(nn) -
                       static_cast<double>(m) * std::log(static_cast<double>(m)) +
                       std::log(detail::factorial(big_n - 1 - r));
  const cplx w = std::sqrt(nn / static_cast<double>(m)) * z;
  const double sigma = std::sqrt(tau / static_cast<double>(m));
  const ComplexMatrix a0sq = a0.adjoint() * a0;

  const std::vector<detail::OuterNode> nodes = detail::ball_nodes(r, opt.outer_grid);
  std::vector<Estimate> contrib(nodes.size());
  parallel_for(nodes.size(), opt.threads, [&](std::size_t k) {
    const detail::OuterNode& node = nodes[k];
    ComplexMatrix q(1, r, node.q);
    const double nq = r == 0 ? 0.0 : (q * q.adjoint())(0, 0).real();
    double h = 0.0;
    ComplexMatrix at(r, r);
    if (r > 0) {
      const cplx qaq = (q * a0 * q.adjoint())(0, 0);
      h = 2.0 * (std::conj(z) * qaq).real() - (q * a0sq * q.adjoint())(0, 0).real();
      const double kappa = nq > 0.0 ? (1.0 - std::sqrt(1.0 - nq)) / nq : 0.5;
      const ComplexMatrix root = ComplexMatrix::identity(r) - kappa * (q.adjoint() * q);
      at = std::sqrt(nn / static_cast<double>(m)) * (root * a0 * root);
    }
    const double log_outer = static_cast<double>(big_n - 1 - r) * std::log1p(-nq) + (nn / tau) * (h - std::norm(z)) - log_c;
    const double weight = node.weight * std::exp(log_outer);
    CounterRng rng(opt.seed, k, rng_domain::kOracle);
    double s = 0.0, s2 = 0.0;
    std::array<cplx, 9> buf{};
    for (std::size_t it = 0; it < opt.inner_samples; ++it) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          cplx v = -sigma * rng.complex_normal();
          if (i == j) v += w;
          if (i < r && j < r) v -= at(i, j);
          buf[i * m + j] = v;
        }
      const double d = std::norm(detail::small_det(buf, m));
      s += d;
      s2 += d * d;
    }
    const double ns = static_cast<double>(opt.inner_samples);
    const double mean = s / ns;
    const double var = std::max(0.0, (s2 / ns - mean * mean) * ns / (ns - 1.0));
    contrib[k] = {weight * mean, weight * weight * var / ns};
  });
  Estimate out;
  double var = 0.0;
  for (const Estimate& e : contrib) {
    out.value += e.value;
    var += e.sigma;
  }
  out.sigma = std::sqrt(var);
  return out;
}

/// Cross-checks the integral representation against direct sampling for a
/// diagonal deformation. The spec is translated so that its most frequent
/// diagonal value sits at 0; the remaining entries form A0.
inline CheckReport finite_n_crosscheck(const DeformationSpec& spec, double tau, cplx z, const FiniteNOptions& opt = {}) {
  const ComplexMatrix x0 = build_x0(spec);
  const std::size_t big_n = spec.n;
  if (big_n > 4) throw Error(ErrorKind::Precondition, "finite-N cross-check needs N <= 4");
  const std::vector<cplx> d = x0.diag();
  cplx shift = d[0];
  std::size_t best = 0;
  for (const cplx& v : d) {
    const auto k = static_cast<std::size_t>(std::count(d.begin(), d.end(), v));
    if (k > best) {
      best = k;
      shift = v;
    }
  }
  std::vector<cplx> block;
  for (const cplx& v : d)
    if (v != shift) block.push_back(v - shift);
  if (opt.block_rank) {
    if (*opt.block_rank < block.size()) throw Error(ErrorKind::Precondition, "block rank smaller than the nonzero count");
    block.resize(*opt.block_rank, 0.0);
  }
  const std::size_t r = block.size();
  const ComplexMatrix a0 = ComplexMatrix::diagonal(block);

  const Estimate rhs = finite_n_representation(a0, big_n, tau, z - shift, opt);
  const Estimate lhs = empirical_one_point(x0, tau, z, opt.disk_radius, opt.empirical_samples, opt.seed ^ 0x5eedULL,
                                           opt.threads);
  const double sigma = std::hypot(lhs.sigma, rhs.sigma);
  CheckReport rep;
  rep.name = "finite-n";
  rep.set("lhs", lhs.value);
  rep.set("sigma_lhs", lhs.sigma);
  rep.set("rhs", rhs.value);
  rep.set("sigma_rhs", rhs.sigma);
  rep.set("sigma", sigma);
  rep.set("r", static_cast<double>(r));
  rep.set("shift_re", shift.real());
  rep.set("shift_im", shift.imag());
  const double dev = std::abs(lhs.value - rhs.value);
  rep.set("deviation_sigmas", sigma > 0.0 ? dev / sigma : (dev == 0.0 ? 0.0 : std::numeric_limits<double>::infinity()));
  rep.passed = dev <= 3.0 * sigma;
  if (dev > 5.0 * sigma) {
    rep.message = "disagreement beyond 5 sigma: lhs=" + std::to_string(lhs.value) + " rhs=" + std::to_string(rhs.value);
  } else if (!rep.passed) {
    rep.message = "disagreement beyond 3 sigma";
  }
  return rep;
}

/// (N / (pi tau)) e^{-N|z|^2/tau} sum_{k<N} (N|z|^2/tau)^k / k!.
inline double ginue_one_point(std::size_t big_n, double tau, cplx z) {
  const double nn = static_cast<double>(big_n);
  const double x = nn * std::norm(z) / tau;
  double term = 1.0, s = 0.0;
  for (std::size_t k = 0; k < big_n; ++k) {
    s += term;
    term *= x / static_cast<double>(k + 1);
  }
  return nn / (std::numbers::pi * tau) * std::exp(-x) * s;
}

// ---- default check suite ----

inline const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = {"jn-max", "log-potential", "cone-integral", "tensor-permutation",
                                                 "finite-n"};
  return names;
}

inline std::vector<CheckReport> run_check(const std::string& name, std::uint64_t seed, unsigned threads = 0) {
  const SpectralMeasure pm = SpectralMeasure::symmetric_pair(1.0);
  std::vector<CheckReport> out;
  if (name == "jn-max") {
    for (std::size_t n : {1, 2}) {
      JnCheckOptions o;
      o.seed = seed;
      o.threads = threads;
      out.push_back(jn_max_check(n, pm, 0.0, 1.0, o));
    }
  } else if (name == "log-potential") {
    const SpectralMeasure single({{1.0, 1.0}});
    out.push_back(log_potential_max_check(pm, 0.0, 1.0, 1, 8, seed));
    out.push_back(log_potential_max_check(pm, 0.0, 1.0, 2, 8, seed));
    CheckReport r = log_potential_max_check(single, 0.0, 2.0, 2, 8, seed);
    r.name += "-single-atom";
    out.push_back(std::move(r));
  } else if (name == "cone-integral") {
    out.push_back(cone_integral_check(2, 3, {-1.0, -1.0}, 100000, seed, threads));
    out.push_back(cone_integral_check(2, 2, {-0.5, -2.0}, 100000, seed, threads));
    out.push_back(cone_integral_check(3, 3, {-1.0, -1.0, -1.0}, 100000, seed, threads));
    out.push_back(cone_integral_check(3, 4, {-1.0, -0.5, -2.0}, 100000, seed, threads));
  } else if (name == "tensor-permutation") {
    out.push_back(tensor_permutation_check(2, 3, 3, 2, seed));
    out.push_back(tensor_permutation_check(4, 2, 3, 5, seed));
  } else if (name == "finite-n") {
    FiniteNOptions o;
    o.seed = seed;
    o.threads = threads;
    o.block_rank = 1;
    DeformationSpec pure{{{0.0, 3}}, 0, 0.0, {}, 3};
    CheckReport a = finite_n_crosscheck(pure, 1.0, 0.0, o);
    const double exact = ginue_one_point(3, 1.0, 0.0);
    a.name = "finite-n-pure-ginue";
    a.set("exact", exact);
    const bool lhs_ok = std::abs(a.get("lhs") - exact) <= 3.0 * a.get("sigma_lhs");
    const bool rhs_ok = std::abs(a.get("rhs") - exact) <= 3.0 * a.get("sigma_rhs");
    if (!(lhs_ok && rhs_ok)) a.message += (a.message.empty() ? "" : "; ") + std::string("exact GinUE value not matched");
    a.passed = a.passed && lhs_ok && rhs_ok;
    out.push_back(std::move(a));
    o.block_rank.reset();
    DeformationSpec deformed{{{0.5, 1}, {0.0, 2}}, 0, 0.0, {}, 3};
    CheckReport b = finite_n_crosscheck(deformed, 1.0, 0.0, o);
    b.name = "finite-n-deformed";
    out.push_back(std::move(b));
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown check: " + name);
  }
  return out;
}

inline std::vector<CheckReport> verify_all(std::uint64_t seed, unsigned threads = 0) {
  std::vector<CheckReport> out;
  for (const std::string& name : check_names()) {
    std::vector<CheckReport> part = run_check(name, seed, threads);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace ginue
