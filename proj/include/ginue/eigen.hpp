#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "ginue/error.hpp"
#include "ginue/linalg.hpp"

namespace ginue {

/// Thrown when shifted QR exhausts its sweep budget. The active block
/// [lo, hi] that failed to deflate is reported.
class EigenConvergenceError : public Error {
 public:
  EigenConvergenceError(std::size_t lo, std::size_t hi, std::size_t sweeps)
      : Error(ErrorKind::NoConvergence, "QR iteration did not converge on block [" + std::to_string(lo) + ", " +
                                            std::to_string(hi) + "] after " + std::to_string(sweeps) + " sweeps"),
        lo_(lo),
        hi_(hi) {}
  std::size_t lo() const noexcept { return lo_; }
  std::size_t hi() const noexcept { return hi_; }

 private:
  std::size_t lo_;
  std::size_t hi_;
};

namespace detail {

inline double abs1(const cplx& z) { return std::abs(z.real()) + std::abs(z.imag()); }

// Plain complex product without the C99 Annex G inf/nan recovery path;
// inputs in the hot loops are always finite.
inline cplx mul(const cplx& a, const cplx& b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}
inline cplx mulc(const cplx& a, const cplx& b) {  // conj(a) * b
  return {a.real() * b.real() + a.imag() * b.imag(), a.real() * b.imag() - a.imag() * b.real()};
}

// Diagonal similarity scaling by powers of two so that off-diagonal row
// and column norms are comparable (EISPACK balanc, scaling phase only).
inline void balance(ComplexMatrix& a) {
  const std::size_t n = a.rows();
  constexpr double radix = 2.0;
  constexpr double sqrdx = radix * radix;
  bool noconv = true;
  for (int pass = 0; noconv && pass < 200; ++pass) {
    noconv = false;
    for (std::size_t i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        c += abs1(a(j, i));
        r += abs1(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c >= g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        noconv = true;
        const double inv = 1.0 / f;
        cplx* ri = a.row(i);
        for (std::size_t j = 0; j < n; ++j) ri[j] *= inv;
        for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
      }
    }
  }
}

// Householder reduction to upper Hessenberg form, in place.
inline void hessenberg(ComplexMatrix& a) {
  const std::size_t n = a.rows();
  if (n < 3) return;
  std::vector<cplx> u(n), w(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double xnorm2 = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) xnorm2 += std::norm(a(i, k));
    const double tail = xnorm2 - std::norm(a(k + 1, k));
    if (tail == 0.0) continue;
    const double xnorm = std::sqrt(xnorm2);
    const cplx x0 = a(k + 1, k);
    const cplx phase = std::abs(x0) == 0.0 ? cplx(1.0) : x0 / std::abs(x0);
    // u = x + phase*|x| e1, reflector P = I - 2 u u^H / (u^H u), P x = -phase*|x| e1
    for (std::size_t i = k + 1; i < n; ++i) u[i] = a(i, k);
    u[k + 1] += phase * xnorm;
    double uu = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) uu += std::norm(u[i]);
    const double beta = 2.0 / uu;

    // Left: rows k+1.., columns k..
    std::fill(w.begin() + static_cast<std::ptrdiff_t>(k), w.end(), cplx(0.0));
    for (std::size_t i = k + 1; i < n; ++i) {
      const cplx ui = std::conj(u[i]);
      const cplx* ri = a.row(i);
      for (std::size_t j = k; j < n; ++j) w[j] += mul(ui, ri[j]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const cplx f = beta * u[i];
      cplx* ri = a.row(i);
      for (std::size_t j = k; j < n; ++j) ri[j] -= mul(f, w[j]);
    }
    // Right: all rows, columns k+1..
    for (std::size_t i = 0; i < n; ++i) {
      cplx* ri = a.row(i);
      cplx s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += mul(ri[j], u[j]);
      s *= beta;
      for (std::size_t j = k + 1; j < n; ++j) ri[j] -= mulc(u[j], s);
    }
    a(k + 1, k) = -phase * xnorm;
    for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
  }
}

struct Givens {
  double c;
  cplx s;
  cplx r;
};

// [c s; -conj(s) c] [x; y] = [r; 0]
inline Givens make_givens(const cplx& x, const cplx& y) {
  const double ax = std::abs(x), ay = std::abs(y);
  if (ay == 0.0) return {1.0, 0.0, x};
  if (ax == 0.0) return {0.0, std::conj(y) / ay, ay};
  const double nrm = std::hypot(ax, ay);
  const cplx phase = x / ax;
  return {ax / nrm, phase * std::conj(y) / nrm, phase * nrm};
}

// One implicit single-shift QR sweep on the active block [lo, hi].
// Only the active block is updated (no Schur form is accumulated).
// Column rotations for rows well above the bulge are deferred and
// replayed row by row at the end, which keeps memory access contiguous.
inline void qr_sweep(ComplexMatrix& h, std::size_t lo, std::size_t hi, const cplx& shift,
                     std::vector<Givens>& rots) {
  rots.clear();
  for (std::size_t k = lo; k < hi; ++k) {
    cplx x, y;
    if (k == lo) {
      x = h(lo, lo) - shift;
      y = h(lo + 1, lo);
    } else {
      x = h(k, k - 1);
      y = h(k + 1, k - 1);
    }
    const Givens g = make_givens(x, y);
    rots.push_back(g);
    if (k > lo) {
      h(k, k - 1) = g.r;
      h(k + 1, k - 1) = 0.0;
    }
    cplx* rk = h.row(k);
    cplx* rk1 = h.row(k + 1);
    const cplx cs = std::conj(g.s);
    for (std::size_t j = k; j <= hi; ++j) {
      const cplx a = rk[j], b = rk1[j];
      rk[j] = g.c * a + mul(g.s, b);
      rk1[j] = g.c * b - mul(cs, a);
    }
    // Immediate column update only on rows that still take part in row
    // rotations: rows max(lo, k-1) .. min(k+2, hi).
    const std::size_t ifirst = k >= lo + 1 ? k - 1 : lo;
    const std::size_t ilast = std::min(k + 2, hi);
    for (std::size_t i = ifirst; i <= ilast; ++i) {
      cplx* ri = h.row(i);
      const cplx a = ri[k], b = ri[k + 1];
      ri[k] = g.c * a + mul(cs, b);
      ri[k + 1] = g.c * b - mul(g.s, a);
    }
  }
  // Deferred column rotations: row i receives rotations k with k-1 > i,
  // i.e. k >= i + 2, applied in order of k.
  for (std::size_t i = lo; i <= hi; ++i) {
    cplx* ri = h.row(i);
    for (std::size_t k = i + 2; k < hi; ++k) {
      const Givens& g = rots[k - lo];
      const cplx a = ri[k], b = ri[k + 1];
      ri[k] = g.c * a + mulc(g.s, b);
      ri[k + 1] = g.c * b - mul(g.s, a);
    }
  }
}

inline std::vector<cplx> hessenberg_qr_eigenvalues(ComplexMatrix& h) {
  const std::size_t n = h.rows();
  std::vector<cplx> eig(n);
  const double eps = std::numeric_limits<double>::epsilon();
  const double hnorm = std::max(h.frobenius_norm(), std::numeric_limits<double>::min());
  const std::size_t cap = 30 * std::max<std::size_t>(n, 1);
  std::size_t sweeps = 0;
  std::size_t stagnant = 0;
  std::vector<Givens> rots;
  rots.reserve(n);

  std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(n) - 1;
  while (hi >= 0) {
    std::ptrdiff_t l = hi;
    for (; l > 0; --l) {
      const double sub = std::abs(h(l, l - 1));
      double scale = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
      if (scale == 0.0) scale = hnorm;
      if (sub <= eps * scale) {
        h(l, l - 1) = 0.0;
        break;
      }
    }
    if (l == hi) {
      eig[static_cast<std::size_t>(hi)] = h(hi, hi);
      --hi;
      stagnant = 0;
      continue;
    }
    if (sweeps >= cap) {
      throw EigenConvergenceError(static_cast<std::size_t>(l), static_cast<std::size_t>(hi), sweeps);
    }
    ++sweeps;
    ++stagnant;

    cplx shift;
    if (stagnant % 10 == 0) {
      // exceptional ad-hoc shift
      shift = h(hi, hi) + 0.75 * std::abs(h(hi, hi - 1).real());
    } else {
      const cplx a = h(hi - 1, hi - 1), b = h(hi - 1, hi), c = h(hi, hi - 1), d = h(hi, hi);
      const cplx m = 0.5 * (a + d);
      const cplx disc = std::sqrt(0.25 * (a - d) * (a - d) + b * c);
      const cplx mu1 = m + disc, mu2 = m - disc;
      shift = std::abs(mu1 - d) <= std::abs(mu2 - d) ? mu1 : mu2;
    }
    qr_sweep(h, static_cast<std::size_t>(l), static_cast<std::size_t>(hi), shift, rots);
  }
  return eig;
}

}  // namespace detail

/// All eigenvalues of a square complex matrix, with multiplicity, via
/// balancing, Householder Hessenberg reduction and Wilkinson-shifted QR.
inline std::vector<cplx> eigenvalues(const ComplexMatrix& a) {
  if (!a.is_square()) {
    throw Error(ErrorKind::NotSquare,
                "eigenvalues of " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
  if (a.rows() == 0) throw Error(ErrorKind::Precondition, "eigenvalues of an empty matrix");
  ComplexMatrix h(a);
  detail::balance(h);
  detail::hessenberg(h);
  return detail::hessenberg_qr_eigenvalues(h);
}

struct HermitianEigen {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // columns are eigenvectors
};

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix. Only the upper
/// triangle's Hermitian part is used. Intended for small matrices.
inline HermitianEigen hermitian_eigen(const ComplexMatrix& a) {
  if (!a.is_square()) throw Error(ErrorKind::NotSquare, "hermitian_eigen of non-square matrix");
  const std::size_t n = a.rows();
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
  ComplexMatrix v = ComplexMatrix::identity(n);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        total += std::norm(m(i, j));
        if (i != j) off += std::norm(m(i, j));
      }
    if (off <= 1e-30 * total || off == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = m(p, q);
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;
        const double app = m(p, p).real(), aqq = m(q, q).real();
        // Rotate the phase out, then a real symmetric Jacobi rotation.
        const cplx ph = apq / mag;
        const double theta = 0.5 * std::atan2(2.0 * mag, aqq - app);
        const double c = std::cos(theta), s = std::sin(theta);
        // Columns p, q: new_p = c*col_p - s*conj(ph)*col_q, new_q = s*ph*col_p + c*col_q
        for (std::size_t k = 0; k < n; ++k) {
          const cplx mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * std::conj(ph) * mkq;
          m(k, q) = s * ph * mkp + c * mkq;
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * std::conj(ph) * vkq;
          v(k, q) = s * ph * vkp + c * vkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const cplx mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * ph * mqk;
          m(q, k) = s * std::conj(ph) * mpk + c * mqk;
        }
        m(p, q) = 0.0;
        m(q, p) = 0.0;
        m(p, p) = m(p, p).real();
        m(q, q) = m(q, q).real();
      }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&m](std::size_t x, std::size_t y) { return m(x, x).real() < m(y, y).real(); });
  HermitianEigen out{std::vector<double>(n), ComplexMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = m(order[k], order[k]).real();
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

inline std::vector<double> hermitian_eigenvalues(const ComplexMatrix& a) { return hermitian_eigen(a).values; }

/// Unitary factor of a thin QR decomposition (twice-iterated modified
/// Gram-Schmidt, R with positive real diagonal). Applied to a Ginibre
/// sample this yields a Haar-distributed unitary.
inline ComplexMatrix qr_unitary(const ComplexMatrix& a) {
  const std::size_t m = a.rows(), n = a.cols();
  if (n > m) throw Error(ErrorKind::DimensionMismatch, "qr_unitary needs rows >= cols");
  ComplexMatrix q(a);
  for (std::size_t j = 0; j < n; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        cplx d = 0.0;
        for (std::size_t i = 0; i < m; ++i) d += std::conj(q(i, k)) * q(i, j);
        for (std::size_t i = 0; i < m; ++i) q(i, j) -= d * q(i, k);
      }
    }
    double nrm = 0.0;
    for (std::size_t i = 0; i < m; ++i) nrm += std::norm(q(i, j));
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) throw Error(ErrorKind::InvalidArgument, "qr_unitary of rank-deficient matrix");
    for (std::size_t i = 0; i < m; ++i) q(i, j) /= nrm;
  }
  return q;
}

}  // namespace ginue
