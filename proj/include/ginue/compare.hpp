#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "ginue/ensemble.hpp"
#include "ginue/error.hpp"
#include "ginue/limit_kernel.hpp"

namespace ginue {

/// Density sampled at the centres of a square grid of bins. `replicas` is
/// the number of matrices behind an empirical table (0 for a limit table).
struct DensityTable {
  std::vector<double> re, im, value;
  std::size_t replicas = 0;

  std::size_t size() const { return value.size(); }
};

inline DensityTable table_from_grid(const DensityGrid& g) {
  DensityTable t;
  const std::size_t nb = g.bins();
  for (std::size_t ix = 0; ix < nb; ++ix)
    for (std::size_t iy = 0; iy < nb; ++iy) {
      t.re.push_back(g.grid.center(ix));
      t.im.push_back(g.grid.center(iy));
      t.value.push_back(g.value(ix, iy));
    }
  t.replicas = g.replicas;
  return t;
}

/// Limit density at the bin centres of `grid`, or averaged over each bin.
inline DensityTable limit_table(const GridSpec& grid, const KernelParams& p, bool bin_average) {
  DensityTable t;
  const std::size_t nb = grid.bins();
  for (std::size_t ix = 0; ix < nb; ++ix)
    for (std::size_t iy = 0; iy < nb; ++iy) {
      const cplx c(grid.center(ix), grid.center(iy));
      t.re.push_back(c.real());
      t.im.push_back(c.imag());
      t.value.push_back(bin_average ? density1_bin_average(c, grid.bin_width, p) : density1_quadrature(c, p));
    }
  return t;
}

/// Bin width of a table laid out on a square grid of centres.
inline double table_bin_width(const DensityTable& t) {
  std::vector<double> xs = t.re;
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), xs.end());
  if (xs.size() < 2) throw Error(ErrorKind::InvalidArgument, "table needs at least two distinct bin centres");
  return xs[1] - xs[0];
}

struct Comparison {
  std::vector<double> diff;  // empirical - limit, per bin
  double l1 = 0.0;           // sum |diff| w^2
  double l1_noise = 0.0;     // expected L1 of pure Poisson noise; 0 when unknown
  double empirical_at_zero = 0.0;
  double limit_at_zero = 0.0;
};

/// Mean of the bins whose closed square contains the origin.
inline double value_at_zero(const DensityTable& t, double w) {
  double s = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::abs(t.re[i]) <= 0.5 * w + 1e-12 && std::abs(t.im[i]) <= 0.5 * w + 1e-12) {
      s += t.value[i];
      ++k;
    }
  }
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "grid does not cover the origin");
  return s / static_cast<double>(k);
}

inline Comparison compare_tables(const DensityTable& empirical, const DensityTable& limit) {
  if (empirical.size() != limit.size() || empirical.size() == 0) {
    throw Error(ErrorKind::DimensionMismatch, "density tables have different bin counts");
  }
  for (std::size_t i = 0; i < empirical.size(); ++i) {
    if (std::abs(empirical.re[i] - limit.re[i]) > 1e-9 || std::abs(empirical.im[i] - limit.im[i]) > 1e-9) {
      throw Error(ErrorKind::DimensionMismatch, "density tables are on different grids");
    }
  }
  const double w = table_bin_width(empirical);
  const double area = w * w;
  Comparison c;
  for (std::size_t i = 0; i < empirical.size(); ++i) {
    const double d = empirical.value[i] - limit.value[i];
    c.diff.push_back(d);
    c.l1 += std::abs(d) * area;
    if (empirical.replicas > 0) {
      // Poisson counts: var(value) = value / (M w^2); E|N(0, s^2)| = s sqrt(2 / pi).
      const double var = std::max(empirical.value[i], 0.0) / (static_cast<double>(empirical.replicas) * area);
      c.l1_noise += std::sqrt(2.0 * var / std::numbers::pi) * area;
    }
  }
  c.empirical_at_zero = value_at_zero(empirical, w);
  c.limit_at_zero = value_at_zero(limit, w);
  return c;
}

}  // namespace ginue
