#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ginue/eigen.hpp"
#include "ginue/error.hpp"
#include "ginue/linalg.hpp"
#include "ginue/parallel.hpp"
#include "ginue/rng.hpp"
#include "ginue/spectral_geometry.hpp"

namespace ginue {

struct MacroBlock {
  cplx a;
  std::size_t r;
};

/// Finite-N recipe for the diagonal deformation
/// X0 = diag(a_1 I_{r_1}, ..., a_t I_{r_t}, z0 I_{r0}, A_{t+1}).
struct DeformationSpec {
  std::vector<MacroBlock> macro_blocks;
  std::size_t r0 = 0;
  cplx z0 = 0.0;
  std::vector<cplx> extra_block;
  std::size_t n = 0;

  void validate() const {
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "N must be positive");
    std::size_t total = r0 + extra_block.size();
    for (std::size_t i = 0; i < macro_blocks.size(); ++i) {
      const MacroBlock& b = macro_blocks[i];
      if (b.r == 0) throw Error(ErrorKind::InvalidArgument, "macro block sizes must be positive");
      for (std::size_t j = 0; j < i; ++j) {
        if (macro_blocks[j].a == b.a) throw Error(ErrorKind::InvalidArgument, "macro block locations must be distinct");
      }
      total += b.r;
    }
    if (total != n) {
      throw Error(ErrorKind::InvalidArgument, "block sizes sum to " + std::to_string(total) + " but N = " + std::to_string(n));
    }
    for (const cplx& e : extra_block) {
      if (e == z0) throw Error(ErrorKind::InvalidArgument, "extra block must not contain z0");
      for (const MacroBlock& b : macro_blocks) {
        if (e == b.a) throw Error(ErrorKind::InvalidArgument, "extra block must not contain a macro location");
      }
    }
  }

  /// Limiting measure: macro locations weighted by r_a / sum r_a.
  SpectralMeasure limit_measure() const {
    if (macro_blocks.empty()) throw Error(ErrorKind::Precondition, "spec has no macro blocks");
    double total = 0.0;
    for (const MacroBlock& b : macro_blocks) total += static_cast<double>(b.r);
    std::vector<Atom> atoms;
    for (const MacroBlock& b : macro_blocks) atoms.push_back({b.a, static_cast<double>(b.r) / total});
    return SpectralMeasure(std::move(atoms));
  }
};

inline ComplexMatrix build_x0(const DeformationSpec& spec) {
  spec.validate();
  ComplexMatrix x(spec.n, spec.n);
  std::size_t k = 0;
  for (const MacroBlock& b : spec.macro_blocks)
    for (std::size_t i = 0; i < b.r; ++i, ++k) x(k, k) = b.a;
  for (std::size_t i = 0; i < spec.r0; ++i, ++k) x(k, k) = spec.z0;
  for (const cplx& e : spec.extra_block) {
    x(k, k) = e;
    ++k;
  }
  return x;
}

/// X = X0 + sqrt(tau/N) G with standard complex Gaussian G. The noise for
/// a replica depends only on (seed, replica).
inline ComplexMatrix sample_ginue(const ComplexMatrix& x0, double tau, std::uint64_t seed, std::uint64_t replica) {
  if (!x0.is_square()) throw Error(ErrorKind::NotSquare, "deformation must be square");
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
  CounterRng rng(seed, replica, rng_domain::kEnsemble);
  const double scale = std::sqrt(tau / static_cast<double>(x0.rows()));
  ComplexMatrix x(x0);
  for (cplx& v : x.data()) v += scale * rng.complex_normal();
  return x;
}

inline std::vector<cplx> rescale_eigs(const std::vector<cplx>& eigs, cplx z0, std::size_t n, double p1) {
  if (!(p1 > 0.0)) throw Error(ErrorKind::InvalidArgument, "p1 must be positive");
  const double s = std::pow(static_cast<double>(n) * p1, 0.25);
  std::vector<cplx> out;
  out.reserve(eigs.size());
  for (const cplx& l : eigs) out.push_back(s * (l - z0));
  return out;
}

inline std::vector<cplx> unscale_eigs(const std::vector<cplx>& zhat, cplx z0, std::size_t n, double p1) {
  if (!(p1 > 0.0)) throw Error(ErrorKind::InvalidArgument, "p1 must be positive");
  const double s = std::pow(static_cast<double>(n) * p1, 0.25);
  std::vector<cplx> out;
  out.reserve(zhat.size());
  for (const cplx& z : zhat) out.push_back(z0 + z / s);
  return out;
}

struct GridSpec {
  double half_width = 3.0;
  double bin_width = 0.25;

  std::size_t bins() const {
    if (!(half_width > 0.0) || !(bin_width > 0.0)) throw Error(ErrorKind::InvalidArgument, "grid L and w must be positive");
    const double k = 2.0 * half_width / bin_width;
    const double kr = std::round(k);
    if (kr < 1.0 || std::abs(k - kr) > 1e-9 * kr) {
      throw Error(ErrorKind::InvalidArgument, "2L/w must be a positive integer");
    }
    return static_cast<std::size_t>(kr);
  }
  double center(std::size_t i) const { return -half_width + (static_cast<double>(i) + 0.5) * bin_width; }
};

struct ExperimentConfig {
  DeformationSpec spec;
  double tau = 1.0;
  std::optional<double> tau_hat;  // overrides tau via tau = 1 + N^{-1/2} sqrt(P1) tau_hat
  std::optional<double> p1;       // rescaling constant; defaults to P1 of the limit measure at z0
  std::size_t replicas = 1;
  std::uint64_t seed = 0;
  GridSpec grid;

  double resolved_p1() const {
    if (p1) {
      if (!(*p1 > 0.0)) throw Error(ErrorKind::InvalidArgument, "p1 override must be positive");
      return *p1;
    }
    if (spec.macro_blocks.empty()) return 1.0;
    return compute_params(spec.limit_measure(), spec.z0).p1;
  }

  double resolved_tau() const {
    if (tau_hat) return 1.0 + std::sqrt(resolved_p1() / static_cast<double>(spec.n)) * *tau_hat;
    return tau;
  }

  void validate() const {
    spec.validate();
    if (replicas == 0) throw Error(ErrorKind::InvalidArgument, "replica count must be positive");
    (void)grid.bins();
    if (!(resolved_tau() > 0.0)) throw Error(ErrorKind::InvalidArgument, "resolved tau must be positive");
  }
};

/// Histogram of rescaled eigenvalues on [-L, L]^2. Counts are kept as
/// integers so the result is independent of summation order; the per-bin
/// sum of squared per-replica counts gives a standard error.
struct DensityGrid {
  GridSpec grid;
  std::size_t n = 0;
  std::size_t replicas = 0;  // replicas that contributed
  std::size_t failed = 0;
  std::vector<std::uint64_t> counts;  // index ix * bins + iy
  std::vector<std::uint64_t> count_sq;

  std::size_t bins() const { return grid.bins(); }
  double area() const { return grid.bin_width * grid.bin_width; }
  double value(std::size_t ix, std::size_t iy) const {
    return static_cast<double>(counts[ix * bins() + iy]) / (static_cast<double>(replicas) * area());
  }
  double stderr_of(std::size_t ix, std::size_t iy) const {
    const std::size_t k = ix * bins() + iy;
    const double m = static_cast<double>(replicas);
    if (replicas < 2) return 0.0;
    const double mean = static_cast<double>(counts[k]) / m;
    const double var = std::max(0.0, (static_cast<double>(count_sq[k]) / m - mean * mean) * m / (m - 1.0));
    return std::sqrt(var / m) / area();
  }
  std::uint64_t in_window() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }

  /// Bin index of a coordinate, or -1 outside [-L, L]. The right edge L
  /// belongs to the last bin.
  long locate(double x) const {
    const double L = grid.half_width;
    if (!(std::abs(x) <= L)) return -1;
    const long b = static_cast<long>(bins());
    long i = static_cast<long>(std::floor((x + L) / grid.bin_width));
    return std::clamp(i, 0L, b - 1);
  }
};

/// Samples, diagonalizes, rescales and bins M replicas. Replicas whose
/// eigensolver fails are counted and excluded; more than 1% failures
/// aborts. When `eigs_out` is given it receives every replica's raw
/// spectrum (empty for failed replicas).
inline DensityGrid empirical_density(const ExperimentConfig& cfg, unsigned threads = 0,
                                     std::vector<std::vector<cplx>>* eigs_out = nullptr) {
  cfg.validate();
  const ComplexMatrix x0 = build_x0(cfg.spec);
  const double tau = cfg.resolved_tau();
  const double p1 = cfg.resolved_p1();
  DensityGrid out;
  out.grid = cfg.grid;
  out.n = cfg.spec.n;
  const std::size_t nb = cfg.grid.bins();

  struct ReplicaResult {
    bool ok = false;
    std::vector<std::uint32_t> hits;  // flat bin indices
  };
  std::vector<ReplicaResult> results(cfg.replicas);
  if (eigs_out) eigs_out->assign(cfg.replicas, {});

  parallel_for(cfg.replicas, threads, [&](std::size_t k) {
    const ComplexMatrix x = sample_ginue(x0, tau, cfg.seed, k);
    std::vector<cplx> eigs;
    try {
      eigs = eigenvalues(x);
    } catch (const Error&) {
      return;
    }
    ReplicaResult& r = results[k];
    r.ok = true;
    for (const cplx& z : rescale_eigs(eigs, cfg.spec.z0, cfg.spec.n, p1)) {
      const long ix = out.locate(z.real()), iy = out.locate(z.imag());
      if (ix >= 0 && iy >= 0) r.hits.push_back(static_cast<std::uint32_t>(ix * static_cast<long>(nb) + iy));
    }
    if (eigs_out) (*eigs_out)[k] = std::move(eigs);
  });

  out.counts.assign(nb * nb, 0);
  out.count_sq.assign(nb * nb, 0);
  std::vector<std::uint64_t> local(nb * nb, 0);
  for (const ReplicaResult& r : results) {
    if (!r.ok) {
      ++out.failed;
      continue;
    }
    ++out.replicas;
    for (auto h : r.hits) ++local[h];
    for (auto h : r.hits) {
      if (local[h] == 0) continue;
      out.counts[h] += local[h];
      out.count_sq[h] += local[h] * local[h];
      local[h] = 0;
    }
  }
  if (out.failed * 100 > cfg.replicas) {
    throw Error(ErrorKind::ReplicaFailures, std::to_string(out.failed) + " of " + std::to_string(cfg.replicas) +
                                                " replicas failed to diagonalize (limit 1%)");
  }
  return out;
}

}  // namespace ginue
