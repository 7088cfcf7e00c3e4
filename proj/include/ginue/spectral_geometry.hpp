#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ginue/error.hpp"
#include "ginue/linalg.hpp"

namespace ginue {

struct Atom {
  cplx location;
  double weight;
};

/// Finite atomic probability measure sum_a c_a delta(z - a_a): the limit
/// of the deterministic part's eigenvalue distribution.
class SpectralMeasure {
 public:
  explicit SpectralMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw Error(ErrorKind::InvalidArgument, "measure needs at least one atom");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const Atom& a = atoms_[i];
      if (!(a.weight > 0.0) || !std::isfinite(a.weight)) {
        throw Error(ErrorKind::InvalidArgument, "atom weights must be positive and finite");
      }
      if (!std::isfinite(a.location.real()) || !std::isfinite(a.location.imag())) {
        throw Error(ErrorKind::InvalidArgument, "atom locations must be finite");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (atoms_[j].location == a.location) throw Error(ErrorKind::InvalidArgument, "atom locations must be distinct");
      }
      total += a.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw Error(ErrorKind::InvalidArgument, "atom weights sum to " + std::to_string(total) + ", expected 1");
    }
  }

  /// Equal-weight atoms at +a and -a.
  static SpectralMeasure symmetric_pair(cplx a) { return SpectralMeasure({{a, 0.5}, {-a, 0.5}}); }

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  cplx centroid() const {
    cplx s = 0.0;
    for (const Atom& a : atoms_) s += a.weight * a.location;
    return s;
  }

  SpectralMeasure translated(cplx shift) const {
    std::vector<Atom> out = atoms_;
    for (Atom& a : out) a.location += shift;
    return SpectralMeasure(std::move(out));
  }

 private:
  std::vector<Atom> atoms_;
};

/// The quintuple (P00, P0, P1, P2, chi) at a probe point z0.
struct EdgeParams {
  cplx z0;
  double p00;
  cplx p0;
  double p1;
  cplx p2;
  cplx chi;
};

enum class PointClass { Bulk, RegularEdge, CriticalEdge, Exterior };

inline const char* to_string(PointClass c) {
  switch (c) {
    case PointClass::Bulk: return "Bulk";
    case PointClass::RegularEdge: return "RegularEdge";
    case PointClass::CriticalEdge: return "CriticalEdge";
    case PointClass::Exterior: return "Exterior";
  }
  return "Unknown";
}

inline constexpr double kDefaultClassifyTol = 1e-8;

inline EdgeParams compute_params(const SpectralMeasure& measure, cplx z0) {
  EdgeParams p{z0, 0.0, 0.0, 0.0, 0.0, 0.0};
  for (const Atom& atom : measure.atoms()) {
    const cplx d = atom.location - z0;
    const double r2 = std::norm(d);
    if (std::sqrt(r2) < 1e-14) {
      throw Error(ErrorKind::Precondition, "probe point coincides with an atom of the measure");
    }
    const double r4 = r2 * r2;
    p.p00 += atom.weight / r2;
    p.p0 += atom.weight * d / r4;
    p.p1 += atom.weight / r4;
    p.p2 += atom.weight * d * d / (r4 * r2);
  }
  p.chi = p.p2 / p.p1;
  return p;
}

inline PointClass classify(const EdgeParams& p, double tol = kDefaultClassifyTol) {
  if (p.p00 > 1.0 + tol) return PointClass::Bulk;
  if (p.p00 < 1.0 - tol) return PointClass::Exterior;
  return std::abs(p.p0) > tol ? PointClass::RegularEdge : PointClass::CriticalEdge;
}

inline PointClass classify(const SpectralMeasure& measure, cplx z0, double tol = kDefaultClassifyTol) {
  return classify(compute_params(measure, z0), tol);
}

/// Unique t0 >= 0 with sum_a c_a / (|a - z0|^2 + t0) = 1/tau, by bisection.
inline double solve_t0(const SpectralMeasure& measure, cplx z0, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
  std::vector<std::pair<double, double>> fc;
  for (const Atom& a : measure.atoms()) fc.emplace_back(std::norm(a.location - z0), a.weight);
  auto g = [&fc, tau](double t) {
    double s = 0.0;
    for (const auto& [f, c] : fc) s += c / (f + t);
    return s - 1.0 / tau;
  };
  const double g0 = g(0.0);
  if (g0 < 0.0) {
    throw Error(ErrorKind::Precondition, "sum c/|a-z0|^2 falls short of 1/tau by " + std::to_string(-g0));
  }
  if (g0 == 0.0) return 0.0;
  // sum c/(f+t) <= 1/t, so g(tau) <= 0.
  double lo = 0.0, hi = tau;
  for (int it = 0; it < 2000 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
}

struct BoundaryTrace {
  std::vector<cplx> points;
  bool closed = false;
};

/// Thrown when a boundary trace exceeds its point budget; carries the
/// partial polyline.
class TraceError : public Error {
 public:
  TraceError(const std::string& msg, BoundaryTrace partial)
      : Error(ErrorKind::TraceBudget, msg), partial_(std::move(partial)) {}
  const BoundaryTrace& partial() const noexcept { return partial_; }

 private:
  BoundaryTrace partial_;
};

namespace detail {

struct LevelValue {
  double value;  // P00(z) - 1
  cplx grad;     // gradient of P00 as (d/dx, d/dy) packed into a complex number
};

inline LevelValue level_value(const SpectralMeasure& m, cplx z) {
  double p00 = 0.0;
  cplx p0 = 0.0;
  for (const Atom& a : m.atoms()) {
    const cplx d = a.location - z;
    const double r2 = std::norm(d);
    p00 += a.weight / r2;
    p0 += a.weight * d / (r2 * r2);
  }
  return {p00 - 1.0, 2.0 * p0};
}

// Newton on P00 - 1 along the gradient direction. Returns false on failure.
inline bool correct_to_level(const SpectralMeasure& m, cplx& z, double max_move) {
  const cplx start = z;
  for (int it = 0; it < 50; ++it) {
    const LevelValue lv = level_value(m, z);
    if (!std::isfinite(lv.value)) return false;
    const double g2 = std::norm(lv.grad);
    if (g2 == 0.0) return false;
    const cplx dz = -lv.value * lv.grad / g2;
    z += dz;
    if (std::abs(z - start) > max_move) return false;
    if (std::abs(dz) <= 1e-15 * (1.0 + std::abs(z))) {
      return std::abs(level_value(m, z).value) <= 1e-12;
    }
  }
  return std::abs(level_value(m, z).value) <= 1e-12;
}

inline double point_segment_distance(cplx p, cplx a, cplx b) {
  const cplx ab = b - a;
  const double len2 = std::norm(ab);
  if (len2 == 0.0) return std::abs(p - a);
  double t = ((p - a) * std::conj(ab)).real() / len2;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(p - (a + t * ab));
}

inline double distance_to_polyline(cplx p, const BoundaryTrace& tr) {
  const auto& pts = tr.points;
  if (pts.empty()) return std::numeric_limits<double>::infinity();
  if (pts.size() == 1) return std::abs(p - pts[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) best = std::min(best, point_segment_distance(p, pts[i], pts[i + 1]));
  if (tr.closed) best = std::min(best, point_segment_distance(p, pts.back(), pts.front()));
  return best;
}

}  // namespace detail

/// Symmetric Hausdorff distance between two traced polylines.
inline double hausdorff_distance(const BoundaryTrace& a, const BoundaryTrace& b) {
  double h = 0.0;
  for (cplx p : a.points) h = std::max(h, detail::distance_to_polyline(p, b));
  for (cplx p : b.points) h = std::max(h, detail::distance_to_polyline(p, a));
  return h;
}

/// Traces the level set {P00 = 1} from a nearby seed with a tangent
/// predictor and a Newton corrector along the gradient. Stops when the
/// curve closes on its start point.
inline BoundaryTrace trace_boundary(const SpectralMeasure& measure, cplx seed, double step,
                                    std::size_t max_points = 400000) {
  if (!(step > 0.0)) throw Error(ErrorKind::InvalidArgument, "trace step must be positive");
  BoundaryTrace tr;
  cplx z = seed;
  if (!detail::correct_to_level(measure, z, 2.0 * step)) {
    throw Error(ErrorKind::Precondition, "seed is not within one step of the level set P00 = 1");
  }
  tr.points.push_back(z);
  cplx dir = 0.0;
  double travelled = 0.0;
  while (true) {
    if (tr.points.size() >= max_points) {
      throw TraceError("boundary trace exceeded " + std::to_string(max_points) + " points", std::move(tr));
    }
    const cplx p = tr.points.back();
    const cplx grad = detail::level_value(measure, p).grad;
    cplx tangent = cplx(0.0, 1.0) * grad / std::abs(grad);
    if (dir != cplx(0.0) && (tangent * std::conj(dir)).real() < 0.0) tangent = -tangent;

    double h = step;
    cplx q;
    bool ok = false;
    while (h >= step * 1e-4) {
      q = p + h * tangent;
      if (detail::correct_to_level(measure, q, 0.5 * h) && std::abs(q - p) <= 2.0 * step) {
        const cplx moved = (q - p) / std::abs(q - p);
        if ((moved * std::conj(tangent)).real() > 0.5) {
          ok = true;
          break;
        }
      }
      h *= 0.5;
    }
    if (!ok) throw TraceError("boundary corrector failed near " + std::to_string(p.real()) + "+" +
                                  std::to_string(p.imag()) + "i", std::move(tr));
    dir = (q - p) / std::abs(q - p);
    travelled += std::abs(q - p);
    if (tr.points.size() >= 3 && travelled > 4.0 * step && std::abs(q - tr.points.front()) < step) {
      tr.closed = true;
      return tr;
    }
    tr.points.push_back(q);
  }
}

/// One seed per atom: march radially outward, away from the centroid,
/// until P00 drops below 1, then bisect onto the level set.
inline std::vector<cplx> boundary_seeds(const SpectralMeasure& measure) {
  std::vector<cplx> seeds;
  const cplx centre = measure.centroid();
  for (const Atom& atom : measure.atoms()) {
    cplx dir = atom.location - centre;
    dir = std::abs(dir) > 1e-12 ? dir / std::abs(dir) : cplx(1.0);
    auto level = [&](double r) { return detail::level_value(measure, atom.location + r * dir).value; };
    double r_in = 1e-9, r_out = 1e-9;
    while (level(r_out) >= 0.0) {
      r_in = r_out;
      r_out *= 1.25;
      if (r_out > 1e12) throw Error(ErrorKind::NoConvergence, "radial march found no boundary");
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (r_in + r_out);
      if (mid <= r_in || mid >= r_out) break;
      (level(mid) >= 0.0 ? r_in : r_out) = mid;
    }
    seeds.push_back(atom.location + r_out * dir);
  }
  return seeds;
}

/// Default tracing step: a small fraction of the smallest seed radius.
inline double default_trace_step(const SpectralMeasure& measure) {
  double rmin = std::numeric_limits<double>::infinity();
  const auto seeds = boundary_seeds(measure);
  for (std::size_t i = 0; i < seeds.size(); ++i) rmin = std::min(rmin, std::abs(seeds[i] - measure.atoms()[i].location));
  return 0.005 * rmin;
}

/// Traces every boundary component reachable from the atom seeds and
/// drops traces within Hausdorff distance `step` of an earlier one.
inline std::vector<BoundaryTrace> trace_all_boundaries(const SpectralMeasure& measure, double step) {
  std::vector<BoundaryTrace> traces;
  for (cplx seed : boundary_seeds(measure)) {
    bool known = false;
    for (const auto& t : traces) {
      if (detail::distance_to_polyline(seed, t) < step) {
        known = true;
        break;
      }
    }
    if (known) continue;
    BoundaryTrace tr = trace_boundary(measure, seed, step);
    const bool duplicate =
        std::any_of(traces.begin(), traces.end(), [&](const BoundaryTrace& t) { return hausdorff_distance(t, tr) < step; });
    if (!duplicate) traces.push_back(std::move(tr));
  }
  return traces;
}

namespace detail {

// Newton on P0(z) = 0. With d = a - z, dP0 = P1 dz + 2 P2 dzbar.
inline bool refine_p0_zero(const SpectralMeasure& m, cplx& z) {
  for (int it = 0; it < 100; ++it) {
    EdgeParams p;
    try {
      p = compute_params(m, z);
    } catch (const Error&) {
      return false;
    }
    const double a = p.p1;
    const cplx b = 2.0 * p.p2;
    const double den = a * a - std::norm(b);
    if (std::abs(den) <= 1e-14 * a * a) return false;
    const cplx dz = (-a * p.p0 + b * std::conj(p.p0)) / den;
    z += dz;
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    if (std::abs(dz) <= 1e-16 * (1.0 + std::abs(z))) break;
  }
  return true;
}

}  // namespace detail

struct CriticalPoint {
  cplx z;
  EdgeParams params;
};

/// Boundary points with P00 = 1 and P0 = 0: local minima of |P0| along
/// each traced component, refined by Newton on P0 = 0 and kept only when
/// both conditions hold to 1e-8.
inline std::vector<CriticalPoint> find_critical_points(const SpectralMeasure& measure, double step = 0.0) {
  if (step <= 0.0) step = default_trace_step(measure);
  std::vector<CriticalPoint> found;
  constexpr double tol = 1e-8;
  for (const BoundaryTrace& tr : trace_all_boundaries(measure, step)) {
    const auto& pts = tr.points;
    const std::size_t n = pts.size();
    if (n < 3) continue;
    std::vector<double> mag(n);
    for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(compute_params(measure, pts[i]).p0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t prev = i == 0 ? (tr.closed ? n - 1 : 0) : i - 1;
      const std::size_t next = i + 1 == n ? (tr.closed ? 0 : n - 1) : i + 1;
      if (!(mag[i] <= mag[prev] && mag[i] <= mag[next])) continue;
      cplx z = pts[i];
      if (!detail::refine_p0_zero(measure, z)) continue;
      if (std::abs(z - pts[i]) > 10.0 * step) continue;
      EdgeParams p;
      try {
        p = compute_params(measure, z);
      } catch (const Error&) {
        continue;
      }
      if (std::abs(p.p00 - 1.0) > tol || std::abs(p.p0) > tol) continue;
      const bool dup = std::any_of(found.begin(), found.end(), [&](const CriticalPoint& c) { return std::abs(c.z - z) < 1e-6; });
      if (!dup) found.push_back({z, p});
    }
  }
  return found;
}

}  // namespace ginue
