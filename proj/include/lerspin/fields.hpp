#pragma once

// Quasi-magnetostatic model of the microwave field of inductor geometries:
// finite straight segments carrying a uniform sheet current, subdivided
// across their width into filaments. Zero-point current normalization sets
// the vacuum field scale, the coupling map follows the paper convention
// G1 = g mu_B b_perp / h, and sampled maps can be histogrammed into a
// tabulated coupling distribution.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "lerspin/core.hpp"
#include "lerspin/parallel.hpp"

namespace lerspin {

using Vec3 = std::array<double, 3>;

inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// One straight conductor segment. Width lies in the chip plane,
/// perpendicular to the segment axis (chip normal is +z); thickness is
/// ignored by the field model but kept for the inside-conductor test.
struct WireSegment {
  Vec3 start{0, 0, 0};
  Vec3 end{0, 0, 0};
  double width = 0.0;
  double thickness = 0.0;
};

struct WireGeometry {
  std::vector<WireSegment> segments;
  std::string name;

  void validate() const {
    if (segments.empty()) throw ValidationError("WireGeometry: no segments");
    for (const auto& s : segments) {
      if (!(norm(s.end - s.start) > 0.0)) throw ValidationError("WireGeometry: zero-length segment");
      if (!(s.width > 0.0)) throw ValidationError("WireGeometry: segment width must be > 0");
      if (s.thickness < 0.0) throw ValidationError("WireGeometry: segment thickness must be >= 0");
    }
  }

  /// True when segment k ends where segment k+1 starts (series inductor).
  bool is_series_path(double tol = 1e-12) const {
    for (std::size_t k = 0; k + 1 < segments.size(); ++k)
      if (norm(segments[k].end - segments[k + 1].start) > tol) return false;
    return true;
  }
};

/// Peak inductor current carrying half a photon of energy,
/// I = sqrt(hbar w_r / L).
inline double zero_point_current(const ResonatorSpec& res) {
  res.validate();
  return std::sqrt(constants::hbar * to_angular(res.f_r0) / res.inductance);
}

/// rms variant sqrt(hbar w_r / 2L); this is what the coupling map uses.
inline double zero_point_current_rms(const ResonatorSpec& res) {
  return zero_point_current(res) / std::numbers::sqrt2_v<double>;
}

/// Rabi-rate coupling of a spin at distance r from a matched transmission
/// line fed with `power_w`: G = g mu_B mu_0 I_rms / (2 pi r h), I_rms =
/// sqrt(P/Z0).
inline double g1_line_from_power(double power_w, double distance, double g_factor = 2.00,
                                 double z0 = 50.0) {
  if (!(power_w >= 0.0) || !(distance > 0.0) || !(z0 > 0.0))
    throw ValidationError("g1_line_from_power: bad arguments");
  const double i_rms = std::sqrt(power_w / z0);
  const double b_rms = constants::mu_0 * i_rms / (2.0 * std::numbers::pi * distance);
  return g_factor * constants::mu_B * b_rms / constants::h;
}

namespace fielddetail {

/// Field of a finite straight filament from A to B carrying current I,
/// evaluated at P: (mu0 I / 4 pi) (a x b)(|a|+|b|) / (|a||b|(|a||b|+a.b)),
/// with a = A-P, b = B-P. Singular only on the filament itself.
inline Vec3 filament_field(const Vec3& a_pt, const Vec3& b_pt, const Vec3& p, double current) {
  const Vec3 a = a_pt - p;
  const Vec3 b = b_pt - p;
  const double na = norm(a), nb = norm(b);
  const double denom = na * nb * (na * nb + dot(a, b));
  if (denom <= 0.0) return {0.0, 0.0, 0.0};
  const double pref = constants::mu_0 * current / (4.0 * std::numbers::pi) * (na + nb) / denom;
  return pref * cross(a, b);
}

/// In-plane direction across the segment width (chip normal is +z; for
/// vertical segments any perpendicular works).
inline Vec3 width_direction(const WireSegment& s) {
  const Vec3 axis = s.end - s.start;
  const double n = norm(axis);
  const Vec3 u = (1.0 / n) * axis;
  Vec3 w = cross(Vec3{0.0, 0.0, 1.0}, u);
  const double nw = norm(w);
  if (nw < 1e-12) w = cross(Vec3{1.0, 0.0, 0.0}, u);
  return (1.0 / norm(w)) * w;
}

/// Distance from point to the segment's axis (closest approach).
inline double axis_distance(const WireSegment& s, const Vec3& p) {
  const Vec3 axis = s.end - s.start;
  const double len2 = dot(axis, axis);
  double t = dot(p - s.start, axis) / len2;
  t = std::clamp(t, 0.0, 1.0);
  const Vec3 closest = s.start + t * axis;
  return norm(p - closest);
}

}  // namespace fielddetail

struct FieldOptions {
  int filaments_min = 1;
  int filaments_max = 4096;
  double filaments_per_distance = 6.0;  ///< filament pitch <= distance / this
};

/// True when the point lies inside the conductor volume of any segment.
inline bool inside_conductor(const WireGeometry& geom, const Vec3& p) {
  for (const auto& s : geom.segments) {
    const Vec3 axis = s.end - s.start;
    const double len = norm(axis);
    const Vec3 u = (1.0 / len) * axis;
    const Vec3 rel = p - s.start;
    const double along = dot(rel, u);
    if (along < 0.0 || along > len) continue;
    const Vec3 wdir = fielddetail::width_direction(s);
    const double across = std::abs(dot(rel, wdir));
    const Vec3 perp = rel - along * u - dot(rel, wdir) * wdir;
    const double off_plane = norm(perp);
    if (across <= s.width / 2.0 && off_plane <= std::max(s.thickness / 2.0, 1e-15)) return true;
  }
  return false;
}

/// Biot-Savart field at one point. Each segment is a uniform current sheet
/// modelled as filaments spread across its width; the filament count adapts
/// to the evaluation distance so near-surface points stay accurate.
inline Vec3 bfield_at(const WireGeometry& geom, double current, const Vec3& p,
                      const FieldOptions& opt = {}) {
  Vec3 total{0.0, 0.0, 0.0};
  for (const auto& s : geom.segments) {
    const double d = std::max(fielddetail::axis_distance(s, p), 1e-12);
    int n = static_cast<int>(std::ceil(opt.filaments_per_distance * s.width / d));
    n = std::clamp(n, opt.filaments_min, opt.filaments_max);
    const Vec3 wdir = fielddetail::width_direction(s);
    const double i_fil = current / n;
    for (int k = 0; k < n; ++k) {
      // filament centroids of n equal strips across the width
      const double off = s.width * ((k + 0.5) / n - 0.5);
      const Vec3 shift = off * wdir;
      total = total + fielddetail::filament_field(s.start + shift, s.end + shift, p, i_fil);
    }
  }
  return total;
}

/// Field and coupling samples over a set of points.
struct CouplingMap {
  std::vector<Vec3> grid;         ///< sample points [m]
  std::vector<double> b_perp;     ///< field transverse to the static field [T]
  std::vector<double> g1;         ///< coupling [Hz]
  std::vector<bool> masked;       ///< true when the point is inside a conductor
  double current_used = 0.0;      ///< [A]
};

/// Field map at fixed current; b_perp is the magnitude of the component
/// transverse to `static_dir`.
inline CouplingMap bfield_map(const WireGeometry& geom, double current,
                              const std::vector<Vec3>& grid, const Vec3& static_dir = {1, 0, 0},
                              const FieldOptions& opt = {}) {
  geom.validate();
  const double nd = norm(static_dir);
  if (!(nd > 0.0)) throw ValidationError("bfield_map: static_dir must be nonzero");
  const Vec3 u = (1.0 / nd) * static_dir;

  CouplingMap map;
  map.grid = grid;
  map.current_used = current;
  map.b_perp.assign(grid.size(), 0.0);
  map.g1.assign(grid.size(), 0.0);
  map.masked.assign(grid.size(), false);
  std::vector<char> mask(grid.size(), 0);
  parallel_for(grid.size(), [&](std::size_t i) {
    if (inside_conductor(geom, grid[i])) {
      mask[i] = 1;
      map.b_perp[i] = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    const Vec3 b = bfield_at(geom, current, grid[i], opt);
    const Vec3 b_par = dot(b, u) * u;
    map.b_perp[i] = norm(b - b_par);
  });
  for (std::size_t i = 0; i < grid.size(); ++i) map.masked[i] = mask[i] != 0;
  return map;
}

/// Coupling map at the zero-point rms current of the resonator:
/// g1(r) = g mu_B b_perp(r) / h.
inline CouplingMap coupling_map(const WireGeometry& geom, const ResonatorSpec& res,
                                double g_factor, const std::vector<Vec3>& grid,
                                const Vec3& static_dir = {1, 0, 0}, const FieldOptions& opt = {}) {
  const double i_rms = zero_point_current_rms(res);
  CouplingMap map = bfield_map(geom, i_rms, grid, static_dir, opt);
  for (std::size_t i = 0; i < map.grid.size(); ++i)
    map.g1[i] = map.masked[i] ? std::numeric_limits<double>::quiet_NaN()
                              : g_factor * constants::mu_B * map.b_perp[i] / constants::h;
  return map;
}

/// Histogram result: the tabulated coupling distribution plus the fitted
/// log-log tail slope (between g_min*10 and g_max/10).
struct CouplingHistogram {
  CouplingDistribution distribution;  ///< shape = tabulated
  double tail_slope = 0.0;            ///< d log(count density) / d log(G)
  std::size_t n_samples = 0;
};

/// Log-spaced histogram of the couplings of the map points selected by
/// `in_region`. Weights are normalized sample fractions per bin; the tail
/// slope is a least-squares line through the nonzero density bins in
/// [g_min*10, g_max/10].
template <typename RegionPred>
CouplingHistogram coupling_histogram(const CouplingMap& map, RegionPred&& in_region, int n_bins) {
  if (n_bins < 1) throw ValidationError("coupling_histogram: n_bins must be >= 1");
  std::vector<double> vals;
  for (std::size_t i = 0; i < map.grid.size(); ++i)
    if (!map.masked[i] && in_region(map.grid[i]) && map.g1[i] > 0.0) vals.push_back(map.g1[i]);
  if (vals.empty()) throw ValidationError("coupling_histogram: region selects no samples");

  double lo = vals[0], hi = vals[0];
  for (double v : vals) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CouplingHistogram out;
  out.n_samples = vals.size();
  if (lo == hi || n_bins == 1) {
    out.distribution.shape = CouplingShape::tabulated;
    out.distribution.g_min = lo;
    out.distribution.g_max = hi;
    out.distribution.table = {{lo, 1.0}};
    return out;
  }

  const double lratio = std::log(hi / lo);
  std::vector<double> count(n_bins, 0.0);
  for (double v : vals) {
    int b = static_cast<int>(std::floor(std::log(v / lo) / lratio * n_bins));
    b = std::clamp(b, 0, n_bins - 1);
    count[b] += 1.0;
  }
  out.distribution.shape = CouplingShape::tabulated;
  out.distribution.g_min = lo;
  out.distribution.g_max = hi;
  for (int b = 0; b < n_bins; ++b) {
    const double gc = lo * std::exp(lratio * (b + 0.5) / n_bins);
    out.distribution.table.push_back({gc, count[b] / static_cast<double>(vals.size())});
  }

  // tail slope of the density D(G) = count / (bin width) on log-log axes
  std::vector<double> lx, ly;
  for (int b = 0; b < n_bins; ++b) {
    const double g0 = lo * std::exp(lratio * b / n_bins);
    const double g1e = lo * std::exp(lratio * (b + 1.0) / n_bins);
    const double gc = std::sqrt(g0 * g1e);
    if (gc < lo * 10.0 || gc > hi / 10.0 || count[b] <= 0.0) continue;
    lx.push_back(std::log(gc));
    ly.push_back(std::log(count[b] / (g1e - g0)));
  }
  if (lx.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(lx.size());
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    out.tail_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    out.distribution.exponent = -out.tail_slope;
  }
  return out;
}

}  // namespace lerspin
