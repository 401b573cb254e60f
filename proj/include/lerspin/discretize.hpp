#pragma once

// Discretization of the frequency and coupling distributions into weighted
// boxes/bins. This is the state-space reduction shared by the transmission,
// dispersive-shift, relaxation and dynamics modules: frequency boxes tile
// mean +- 5 sigma with area weights, coupling bins tile [g_min, g_max]
// logarithmically with power-law mass weights.

#include <cmath>
#include <numbers>
#include <vector>

#include "lerspin/core.hpp"

namespace lerspin {

struct FrequencyBox {
  double f_spin = 0.0;  ///< box transition frequency [Hz]
  double weight = 0.0;  ///< probability mass, boxes sum to 1
};

struct CouplingBin {
  double g1 = 0.0;      ///< representative single-spin coupling [Hz]
  double weight = 0.0;  ///< probability mass, bins sum to 1
};

inline double gaussian_cdf(double x, double mean, double sigma) {
  return 0.5 * (1.0 + std::erf((x - mean) / (sigma * std::numbers::sqrt2_v<double>)));
}

inline double lorentzian_cdf(double x, double mean, double hwhm) {
  return 0.5 + std::atan((x - mean) / hwhm) / std::numbers::pi;
}

/// Tile the frequency distribution, centered at `f_center` plus the
/// distribution's own center_offset, into n equal-width boxes spanning
/// mean +- span_sigmas * sigma. Box weights are the distribution mass in
/// each box, renormalized to sum to 1; the delta shape yields one box.
inline std::vector<FrequencyBox> frequency_boxes(const FrequencyDistribution& dist, double f_center,
                                                 int n_boxes, double span_sigmas = 5.0) {
  dist.validate();
  if (n_boxes < 1) throw ValidationError("frequency_boxes: n_boxes must be >= 1");
  const double mean = f_center + dist.center_offset;
  if (dist.shape == LineShape::delta || dist.sigma == 0.0 || n_boxes == 1)
    return {FrequencyBox{mean, 1.0}};

  const double span = span_sigmas * dist.sigma;
  std::vector<double> edges(n_boxes + 1);
  for (int i = 0; i <= n_boxes; ++i)
    edges[i] = mean - span + 2.0 * span * static_cast<double>(i) / n_boxes;

  auto cdf = [&](double x) {
    return dist.shape == LineShape::gaussian ? gaussian_cdf(x, mean, dist.sigma)
                                             : lorentzian_cdf(x, mean, dist.sigma);
  };
  std::vector<FrequencyBox> boxes(n_boxes);
  double total = 0.0;
  for (int i = 0; i < n_boxes; ++i) {
    boxes[i].f_spin = 0.5 * (edges[i] + edges[i + 1]);
    boxes[i].weight = cdf(edges[i + 1]) - cdf(edges[i]);
    total += boxes[i].weight;
  }
  for (auto& b : boxes) b.weight /= total;
  return boxes;
}

/// Mean square coupling E[G^2] of the distribution [Hz^2]; closed form for
/// power law and delta, weighted sum for tabulated.
inline double coupling_mean_square(const CouplingDistribution& dist) {
  dist.validate();
  switch (dist.shape) {
    case CouplingShape::delta:
      return dist.g_max * dist.g_max;
    case CouplingShape::tabulated: {
      double num = 0.0, den = 0.0;
      for (const auto& [g, w] : dist.table) {
        num += w * g * g;
        den += w;
      }
      return num / den;
    }
    case CouplingShape::powerlaw: {
      if (dist.g_min == dist.g_max) return dist.g_max * dist.g_max;
      const double a = dist.exponent;
      const double mass =
          (std::pow(dist.g_min, 1.0 - a) - std::pow(dist.g_max, 1.0 - a)) / (a - 1.0);
      const double second = std::abs(a - 3.0) < 1e-12
                                ? std::log(dist.g_max / dist.g_min)
                                : (std::pow(dist.g_max, 3.0 - a) - std::pow(dist.g_min, 3.0 - a)) /
                                      (3.0 - a);
      return second / mass;
    }
  }
  throw ValidationError("coupling_mean_square: unknown shape");
}

/// Tile the coupling distribution into n logarithmic bins over
/// [g_min, g_max]. Bin weights are the power-law mass in each bin; the bin
/// value is the in-bin rms coupling, so the binned second moment of G is
/// exact (couplings enter the physics as G^2).
inline std::vector<CouplingBin> coupling_bins(const CouplingDistribution& dist, int n_bins) {
  dist.validate();
  if (n_bins < 1) throw ValidationError("coupling_bins: n_bins must be >= 1");

  if (dist.shape == CouplingShape::tabulated) {
    std::vector<CouplingBin> bins;
    double sum = 0.0;
    for (const auto& [g, w] : dist.table) sum += w;
    for (const auto& [g, w] : dist.table)
      if (w > 0.0) bins.push_back({g, w / sum});
    return bins;
  }
  if (dist.shape == CouplingShape::delta || dist.g_min == dist.g_max || n_bins == 1) {
    const double g = dist.shape == CouplingShape::delta ? dist.g_max
                                                        : std::sqrt(dist.g_min * dist.g_max);
    return {CouplingBin{g, 1.0}};
  }

  const double a = dist.exponent;
  std::vector<double> edges(n_bins + 1);
  const double ratio = dist.g_max / dist.g_min;
  for (int i = 0; i <= n_bins; ++i)
    edges[i] = dist.g_min * std::pow(ratio, static_cast<double>(i) / n_bins);

  // integral of G^(-a) over [lo, hi], and of G^(2-a) for the second moment
  auto mass = [a](double lo, double hi) {
    return (std::pow(lo, 1.0 - a) - std::pow(hi, 1.0 - a)) / (a - 1.0);
  };
  auto second = [a](double lo, double hi) {
    if (std::abs(a - 3.0) < 1e-12) return std::log(hi / lo);
    return (std::pow(hi, 3.0 - a) - std::pow(lo, 3.0 - a)) / (3.0 - a);
  };

  std::vector<CouplingBin> bins(n_bins);
  double total = 0.0;
  for (int i = 0; i < n_bins; ++i) {
    const double m = mass(edges[i], edges[i + 1]);
    bins[i].g1 = std::sqrt(second(edges[i], edges[i + 1]) / m);
    bins[i].weight = m;
    total += m;
  }
  for (auto& b : bins) b.weight /= total;
  return bins;
}

}  // namespace lerspin
