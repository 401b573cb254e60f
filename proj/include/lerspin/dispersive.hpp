#pragma once

// Dispersive shift of the LER resonance by a polarized spin ensemble:
// per-spin pull chi = G^2 D / (D^2 + (1/T2)^2), its sum over discretized
// boxes, the thermal polarization curve, and pump spectroscopy line scans.

#include <cmath>
#include <vector>

#include "lerspin/core.hpp"
#include "lerspin/discretize.hpp"
#include "lerspin/trace.hpp"

namespace lerspin {

/// One discretized slice of the ensemble for dispersive sums.
struct SpinBox {
  double f_spin = 0.0;  ///< transition frequency [Hz]
  double weight = 0.0;  ///< fraction of the ensemble
  double g1 = 0.0;      ///< single-spin coupling [Hz]
  double sz = 0.0;      ///< polarization in [-1, 1]
};

/// Maximum per-spin dispersive pull chi(G, Delta, T2) in linear Hz. Odd in
/// Delta; tends to G^2/Delta for |Delta| T2 >> 1.
inline double chi_single(double g1, double delta, double t2) {
  if (!(t2 > 0.0)) throw ValidationError("chi_single: t2 must be > 0");
  const double g = to_angular(g1);
  const double d = to_angular(delta);
  const double r = 1.0 / t2;
  return from_angular(g * g * d / (d * d + r * r));
}

/// Resonance shift sum_j N w_j chi(g1_j, f_spin_j - f_r0, T2) sz_j [Hz].
inline double ensemble_shift(const std::vector<SpinBox>& boxes, const ResonatorSpec& res,
                             const SpinEnsembleSpec& ens) {
  double shift = 0.0;
  for (const auto& b : boxes)
    shift += ens.n_spins * b.weight * chi_single(b.g1, b.f_spin - res.f_r0, ens.t2) * b.sz;
  return shift;
}

/// Discretize the ensemble into dispersive boxes with a uniform polarization
/// and the rms coupling of the coupling distribution per box.
inline std::vector<SpinBox> dispersive_boxes(const SpinEnsembleSpec& ens, double f_center,
                                             double sz, int n_boxes = 101) {
  const auto fb = frequency_boxes(ens.freq_dist, f_center, n_boxes);
  const double g_rms = std::sqrt(coupling_mean_square(ens.coupling_dist));
  std::vector<SpinBox> boxes;
  boxes.reserve(fb.size());
  for (const auto& b : fb) boxes.push_back({b.f_spin, b.weight, g_rms, sz});
  return boxes;
}

/// Resonance frequency against temperature at fixed field, with every box
/// uniformly at the thermal polarization. Columns: f_r_Hz, shift_Hz.
inline TraceSet thermal_shift_curve(const ResonatorSpec& res, const SpinEnsembleSpec& ens,
                                    double b_field, const std::vector<double>& t_grid,
                                    int n_boxes = 101) {
  res.validate();
  ens.validate();
  TraceSet out;
  out.axis_name = "temperature_K";
  out.axis_values = t_grid;
  auto& fr = out.add_column("f_r_Hz");
  auto& shift = out.add_column("shift_Hz");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0)) throw ValidationError("thermal_shift_curve: temperatures must be > 0");
    EnvironmentConditions env{t_grid[i], b_field};
    const double sz = thermal_polarization(ens, env);
    const double f_center = larmor_frequency(ens, env) + ens.freq_dist.center_offset;
    const auto boxes = dispersive_boxes(ens, f_center, sz, n_boxes);
    shift.re[i] = ensemble_shift(boxes, res, ens);
    fr.re[i] = res.f_r0 + shift.re[i];
  }
  return out;
}

/// Pump-frequency spectroscopy: each pump saturates (sz -> 0) the slice of
/// the frequency distribution within +-bandwidth/2 of f_pump; the returned
/// shift is the saturated slice mass scaled by chi at the ensemble-average
/// detuning, so the trace maps the frequency distribution to a constant
/// factor. Column: shift_Hz.
inline TraceSet spectroscopy_scan(const ResonatorSpec& res, const SpinEnsembleSpec& ens,
                                  const EnvironmentConditions& env,
                                  const std::vector<double>& f_pump_grid,
                                  double pulse_bandwidth = 20e3) {
  res.validate();
  ens.validate();
  env.validate();
  if (!(pulse_bandwidth > 0.0))
    throw ValidationError("spectroscopy_scan: pulse_bandwidth must be > 0");

  const double f_center = larmor_frequency(ens, env) + ens.freq_dist.center_offset;
  const double delta_avg = f_center - res.f_r0;
  const double sz0 = thermal_polarization(ens, env);
  const double g_rms = std::sqrt(coupling_mean_square(ens.coupling_dist));
  const double chi_avg = chi_single(g_rms, delta_avg, ens.t2);

  auto slice_mass = [&](double f_lo, double f_hi) {
    switch (ens.freq_dist.shape) {
      case LineShape::delta:
        return (f_lo <= f_center && f_center <= f_hi) ? 1.0 : 0.0;
      case LineShape::gaussian:
        return gaussian_cdf(f_hi, f_center, ens.freq_dist.sigma) -
               gaussian_cdf(f_lo, f_center, ens.freq_dist.sigma);
      case LineShape::lorentzian:
        return lorentzian_cdf(f_hi, f_center, ens.freq_dist.sigma) -
               lorentzian_cdf(f_lo, f_center, ens.freq_dist.sigma);
    }
    return 0.0;
  };

  TraceSet out;
  out.axis_name = "f_pump_Hz";
  out.axis_values = f_pump_grid;
  auto& shift = out.add_column("shift_Hz");
  for (std::size_t i = 0; i < f_pump_grid.size(); ++i) {
    const double mass = slice_mass(f_pump_grid[i] - pulse_bandwidth / 2.0,
                                   f_pump_grid[i] + pulse_bandwidth / 2.0);
    // saturation takes sz0 -> 0, so the readout sees -sz0 times the slice
    shift.re[i] = -ens.n_spins * mass * chi_avg * sz0;
  }
  return out;
}

}  // namespace lerspin
