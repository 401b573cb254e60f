#pragma once

// Core types and formulas for lumped-element-resonator / spin-ensemble
// modelling: physical constants, unit conventions, resonator and ensemble
// descriptors, Larmor frequency, thermal polarization and the collective
// coupling enhancement.
//
// Unit convention used across the whole library: every public interface
// speaks linear frequency (Hz), magnetic field (T), time (s). Angular
// frequencies appear only inside equation kernels, via to_angular().

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace lerspin {

namespace constants {
/// Planck constant [J s].
inline constexpr double h = 6.62607015e-34;
/// Reduced Planck constant [J s].
inline constexpr double hbar = h / (2.0 * std::numbers::pi);
/// Bohr magneton [J/T].
inline constexpr double mu_B = 9.2740100783e-24;
/// Boltzmann constant [J/K].
inline constexpr double k_B = 1.380649e-23;
/// Vacuum permeability [T m/A].
inline constexpr double mu_0 = 1.25663706212e-6;
}  // namespace constants

/// Linear frequency (Hz) -> angular frequency (rad/s).
inline constexpr double to_angular(double f_hz) { return 2.0 * std::numbers::pi * f_hz; }
/// Angular frequency (rad/s) -> linear frequency (Hz).
inline constexpr double from_angular(double w) { return w / (2.0 * std::numbers::pi); }

/// Gaussian half width at half maximum from the standard deviation.
inline double gaussian_hwhm_from_sigma(double sigma) { return std::sqrt(2.0 * std::numbers::ln2_v<double>) * sigma; }
/// Gaussian standard deviation from the half width at half maximum.
inline double gaussian_sigma_from_hwhm(double hwhm) { return hwhm / std::sqrt(2.0 * std::numbers::ln2_v<double>); }

struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// One LER mode: bare frequency, loss rates and total inductance.
struct ResonatorSpec {
  double f_r0 = 0.0;        ///< bare resonance frequency [Hz]
  double kappa_i = 0.0;     ///< internal loss rate [Hz]
  double kappa_c = 0.0;     ///< coupling loss rate to the readout line [Hz]
  double inductance = 0.0;  ///< total inductance [H]

  double kappa_total() const { return kappa_i + kappa_c; }
  /// Internal quality factor f_r0 / kappa_i. Requires kappa_i > 0.
  double q_internal() const {
    if (kappa_i <= 0.0) throw ValidationError("ResonatorSpec: Q_i undefined for kappa_i <= 0");
    return f_r0 / kappa_i;
  }
  void validate() const {
    if (!(f_r0 > 0.0)) throw ValidationError("ResonatorSpec.f_r0 must be > 0");
    if (kappa_i < 0.0) throw ValidationError("ResonatorSpec.kappa_i must be >= 0");
    if (kappa_c < 0.0) throw ValidationError("ResonatorSpec.kappa_c must be >= 0");
    if (!(inductance > 0.0)) throw ValidationError("ResonatorSpec.inductance must be > 0");
  }
};

enum class LineShape { gaussian, lorentzian, delta };

/// Distribution of spin transition frequencies across the ensemble.
///
/// `sigma` is the scale parameter: the standard deviation for gaussian
/// shape and the HWHM for lorentzian shape (a Cauchy line has no standard
/// deviation). hwhm() exposes the half width for either shape.
struct FrequencyDistribution {
  LineShape shape = LineShape::gaussian;
  double sigma = 0.0;          ///< scale parameter [Hz]
  double center_offset = 0.0;  ///< shift of the mean from the nominal Larmor frequency [Hz]

  double hwhm() const { return shape == LineShape::gaussian ? gaussian_hwhm_from_sigma(sigma) : sigma; }
  static FrequencyDistribution gaussian_from_hwhm(double hwhm, double center_offset = 0.0) {
    return {LineShape::gaussian, gaussian_sigma_from_hwhm(hwhm), center_offset};
  }
  void validate() const {
    if (sigma < 0.0) throw ValidationError("FrequencyDistribution.sigma must be >= 0");
    if (sigma == 0.0 && shape != LineShape::delta)
      throw ValidationError("FrequencyDistribution.sigma = 0 only permitted for delta shape");
  }
};

enum class CouplingShape { powerlaw, delta, tabulated };

/// Distribution of single-spin couplings G_1 across the ensemble.
/// powerlaw: density ~ G^(-exponent) on [g_min, g_max]. delta: all spins at
/// g_max. tabulated: explicit (coupling, weight) pairs.
struct CouplingDistribution {
  CouplingShape shape = CouplingShape::delta;
  double exponent = 3.0;  ///< power-law exponent (> 1)
  double g_min = 0.0;     ///< minimum single-spin coupling [Hz]
  double g_max = 0.0;     ///< maximum single-spin coupling [Hz]
  std::vector<std::pair<double, double>> table;  ///< (coupling [Hz], weight) pairs

  void validate() const {
    if (shape == CouplingShape::tabulated) {
      if (table.empty()) throw ValidationError("CouplingDistribution.table must not be empty");
      double sum = 0.0;
      for (const auto& [g, w] : table) {
        if (!(g > 0.0)) throw ValidationError("CouplingDistribution.table couplings must be > 0");
        if (w < 0.0) throw ValidationError("CouplingDistribution.table weights must be >= 0");
        sum += w;
      }
      if (!(sum > 0.0)) throw ValidationError("CouplingDistribution.table weights must not all vanish");
      return;
    }
    if (!(g_min > 0.0) || !(g_max >= g_min))
      throw ValidationError("CouplingDistribution requires 0 < g_min <= g_max");
    if (shape == CouplingShape::powerlaw && !(exponent > 1.0))
      throw ValidationError("CouplingDistribution.exponent must be > 1");
  }
};

/// Spin species and ensemble description. S = 1/2 is assumed throughout.
struct SpinEnsembleSpec {
  double g_factor = 2.00;
  double n_spins = 0.0;
  FrequencyDistribution freq_dist;
  CouplingDistribution coupling_dist;
  double t1 = 0.0;  ///< intrinsic spin-lattice relaxation time [s]
  double t2 = 0.0;  ///< spin coherence time [s]

  void validate() const {
    if (!(g_factor > 0.0)) throw ValidationError("SpinEnsembleSpec.g_factor must be > 0");
    if (!(n_spins > 0.0)) throw ValidationError("SpinEnsembleSpec.n_spins must be > 0");
    if (!(t1 > 0.0)) throw ValidationError("SpinEnsembleSpec.t1 must be > 0");
    if (!(t2 > 0.0)) throw ValidationError("SpinEnsembleSpec.t2 must be > 0");
    if (t2 > 2.0 * t1) throw ValidationError("SpinEnsembleSpec requires t2 <= 2*t1");
    freq_dist.validate();
    coupling_dist.validate();
  }
};

struct EnvironmentConditions {
  double temperature = 0.0;  ///< [K]
  double b_field = 0.0;      ///< static magnetic field [T]

  void validate() const {
    if (!(temperature > 0.0)) throw ValidationError("EnvironmentConditions.temperature must be > 0");
    if (b_field < 0.0) throw ValidationError("EnvironmentConditions.b_field must be >= 0");
  }
};

/// Spin transition frequency g mu_B B / h [Hz]. Exactly linear in B.
inline double larmor_frequency(const SpinEnsembleSpec& spec, const EnvironmentConditions& env) {
  if (env.b_field < 0.0) throw ValidationError("larmor_frequency: b_field must be >= 0");
  return spec.g_factor * constants::mu_B * env.b_field / constants::h;
}

/// Equilibrium polarization -tanh(h f_L / 2 k_B T), in [-1, 0].
inline double thermal_polarization(const SpinEnsembleSpec& spec, const EnvironmentConditions& env) {
  if (!(env.temperature > 0.0)) throw ValidationError("thermal_polarization: temperature must be > 0");
  const double f_l = larmor_frequency(spec, env);
  return -std::tanh(constants::h * f_l / (2.0 * constants::k_B * env.temperature));
}

/// Ground/excited population difference N_eff = N tanh(h f_L / 2 k_B T).
inline double effective_spin_count(const SpinEnsembleSpec& spec, const EnvironmentConditions& env) {
  return spec.n_spins * std::abs(thermal_polarization(spec, env));
}

/// Collective enhancement G_N = G_1 sqrt(N_eff) [Hz].
inline double collective_coupling(double g1_avg, const SpinEnsembleSpec& spec,
                                  const EnvironmentConditions& env) {
  if (g1_avg < 0.0) throw ValidationError("collective_coupling: g1_avg must be >= 0");
  return g1_avg * std::sqrt(effective_spin_count(spec, env));
}

}  // namespace lerspin
