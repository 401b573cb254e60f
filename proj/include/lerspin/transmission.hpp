#pragma once

// Input-output transmission of a readout line side-coupled to a LER that is
// magnetically coupled to an inhomogeneous spin ensemble. The notch model
//
//   S21(w) = 1 - (kc/2) / [ i(wr0 - w) + (ki + kc)/2 + sum_k wk GN_k^2 /
//                           ( i(Wk - w) + Gs/2 ) ]
//
// (all angular inside) carries the ensemble as a sum of complex
// susceptibilities over discretized frequency boxes. A Lorentzian line can
// instead be folded into a single analytic susceptibility term.

#include <algorithm>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "lerspin/core.hpp"
#include "lerspin/discretize.hpp"
#include "lerspin/parallel.hpp"
#include "lerspin/trace.hpp"

namespace lerspin {

enum class SpinLineTreatment {
  discretized,          ///< frequency boxes, each with homogeneous width 1/T2 (default)
  lorentzian_analytic,  ///< single susceptibility with Gs/2 = 2 pi gamma_HWHM + 1/T2
};

struct TransmissionOptions {
  int n_boxes = 101;
  double span_sigmas = 5.0;
  SpinLineTreatment line = SpinLineTreatment::discretized;
};

/// One susceptibility term of the coupled response.
struct SpinTerm {
  double g_n = 0.0;          ///< collective coupling carried by this term [Hz]
  double f_spin = 0.0;       ///< term transition frequency [Hz]
  double gs_half_ang = 0.0;  ///< half damping rate of the term [rad/s]
};

/// Notch response with an explicit list of spin susceptibility terms.
inline std::complex<double> s21_terms(double f_probe, const ResonatorSpec& res,
                                      std::span<const SpinTerm> terms) {
  if (!(f_probe > 0.0)) throw ValidationError("s21: f_probe must be > 0");
  const double w = to_angular(f_probe);
  std::complex<double> denom(to_angular(res.kappa_total()) / 2.0, to_angular(res.f_r0) - w);
  for (const auto& t : terms) {
    const double gn_ang = to_angular(t.g_n);
    denom += gn_ang * gn_ang / std::complex<double>(t.gs_half_ang, to_angular(t.f_spin) - w);
  }
  return 1.0 - to_angular(res.kappa_c) / 2.0 / denom;
}

/// Builds the susceptibility terms of an ensemble at the given conditions:
/// line center from the Larmor frequency, collective weight from the thermal
/// population difference and the coupling distribution's second moment.
inline std::vector<SpinTerm> ensemble_spin_terms(const SpinEnsembleSpec& ens,
                                                 const EnvironmentConditions& env,
                                                 const TransmissionOptions& opt = {}) {
  const double f_center = larmor_frequency(ens, env) + ens.freq_dist.center_offset;
  const double n_eff = effective_spin_count(ens, env);
  const double gn2 = n_eff * coupling_mean_square(ens.coupling_dist);  // [Hz^2]
  if (gn2 <= 0.0) return {};
  std::vector<SpinTerm> terms;
  if (opt.line == SpinLineTreatment::lorentzian_analytic) {
    terms.push_back({std::sqrt(gn2), f_center,
                     to_angular(ens.freq_dist.hwhm()) + 1.0 / ens.t2});
  } else {
    const auto boxes = frequency_boxes(ens.freq_dist, larmor_frequency(ens, env), opt.n_boxes,
                                       opt.span_sigmas);
    terms.reserve(boxes.size());
    for (const auto& b : boxes)
      terms.push_back({std::sqrt(gn2 * b.weight), b.f_spin, 1.0 / ens.t2});
  }
  return terms;
}

/// Complex transmission at a single probe frequency. With `ens == nullptr`
/// the bare notch response is returned.
inline std::complex<double> s21_at(double f_probe, const ResonatorSpec& res,
                                   const SpinEnsembleSpec* ens, const EnvironmentConditions& env,
                                   const TransmissionOptions& opt = {}) {
  std::vector<SpinTerm> terms;
  if (ens) terms = ensemble_spin_terms(*ens, env, opt);
  return s21_terms(f_probe, res, terms);
}

/// Bare-resonator transmission (no spins).
inline std::complex<double> s21_bare(double f_probe, const ResonatorSpec& res) {
  return s21_terms(f_probe, res, {});
}

/// Field/frequency transmission map; the spin line center follows the Larmor
/// frequency of each field row and the collective coupling follows the
/// thermal polarization at that field.
struct TransmissionMap {
  std::vector<double> b_axis;             ///< [T]
  std::vector<double> f_axis;             ///< [Hz]
  std::vector<std::complex<double>> s21;  ///< row-major, [i_b * nf + i_f]
  std::string metadata;

  std::complex<double> at(std::size_t ib, std::size_t jf) const {
    return s21[ib * f_axis.size() + jf];
  }
};

inline TransmissionMap transmission_map(const std::vector<double>& b_grid,
                                        const std::vector<double>& f_grid, const ResonatorSpec& res,
                                        const SpinEnsembleSpec& ens,
                                        const EnvironmentConditions& env,
                                        const TransmissionOptions& opt = {}) {
  res.validate();
  ens.validate();
  env.validate();
  auto check_grid = [](const std::vector<double>& g, const char* name) {
    if (g.empty()) throw ValidationError(std::string("transmission_map: ") + name + " is empty");
    for (std::size_t i = 1; i < g.size(); ++i)
      if (!(g[i] > g[i - 1]))
        throw ValidationError(std::string("transmission_map: ") + name +
                              " must be strictly increasing");
  };
  check_grid(b_grid, "b_grid");
  check_grid(f_grid, "f_grid");

  TransmissionMap map;
  map.b_axis = b_grid;
  map.f_axis = f_grid;
  map.s21.resize(b_grid.size() * f_grid.size());
  const std::size_t nf = f_grid.size();
  parallel_for(b_grid.size(), [&](std::size_t ib) {
    EnvironmentConditions row_env = env;
    row_env.b_field = b_grid[ib];
    const auto terms = ensemble_spin_terms(ens, row_env, opt);
    for (std::size_t jf = 0; jf < nf; ++jf)
      map.s21[ib * nf + jf] = s21_terms(f_grid[jf], res, terms);
  });
  return map;
}

/// Eigenfrequencies of the 2x2 coupled-mode matrix [[wr, GN], [GN, wr + D]]
/// (angular), returned in Hz with f_plus >= f_minus.
inline std::pair<double, double> polariton_frequencies(const ResonatorSpec& res, double g_n,
                                                       double delta) {
  if (g_n < 0.0) throw ValidationError("polariton_frequencies: g_n must be >= 0");
  const double wr = to_angular(res.f_r0);
  const double d = to_angular(delta);
  const double g = to_angular(g_n);
  const double mid = wr + d / 2.0;
  const double split = std::sqrt(d * d / 4.0 + g * g);
  return {from_angular(mid - split), from_angular(mid + split)};
}

namespace detail {
/// Minimum of |S21| over frequency for the on-resonance coupled system:
/// dense scan plus golden-section refine around the best sample.
inline double min_abs_s21_on_resonance(const ResonatorSpec& res, double g_n, double gamma_hwhm) {
  const SpinTerm term{g_n, res.f_r0, to_angular(gamma_hwhm)};
  auto mag = [&](double f) { return std::abs(s21_terms(f, res, {&term, 1})); };

  const double half_span = 2.0 * g_n + 5.0 * gamma_hwhm + 20.0 * res.kappa_total();
  const int n = 4001;
  double best_f = res.f_r0, best = mag(res.f_r0);
  for (int i = 0; i < n; ++i) {
    const double f = res.f_r0 - half_span + 2.0 * half_span * i / (n - 1);
    if (f <= 0.0) continue;
    const double m = mag(f);
    if (m < best) {
      best = m;
      best_f = f;
    }
  }
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  const double step = 2.0 * half_span / (n - 1);
  double a = best_f - step, b = best_f + step;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  for (int it = 0; it < 200 && (b - a) > 1e-3; ++it) {
    if (mag(c) < mag(d)) b = d; else a = c;
    c = b - gr * (b - a);
    d = a + gr * (b - a);
  }
  return std::min(best, mag((a + b) / 2.0));
}
}  // namespace detail

/// On-resonance polariton dip depth 1 - min|S21| against the readout
/// coupling rate; gamma is the Lorentzian HWHM of the spin line.
inline TraceSet dip_visibility_curve(const ResonatorSpec& res_base,
                                     const std::vector<double>& kappa_c_values, double g_n,
                                     double gamma) {
  TraceSet out;
  out.axis_name = "kappa_c_Hz";
  out.axis_values = kappa_c_values;
  auto& depth = out.add_column("dip_depth");
  for (std::size_t i = 0; i < kappa_c_values.size(); ++i) {
    if (!(kappa_c_values[i] > 0.0))
      throw ValidationError("dip_visibility_curve: kappa_c values must be > 0");
    ResonatorSpec res = res_base;
    res.kappa_c = kappa_c_values[i];
    depth.re[i] = 1.0 - detail::min_abs_s21_on_resonance(res, g_n, gamma);
  }
  return out;
}

}  // namespace lerspin
