#pragma once

// Purcell-enhanced spin relaxation: the photon-dressed single-spin rate
//
//   1/T1_eff = 1/T1 + 4 G^2 k wr Ws / [ (wr^2 - Ws^2)^2 + (k Ws)^2 ]
//
// (all angular), ensemble-averaged decay traces over the coupling and
// frequency distributions, the stretched exponential, and inference of the
// maximum single-spin coupling from decay data.

#include <cmath>
#include <string>
#include <vector>

#include "lerspin/core.hpp"
#include "lerspin/discretize.hpp"
#include "lerspin/dispersive.hpp"
#include "lerspin/fit.hpp"

namespace lerspin {

/// Photon-dressed relaxation rate [1/s]. kappa is the total cavity loss
/// kappa_i + kappa_c in linear Hz.
inline double purcell_rate(double g1, double f_r0, double f_spin, double kappa,
                           double t1_intrinsic) {
  if (!(f_r0 > 0.0) || !(f_spin > 0.0)) throw ValidationError("purcell_rate: frequencies must be > 0");
  if (!(kappa > 0.0)) throw ValidationError("purcell_rate: kappa must be > 0");
  if (!(t1_intrinsic > 0.0)) throw ValidationError("purcell_rate: t1_intrinsic must be > 0");
  const double g = to_angular(g1);
  const double wr = to_angular(f_r0);
  const double ws = to_angular(f_spin);
  const double k = to_angular(kappa);
  const double det = wr * wr - ws * ws;
  return 1.0 / t1_intrinsic + 4.0 * g * g * k * wr * ws / (det * det + k * ws * k * ws);
}

/// amplitude * exp(-(t/t1_eff)^stretch).
inline double stretched_exponential(double t, double amplitude, double t1_eff, double stretch) {
  if (t < 0.0) throw ValidationError("stretched_exponential: t must be >= 0");
  if (!(t1_eff > 0.0)) throw ValidationError("stretched_exponential: t1_eff must be > 0");
  if (!(stretch > 0.0) || stretch > 1.0)
    throw ValidationError("stretched_exponential: stretch must be in (0, 1]");
  return amplitude * std::exp(-std::pow(t / t1_eff, stretch));
}

/// Normalized decay of the dispersive shift after uniform saturation.
struct DecayTrace {
  std::vector<double> t_axis;  ///< delay times [s]
  std::vector<double> shift;   ///< delta f_r normalized to its t -> 0 value
  double detuning_avg = 0.0;   ///< [Hz]
  std::string metadata;
};

struct DecayOptions {
  int n_freq_boxes = 51;
  int n_coupling_bins = 40;
  double span_sigmas = 5.0;
};

/// Shift decay averaged over (frequency box x coupling bin) cells:
/// each cell contributes weight * chi(G, Delta) * exp(-t * rate(G, Delta)),
/// normalized by the t -> 0 sum. Non-exponential whenever the coupling
/// distribution is non-degenerate.
inline DecayTrace ensemble_decay_trace(const ResonatorSpec& res, const SpinEnsembleSpec& ens,
                                       const EnvironmentConditions& env, double delta_avg,
                                       const std::vector<double>& t_grid,
                                       const DecayOptions& opt = {}) {
  res.validate();
  ens.validate();
  env.validate();
  if (t_grid.empty()) throw ValidationError("ensemble_decay_trace: t_grid is empty");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw ValidationError("ensemble_decay_trace: t_grid must be increasing");
  if (t_grid.front() < 0.0) throw ValidationError("ensemble_decay_trace: t_grid must start >= 0");

  const double f_center = res.f_r0 + delta_avg;
  const auto boxes = frequency_boxes(ens.freq_dist, f_center - ens.freq_dist.center_offset,
                                     opt.n_freq_boxes, opt.span_sigmas);
  const auto bins = coupling_bins(ens.coupling_dist, opt.n_coupling_bins);
  if (boxes.empty() || bins.empty()) throw ValidationError("ensemble_decay_trace: empty discretization");

  const double kappa = res.kappa_total();
  DecayTrace trace;
  trace.t_axis = t_grid;
  trace.detuning_avg = delta_avg;
  trace.shift.assign(t_grid.size(), 0.0);

  double norm = 0.0;
  for (const auto& box : boxes) {
    const double chi = chi_single(1.0, box.f_spin - res.f_r0, ens.t2);  // per unit G^2
    for (const auto& bin : bins) {
      const double amp = box.weight * bin.weight * chi * bin.g1 * bin.g1;
      const double rate = purcell_rate(bin.g1, res.f_r0, box.f_spin, kappa, ens.t1);
      norm += amp;
      for (std::size_t i = 0; i < t_grid.size(); ++i)
        trace.shift[i] += amp * std::exp(-rate * t_grid[i]);
    }
  }
  if (norm == 0.0) throw ValidationError("ensemble_decay_trace: zero total shift weight");
  for (auto& v : trace.shift) v /= norm;
  return trace;
}

/// Least-squares inference of the maximum single-spin coupling from one or
/// more decay traces at distinct detunings. Everything but g_max is fixed by
/// the templates; fits all traces simultaneously.
inline std::pair<double, FitReport> infer_gmax(const std::vector<DecayTrace>& traces,
                                               const SpinEnsembleSpec& ens_template,
                                               const ResonatorSpec& res, double known_t1,
                                               double g_max_init, const DecayOptions& opt = {}) {
  if (traces.empty()) throw ValidationError("infer_gmax: need at least one trace");
  std::size_t n_res = 0;
  double span = 0.0;
  for (const auto& tr : traces) {
    n_res += tr.t_axis.size();
    double lo = tr.shift.front(), hi = tr.shift.front();
    for (double v : tr.shift) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    span = std::max(span, hi - lo);
  }
  if (span < 1e-9) {
    FitReport rep;
    rep.converged = false;
    rep.message = "degenerate data: traces are flat, g_max not identifiable";
    rep.names = {"g_max_Hz"};
    rep.values = {g_max_init};
    rep.uncertainties = {0.0};
    return {g_max_init, rep};
  }

  SpinEnsembleSpec ens = ens_template;
  ens.validate();
  res.validate();
  EnvironmentConditions env{0.010, 0.0};  // temperature enters nothing here

  auto residual = [&](const std::vector<double>& p, std::vector<double>& r) {
    SpinEnsembleSpec e = ens;
    e.t1 = known_t1;
    e.coupling_dist.g_max = std::max(p[0], e.coupling_dist.g_min * (1.0 + 1e-12));
    r.clear();
    r.reserve(n_res);
    for (const auto& tr : traces) {
      const auto model = ensemble_decay_trace(res, e, env, tr.detuning_avg, tr.t_axis, opt);
      for (std::size_t i = 0; i < tr.t_axis.size(); ++i)
        r.push_back(model.shift[i] - tr.shift[i]);
    }
  };

  std::vector<FitParam> params = {
      {"g_max_Hz", g_max_init, 1.0, ParamTransform::log_positive}};
  LMOptions lmopt;
  lmopt.max_iter = 200;
  FitReport rep = lm_fit(residual, params, n_res, lmopt);
  if (rep.converged && rep.uncertainties[0] == 0.0) {
    rep.converged = false;
    rep.message = "flat objective: g_max not identifiable";
  }
  return {rep.values[0], rep};
}

}  // namespace lerspin
