#pragma once

// The model fits used across the toolkit: bare notch resonance, 2D coupled
// transmission maps (G_N, gamma), stretched exponential, damped sinusoid
// with the 4x excitation-time convention, and Gaussian lines.

#include <complex>
#include <numbers>
#include <vector>

#include "lerspin/core.hpp"
#include "lerspin/fit.hpp"
#include "lerspin/transmission.hpp"

namespace lerspin {

/// Notch resonance fit of complex S21 samples with a complex background
/// prefactor. Parameters: f_r0_Hz, kappa_i_Hz, kappa_c_Hz, bg_re, bg_im.
inline FitReport fit_resonance(const std::vector<double>& f, const std::vector<std::complex<double>>& s21) {
  if (f.size() != s21.size()) throw ValidationError("fit_resonance: length mismatch");
  if (f.size() < 10) throw ValidationError("fit_resonance: need >= 10 samples");

  // initial guesses from the dip location and width
  std::size_t imin = 0;
  double bg_mag = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (std::abs(s21[i]) < std::abs(s21[imin])) imin = i;
    bg_mag += std::abs(s21[i]);
  }
  bg_mag /= static_cast<double>(f.size());
  const double span = f.back() - f.front();
  const double depth = 1.0 - std::abs(s21[imin]) / std::max(bg_mag, 1e-12);
  const double half_level = std::abs(s21[imin]) + 0.5 * (bg_mag - std::abs(s21[imin]));
  std::size_t ilo = imin, ihi = imin;
  while (ilo > 0 && std::abs(s21[ilo]) < half_level) --ilo;
  while (ihi + 1 < f.size() && std::abs(s21[ihi]) < half_level) ++ihi;
  const double width = std::max(f[ihi] - f[ilo], span / static_cast<double>(f.size()));
  const double kc0 = std::max(width * std::clamp(depth, 0.05, 0.95), 1e-3);
  const double ki0 = std::max(width - kc0, kc0 * 0.1);

  auto residual = [&](const std::vector<double>& p, std::vector<double>& r) {
    ResonatorSpec res{p[0], p[1], p[2], 1e-9};
    const std::complex<double> bg(p[3], p[4]);
    r.resize(2 * f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      const std::complex<double> m = p[0] > 0.0 ? bg * s21_terms(f[i], res, {})
                                                : std::complex<double>(0.0, 0.0);
      r[2 * i] = m.real() - s21[i].real();
      r[2 * i + 1] = m.imag() - s21[i].imag();
    }
  };

  std::vector<FitParam> params = {
      {"f_r0_Hz", f[imin], 1.0, ParamTransform::identity},
      {"kappa_i_Hz", ki0, 1.0, ParamTransform::sqrt_signed},
      {"kappa_c_Hz", kc0, 1.0, ParamTransform::sqrt_signed},
      {"bg_re", bg_mag, 1.0, ParamTransform::identity},
      {"bg_im", 0.0, 1.0, ParamTransform::identity},
  };
  // scale frequency-like parameters so internal steps are O(width)
  params[0].scale = std::max(width, span / 100.0);
  params[1].scale = std::sqrt(std::max(width, 1.0));
  params[2].scale = std::sqrt(std::max(width, 1.0));

  FitReport rep = lm_fit(residual, params, 2 * f.size(), {});
  const double kappa_fit = rep.value("kappa_i_Hz") + rep.value("kappa_c_Hz");
  if (rep.value("kappa_c_Hz") < 1e-6 * kappa_fit || depth < 1e-3) {
    rep.converged = false;
    rep.message = "no resonance dip detected";
  } else if (span < 3.0 * kappa_fit) {
    rep.message = "span below 3 linewidths; parameters poorly constrained";
  }
  return rep;
}

/// 2D coupled-map fit over |S21|(B, f) with the resonator fixed. Parameters:
/// g_n_Hz, gamma_Hz (Lorentzian HWHM of the spin line), f_s_offset_Hz (shift
/// of the spin line center from the nominal Larmor frequency).
inline FitReport fit_coupled_map(const TransmissionMap& map, const ResonatorSpec& fixed,
                                 const SpinEnsembleSpec& ens_init, double g_n_init,
                                 double gamma_init) {
  const std::size_t nb = map.b_axis.size(), nf = map.f_axis.size();
  if (nb == 0 || nf == 0) throw ValidationError("fit_coupled_map: empty map");

  std::vector<double> larmor(nb);
  for (std::size_t ib = 0; ib < nb; ++ib)
    larmor[ib] = ens_init.g_factor * constants::mu_B * map.b_axis[ib] / constants::h;
  const bool covers = larmor.front() <= map.f_axis.back() && larmor.back() >= map.f_axis.front();

  auto residual = [&](const std::vector<double>& p, std::vector<double>& r) {
    r.resize(nb * nf);
    for (std::size_t ib = 0; ib < nb; ++ib) {
      const SpinTerm term{p[0], larmor[ib] + p[2], to_angular(p[1]) + 1.0 / ens_init.t2};
      for (std::size_t jf = 0; jf < nf; ++jf)
        r[ib * nf + jf] =
            std::abs(s21_terms(map.f_axis[jf], fixed, {&term, 1})) - std::abs(map.at(ib, jf));
    }
  };

  std::vector<FitParam> params = {
      {"g_n_Hz", g_n_init, 1.0, ParamTransform::sqrt_signed},
      {"gamma_Hz", gamma_init, 1.0, ParamTransform::log_positive},
      {"f_s_offset_Hz", 0.0, std::max(gamma_init, 1e3), ParamTransform::identity},
  };
  params[0].scale = std::sqrt(std::max(g_n_init, 1.0));

  FitReport rep = lm_fit(residual, params, nb * nf, {});
  if (!covers)
    rep.message = rep.message.empty() ? "map does not cover the spin-resonance field"
                                      : rep.message + "; map does not cover the spin-resonance field";
  return rep;
}

/// Stretched-exponential fit amplitude * exp(-(t/t1_eff)^x) with x in (0,1],
/// weighted by the local log-time spacing so decade-spanning traces are not
/// dominated by late samples. Parameters: amplitude, t1_eff_s, stretch.
inline FitReport fit_stretched_exponential(const std::vector<double>& t,
                                           const std::vector<double>& y) {
  if (t.size() != y.size()) throw ValidationError("fit_stretched_exponential: length mismatch");
  if (t.size() < 4) throw ValidationError("fit_stretched_exponential: need >= 4 samples");
  double ymin = y[0], ymax = y[0];
  for (double v : y) {
    ymin = std::min(ymin, v);
    ymax = std::max(ymax, v);
  }
  if (ymax - ymin < 1e-300) throw ValidationError("fit_stretched_exponential: constant data");

  // log-time weights (first positive time anchors the grid)
  std::vector<double> w(t.size(), 1.0);
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] > 0.0) pos.push_back(i);
  if (pos.size() >= 3) {
    for (std::size_t k = 0; k < pos.size(); ++k) {
      const double tl = k == 0 ? t[pos[k]] : t[pos[k - 1]];
      const double tr = k + 1 == pos.size() ? t[pos[k]] : t[pos[k + 1]];
      w[pos[k]] = std::sqrt(std::max(0.5 * std::log(std::max(tr / tl, 1.0 + 1e-12)), 1e-6));
    }
    const double wmax = *std::max_element(w.begin(), w.end());
    for (auto& v : w) v /= wmax;
  }

  double span_decades = 0.0;
  if (!pos.empty() && t[pos.front()] > 0.0)
    span_decades = std::log10(t[pos.back()] / t[pos.front()]);

  // init: amplitude from the first sample, t1 from the 1/e crossing
  const double a0 = y.front();
  double t1_0 = t.back() / 2.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (std::abs(y[i]) <= std::abs(a0) / std::numbers::e_v<double>) {
      t1_0 = std::max(t[i], t.front() > 0 ? t.front() : t[1]);
      break;
    }

  auto residual = [&](const std::vector<double>& p, std::vector<double>& r) {
    r.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double m = p[0] * std::exp(-std::pow(std::max(t[i], 0.0) / p[1], p[2]));
      r[i] = w[i] * (m - y[i]);
    }
  };

  std::vector<FitParam> params = {
      {"amplitude", a0 == 0.0 ? ymax : a0, std::max(std::abs(a0), 1e-6), ParamTransform::identity},
      {"t1_eff_s", t1_0, 1.0, ParamTransform::log_positive},
      {"stretch", 0.7, 1.0, ParamTransform::logit_unit},
  };
  LMOptions opt;
  opt.multi_start = 8;
  FitReport rep = lm_fit(residual, params, t.size(), opt);
  if (t.size() < 8 || span_decades < 2.0)
    rep.message = rep.message.empty()
                      ? "fewer than 8 points or 2 decades in t; stretch estimate unreliable"
                      : rep.message;
  return rep;
}

struct DampedSineOptions {
  bool total_time_factor4 = true;  ///< fit A e^(-4t/tau) sin(4 W t + phi)
  int multi_start = 8;
  double min_peak_snr = 8.0;  ///< periodogram peak below this -> no oscillation
};

/// Exponentially damped sinusoid fit. Parameters: amplitude, f_rabi_Hz
/// (Omega_R / 2 pi), tau_s, phase.
inline FitReport fit_damped_sine(const std::vector<double>& t, const std::vector<double>& y,
                                 const DampedSineOptions& dopt = {}) {
  if (t.size() != y.size()) throw ValidationError("fit_damped_sine: length mismatch");
  if (t.size() < 8) throw ValidationError("fit_damped_sine: need >= 8 samples");
  const double c = dopt.total_time_factor4 ? 4.0 : 1.0;

  // coarse periodogram over the resolvable band, on mean-removed data
  double mean = 0.0, var = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  for (double v : y) var += (v - mean) * (v - mean);
  const double span = t.back() - t.front();
  // Nyquist band of the effective time c*t
  const double fmax = 0.5 / std::max(c * (t.back() - t.front()) / (t.size() - 1.0), 1e-30);
  double best_f = 1.0 / span, best_p = 0.0, mean_p = 0.0;
  const int nfreq = 400;
  std::vector<double> power(nfreq);
  for (int k = 0; k < nfreq; ++k) {
    const double fk = (0.5 + k) / nfreq * fmax;
    double sc = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double ph = 2.0 * std::numbers::pi * fk * c * t[i];
      sc += (y[i] - mean) * std::cos(ph);
      ss += (y[i] - mean) * std::sin(ph);
    }
    power[k] = sc * sc + ss * ss;
    mean_p += power[k];
    if (power[k] > best_p) {
      best_p = power[k];
      best_f = fk;
    }
  }
  mean_p /= nfreq;
  if (best_p < dopt.min_peak_snr * mean_p || var < 1e-300) {
    FitReport rep;
    rep.converged = false;
    rep.message = "no oscillation detected (spectral peak below noise)";
    rep.names = {"amplitude", "f_rabi_Hz", "tau_s", "phase"};
    rep.values = {0.0, best_f, span, 0.0};
    rep.uncertainties = {0.0, 0.0, 0.0, 0.0};
    return rep;
  }

  double amax = 0.0;
  for (double v : y) amax = std::max(amax, std::abs(v - mean));

  auto residual = [&](const std::vector<double>& p, std::vector<double>& r) {
    r.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double m =
          p[0] * std::exp(-c * t[i] / p[2]) * std::sin(c * to_angular(p[1]) * t[i] + p[3]);
      r[i] = m - y[i];
    }
  };

  std::vector<FitParam> params = {
      {"amplitude", amax, std::max(amax, 1e-12), ParamTransform::identity},
      {"f_rabi_Hz", best_f, 1.0, ParamTransform::log_positive},
      {"tau_s", span / 2.0, 1.0, ParamTransform::log_positive},
      {"phase", 0.0, 1.0, ParamTransform::identity},
  };
  LMOptions opt;
  opt.multi_start = dopt.multi_start;
  FitReport rep = lm_fit(residual, params, t.size(), opt);

  const double periods = rep.value("f_rabi_Hz") * c * span;
  if (periods < 3.0)
    rep.message = rep.message.empty() ? "fewer than 3 oscillation periods visible" : rep.message;
  return rep;
}

/// Gaussian line fit. Parameters: center_Hz, sigma_Hz, amplitude, offset;
/// hwhm() of the report is sqrt(2 ln 2) sigma.
inline FitReport fit_gaussian_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("fit_gaussian_line: length mismatch");
  if (x.size() < 10) throw ValidationError("fit_gaussian_line: need >= 10 samples");

  // moment-based init on offset-removed data
  double ymin = y[0], ymax = y[0];
  std::size_t ipk = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ymin = std::min(ymin, y[i]);
    if (std::abs(y[i]) > std::abs(y[ipk])) ipk = i;
    ymax = std::max(ymax, y[i]);
  }
  const bool positive_peak = std::abs(ymax) >= std::abs(ymin);
  const double off0 = positive_peak ? ymin : ymax;
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wv = std::abs(y[i] - off0);
    m0 += wv;
    m1 += wv * x[i];
  }
  const double c0 = m0 > 0.0 ? m1 / m0 : x[x.size() / 2];
  for (std::size_t i = 0; i < x.size(); ++i) m2 += std::abs(y[i] - off0) * (x[i] - c0) * (x[i] - c0);
  const double s0 = m0 > 0.0 ? std::sqrt(std::max(m2 / m0, 1e-300)) : (x.back() - x.front()) / 6.0;

  auto residual = [&](const std::vector<double>& p, std::vector<double>& r) {
    r.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double u = (x[i] - p[0]) / p[1];
      r[i] = p[2] * std::exp(-0.5 * u * u) + p[3] - y[i];
    }
  };

  std::vector<FitParam> params = {
      {"center_Hz", c0, std::max(s0, 1.0), ParamTransform::identity},
      {"sigma_Hz", s0, 1.0, ParamTransform::log_positive},
      {"amplitude", y[ipk] - off0, std::max(std::abs(y[ipk] - off0), 1e-12),
       ParamTransform::identity},
      {"offset", off0, std::max(std::abs(off0), 1e-12), ParamTransform::identity},
  };
  FitReport rep = lm_fit(residual, params, x.size(), {});

  double dx_med = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  if (rep.value("sigma_Hz") < 1.5 * dx_med)
    rep.message = rep.message.empty() ? "under-resolved: fitted sigma below the grid step"
                                      : rep.message + "; under-resolved";
  const double span_x = x.back() - x.front();
  if (span_x < 4.0 * rep.value("sigma_Hz"))
    rep.message = rep.message.empty() ? "span below 4 sigma" : rep.message;
  return rep;
}

/// Derived HWHM of a fitted Gaussian line.
inline double gaussian_fit_hwhm(const FitReport& rep) {
  return gaussian_hwhm_from_sigma(rep.value("sigma_Hz"));
}

}  // namespace lerspin
