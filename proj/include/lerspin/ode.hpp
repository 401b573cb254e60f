#pragma once

// Explicit Runge-Kutta integration for the semiclassical equations of
// motion: adaptive Dormand-Prince 5(4) with the standard 4th-order dense
// interpolant, and a fixed-step classic RK4 mode for reproducibility and
// conservation tests. State is a flat vector of doubles.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace lerspin {

struct OdeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using OdeRhs = std::function<void(double t, const std::vector<double>& y, std::vector<double>& dydt)>;

struct OdeOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double dt_max = 0.0;       ///< required; caps the step
  double dt_init = 0.0;      ///< 0 -> dt_max / 10
  bool fixed_step = false;   ///< integrate with classic RK4 at dt_max exactly
  std::size_t max_steps = 200'000'000;
};

namespace odedetail {

// Dormand-Prince 5(4) tableau
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output coefficients
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

}  // namespace odedetail

/// One accepted adaptive step with everything needed for dense evaluation on
/// [t, t + h].
struct DenseStep {
  double t = 0.0, h = 0.0;
  std::vector<double> y;      // state at t
  std::vector<double> rcont1, rcont2, rcont3, rcont4, rcont5;

  void eval(double t_eval, std::vector<double>& out) const {
    const double s = (t_eval - t) / h, s1 = 1.0 - s;
    const std::size_t n = y.size();
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = rcont1[i] +
               s * (rcont2[i] + s1 * (rcont3[i] + s * (rcont4[i] + s1 * rcont5[i])));
  }
};

/// Integrates y' = f(t, y) from t0 to t1, invoking `observer(t, y)` at each
/// accepted step (including the initial state). Throws OdeError on NaN or
/// step-size underflow.
inline void integrate_adaptive(const OdeRhs& rhs, std::vector<double>& y, double t0, double t1,
                               const OdeOptions& opt,
                               const std::function<void(double, const std::vector<double>&)>&
                                   observer = nullptr,
                               std::vector<DenseStep>* dense = nullptr) {
  using namespace odedetail;
  if (!(opt.dt_max > 0.0)) throw OdeError("integrate: dt_max must be > 0");
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), yerr(n);

  auto check_finite = [&](const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) throw OdeError("integrate: non-finite state encountered");
  };

  if (opt.fixed_step) {
    double t = t0;
    if (observer) observer(t, y);
    std::size_t steps = 0;
    while (t < t1 - 1e-15 * std::max(1.0, std::abs(t1))) {
      const double h = std::min(opt.dt_max, t1 - t);
      rhs(t, y, k1);
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + 0.5 * h * k1[i];
      rhs(t + 0.5 * h, ytmp, k2);
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + 0.5 * h * k2[i];
      rhs(t + 0.5 * h, ytmp, k3);
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * k3[i];
      rhs(t + h, ytmp, k4);
      for (std::size_t i = 0; i < n; ++i)
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      t += h;
      check_finite(y);
      if (observer) observer(t, y);
      if (++steps > opt.max_steps) throw OdeError("integrate: max step count exceeded");
    }
    return;
  }

  double t = t0;
  double h = opt.dt_init > 0.0 ? opt.dt_init : opt.dt_max / 10.0;
  h = std::min(h, opt.dt_max);
  if (observer) observer(t, y);
  rhs(t, y, k1);
  std::size_t steps = 0;

  while (t < t1 - 1e-15 * std::max(1.0, std::abs(t1))) {
    h = std::min(h, t1 - t);
    if (h < 1e-15 * std::max(1.0, std::abs(t))) throw OdeError("integrate: step size underflow");

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    rhs(t + c2 * h, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * h, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * h, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    rhs(t + h, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    rhs(t + h, ynew, k7);  // FSAL

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      yerr[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sk = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err += (yerr[i] / sk) * (yerr[i] / sk);
    }
    err = std::sqrt(err / static_cast<double>(n));

    if (err <= 1.0) {
      if (dense) {
        DenseStep ds;
        ds.t = t;
        ds.h = h;
        ds.y = y;
        ds.rcont1.resize(n);
        ds.rcont2.resize(n);
        ds.rcont3.resize(n);
        ds.rcont4.resize(n);
        ds.rcont5.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          ds.rcont1[i] = y[i];
          const double ydiff = ynew[i] - y[i];
          ds.rcont2[i] = ydiff;
          ds.rcont3[i] = h * k1[i] - ydiff;
          ds.rcont4[i] = ydiff - h * k7[i] - ds.rcont3[i];
          ds.rcont5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                              d7 * k7[i]);
        }
        dense->push_back(std::move(ds));
      }
      t += h;
      y = ynew;
      k1 = k7;
      check_finite(y);
      if (observer) observer(t, y);
    }
    const double safety = 0.9, minscale = 0.2, maxscale = 5.0;
    double scale = err <= 1e-30 ? maxscale
                                : std::clamp(safety * std::pow(err, -0.2), minscale, maxscale);
    h = std::min(h * scale, opt.dt_max);
    if (++steps > opt.max_steps) throw OdeError("integrate: max step count exceeded");
  }
}

/// Integrates from t0 to t1, advancing `y` in place, and returns the dense
/// solution sampled at the requested times (ascending, within [t0, t1]).
inline std::vector<std::vector<double>> integrate_sampled(const OdeRhs& rhs,
                                                          std::vector<double>& y, double t0,
                                                          double t1,
                                                          const std::vector<double>& sample_times,
                                                          const OdeOptions& opt) {
  std::vector<std::vector<double>> out(sample_times.size());
  if (opt.fixed_step) {
    // sample by restarting between sample points; exact for fixed grids
    std::size_t si = 0;
    double t = t0;
    while (si < sample_times.size() && sample_times[si] <= t0 + 1e-18) out[si++] = y;
    for (; si < sample_times.size(); ++si) {
      integrate_adaptive(rhs, y, t, sample_times[si], opt);
      t = sample_times[si];
      out[si] = y;
    }
    if (t < t1) integrate_adaptive(rhs, y, t, t1, opt);
    return out;
  }
  const std::vector<double> y0 = y;
  std::vector<DenseStep> dense;
  integrate_adaptive(rhs, y, t0, t1, opt, nullptr, &dense);
  std::size_t di = 0;
  for (std::size_t si = 0; si < sample_times.size(); ++si) {
    const double ts = sample_times[si];
    if (ts <= t0) {
      out[si] = y0;
      continue;
    }
    while (di + 1 < dense.size() && dense[di].t + dense[di].h < ts) ++di;
    if (di < dense.size() && ts <= dense[di].t + dense[di].h + 1e-12 * std::abs(ts)) {
      dense[di].eval(ts, out[si]);
    } else {
      out[si] = y;
    }
  }
  return out;
}

}  // namespace lerspin
