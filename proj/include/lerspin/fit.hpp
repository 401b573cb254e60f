#pragma once

// Damped Gauss-Newton (Levenberg-Marquardt) least squares with numeric
// Jacobians, per-parameter transforms (identity / log / sqrt / logit) for
// bounds, and deterministic multi-start. Individual fits are single threaded
// and reproducible.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace lerspin {

struct FitReport {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> uncertainties;  ///< 1-sigma from the local curvature
  double residual_norm = 0.0;         ///< sqrt(sum r^2)
  int n_iter = 0;
  bool converged = false;
  std::string message;

  double value(const std::string& name) const { return values[index(name)]; }
  double uncertainty(const std::string& name) const { return uncertainties[index(name)]; }

 private:
  std::size_t index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    throw std::out_of_range("FitReport: no parameter named '" + name + "'");
  }
};

/// Smooth reparametrizations used to keep physical parameters in range.
enum class ParamTransform {
  identity,
  log_positive,   ///< x = exp(z), x > 0
  sqrt_signed,    ///< x = z^2, x >= 0 (smooth through exact zero)
  logit_unit,     ///< x = 1/(1+exp(-z)), 0 < x < 1
};

struct FitParam {
  std::string name;
  double init = 0.0;
  double scale = 1.0;  ///< typical magnitude in transformed space
  ParamTransform transform = ParamTransform::identity;
};

namespace fitdetail {

inline double to_internal(double x, ParamTransform t) {
  switch (t) {
    case ParamTransform::identity: return x;
    case ParamTransform::log_positive: return std::log(x);
    case ParamTransform::sqrt_signed: return std::sqrt(std::max(x, 0.0));
    case ParamTransform::logit_unit: {
      const double c = std::clamp(x, 1e-12, 1.0 - 1e-12);
      return std::log(c / (1.0 - c));
    }
  }
  return x;
}

inline double to_external(double z, ParamTransform t) {
  switch (t) {
    case ParamTransform::identity: return z;
    case ParamTransform::log_positive: return std::exp(z);
    case ParamTransform::sqrt_signed: return z * z;
    case ParamTransform::logit_unit: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

inline double dexternal_dz(double z, ParamTransform t) {
  switch (t) {
    case ParamTransform::identity: return 1.0;
    case ParamTransform::log_positive: return std::exp(z);
    case ParamTransform::sqrt_signed: return 2.0 * z;
    case ParamTransform::logit_unit: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

/// Solve A x = b for a small symmetric positive-definite-ish system with
/// Gaussian elimination and partial pivoting. Returns false when singular.
inline bool solve_dense(std::vector<double> a, std::vector<double> b, std::vector<double>& x,
                        std::size_t n) {
  x.assign(n, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (std::abs(a[piv * n + col]) < 1e-300) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i * n + c] * x[c];
    x[i] = s / a[i * n + i];
  }
  return true;
}

/// Invert a small matrix by solving against unit vectors. Returns false when
/// singular.
inline bool invert_dense(const std::vector<double>& a, std::vector<double>& inv, std::size_t n) {
  inv.assign(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0), x;
    e[j] = 1.0;
    if (!solve_dense(a, e, x, n)) return false;
    for (std::size_t i = 0; i < n; ++i) inv[i * n + j] = x[i];
  }
  return true;
}

/// splitmix64, used for deterministic multi-start perturbations.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }  // [0, 1)
  double normal() {
    // Box-Muller on two uniforms
    const double u1 = std::max(uniform(), 1e-300);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }
};

}  // namespace fitdetail

struct LMOptions {
  int max_iter = 500;
  double xtol = 1e-8;    ///< relative parameter change
  double gtol = 1e-10;   ///< gradient norm
  double lambda0 = 1e-3;
  int multi_start = 1;   ///< deterministic restarts from perturbed inits
  std::uint64_t seed = 0x5e2d5ULL;
};

/// Residual callback: fills r with the residual vector at external-space
/// parameters p.
using ResidualFn = std::function<void(const std::vector<double>&, std::vector<double>&)>;

inline FitReport lm_fit(const ResidualFn& residual, const std::vector<FitParam>& params,
                        std::size_t n_residuals, const LMOptions& opt = {}) {
  using namespace fitdetail;
  const std::size_t np = params.size();

  auto externalize = [&](const std::vector<double>& z, std::vector<double>& p) {
    p.resize(np);
    for (std::size_t i = 0; i < np; ++i)
      p[i] = to_external(z[i] * params[i].scale, params[i].transform);
  };

  std::vector<double> r(n_residuals), rtmp(n_residuals), p(np);
  auto cost_at = [&](const std::vector<double>& z) {
    externalize(z, p);
    residual(p, r);
    double c = 0.0;
    for (double v : r) c += v * v;
    return 0.5 * c;
  };

  std::vector<double> z0(np);
  for (std::size_t i = 0; i < np; ++i)
    z0[i] = to_internal(params[i].init, params[i].transform) / params[i].scale;

  FitReport best;
  best.residual_norm = std::numeric_limits<double>::infinity();
  SplitMix64 rng(opt.seed);

  for (int start = 0; start < std::max(1, opt.multi_start); ++start) {
    std::vector<double> z = z0;
    if (start > 0)
      for (std::size_t i = 0; i < np; ++i) z[i] += 0.5 * rng.normal();

    double cost = cost_at(z);
    if (!std::isfinite(cost)) continue;
    double lambda = opt.lambda0;
    int iter = 0;
    bool converged = false;
    std::string message;

    std::vector<double> jac(n_residuals * np), jtj(np * np), jtr(np), step, znew(np);
    for (; iter < opt.max_iter; ++iter) {
      // numeric Jacobian in internal space, central differences
      externalize(z, p);
      residual(p, r);
      for (std::size_t j = 0; j < np; ++j) {
        const double hstep = 1e-6 * std::max(1.0, std::abs(z[j]));
        std::vector<double> zp = z, zm = z;
        zp[j] += hstep;
        zm[j] -= hstep;
        std::vector<double> pp, pm;
        externalize(zp, pp);
        externalize(zm, pm);
        residual(pp, rtmp);
        std::vector<double> rm(n_residuals);
        residual(pm, rm);
        for (std::size_t i = 0; i < n_residuals; ++i)
          jac[i * np + j] = (rtmp[i] - rm[i]) / (2.0 * hstep);
      }
      std::fill(jtj.begin(), jtj.end(), 0.0);
      std::fill(jtr.begin(), jtr.end(), 0.0);
      for (std::size_t i = 0; i < n_residuals; ++i)
        for (std::size_t a = 0; a < np; ++a) {
          jtr[a] += jac[i * np + a] * r[i];
          for (std::size_t b = a; b < np; ++b) jtj[a * np + b] += jac[i * np + a] * jac[i * np + b];
        }
      for (std::size_t a = 0; a < np; ++a)
        for (std::size_t b = 0; b < a; ++b) jtj[a * np + b] = jtj[b * np + a];

      double gnorm = 0.0;
      for (double g : jtr) gnorm = std::max(gnorm, std::abs(g));
      if (gnorm < opt.gtol * std::max(1.0, cost)) {
        converged = true;
        break;
      }

      bool accepted = false;
      for (int tries = 0; tries < 30; ++tries) {
        std::vector<double> damped = jtj;
        for (std::size_t a = 0; a < np; ++a)
          damped[a * np + a] += lambda * std::max(jtj[a * np + a], 1e-12);
        std::vector<double> neg_g(np);
        for (std::size_t a = 0; a < np; ++a) neg_g[a] = -jtr[a];
        if (!solve_dense(damped, neg_g, step, np)) {
          lambda *= 10.0;
          continue;
        }
        for (std::size_t a = 0; a < np; ++a) znew[a] = z[a] + step[a];
        const double cnew = cost_at(znew);
        if (std::isfinite(cnew) && cnew < cost) {
          double rel = 0.0;
          for (std::size_t a = 0; a < np; ++a)
            rel = std::max(rel, std::abs(step[a]) / std::max(1.0, std::abs(z[a])));
          z = znew;
          cost = cnew;
          lambda = std::max(lambda / 9.0, 1e-12);
          accepted = true;
          if (rel < opt.xtol) converged = true;
          break;
        }
        lambda *= 10.0;
      }
      if (!accepted) {
        message = "step search stalled";
        break;
      }
      if (converged) break;
    }

    const double rnorm = std::sqrt(2.0 * cost);
    if (rnorm < best.residual_norm) {
      best = FitReport{};
      best.n_iter = iter;
      best.converged = converged;
      best.message = message;
      best.residual_norm = rnorm;
      for (std::size_t i = 0; i < np; ++i) {
        best.names.push_back(params[i].name);
        best.values.push_back(to_external(z[i] * params[i].scale, params[i].transform));
      }
      // curvature-based 1-sigma uncertainties, delta method through the
      // transform chain
      best.uncertainties.assign(np, 0.0);
      externalize(z, p);
      residual(p, r);
      std::vector<double> jac2(n_residuals * np);
      for (std::size_t j = 0; j < np; ++j) {
        const double hstep = 1e-6 * std::max(1.0, std::abs(z[j]));
        std::vector<double> zp = z, zm = z, pp, pm, rp(n_residuals), rm(n_residuals);
        zp[j] += hstep;
        zm[j] -= hstep;
        externalize(zp, pp);
        externalize(zm, pm);
        residual(pp, rp);
        residual(pm, rm);
        for (std::size_t i = 0; i < n_residuals; ++i)
          jac2[i * np + j] = (rp[i] - rm[i]) / (2.0 * hstep);
      }
      std::vector<double> h(np * np, 0.0), hinv;
      for (std::size_t i = 0; i < n_residuals; ++i)
        for (std::size_t a = 0; a < np; ++a)
          for (std::size_t b = 0; b < np; ++b) h[a * np + b] += jac2[i * np + a] * jac2[i * np + b];
      const double dof = static_cast<double>(n_residuals > np ? n_residuals - np : 1);
      const double s2 = 2.0 * cost / dof;
      if (invert_dense(h, hinv, np)) {
        for (std::size_t a = 0; a < np; ++a) {
          const double var_z = std::max(hinv[a * np + a] * s2, 0.0);
          const double dxdz =
              fitdetail::dexternal_dz(z[a] * params[a].scale, params[a].transform) *
              params[a].scale;
          best.uncertainties[a] = std::sqrt(var_z) * std::abs(dxdz);
        }
      } else {
        best.message += best.message.empty() ? "singular curvature" : "; singular curvature";
      }
    }
  }

  if (!std::isfinite(best.residual_norm)) {
    best.converged = false;
    best.message = "all starts diverged";
    for (const auto& prm : params) {
      best.names.push_back(prm.name);
      best.values.push_back(prm.init);
      best.uncertainties.push_back(0.0);
    }
    best.residual_norm = std::numeric_limits<double>::quiet_NaN();
  }
  return best;
}

}  // namespace lerspin
