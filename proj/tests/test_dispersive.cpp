#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lerspin/dispersive.hpp"
#include "lerspin/fit_models.hpp"

using namespace lerspin;
using Catch::Approx;

namespace {

SpinEnsembleSpec scan_ensemble() {
  SpinEnsembleSpec ens;
  ens.n_spins = 5.5e11;
  ens.freq_dist = {LineShape::gaussian, 10.01e6, 0.0};
  ens.coupling_dist = {CouplingShape::delta, 3.0, 12.0, 12.0, {}};
  ens.t1 = 200.0;
  ens.t2 = 2e-7;
  return ens;
}

/// Field placing the Larmor line at f_center for g = 2.00.
double b_for(double f_center) {
  return f_center * lerspin::constants::h / (2.00 * lerspin::constants::mu_B);
}

}  // namespace

TEST_CASE("chi_single") {
  SECTION("odd function, zero at zero detuning") {
    CHECK(chi_single(1e5, 0.0, 2e-7) == 0.0);
    for (double d : {1e6, 4e7, -2.2e7}) {
      CHECK(chi_single(12.0, d, 2e-7) == Approx(-chi_single(12.0, -d, 2e-7)).epsilon(1e-14));
    }
  }
  SECTION("far-detuned limit G^2 / Delta") {
    // 100 kHz coupling, 40 MHz detuning, negligible 1/T2
    CHECK(chi_single(1e5, 40e6, 1.0) == Approx(250.0).epsilon(1e-6));
  }
  SECTION("maximum sits at |Delta| = 1/(2 pi T2) with value G^2 T2 pi") {
    const double g1 = 1e4, t2 = 5e-7;
    const double d_star = 1.0 / (2.0 * std::numbers::pi * t2);  // 1/T2 angular, in linear Hz
    double best_d = 0.0, best = 0.0;
    for (double d = 0.01 * d_star; d < 10 * d_star; d += 0.002 * d_star) {
      const double c = chi_single(g1, d, t2);
      if (c > best) {
        best = c;
        best_d = d;
      }
    }
    CHECK(best_d == Approx(d_star).epsilon(5e-3));
    // chi_max (angular) = G^2 T2 / 2 -> linear: (2 pi g1)^2 T2 / (4 pi)
    const double expected = std::pow(to_angular(g1), 2) * t2 / 2.0 / (2.0 * std::numbers::pi);
    CHECK(best == Approx(expected).epsilon(1e-5));
  }
  SECTION("rejects bad T2") {
    CHECK_THROWS_AS(chi_single(1.0, 1.0, 0.0), ValidationError);
  }
}

TEST_CASE("ensemble_shift") {
  ResonatorSpec res{2.564e9, 25e3, 100e3, 1e-9};
  auto ens = scan_ensemble();

  SECTION("unpolarized ensemble gives zero shift") {
    auto boxes = dispersive_boxes(ens, res.f_r0 + 40e6, 0.0);
    CHECK(ensemble_shift(boxes, res, ens) == 0.0);
  }
  SECTION("spins above resonance, polarized down, pull f_r down") {
    auto boxes = dispersive_boxes(ens, res.f_r0 + 40e6, -1.0);
    CHECK(ensemble_shift(boxes, res, ens) < 0.0);
  }
  SECTION("symmetric detunings cancel") {
    std::vector<SpinBox> boxes = {{res.f_r0 + 30e6, 0.5, 12.0, -1.0},
                                  {res.f_r0 - 30e6, 0.5, 12.0, -1.0}};
    CHECK(std::abs(ensemble_shift(boxes, res, ens)) < 1e-18);
  }
  SECTION("linear in sz and in N (brute-force two-box sum)") {
    std::vector<SpinBox> boxes = {{res.f_r0 + 35e6, 0.7, 12.0, -0.4},
                                  {res.f_r0 + 55e6, 0.3, 9.0, -0.4}};
    const double s1 = ensemble_shift(boxes, res, ens);
    // manual evaluation
    double manual = 0.0;
    for (const auto& b : boxes)
      manual += ens.n_spins * b.weight * chi_single(b.g1, b.f_spin - res.f_r0, ens.t2) * b.sz;
    CHECK(s1 == Approx(manual).epsilon(1e-14));
    for (auto& b : boxes) b.sz *= 2.0;
    CHECK(ensemble_shift(boxes, res, ens) == Approx(2.0 * s1).epsilon(1e-12));
    ens.n_spins *= 3.0;
    CHECK(ensemble_shift(boxes, res, ens) == Approx(6.0 * s1).epsilon(1e-12));
  }
}

TEST_CASE("thermal shift curve") {
  ResonatorSpec res{2.564e9, 25e3, 100e3, 1e-9};
  auto ens = scan_ensemble();
  const double b = 0.0937;  // spins above resonance: Larmor = 2.623 GHz

  std::vector<double> t_grid;
  for (int i = 0; i < 40; ++i) t_grid.push_back(0.011 + i * 0.025);

  const auto curve = thermal_shift_curve(res, ens, b, t_grid);
  const auto& shift = curve.column("shift_Hz").re;
  const auto& fr = curve.column("f_r_Hz").re;

  SECTION("negative shift, saturating on cooling, vanishing when hot") {
    CHECK(shift.front() < 0.0);
    for (std::size_t i = 1; i < shift.size(); ++i) CHECK(shift[i] >= shift[i - 1] - 1e-12);
    const auto hot = thermal_shift_curve(res, ens, b, {1e6});
    CHECK(std::abs(hot.column("shift_Hz").re[0]) < std::abs(shift.front()) * 1e-4);
    // saturation: the change from 11 mK to 36 mK is a small fraction
    const auto low = thermal_shift_curve(res, ens, b, {0.011, 0.036});
    const auto& s = low.column("shift_Hz").re;
    CHECK(std::abs(s[1] - s[0]) < 0.02 * std::abs(s[0]));
  }

  SECTION("shift factorizes as tanh (uniform polarization)") {
    SpinEnsembleSpec e = ens;
    const EnvironmentConditions env0{t_grid[0], b};
    const double ref = shift[0] / thermal_polarization(e, env0);
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      const EnvironmentConditions env{t_grid[i], b};
      CHECK(shift[i] == Approx(ref * thermal_polarization(e, env)).epsilon(1e-9));
    }
  }

  SECTION("f_r column is consistent") {
    for (std::size_t i = 0; i < fr.size(); ++i)
      CHECK(fr[i] == Approx(res.f_r0 + shift[i]).epsilon(1e-15));
  }

  SECTION("rejects non-positive temperatures") {
    CHECK_THROWS_AS(thermal_shift_curve(res, ens, b, {-0.1}), ValidationError);
  }
}

TEST_CASE("spectroscopy scan") {
  ResonatorSpec res{2.754e9, 25e3, 100e3, 1e-9};
  auto ens = scan_ensemble();

  SECTION("far-off pump leaves the resonator untouched") {
    const EnvironmentConditions env{0.010, b_for(res.f_r0 + 40e6)};
    const auto t = spectroscopy_scan(res, ens, env, {res.f_r0 + 40e6 + 12 * 10.01e6});
    CHECK(std::abs(t.column("shift_Hz").re[0]) < 1e-30 * ens.n_spins);
  }

  SECTION("gaussian line recovered with the input sigma") {
    const EnvironmentConditions env{0.010, b_for(res.f_r0 + 40e6)};
    std::vector<double> f_grid;
    const double c = res.f_r0 + 40e6, sg = ens.freq_dist.sigma;
    for (int i = 0; i < 161; ++i) f_grid.push_back(c + (i - 80) * sg / 20.0);
    const auto scan = spectroscopy_scan(res, ens, env, f_grid, 20e3);
    const auto rep = fit_gaussian_line(scan.axis_values, scan.column("shift_Hz").re);
    REQUIRE(rep.converged);
    CHECK(rep.value("sigma_Hz") == Approx(sg).epsilon(0.01));
    CHECK(gaussian_fit_hwhm(rep) == Approx(11.79e6).epsilon(0.02));
    CHECK(rep.value("center_Hz") == Approx(c).margin(0.02 * sg));
  }

  SECTION("opposite detunings give sign-opposite traces of equal magnitude") {
    const EnvironmentConditions env_up{0.010, b_for(res.f_r0 + 40e6)};
    const EnvironmentConditions env_dn{0.010, b_for(res.f_r0 - 40e6)};
    std::vector<double> fu, fd;
    for (int i = 0; i < 101; ++i) {
      fu.push_back(res.f_r0 + 40e6 + (i - 50) * 4e5);
      fd.push_back(res.f_r0 - 40e6 + (i - 50) * 4e5);
    }
    const auto tu = spectroscopy_scan(res, ens, env_up, fu);
    const auto td = spectroscopy_scan(res, ens, env_dn, fd);
    double mu = 0.0, md = 0.0;
    for (double v : tu.column("shift_Hz").re) mu = std::max(mu, v);
    for (double v : td.column("shift_Hz").re) md = std::min(md, v);
    CHECK(mu > 0.0);
    CHECK(md < 0.0);
    CHECK(mu == Approx(-md).epsilon(0.02));
  }

  SECTION("delta-bandwidth scan is proportional to the density") {
    const EnvironmentConditions env{0.010, b_for(res.f_r0 + 40e6)};
    const double c = res.f_r0 + 40e6, sg = ens.freq_dist.sigma;
    const double bw = sg / 1000.0;
    std::vector<double> f_grid;
    for (int i = 0; i < 41; ++i) f_grid.push_back(c + (i - 20) * sg / 8.0);
    const auto scan = spectroscopy_scan(res, ens, env, f_grid, bw);
    // ratio to the analytic Gaussian density is constant across the line
    const auto& y = scan.column("shift_Hz").re;
    double ratio0 = 0.0;
    for (std::size_t i = 0; i < f_grid.size(); ++i) {
      const double pdf = std::exp(-std::pow((f_grid[i] - c) / sg, 2) / 2.0);
      const double r = y[i] / pdf;
      if (i == 0) ratio0 = r;
      CHECK(r == Approx(ratio0).epsilon(1e-4));
    }
  }

  SECTION("rejects non-positive bandwidth") {
    const EnvironmentConditions env{0.010, b_for(res.f_r0 + 40e6)};
    CHECK_THROWS_AS(spectroscopy_scan(res, ens, env, {res.f_r0}, 0.0), ValidationError);
  }
}
