#include <catch2/catch_amalgamated.hpp>

#include <complex>

#include "lerspin/transmission.hpp"

using namespace lerspin;
using Catch::Approx;

namespace {

/// Collective-coupled single line with an explicit G_N, fully polarized.
SpinEnsembleSpec line_ensemble(double g_n, LineShape shape, double sigma, double t2 = 1.0) {
  SpinEnsembleSpec ens;
  ens.n_spins = 1.0;  // N_eff -> 1 at low T, so G_N = coupling value
  ens.freq_dist = {shape, sigma, 0.0};
  ens.coupling_dist = {CouplingShape::delta, 3.0, g_n, g_n, {}};
  ens.t1 = std::max(t2, 1.0);
  ens.t2 = t2;
  return ens;
}

/// Cold environment with the field placing the Larmor line at f_center.
EnvironmentConditions env_at(double f_center, double g_factor = 2.00) {
  return {1e-5, f_center * lerspin::constants::h / (g_factor * lerspin::constants::mu_B)};
}

const EnvironmentConditions kCold = env_at(1.478e9);

}  // namespace

TEST_CASE("bare notch response") {
  ResonatorSpec res{1.478e9, 25e3, 100e3, 1e-9};

  SECTION("on-resonance dip equals kappa_i / kappa") {
    CHECK(std::abs(s21_bare(res.f_r0, res)) == Approx(25.0 / 125.0).epsilon(1e-12));
  }
  SECTION("far off resonance transmission is unity") {
    const double f_far = res.f_r0 + 1e9 * res.kappa_total();
    CHECK(std::abs(s21_bare(f_far, res)) == Approx(1.0).epsilon(1e-9));
  }
  SECTION("|S21|^2 full width at half depth equals kappa_i + kappa_c") {
    const double kappa = res.kappa_total();
    const double half_level =
        (1.0 + std::pow(25.0 / 125.0, 2)) / 2.0;  // midway between floor and 1 in power
    // scan with a grid resolving kappa/20
    const double df = kappa / 20.0;
    double lo = 0.0, hi = 0.0;
    for (double f = res.f_r0 - 5 * kappa; f <= res.f_r0 + 5 * kappa; f += df) {
      if (std::norm(s21_bare(f, res)) < half_level) {
        lo = f;
        break;
      }
    }
    for (double f = res.f_r0 + 5 * kappa; f >= res.f_r0 - 5 * kappa; f -= df) {
      if (std::norm(s21_bare(f, res)) < half_level) {
        hi = f;
        break;
      }
    }
    CHECK(hi - lo == Approx(kappa).epsilon(0.01));
  }
  SECTION("rejects non-positive probe") {
    CHECK_THROWS_AS(s21_bare(0.0, res), ValidationError);
  }
}

TEST_CASE("ensemble term reduction and passivity") {
  ResonatorSpec res{1.478e9, 25e3, 113e3, 1e-9};

  SECTION("s21_at with null ensemble equals bare") {
    const auto a = s21_at(res.f_r0 + 3e5, res, nullptr, kCold);
    CHECK(a == s21_bare(res.f_r0 + 3e5, res));
  }

  SECTION("single delta box matches the coupled-mode eigenvalues") {
    // delta line at the resonator frequency, homogeneous width 1/T2
    const double g_n = 9.5e6, t2 = 2e-7;
    auto ens = line_ensemble(g_n, LineShape::delta, 0.0, t2);
    // dips of |S21| sit at the real parts of the 2x2 complex eigenvalues
    const std::complex<double> wr(to_angular(res.f_r0), -to_angular(res.kappa_total()) / 2.0);
    const std::complex<double> ws(to_angular(res.f_r0), -1.0 / t2);
    const std::complex<double> g(to_angular(g_n), 0.0);
    const std::complex<double> rad = std::sqrt((wr - ws) * (wr - ws) / 4.0 + g * g);
    const double f_minus = from_angular(((wr + ws) / 2.0 - rad).real());
    const double f_plus = from_angular(((wr + ws) / 2.0 + rad).real());

    auto mag = [&](double f) { return std::abs(s21_at(f, res, &ens, kCold)); };
    auto refine_min = [&](double f0) {
      double best = f0, step = 1e4;
      for (int pass = 0; pass < 6; ++pass) {
        double bf = best, bm = mag(best);
        for (double f = best - 10 * step; f <= best + 10 * step; f += step) {
          if (mag(f) < bm) {
            bm = mag(f);
            bf = f;
          }
        }
        best = bf;
        step /= 8.0;
      }
      return best;
    };
    CHECK(refine_min(f_minus) == Approx(f_minus).epsilon(1e-6));
    CHECK(refine_min(f_plus) == Approx(f_plus).epsilon(1e-6));
  }

  SECTION("fig 9d scale: dips split by the eigenvalue gap") {
    // excited mode of the 1.478 / 6.265 GHz pair
    ResonatorSpec mode2{6.265e9, 25e3, 3.175e6, 1e-9};
    const double g_n = 15e6, gamma = 12.3e6;
    auto ens = line_ensemble(g_n, LineShape::lorentzian, gamma);
    const auto env2 = env_at(mode2.f_r0);
    TransmissionOptions opt;
    opt.line = SpinLineTreatment::lorentzian_analytic;
    auto mag = [&](double f) { return std::abs(s21_at(f, mode2, &ens, env2, opt)); };

    // locate the two dips
    double best_lo = mode2.f_r0 - g_n, best_hi = mode2.f_r0 + g_n;
    for (double f = mode2.f_r0 - 2.5 * g_n; f < mode2.f_r0; f += 5e4)
      if (mag(f) < mag(best_lo)) best_lo = f;
    for (double f = mode2.f_r0; f < mode2.f_r0 + 2.5 * g_n; f += 5e4)
      if (mag(f) < mag(best_hi)) best_hi = f;
    const double split = best_hi - best_lo;

    // oracle: eigenvalues of [[wr - i k/2, G], [G, ws - i (2 pi gamma + 1/T2)]]
    const std::complex<double> wr(to_angular(mode2.f_r0), -to_angular(mode2.kappa_total()) / 2.0);
    const std::complex<double> ws(to_angular(mode2.f_r0), -(to_angular(gamma) + 1.0 / ens.t2));
    const std::complex<double> rad =
        std::sqrt((wr - ws) * (wr - ws) / 4.0 +
                  std::complex<double>(to_angular(g_n) * to_angular(g_n), 0.0));
    const double split_oracle = 2.0 * from_angular(rad.real());
    CHECK(split == Approx(split_oracle).epsilon(0.02));
    CHECK(split > 25e6);
    CHECK(split < 31e6);
  }

  SECTION("passivity over a dense sweep") {
    auto ens = line_ensemble(13.2e6, LineShape::gaussian, 5e6, 2e-7);
    const auto envp = env_at(res.f_r0 + 2e6);
    for (double f = res.f_r0 - 5e7; f <= res.f_r0 + 5e7; f += 2.5e5)
      CHECK(std::abs(s21_at(f, res, &ens, envp)) <= 1.0 + 1e-9);
  }

  SECTION("discretization convergence: 101 -> 202 boxes") {
    auto ens = line_ensemble(9.5e6, LineShape::gaussian, 10.01e6, 2e-7);
    TransmissionOptions a, b;
    a.n_boxes = 101;
    b.n_boxes = 202;
    double worst = 0.0;
    for (double f = res.f_r0 - 4e7; f <= res.f_r0 + 4e7; f += 1e6)
      worst = std::max(worst, std::abs(std::abs(s21_at(f, res, &ens, kCold, a)) -
                                       std::abs(s21_at(f, res, &ens, kCold, b))));
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("transmission map") {
  ResonatorSpec res{1.97e9, 25e3, 100e3, 1e-9};
  SpinEnsembleSpec ens;
  ens.n_spins = 5e12;
  ens.freq_dist = {LineShape::gaussian, 10e6, 0.0};
  ens.coupling_dist = {CouplingShape::delta, 3.0, 6.0, 6.0, {}};
  ens.t1 = 200.0;
  ens.t2 = 2e-7;
  const EnvironmentConditions env{0.024, 0.0};

  const double b_res = res.f_r0 * constants::h / (ens.g_factor * constants::mu_B);
  CHECK(b_res == Approx(70.376e-3).epsilon(1e-4));  // vs the 72 mT quoted for the device

  std::vector<double> b_grid, f_grid;
  for (int i = 0; i < 41; ++i) b_grid.push_back(b_res + (i - 20) * 0.5e-3);
  for (int i = 0; i < 81; ++i) f_grid.push_back(res.f_r0 + (i - 40) * 1e6);

  const auto map = transmission_map(b_grid, f_grid, res, ens, env);
  REQUIRE(map.s21.size() == b_grid.size() * f_grid.size());

  SECTION("anticrossing centered at the resonance field") {
    std::size_t crow = 20;
    double min_lo = 1e9, min_hi = 1e9;
    double best_lo = 0, best_hi = 0;
    for (std::size_t j = 0; j < f_grid.size(); ++j) {
      const double m = std::abs(map.at(crow, j));
      if (f_grid[j] < res.f_r0 && m < min_lo) {
        min_lo = m;
        best_lo = f_grid[j];
      }
      if (f_grid[j] > res.f_r0 && m < min_hi) {
        min_hi = m;
        best_hi = f_grid[j];
      }
    }
    const double gn = collective_coupling(6.0, ens, {0.024, b_res});
    CHECK(best_hi - best_lo == Approx(2.0 * gn).epsilon(0.15));
  }

  SECTION("map symmetric under field reflection for a symmetric line") {
    for (std::size_t j = 0; j < f_grid.size(); ++j) {
      const double a = std::abs(map.at(8, j));
      const double b = std::abs(map.at(32, f_grid.size() - 1 - j));
      CHECK(a == Approx(b).margin(2e-3));
    }
  }

  SECTION("zero-coupling ensemble rows are all bare") {
    auto decoupled = ens;
    decoupled.coupling_dist = {CouplingShape::delta, 3.0, 1e-30, 1e-30, {}};
    const auto m2 = transmission_map({b_grid[0], b_grid[20]}, f_grid, res, decoupled, env);
    for (std::size_t j = 0; j < f_grid.size(); ++j) {
      CHECK(std::abs(m2.at(0, j) - s21_bare(f_grid[j], res)) < 1e-9);
      CHECK(std::abs(m2.at(0, j) - m2.at(1, j)) < 1e-12);
    }
  }

  SECTION("grid validation") {
    CHECK_THROWS_AS(transmission_map({}, f_grid, res, ens, env), ValidationError);
    CHECK_THROWS_AS(transmission_map({0.07, 0.07}, f_grid, res, ens, env), ValidationError);
  }
}

TEST_CASE("polariton frequencies") {
  ResonatorSpec res{1.97e9, 25e3, 100e3, 1e-9};

  SECTION("no coupling returns the bare pair") {
    const auto [lo, hi] = polariton_frequencies(res, 0.0, 40e6);
    CHECK(lo == Approx(1.97e9).epsilon(1e-12));
    CHECK(hi == Approx(1.97e9 + 40e6).epsilon(1e-12));
  }
  SECTION("zero detuning splits by 2 G_N") {
    const auto [lo, hi] = polariton_frequencies(res, 13.2e6, 0.0);
    CHECK(hi - lo == Approx(26.4e6).epsilon(1e-9));
  }
  SECTION("fig 8 scale point") {
    const auto [lo, hi] = polariton_frequencies(res, 9.5e6, 40e6);
    CHECK(hi - lo == Approx(44.2832e6).epsilon(1e-4));
    CHECK(hi >= lo);
  }
}

TEST_CASE("dip visibility vs kappa_c") {
  ResonatorSpec base{1.478e9, 25e3, 1.0, 1e-9};
  const double g_n = 9.5e6, gamma = 5e6;

  SECTION("strictly increasing over the plotted range") {
    std::vector<double> kcs;
    for (int i = 0; i < 13; ++i) kcs.push_back(10e3 * std::pow(10e6 / 10e3, i / 12.0));
    const auto curve = dip_visibility_curve(base, kcs, g_n, gamma);
    const auto& d = curve.column("dip_depth").re;
    for (std::size_t i = 1; i < d.size(); ++i) CHECK(d[i] > d[i - 1]);
  }
  SECTION("ground vs excited mode contrast") {
    const auto curve = dip_visibility_curve(base, {113e3, 3.175e6}, g_n, gamma);
    const auto& d = curve.column("dip_depth").re;
    CHECK(d[1] > 3.0 * d[0]);
  }
  SECTION("kappa_c -> 0 leaves the line invisible") {
    const auto curve = dip_visibility_curve(base, {1e-2}, g_n, gamma);
    CHECK(curve.column("dip_depth").re[0] < 1e-6);
  }
}
