#include <catch2/catch_amalgamated.hpp>

#include "lerspin/core.hpp"

using namespace lerspin;
using Catch::Approx;

namespace {

SpinEnsembleSpec basic_ensemble(double g_factor = 2.00) {
  SpinEnsembleSpec ens;
  ens.g_factor = g_factor;
  ens.n_spins = 5e12;
  ens.freq_dist = {LineShape::delta, 0.0, 0.0};
  ens.coupling_dist = {CouplingShape::delta, 3.0, 6.0, 6.0, {}};
  ens.t1 = 200.0;
  ens.t2 = 200e-9;
  return ens;
}

}  // namespace

TEST_CASE("constants are self-consistent") {
  CHECK(constants::hbar == Approx(constants::h / (2.0 * std::numbers::pi)).epsilon(1e-15));
  CHECK(constants::h > 0.0);
  CHECK(constants::mu_B > 0.0);
  CHECK(constants::k_B > 0.0);
  CHECK(constants::mu_0 > 0.0);
}

TEST_CASE("larmor frequency") {
  auto ens = basic_ensemble();

  SECTION("zero field gives zero frequency") {
    ens.g_factor = 2.0023;
    CHECK(larmor_frequency(ens, {0.01, 0.0}) == 0.0);
  }
  SECTION("g = 2 at 1 T is close to 28 GHz") {
    const double f = larmor_frequency(ens, {0.01, 1.0});
    CHECK(f == Approx(2.7992489872e10).epsilon(1e-9));
    CHECK(f == Approx(28e9).epsilon(0.01));
  }
  SECTION("93.7 mT operating point") {
    CHECK(larmor_frequency(ens, {0.01, 0.0937}) == Approx(2.6228963010e9).epsilon(1e-9));
  }
  SECTION("exactly linear in B") {
    for (double b : {1e-3, 0.05, 0.3, 1.0}) {
      EnvironmentConditions e1{0.01, b}, e2{0.01, 2.0 * b};
      CHECK(larmor_frequency(ens, e2) == Approx(2.0 * larmor_frequency(ens, e1)).epsilon(1e-14));
    }
  }
}

TEST_CASE("thermal polarization") {
  auto ens = basic_ensemble();

  SECTION("high-temperature limit vanishes") {
    CHECK(std::abs(thermal_polarization(ens, {1e6, 0.1})) < 1e-6);
  }
  SECTION("base temperature approaches full polarization") {
    const double p = thermal_polarization(ens, {0.011, 0.0937});
    CHECK(p == Approx(-0.9999785637).epsilon(1e-8));
    CHECK(p > -1.0);
  }
  SECTION("intermediate point, tanh of order one") {
    CHECK(thermal_polarization(ens, {0.048, 0.072}) == Approx(-0.7647553781).epsilon(1e-8));
  }
  SECTION("magnitude decreases with temperature") {
    double prev = 1.0;
    for (double t : {0.01, 0.05, 0.2, 1.0, 5.0}) {
      const double p = std::abs(thermal_polarization(ens, {t, 0.1}));
      CHECK(p < prev);
      prev = p;
    }
  }
  SECTION("rejects non-positive temperature") {
    CHECK_THROWS_AS(thermal_polarization(ens, {0.0, 0.1}), ValidationError);
  }
}

TEST_CASE("effective spin count") {
  auto ens = basic_ensemble();
  // field chosen so the Larmor frequency is 1.97 GHz
  const double b_res = 1.97e9 * constants::h / (2.00 * constants::mu_B);

  SECTION("full polarization at T -> 0") {
    ens.n_spins = 1e12;
    CHECK(effective_spin_count(ens, {1e-6, b_res}) == Approx(1e12).epsilon(1e-9));
  }
  SECTION("24 mK point") {
    CHECK(effective_spin_count(ens, {0.024, b_res}) ==
          Approx(0.9618223449 * ens.n_spins).epsilon(1e-8));
  }
  SECTION("1 K point") {
    CHECK(effective_spin_count(ens, {1.0, b_res}) ==
          Approx(0.0472373625 * ens.n_spins).epsilon(1e-8));
  }
  SECTION("never exceeds N") {
    for (double t : {0.001, 0.02, 0.5, 10.0})
      CHECK(effective_spin_count(ens, {t, 0.07}) <= ens.n_spins);
  }
  SECTION("monotone in T and B") {
    CHECK(effective_spin_count(ens, {0.5, 0.1}) < effective_spin_count(ens, {0.1, 0.1}));
    CHECK(effective_spin_count(ens, {0.1, 0.05}) < effective_spin_count(ens, {0.1, 0.1}));
  }
}

TEST_CASE("collective coupling") {
  auto ens = basic_ensemble();
  const double b_res = 1.97e9 * constants::h / (2.00 * constants::mu_B);

  SECTION("paper-scale point: 6 Hz, 5e12 spins, 24 mK") {
    const double gn = collective_coupling(6.0, ens, {0.024, b_res});
    CHECK(gn == Approx(1.31578122e7).epsilon(1e-7));
    CHECK(gn == Approx(13.2e6).epsilon(0.03));
  }
  SECTION("zero single-spin coupling") {
    CHECK(collective_coupling(0.0, ens, {0.3, 0.1}) == 0.0);
  }
  SECTION("low-inductance scale: 12 Hz, 1e11 spins, T -> 0") {
    ens.n_spins = 1e11;
    const double gn = collective_coupling(12.0, ens, {1e-6, b_res});
    CHECK(gn == Approx(3.79473319e6).epsilon(1e-8));
    CHECK(gn > 2e6);
    CHECK(gn < 4e6);
  }
  SECTION("G_N^2 ratio equals N_eff ratio") {
    const EnvironmentConditions cold{0.024, b_res}, warm{0.7, b_res};
    const double r_g = std::pow(collective_coupling(6.0, ens, cold), 2) /
                       std::pow(collective_coupling(6.0, ens, warm), 2);
    const double r_n = effective_spin_count(ens, cold) / effective_spin_count(ens, warm);
    CHECK(r_g == Approx(r_n).epsilon(1e-12));
  }
}

TEST_CASE("angular conversion round trip") {
  for (double f : {1.0, 1.97e9, 6.3e9, 2.5e-3}) {
    CHECK(from_angular(to_angular(f)) == Approx(f).epsilon(1e-15));
  }
}

TEST_CASE("linewidth parametrizations") {
  const double sigma = 10.01e6;
  const double hwhm = gaussian_hwhm_from_sigma(sigma);
  CHECK(hwhm == Approx(11.79e6).epsilon(1e-3));
  CHECK(gaussian_sigma_from_hwhm(hwhm) == Approx(sigma).epsilon(1e-12));
  const auto d = FrequencyDistribution::gaussian_from_hwhm(hwhm);
  CHECK(d.sigma == Approx(sigma).epsilon(1e-12));
  CHECK(d.hwhm() == Approx(hwhm).epsilon(1e-12));
  const FrequencyDistribution lor{LineShape::lorentzian, 5e6, 0.0};
  CHECK(lor.hwhm() == 5e6);
}

TEST_CASE("spec validation") {
  SECTION("resonator") {
    ResonatorSpec r{1.97e9, 25e3, 100e3, 1e-9};
    r.validate();
    CHECK(r.kappa_total() == Approx(125e3));
    CHECK(r.q_internal() == Approx(1.97e9 / 25e3));
    r.kappa_i = -1.0;
    CHECK_THROWS_AS(r.validate(), ValidationError);
  }
  SECTION("ensemble t2 bound") {
    auto ens = basic_ensemble();
    ens.t2 = 3.0 * ens.t1;
    CHECK_THROWS_AS(ens.validate(), ValidationError);
  }
  SECTION("frequency distribution zero sigma only for delta") {
    FrequencyDistribution d{LineShape::gaussian, 0.0, 0.0};
    CHECK_THROWS_AS(d.validate(), ValidationError);
    d.shape = LineShape::delta;
    d.validate();
  }
  SECTION("coupling distribution ordering") {
    CouplingDistribution c{CouplingShape::powerlaw, 3.0, 10.0, 5.0, {}};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {CouplingShape::powerlaw, 0.5, 1.0, 10.0, {}};
    CHECK_THROWS_AS(c.validate(), ValidationError);
  }
  SECTION("environment") {
    EnvironmentConditions e{0.0, 0.1};
    CHECK_THROWS_AS(e.validate(), ValidationError);
  }
}
