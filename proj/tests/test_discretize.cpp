#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "lerspin/discretize.hpp"

using namespace lerspin;
using Catch::Approx;

TEST_CASE("frequency boxes") {
  FrequencyDistribution g{LineShape::gaussian, 10.01e6, 0.0};

  SECTION("single box for delta shape") {
    const auto boxes = frequency_boxes({LineShape::delta, 0.0, 2e3}, 1.83e9, 51);
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0].f_spin == Approx(1.83e9 + 2e3));
    CHECK(boxes[0].weight == 1.0);
  }

  SECTION("weights sum to one and mean matches (quadrature check)") {
    const auto boxes = frequency_boxes(g, 2.0e9, 51);
    REQUIRE(boxes.size() == 51);
    double sum = 0.0, mean = 0.0;
    for (const auto& b : boxes) {
      sum += b.weight;
      mean += b.weight * b.f_spin;
    }
    CHECK(sum == Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(mean - 2.0e9) < 1e-6 * g.sigma);
  }

  SECTION("second moment approaches sigma^2 as boxes refine") {
    const auto boxes = frequency_boxes(g, 0.0, 401);
    double var = 0.0;
    for (const auto& b : boxes) var += b.weight * b.f_spin * b.f_spin;
    // +-5 sigma truncation of a Gaussian retains nearly all the variance
    CHECK(var == Approx(g.sigma * g.sigma).epsilon(2e-3));
  }

  SECTION("center offset shifts every box") {
    FrequencyDistribution off = g;
    off.center_offset = 3e6;
    const auto a = frequency_boxes(g, 1e9, 21);
    const auto b = frequency_boxes(off, 1e9, 21);
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(b[i].f_spin - a[i].f_spin == Approx(3e6).epsilon(1e-9));
  }

  SECTION("lorentzian boxes normalize too") {
    const auto boxes = frequency_boxes({LineShape::lorentzian, 5e6, 0.0}, 1e9, 101);
    double sum = 0.0;
    for (const auto& b : boxes) sum += b.weight;
    CHECK(sum == Approx(1.0).epsilon(1e-12));
  }

  SECTION("rejects bad box count") {
    CHECK_THROWS_AS(frequency_boxes(g, 1e9, 0), ValidationError);
  }
}

TEST_CASE("coupling bins") {
  CouplingDistribution pl{CouplingShape::powerlaw, 3.0, 6.0, 1e5, {}};

  SECTION("mass normalization") {
    const auto bins = coupling_bins(pl, 40);
    REQUIRE(bins.size() == 40);
    double sum = 0.0;
    for (const auto& b : bins) sum += b.weight;
    CHECK(sum == Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 1; i < bins.size(); ++i) CHECK(bins[i].g1 > bins[i - 1].g1);
  }

  SECTION("binned second moment matches the closed form for exponent 3") {
    const auto bins = coupling_bins(pl, 40);
    double m2 = 0.0;
    for (const auto& b : bins) m2 += b.weight * b.g1 * b.g1;
    const double analytic =
        std::log(pl.g_max / pl.g_min) /
        ((std::pow(pl.g_min, -2.0) - std::pow(pl.g_max, -2.0)) / 2.0);
    CHECK(analytic == Approx(6.99923954e2).epsilon(1e-8));
    CHECK(m2 == Approx(analytic).epsilon(1e-3));
  }

  SECTION("binned second moment matches brute-force quadrature for exponent 2.4") {
    CouplingDistribution p2{CouplingShape::powerlaw, 2.4, 2.0, 5e4, {}};
    const auto bins = coupling_bins(p2, 60);
    double m2 = 0.0;
    for (const auto& b : bins) m2 += b.weight * b.g1 * b.g1;
    // brute-force integral of G^2 p(G) on a dense log grid
    const int n = 2'000'000;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = p2.g_min * std::pow(p2.g_max / p2.g_min, (i + 0.5) / n);
      const double dg = g * std::log(p2.g_max / p2.g_min) / n;
      const double w = std::pow(g, -p2.exponent) * dg;
      num += w * g * g;
      den += w;
    }
    CHECK(m2 == Approx(num / den).epsilon(1e-3));
  }

  SECTION("delta distribution gives one bin") {
    const auto bins = coupling_bins({CouplingShape::delta, 3.0, 1e5, 1e5, {}}, 40);
    REQUIRE(bins.size() == 1);
    CHECK(bins[0].g1 == 1e5);
    CHECK(bins[0].weight == 1.0);
  }

  SECTION("tabulated passes through normalized") {
    CouplingDistribution tab;
    tab.shape = CouplingShape::tabulated;
    tab.table = {{10.0, 2.0}, {100.0, 6.0}};
    const auto bins = coupling_bins(tab, 5);
    REQUIRE(bins.size() == 2);
    CHECK(bins[0].weight == Approx(0.25));
    CHECK(bins[1].weight == Approx(0.75));
  }

  SECTION("mean square closed form agrees with bins") {
    CHECK(coupling_mean_square(pl) == Approx(6.99923954e2).epsilon(1e-8));
    CHECK(coupling_mean_square({CouplingShape::delta, 3.0, 50.0, 50.0, {}}) == Approx(2500.0));
  }
}
