#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lerspin/fit_models.hpp"
#include "lerspin/relaxation.hpp"

using namespace lerspin;
using Catch::Approx;

namespace {

SpinEnsembleSpec constriction_ensemble() {
  SpinEnsembleSpec ens;
  ens.n_spins = 5.5e11;
  ens.freq_dist = {LineShape::gaussian, 10.01e6, 0.0};
  ens.coupling_dist = {CouplingShape::powerlaw, 3.0, 6.0, 100e3, {}};
  ens.t1 = 200.0;
  ens.t2 = 2e-7;
  return ens;
}

std::vector<double> log_grid(double lo, double hi, int n, bool with_zero = true) {
  std::vector<double> t;
  if (with_zero) t.push_back(0.0);
  for (int i = 0; i < n; ++i) t.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return t;
}

const EnvironmentConditions kEnv{0.010, 0.1};

}  // namespace

TEST_CASE("purcell rate") {
  SECTION("zero coupling returns the intrinsic rate") {
    CHECK(purcell_rate(0.0, 1.787e9, 1.831e9, 50e3, 200.0) == Approx(1.0 / 200.0).epsilon(1e-12));
  }

  SECTION("worked point: 100 kHz coupling at 44 MHz detuning") {
    const double rate = purcell_rate(100e3, 1.787e9, 1.831e9, 50e3, 200.0);
    // frozen from an independent high-precision evaluation of the dressed
    // rate formula
    CHECK(rate == Approx(1.627482940657133).epsilon(1e-9));
    CHECK(1.0 / rate == Approx(0.6144457647).epsilon(1e-8));
    // far-detuned closed form agrees to better than 1%
    const double g = to_angular(100e3), k = to_angular(50e3), d = to_angular(44e6);
    CHECK(rate - 1.0 / 200.0 == Approx(g * g * k / (d * d)).epsilon(0.01));
  }

  SECTION("enhancement scales exactly as G^2 over three decades") {
    const double base = purcell_rate(1e2, 1.787e9, 1.831e9, 50e3, 200.0) - 1.0 / 200.0;
    for (double g1 : {1e3, 1e4, 1e5}) {
      const double enh = purcell_rate(g1, 1.787e9, 1.831e9, 50e3, 200.0) - 1.0 / 200.0;
      CHECK(enh == Approx(base * std::pow(g1 / 1e2, 2)).epsilon(1e-9));
    }
  }

  SECTION("rate decreases monotonically as |Delta| grows") {
    double prev = 1e300;
    for (double d : {4e6, 10e6, 20e6, 44e6, 90e6}) {
      const double r = purcell_rate(100e3, 1.787e9, 1.787e9 + d, 50e3, 200.0);
      CHECK(r < prev);
      prev = r;
    }
  }

  SECTION("far-detuned window: G^2 k / D^2 within 1 percent") {
    const double fr = 1.787e9, kap = 50e3, t1 = 200.0;
    for (double d : {6e6, 10e6, 15e6}) {  // |D| > 100 kappa and < f_r/100
      const double rate = purcell_rate(1e4, fr, fr + d, kap, t1);
      const double g = to_angular(1e4), k = to_angular(kap), da = to_angular(d);
      CHECK(rate - 1.0 / t1 == Approx(g * g * k / (da * da)).epsilon(0.01));
    }
  }

  SECTION("rejects bad arguments") {
    CHECK_THROWS_AS(purcell_rate(1.0, 1e9, 1e9, 0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(purcell_rate(1.0, 1e9, 1e9, 1e3, 0.0), ValidationError);
  }
}

TEST_CASE("stretched exponential") {
  SECTION("plain exponential at stretch 1") {
    CHECK(stretched_exponential(10.0, 5.0, 10.0, 1.0) == Approx(5.0 / std::numbers::e_v<double>));
  }
  SECTION("initial value") {
    CHECK(stretched_exponential(0.0, 3.7, 2.0, 0.5) == 3.7);
  }
  SECTION("stretch 0.5 at t = 4 t1") {
    CHECK(stretched_exponential(4.0, 1.0, 1.0, 0.5) == Approx(0.1353352832).epsilon(1e-9));
  }
  SECTION("rejects stretch outside (0, 1]") {
    CHECK_THROWS_AS(stretched_exponential(1.0, 1.0, 1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(stretched_exponential(1.0, 1.0, 1.0, 1.2), ValidationError);
  }
}

TEST_CASE("ensemble decay trace") {
  ResonatorSpec res{1.787e9, 25e3, 25e3, 1e-9};
  auto ens = constriction_ensemble();

  SECTION("delta coupling distribution decays exponentially") {
    ens.coupling_dist = {CouplingShape::delta, 3.0, 50e3, 50e3, {}};
    ens.freq_dist = {LineShape::delta, 0.0, 0.0};
    const auto t = log_grid(1e-3, 20.0, 40);
    const auto trace = ensemble_decay_trace(res, ens, kEnv, 44e6, t);
    const double rate = purcell_rate(50e3, res.f_r0, res.f_r0 + 44e6, res.kappa_total(), ens.t1);
    for (std::size_t i = 0; i < t.size(); ++i)
      CHECK(trace.shift[i] == Approx(std::exp(-rate * t[i])).epsilon(1e-9));
    const auto rep = fit_stretched_exponential(trace.t_axis, trace.shift);
    CHECK(rep.value("stretch") == Approx(1.0).margin(0.01));
    CHECK(rep.value("t1_eff_s") == Approx(1.0 / rate).epsilon(0.01));
  }

  SECTION("two equal-weight rate groups average arithmetically") {
    // two couplings, same chi weight achieved with a delta frequency line
    ens.freq_dist = {LineShape::delta, 0.0, 0.0};
    ens.coupling_dist.shape = CouplingShape::tabulated;
    ens.coupling_dist.table = {{30e3, 0.5}, {90e3, 0.5}};
    const auto t = log_grid(1e-3, 50.0, 30);
    const auto trace = ensemble_decay_trace(res, ens, kEnv, 44e6, t);
    const double r1 = purcell_rate(30e3, res.f_r0, res.f_r0 + 44e6, res.kappa_total(), ens.t1);
    const double r2 = purcell_rate(90e3, res.f_r0, res.f_r0 + 44e6, res.kappa_total(), ens.t1);
    // chi scales as G^2, so weights are g^2-weighted
    const double w1 = 0.5 * 9e8, w2 = 0.5 * 81e8;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double expect =
          (w1 * std::exp(-r1 * t[i]) + w2 * std::exp(-r2 * t[i])) / (w1 + w2);
      CHECK(trace.shift[i] == Approx(expect).epsilon(1e-9));
    }
  }

  SECTION("paper-scale parameters: fast component and long tail") {
    const auto t = log_grid(1e-4, 1000.0, 90);
    const auto trace = ensemble_decay_trace(res, ens, kEnv, 44e6, t);
    CHECK(trace.shift[0] == Approx(1.0).margin(1e-9));
    // monotone non-increasing and bounded
    for (std::size_t i = 1; i < t.size(); ++i) {
      CHECK(trace.shift[i] <= trace.shift[i - 1] + 1e-12);
      CHECK(trace.shift[i] >= -1e-12);
    }
    // detectable decay inside 10-100 ms, not before
    auto at = [&](double tv) {
      std::size_t best = 0;
      for (std::size_t i = 0; i < t.size(); ++i)
        if (std::abs(t[i] - tv) < std::abs(t[best] - tv)) best = i;
      return trace.shift[best];
    };
    CHECK(1.0 - at(0.01) < 0.01);
    CHECK(1.0 - at(0.1) > 0.01);
    // slow tail survives to ~100 s
    CHECK(at(100.0) > 0.05);
    CHECK(at(100.0) < 0.5);
  }

  SECTION("smaller detuning decays faster, pointwise") {
    const auto t = log_grid(1e-2, 10.0, 30, false);
    const auto t44 = ensemble_decay_trace(res, ens, kEnv, 44e6, t);
    const auto t30 = ensemble_decay_trace(res, ens, kEnv, 30e6, t);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t30.shift[i] < t44.shift[i]);
  }

  SECTION("single-cell trace matches stretched exponential with x = 1") {
    ens.freq_dist = {LineShape::delta, 0.0, 0.0};
    ens.coupling_dist = {CouplingShape::delta, 3.0, 80e3, 80e3, {}};
    const auto t = log_grid(1e-3, 10.0, 25);
    const auto trace = ensemble_decay_trace(res, ens, kEnv, 44e6, t);
    const double rate = purcell_rate(80e3, res.f_r0, res.f_r0 + 44e6, res.kappa_total(), ens.t1);
    for (std::size_t i = 0; i < t.size(); ++i)
      CHECK(trace.shift[i] ==
            Approx(stretched_exponential(t[i], 1.0, 1.0 / rate, 1.0)).epsilon(1e-9));
  }

  SECTION("stretch decreases as the coupling distribution broadens") {
    const auto t = log_grid(1e-3, 300.0, 60);
    double prev_stretch = 1.1;
    for (double ratio : {1.0, 10.0, 1e2, 1e4}) {
      auto e = ens;
      e.coupling_dist = {CouplingShape::powerlaw, 3.0, 100e3 / ratio, 100e3, {}};
      if (ratio == 1.0) e.coupling_dist.shape = CouplingShape::delta;
      const auto trace = ensemble_decay_trace(res, e, kEnv, 44e6, t);
      const auto rep = fit_stretched_exponential(trace.t_axis, trace.shift);
      CHECK(rep.value("stretch") < prev_stretch);
      prev_stretch = rep.value("stretch");
    }
    CHECK(prev_stretch < 0.9);
  }

  SECTION("grid validation") {
    CHECK_THROWS_AS(ensemble_decay_trace(res, ens, kEnv, 44e6, {}), ValidationError);
    CHECK_THROWS_AS(ensemble_decay_trace(res, ens, kEnv, 44e6, {0.0, 0.0}), ValidationError);
  }
}

TEST_CASE("g_max inference") {
  ResonatorSpec res{1.787e9, 25e3, 25e3, 1e-9};
  auto ens = constriction_ensemble();
  const auto t = log_grid(1e-3, 300.0, 45);

  SECTION("two-detuning round trip from a 10 kHz initial guess") {
    std::vector<DecayTrace> traces = {ensemble_decay_trace(res, ens, kEnv, 44e6, t),
                                      ensemble_decay_trace(res, ens, kEnv, 60e6, t)};
    const auto [gmax, rep] = infer_gmax(traces, ens, res, 200.0, 10e3);
    REQUIRE(rep.converged);
    CHECK(gmax == Approx(100e3).epsilon(0.05));
  }

  SECTION("flat traces are rejected as unidentifiable") {
    DecayTrace flat;
    flat.t_axis = t;
    flat.shift.assign(t.size(), 1.0);
    flat.detuning_avg = 44e6;
    const auto [gmax, rep] = infer_gmax({flat}, ens, res, 200.0, 10e3);
    CHECK_FALSE(rep.converged);
    CHECK(rep.message.find("degenerate") != std::string::npos);
  }
}
