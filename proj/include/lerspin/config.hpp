#pragma once

// Scenario configuration: strict JSON parsing (unknown keys rejected),
// dispatch to the simulation modules, CSV/SVG output with provenance
// metadata. Exit codes: 0 success, 2 parse error, 3 validation error,
// 4 numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lerspin/core.hpp"
#include "lerspin/csv.hpp"
#include "lerspin/dispersive.hpp"
#include "lerspin/dynamics.hpp"
#include "lerspin/fields.hpp"
#include "lerspin/fit.hpp"
#include "lerspin/fit_models.hpp"
#include "lerspin/relaxation.hpp"
#include "lerspin/svg.hpp"
#include "lerspin/transmission.hpp"

namespace lerspin {

inline constexpr const char* version_string = "0.3.0";

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace cfg {

inline void check_keys(const json& j, const std::vector<std::string>& allowed,
                       const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

inline double require_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  if (!j[key].is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return j[key].get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback) {
  return j.contains(key) ? j[key].get<double>() : fallback;
}

inline std::string require_string(const json& j, const std::string& key,
                                  const std::string& where) {
  if (!j.contains(key) || !j[key].is_string())
    throw ConfigError(where + ": missing string key '" + key + "'");
  return j[key].get<std::string>();
}

/// Grid: either {"values": [...]} or {"min":, "max":, "n":, "spacing": "linear"|"log"}.
inline std::vector<double> parse_grid(const json& j, const std::string& where) {
  if (j.is_array()) return j.get<std::vector<double>>();
  check_keys(j, {"values", "min", "max", "n", "spacing"}, where);
  if (j.contains("values")) return j["values"].get<std::vector<double>>();
  const double lo = require_number(j, "min", where);
  const double hi = require_number(j, "max", where);
  const int n = static_cast<int>(require_number(j, "n", where));
  if (n < 1) throw ConfigError(where + ": n must be >= 1");
  const std::string spacing = j.contains("spacing") ? j["spacing"].get<std::string>() : "linear";
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  if (spacing == "log") {
    if (!(lo > 0.0)) throw ConfigError(where + ": log spacing needs min > 0");
    for (int i = 0; i < n; ++i)
      out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  } else if (spacing == "linear") {
    for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  } else {
    throw ConfigError(where + ": spacing must be 'linear' or 'log'");
  }
  return out;
}

inline ResonatorSpec parse_resonator(const json& j) {
  check_keys(j, {"f_r0_Hz", "kappa_i_Hz", "kappa_c_Hz", "inductance_H"}, "resonator");
  ResonatorSpec r;
  r.f_r0 = require_number(j, "f_r0_Hz", "resonator");
  r.kappa_i = require_number(j, "kappa_i_Hz", "resonator");
  r.kappa_c = require_number(j, "kappa_c_Hz", "resonator");
  r.inductance = number_or(j, "inductance_H", 1e-9);
  r.validate();
  return r;
}

inline FrequencyDistribution parse_freq_dist(const json& j) {
  check_keys(j, {"shape", "sigma_Hz", "center_offset_Hz"}, "ensemble.freq_dist");
  FrequencyDistribution d;
  const std::string shape = require_string(j, "shape", "ensemble.freq_dist");
  if (shape == "gaussian") d.shape = LineShape::gaussian;
  else if (shape == "lorentzian") d.shape = LineShape::lorentzian;
  else if (shape == "delta") d.shape = LineShape::delta;
  else throw ConfigError("ensemble.freq_dist.shape: unknown shape '" + shape + "'");
  d.sigma = number_or(j, "sigma_Hz", 0.0);
  d.center_offset = number_or(j, "center_offset_Hz", 0.0);
  d.validate();
  return d;
}

inline CouplingDistribution parse_coupling_dist(const json& j) {
  check_keys(j, {"shape", "exponent", "g_min_Hz", "g_max_Hz", "g_Hz", "table"},
             "ensemble.coupling_dist");
  CouplingDistribution d;
  const std::string shape = require_string(j, "shape", "ensemble.coupling_dist");
  if (shape == "powerlaw") {
    d.shape = CouplingShape::powerlaw;
    d.exponent = number_or(j, "exponent", 3.0);
    d.g_min = require_number(j, "g_min_Hz", "ensemble.coupling_dist");
    d.g_max = require_number(j, "g_max_Hz", "ensemble.coupling_dist");
  } else if (shape == "delta") {
    d.shape = CouplingShape::delta;
    const double g = require_number(j, "g_Hz", "ensemble.coupling_dist");
    d.g_min = d.g_max = g;
  } else if (shape == "tabulated") {
    d.shape = CouplingShape::tabulated;
    if (!j.contains("table") || !j["table"].is_array())
      throw ConfigError("ensemble.coupling_dist: tabulated shape needs 'table'");
    for (const auto& row : j["table"]) {
      if (!row.is_array() || row.size() != 2)
        throw ConfigError("ensemble.coupling_dist.table: rows must be [g_Hz, weight]");
      d.table.push_back({row[0].get<double>(), row[1].get<double>()});
    }
  } else {
    throw ConfigError("ensemble.coupling_dist.shape: unknown shape '" + shape + "'");
  }
  d.validate();
  return d;
}

inline SpinEnsembleSpec parse_ensemble(const json& j) {
  check_keys(j, {"g_factor", "n_spins", "freq_dist", "coupling_dist", "t1_s", "t2_s"}, "ensemble");
  SpinEnsembleSpec e;
  e.g_factor = number_or(j, "g_factor", 2.00);
  e.n_spins = require_number(j, "n_spins", "ensemble");
  if (!j.contains("freq_dist")) throw ConfigError("ensemble: missing freq_dist");
  e.freq_dist = parse_freq_dist(j["freq_dist"]);
  if (!j.contains("coupling_dist")) throw ConfigError("ensemble: missing coupling_dist");
  e.coupling_dist = parse_coupling_dist(j["coupling_dist"]);
  e.t1 = require_number(j, "t1_s", "ensemble");
  e.t2 = require_number(j, "t2_s", "ensemble");
  e.validate();
  return e;
}

inline EnvironmentConditions parse_environment(const json& j) {
  check_keys(j, {"temperature_K", "b_field_T"}, "environment");
  EnvironmentConditions env;
  env.temperature = require_number(j, "temperature_K", "environment");
  env.b_field = number_or(j, "b_field_T", 0.0);
  env.validate();
  return env;
}

inline PulseSpec parse_pulse(const json& j) {
  check_keys(j,
             {"shape", "f_carrier_Hz", "amplitude_scale", "power_W", "t_pump_s", "sigma_t_s",
              "t_gap_s"},
             "pulse");
  PulseSpec p;
  const std::string shape = require_string(j, "shape", "pulse");
  if (shape == "square_triple") p.shape = PulseShape::square_triple;
  else if (shape == "gaussian") p.shape = PulseShape::gaussian;
  else if (shape == "square_single") p.shape = PulseShape::square_single;
  else throw ConfigError("pulse.shape: unknown shape '" + shape + "'");
  p.f_carrier = require_number(j, "f_carrier_Hz", "pulse");
  p.amplitude_scale = number_or(j, "amplitude_scale", 1.0);
  p.power_w = number_or(j, "power_W", 0.0);
  p.t_pump = require_number(j, "t_pump_s", "pulse");
  p.sigma_t = number_or(j, "sigma_t_s", 0.0);
  p.t_gap = number_or(j, "t_gap_s", -1.0);
  p.validate();
  return p;
}

/// FNV-1a 64 over the canonical (sorted-key) dump of the config.
inline std::string config_hash(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cfg

struct ScenarioResult {
  int exit_code = 0;
  std::vector<std::string> files;
  std::string error;
};

namespace scenario_detail {

struct OutputSpec {
  std::filesystem::path dir;
  std::string basename;
  bool svg = false;
};

inline OutputSpec parse_output(const json& j) {
  cfg::check_keys(j, {"dir", "basename", "svg"}, "output");
  OutputSpec o;
  o.dir = j.contains("dir") ? std::filesystem::path(j["dir"].get<std::string>())
                            : std::filesystem::path(".");
  o.basename = j.contains("basename") ? j["basename"].get<std::string>() : "run";
  o.svg = j.contains("svg") && j["svg"].get<bool>();
  return o;
}

inline void stamp(TraceSet& t, const std::string& hash) {
  t.metadata["config_hash"] = hash;
  t.metadata["generator"] = std::string("lerspin ") + version_string;
}

inline std::string run_transmit(const json& j, const json& root, const OutputSpec& out,
                                const std::string& hash, std::vector<std::string>& files) {
  cfg::check_keys(j, {"b_T", "f_Hz", "n_boxes", "line"}, "transmit");
  const auto b_grid = cfg::parse_grid(j.at("b_T"), "transmit.b_T");
  const auto f_grid = cfg::parse_grid(j.at("f_Hz"), "transmit.f_Hz");
  const ResonatorSpec res = cfg::parse_resonator(root.at("resonator"));
  const SpinEnsembleSpec ens = cfg::parse_ensemble(root.at("ensemble"));
  const EnvironmentConditions env = cfg::parse_environment(root.at("environment"));
  TransmissionOptions opt;
  if (j.contains("n_boxes")) opt.n_boxes = j["n_boxes"].get<int>();
  if (j.contains("line") && j["line"].get<std::string>() == "lorentzian_analytic")
    opt.line = SpinLineTreatment::lorentzian_analytic;

  TransmissionMap map = transmission_map(b_grid, f_grid, res, ens, env, opt);
  map.metadata = "config_hash=" + hash;
  const auto csv = out.dir / (out.basename + "_map.csv");
  write_map_csv(map, csv.string());
  files.push_back(csv.string());
  if (out.svg) {
    const auto svg = out.dir / (out.basename + "_map.svg");
    write_map_svg(map, svg.string());
    files.push_back(svg.string());
  }
  return {};
}

inline std::string run_dispersive(const json& j, const json& root, const OutputSpec& out,
                                  const std::string& hash, std::vector<std::string>& files) {
  cfg::check_keys(j, {"mode", "b_field_T", "t_K", "f_pump_Hz", "bandwidth_Hz", "n_boxes"},
                  "dispersive");
  const ResonatorSpec res = cfg::parse_resonator(root.at("resonator"));
  const SpinEnsembleSpec ens = cfg::parse_ensemble(root.at("ensemble"));
  const std::string mode = cfg::require_string(j, "mode", "dispersive");
  TraceSet trace;
  if (mode == "thermal") {
    const double b = cfg::require_number(j, "b_field_T", "dispersive");
    const auto t_grid = cfg::parse_grid(j.at("t_K"), "dispersive.t_K");
    const int n_boxes = j.contains("n_boxes") ? j["n_boxes"].get<int>() : 101;
    trace = thermal_shift_curve(res, ens, b, t_grid, n_boxes);
  } else if (mode == "spectroscopy") {
    const EnvironmentConditions env = cfg::parse_environment(root.at("environment"));
    const auto f_grid = cfg::parse_grid(j.at("f_pump_Hz"), "dispersive.f_pump_Hz");
    const double bw = cfg::number_or(j, "bandwidth_Hz", 20e3);
    trace = spectroscopy_scan(res, ens, env, f_grid, bw);
  } else {
    throw ConfigError("dispersive.mode: expected 'thermal' or 'spectroscopy'");
  }
  stamp(trace, hash);
  const auto csv = out.dir / (out.basename + "_trace.csv");
  write_trace_csv(trace, csv.string());
  files.push_back(csv.string());
  if (out.svg) {
    const auto svg = out.dir / (out.basename + "_trace.svg");
    write_line_svg(trace, svg.string());
    files.push_back(svg.string());
  }
  return {};
}

inline std::string run_relax(const json& j, const json& root, const OutputSpec& out,
                             const std::string& hash, std::vector<std::string>& files) {
  cfg::check_keys(j, {"delta_Hz", "t_s", "n_freq_boxes", "n_coupling_bins", "fit_stretched"},
                  "relax");
  const ResonatorSpec res = cfg::parse_resonator(root.at("resonator"));
  const SpinEnsembleSpec ens = cfg::parse_ensemble(root.at("ensemble"));
  const EnvironmentConditions env = cfg::parse_environment(root.at("environment"));
  const auto deltas = cfg::parse_grid(j.at("delta_Hz"), "relax.delta_Hz");
  const auto t_grid = cfg::parse_grid(j.at("t_s"), "relax.t_s");
  DecayOptions opt;
  if (j.contains("n_freq_boxes")) opt.n_freq_boxes = j["n_freq_boxes"].get<int>();
  if (j.contains("n_coupling_bins")) opt.n_coupling_bins = j["n_coupling_bins"].get<int>();
  const bool do_fit = j.contains("fit_stretched") && j["fit_stretched"].get<bool>();

  TraceSet trace;
  trace.axis_name = "t_s";
  trace.axis_values = t_grid;
  TraceSet fits;
  fits.axis_name = "delta_Hz";
  fits.axis_values = deltas;
  auto* t1eff = do_fit ? &fits.add_column("t1_eff_s") : nullptr;
  auto* stretch = do_fit ? &fits.add_column("stretch") : nullptr;
  for (std::size_t d = 0; d < deltas.size(); ++d) {
    const DecayTrace dt = ensemble_decay_trace(res, ens, env, deltas[d], t_grid, opt);
    auto& col = trace.add_column("shift_delta" + std::to_string(d));
    col.re = dt.shift;
    if (do_fit) {
      const FitReport rep = fit_stretched_exponential(dt.t_axis, dt.shift);
      t1eff->re[d] = rep.value("t1_eff_s");
      stretch->re[d] = rep.value("stretch");
    }
  }
  stamp(trace, hash);
  const auto csv = out.dir / (out.basename + "_decay.csv");
  write_trace_csv(trace, csv.string());
  files.push_back(csv.string());
  if (do_fit) {
    stamp(fits, hash);
    const auto fcsv = out.dir / (out.basename + "_stretched_fits.csv");
    write_trace_csv(fits, fcsv.string());
    files.push_back(fcsv.string());
  }
  if (out.svg) {
    const auto svg = out.dir / (out.basename + "_decay.svg");
    write_line_svg(trace, svg.string());
    files.push_back(svg.string());
  }
  return {};
}

inline std::string run_dynamics(const json& j, const json& root, const OutputSpec& out,
                                const std::string& hash, std::vector<std::string>& files) {
  cfg::check_keys(j,
                  {"mode", "durations_s", "readout_delay_s", "n_disc", "n_coup", "g1_line_Hz",
                   "dt_max_s", "mirror_f_carrier_Hz", "fit_rabi"},
                  "dynamics");
  const ResonatorSpec res = cfg::parse_resonator(root.at("resonator"));
  const SpinEnsembleSpec ens = cfg::parse_ensemble(root.at("ensemble"));
  const EnvironmentConditions env = cfg::parse_environment(root.at("environment"));
  const PulseSpec pulse = cfg::parse_pulse(root.at("pulse"));
  const auto durations = cfg::parse_grid(j.at("durations_s"), "dynamics.durations_s");
  const int n_disc = j.contains("n_disc") ? j["n_disc"].get<int>() : 51;
  const int n_coup = j.contains("n_coup") ? j["n_coup"].get<int>() : 1;
  const double g1_line = cfg::number_or(j, "g1_line_Hz", 0.0);
  const double dt_max = cfg::require_number(j, "dt_max_s", "dynamics");
  const double readout_delay =
      cfg::number_or(j, "readout_delay_s", 8.0 / (std::numbers::pi * res.kappa_total()));

  DiscretizedEnsemble de = discretize(ens, env, n_disc, n_coup, uniform_g1_line(g1_line));
  TraceSet trace = shift_trace_vs_duration(de, res, pulse, durations, readout_delay, dt_max);

  const std::string mode = j.contains("mode") ? j["mode"].get<std::string>() : "shift_trace";
  if (mode == "rabi") {
    PulseSpec mirror = pulse;
    mirror.f_carrier = j.contains("mirror_f_carrier_Hz")
                           ? j["mirror_f_carrier_Hz"].get<double>()
                           : 2.0 * res.f_r0 - pulse.f_carrier;
    TraceSet mtrace = shift_trace_vs_duration(de, res, mirror, durations, readout_delay, dt_max);
    TraceSet diff = mirror_subtract(trace, mtrace);
    trace.add_column("shift_mirror_Hz").re = mtrace.column("shift_Hz").re;
    trace.add_column("shift_diff_Hz").re = diff.column("shift_Hz").re;
    if (j.contains("fit_rabi") && j["fit_rabi"].get<bool>()) {
      const FitReport rep = fit_damped_sine(diff.axis_values, diff.column("shift_Hz").re);
      trace.metadata["rabi_f_Hz"] = format_double(rep.value("f_rabi_Hz"));
      trace.metadata["rabi_tau_s"] = format_double(rep.value("tau_s"));
      trace.metadata["rabi_converged"] = rep.converged ? "true" : "false";
    }
  } else if (mode != "shift_trace") {
    throw ConfigError("dynamics.mode: expected 'shift_trace' or 'rabi'");
  }

  stamp(trace, hash);
  const auto csv = out.dir / (out.basename + "_shift.csv");
  write_trace_csv(trace, csv.string());
  files.push_back(csv.string());
  if (out.svg) {
    const auto svg = out.dir / (out.basename + "_shift.svg");
    write_line_svg(trace, svg.string());
    files.push_back(svg.string());
  }
  return {};
}

inline WireGeometry load_geometry(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("fields.geometry_file: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("fields.geometry_file: " + std::string(e.what()));
  }
  cfg::check_keys(j, {"name", "segments"}, "geometry");
  WireGeometry g;
  if (j.contains("name")) g.name = j["name"].get<std::string>();
  if (!j.contains("segments") || !j["segments"].is_array())
    throw ConfigError("geometry: missing 'segments' array");
  for (const auto& s : j["segments"]) {
    cfg::check_keys(s, {"start", "end", "width", "thickness"}, "geometry.segment");
    WireSegment seg;
    const auto st = s.at("start").get<std::vector<double>>();
    const auto en = s.at("end").get<std::vector<double>>();
    if (st.size() != 3 || en.size() != 3)
      throw ConfigError("geometry.segment: start/end must be [x, y, z]");
    seg.start = {st[0], st[1], st[2]};
    seg.end = {en[0], en[1], en[2]};
    seg.width = cfg::require_number(s, "width", "geometry.segment");
    seg.thickness = cfg::number_or(s, "thickness", 0.0);
    g.segments.push_back(seg);
  }
  g.validate();
  return g;
}

inline std::string run_fields(const json& j, const json& root, const OutputSpec& out,
                              const std::string& hash, std::vector<std::string>& files) {
  cfg::check_keys(j,
                  {"geometry_file", "points", "grid", "current_A", "static_dir", "g_factor",
                   "histogram_bins"},
                  "fields");
  const WireGeometry geom = load_geometry(cfg::require_string(j, "geometry_file", "fields"));

  std::vector<Vec3> pts;
  if (j.contains("points")) {
    for (const auto& p : j["points"]) {
      const auto v = p.get<std::vector<double>>();
      if (v.size() != 3) throw ConfigError("fields.points: entries must be [x, y, z]");
      pts.push_back({v[0], v[1], v[2]});
    }
  } else if (j.contains("grid")) {
    const auto& g = j["grid"];
    cfg::check_keys(g, {"x_m", "y_m", "z_m"}, "fields.grid");
    const auto xs = cfg::parse_grid(g.at("x_m"), "fields.grid.x_m");
    const auto ys = cfg::parse_grid(g.at("y_m"), "fields.grid.y_m");
    const auto zs = cfg::parse_grid(g.at("z_m"), "fields.grid.z_m");
    for (double z : zs)
      for (double y : ys)
        for (double x : xs) pts.push_back({x, y, z});
  } else {
    throw ConfigError("fields: needs 'points' or 'grid'");
  }

  Vec3 static_dir{1, 0, 0};
  if (j.contains("static_dir")) {
    const auto v = j["static_dir"].get<std::vector<double>>();
    if (v.size() != 3) throw ConfigError("fields.static_dir: must be [x, y, z]");
    static_dir = {v[0], v[1], v[2]};
  }

  CouplingMap map;
  const double g_factor = cfg::number_or(j, "g_factor", 2.00);
  if (j.contains("current_A")) {
    map = bfield_map(geom, j["current_A"].get<double>(), pts, static_dir);
    for (std::size_t i = 0; i < map.grid.size(); ++i)
      map.g1[i] = map.masked[i] ? std::numeric_limits<double>::quiet_NaN()
                                : g_factor * constants::mu_B * map.b_perp[i] / constants::h;
  } else {
    const ResonatorSpec res = cfg::parse_resonator(root.at("resonator"));
    map = coupling_map(geom, res, g_factor, pts, static_dir);
  }

  const auto csv = out.dir / (out.basename + "_fieldmap.csv");
  write_coupling_map_csv(map, csv.string());
  files.push_back(csv.string());

  const int hbins = static_cast<int>(cfg::number_or(j, "histogram_bins", 0));
  if (hbins > 0) {
    const auto hist = coupling_histogram(map, [](const Vec3&) { return true; }, hbins);
    TraceSet ht;
    ht.axis_name = "g1_Hz";
    for (const auto& [g, w] : hist.distribution.table) ht.axis_values.push_back(g);
    auto& wcol = ht.add_column("weight");
    for (std::size_t i = 0; i < hist.distribution.table.size(); ++i)
      wcol.re[i] = hist.distribution.table[i].second;
    ht.metadata["tail_slope"] = format_double(hist.tail_slope);
    ht.metadata["config_hash"] = hash;
    const auto hcsv = out.dir / (out.basename + "_histogram.csv");
    write_trace_csv(ht, hcsv.string());
    files.push_back(hcsv.string());
  }
  return {};
}

inline std::string run_fit(const json& j, const json& root, const OutputSpec& out,
                           const std::string& hash, std::uint64_t seed,
                           std::vector<std::string>& files) {
  cfg::check_keys(j, {"kind", "data", "init", "synth", "factor4"}, "fit");
  const std::string kind = cfg::require_string(j, "kind", "fit");

  // optional synthetic data generation (seeded), used by the figure scripts
  std::string data_path = j.contains("data") ? j["data"].get<std::string>() : "";
  if (j.contains("synth")) {
    const auto& s = j["synth"];
    cfg::check_keys(s, {"model", "params", "noise", "t_s", "f_Hz"}, "fit.synth");
    const std::string model = cfg::require_string(s, "model", "fit.synth");
    fitdetail::SplitMix64 rng(seed);
    TraceSet t;
    if (model == "damped_sine") {
      const auto& p = s.at("params");
      cfg::check_keys(p, {"amplitude", "f_rabi_Hz", "tau_s", "phase"}, "fit.synth.params");
      const double amp = cfg::require_number(p, "amplitude", "fit.synth.params");
      const double fr = cfg::require_number(p, "f_rabi_Hz", "fit.synth.params");
      const double tau = cfg::require_number(p, "tau_s", "fit.synth.params");
      const double ph = cfg::number_or(p, "phase", 0.0);
      const double noise = cfg::number_or(s, "noise", 0.0);
      t.axis_name = "t_s";
      t.axis_values = cfg::parse_grid(s.at("t_s"), "fit.synth.t_s");
      auto& col = t.add_column("shift_Hz");
      for (std::size_t i = 0; i < t.axis_values.size(); ++i) {
        const double tv = t.axis_values[i];
        col.re[i] = amp * std::exp(-4.0 * tv / tau) * std::sin(4.0 * to_angular(fr) * tv + ph) +
                    noise * amp * rng.normal();
      }
    } else if (model == "gaussian_line") {
      const auto& p = s.at("params");
      cfg::check_keys(p, {"center_Hz", "sigma_Hz", "amplitude", "offset"}, "fit.synth.params");
      const double c0 = cfg::require_number(p, "center_Hz", "fit.synth.params");
      const double sg = cfg::require_number(p, "sigma_Hz", "fit.synth.params");
      const double amp = cfg::require_number(p, "amplitude", "fit.synth.params");
      const double off = cfg::number_or(p, "offset", 0.0);
      const double noise = cfg::number_or(s, "noise", 0.0);
      t.axis_name = "f_Hz";
      t.axis_values = cfg::parse_grid(s.at("f_Hz"), "fit.synth.f_Hz");
      auto& col = t.add_column("shift_Hz");
      for (std::size_t i = 0; i < t.axis_values.size(); ++i) {
        const double u = (t.axis_values[i] - c0) / sg;
        col.re[i] = amp * std::exp(-0.5 * u * u) + off + noise * amp * rng.normal();
      }
    } else {
      throw ConfigError("fit.synth.model: unknown model '" + model + "'");
    }
    stamp(t, hash);
    const auto synth_csv = out.dir / (out.basename + "_synth.csv");
    write_trace_csv(t, synth_csv.string());
    files.push_back(synth_csv.string());
    data_path = synth_csv.string();
  }
  if (data_path.empty()) throw ConfigError("fit: needs 'data' or 'synth'");

  FitReport rep;
  if (kind == "resonance") {
    const SweepData d = ingest_s21_sweep(data_path);
    rep = fit_resonance(d.f, d.s21);
  } else if (kind == "stretched_exp") {
    const XYData d = ingest_xy_time(data_path);
    rep = fit_stretched_exponential(d.x, d.y);
  } else if (kind == "damped_sine") {
    const XYData d = ingest_xy_time(data_path);
    DampedSineOptions dopt;
    if (j.contains("factor4")) dopt.total_time_factor4 = j["factor4"].get<bool>();
    rep = fit_damped_sine(d.x, d.y, dopt);
  } else if (kind == "gaussian_line") {
    const TraceSet t = read_trace_csv(data_path);
    csvdetail::require_axis_unit(t.axis_name, "_Hz", "gaussian_line");
    rep = fit_gaussian_line(t.axis_values, t.columns.at(0).re);
  } else if (kind == "coupled_map") {
    const MapData d = ingest_s21_map(data_path);
    const ResonatorSpec res = cfg::parse_resonator(root.at("resonator"));
    const SpinEnsembleSpec ens = cfg::parse_ensemble(root.at("ensemble"));
    std::vector<double> bu = d.b, fu = d.f;
    std::sort(bu.begin(), bu.end());
    bu.erase(std::unique(bu.begin(), bu.end()), bu.end());
    std::sort(fu.begin(), fu.end());
    fu.erase(std::unique(fu.begin(), fu.end()), fu.end());
    TransmissionMap map;
    map.b_axis = bu;
    map.f_axis = fu;
    map.s21.assign(bu.size() * fu.size(), {1.0, 0.0});
    for (std::size_t i = 0; i < d.b.size(); ++i) {
      const auto ib = std::lower_bound(bu.begin(), bu.end(), d.b[i]) - bu.begin();
      const auto jf = std::lower_bound(fu.begin(), fu.end(), d.f[i]) - fu.begin();
      map.s21[ib * fu.size() + jf] = d.s21[i];
    }
    const double gn0 = j.contains("init") ? cfg::number_or(j["init"], "g_n_Hz", 1e6) : 1e6;
    const double gm0 = j.contains("init") ? cfg::number_or(j["init"], "gamma_Hz", 1e6) : 1e6;
    rep = fit_coupled_map(map, res, ens, gn0, gm0);
  } else {
    throw ConfigError("fit.kind: unknown kind '" + kind + "'");
  }

  json out_json;
  out_json["kind"] = kind;
  out_json["converged"] = rep.converged;
  out_json["n_iter"] = rep.n_iter;
  out_json["residual_norm"] = rep.residual_norm;
  out_json["message"] = rep.message;
  out_json["config_hash"] = hash;
  for (std::size_t i = 0; i < rep.names.size(); ++i) {
    out_json["params"][rep.names[i]] = rep.values[i];
    out_json["uncertainties"][rep.names[i]] = rep.uncertainties[i];
  }
  const auto path = out.dir / (out.basename + "_fit.json");
  std::ofstream f(path);
  f << out_json.dump(2) << "\n";
  files.push_back(path.string());
  return rep.converged ? std::string{} : "fit did not converge: " + rep.message;
}

}  // namespace scenario_detail

/// Executes a scenario configuration file. Never throws; failures are
/// reported through the exit code and error string.
inline ScenarioResult run_scenario(const std::string& config_path) {
  ScenarioResult result;
  json root;
  try {
    std::ifstream f(config_path);
    if (!f) {
      result.exit_code = 2;
      result.error = "cannot open config '" + config_path + "'";
      return result;
    }
    root = json::parse(f);
  } catch (const json::exception& e) {
    result.exit_code = 2;
    result.error = std::string("config parse error: ") + e.what();
    return result;
  }

  try {
    cfg::check_keys(root,
                    {"scenario", "seed", "output", "resonator", "ensemble", "environment",
                     "pulse", "transmit", "dispersive", "relax", "dynamics", "fields", "fit"},
                    "config");
    const std::string scenario = cfg::require_string(root, "scenario", "config");
    const std::uint64_t seed =
        root.contains("seed") ? root["seed"].get<std::uint64_t>() : 1ull;
    const auto out = scenario_detail::parse_output(root.contains("output") ? root["output"]
                                                                           : json::object());
    std::filesystem::create_directories(out.dir);
    const std::string hash = cfg::config_hash(root);

    std::string soft_error;
    if (scenario == "transmit")
      soft_error = scenario_detail::run_transmit(root.at("transmit"), root, out, hash, result.files);
    else if (scenario == "dispersive")
      soft_error =
          scenario_detail::run_dispersive(root.at("dispersive"), root, out, hash, result.files);
    else if (scenario == "relax")
      soft_error = scenario_detail::run_relax(root.at("relax"), root, out, hash, result.files);
    else if (scenario == "dynamics")
      soft_error = scenario_detail::run_dynamics(root.at("dynamics"), root, out, hash, result.files);
    else if (scenario == "fields")
      soft_error = scenario_detail::run_fields(root.at("fields"), root, out, hash, result.files);
    else if (scenario == "fit")
      soft_error = scenario_detail::run_fit(root.at("fit"), root, out, hash, seed, result.files);
    else
      throw ConfigError("config.scenario: unknown scenario '" + scenario + "'");

    if (!soft_error.empty()) {
      result.exit_code = 4;
      result.error = soft_error;
    }
  } catch (const json::exception& e) {
    result.exit_code = 3;
    result.error = std::string("config error: ") + e.what();
  } catch (const ConfigError& e) {
    result.exit_code = 3;
    result.error = e.what();
  } catch (const ValidationError& e) {
    result.exit_code = 3;
    result.error = e.what();
  } catch (const CsvError& e) {
    result.exit_code = 3;
    result.error = e.what();
  } catch (const OdeError& e) {
    result.exit_code = 4;
    result.error = e.what();
  } catch (const std::exception& e) {
    result.exit_code = 4;
    result.error = e.what();
  }
  return result;
}

}  // namespace lerspin
