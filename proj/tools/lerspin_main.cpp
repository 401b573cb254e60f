// lerspin command line: scenario execution, standalone fits, and plotting.
//
//   lerspin run <config.json>
//   lerspin fit <kind> <data.csv> [--init k=v ...] [--out report.json]
//   lerspin plot <data.csv> --style <line|map> [--out plot.svg]
//
// Exit codes: 0 success, 2 parse error, 3 validation error, 4 numerical
// failure. LERSPIN_THREADS overrides the worker thread count.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "lerspin/lerspin.hpp"

namespace {

int cmd_run(const std::string& config) {
  const lerspin::ScenarioResult res = lerspin::run_scenario(config);
  if (res.exit_code == 0) {
    for (const auto& f : res.files) std::cout << "wrote " << f << "\n";
  } else {
    nlohmann::json err;
    err["error"] = res.error;
    err["exit_code"] = res.exit_code;
    std::cerr << err.dump() << "\n";
  }
  return res.exit_code;
}

int cmd_fit(const std::string& kind, const std::string& data,
            const std::vector<std::string>& init_kv, bool no_factor4, const std::string& out) {
  using namespace lerspin;
  std::map<std::string, double> init;
  for (const auto& kv : init_kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << "{\"error\":\"--init expects k=v, got '" << kv << "'\"}\n";
      return 3;
    }
    try {
      init[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      std::cerr << "{\"error\":\"--init value for '" << kv.substr(0, eq)
                << "' is not a number\"}\n";
      return 3;
    }
  }
  try {
    FitReport rep;
    if (kind == "resonance") {
      const SweepData d = ingest_s21_sweep(data);
      rep = fit_resonance(d.f, d.s21);
    } else if (kind == "stretched_exp") {
      const XYData d = ingest_xy_time(data);
      rep = fit_stretched_exponential(d.x, d.y);
    } else if (kind == "damped_sine") {
      const XYData d = ingest_xy_time(data);
      DampedSineOptions dopt;
      dopt.total_time_factor4 = !no_factor4;
      rep = fit_damped_sine(d.x, d.y, dopt);
    } else if (kind == "gaussian_line") {
      const TraceSet t = read_trace_csv(data);
      rep = fit_gaussian_line(t.axis_values, t.columns.at(0).re);
    } else {
      std::cerr << "{\"error\":\"unknown fit kind '" << kind << "'\"}\n";
      return 3;
    }
    nlohmann::json rj;
    rj["kind"] = kind;
    rj["converged"] = rep.converged;
    rj["residual_norm"] = rep.residual_norm;
    rj["n_iter"] = rep.n_iter;
    rj["message"] = rep.message;
    for (std::size_t i = 0; i < rep.names.size(); ++i) {
      rj["params"][rep.names[i]] = rep.values[i];
      rj["uncertainties"][rep.names[i]] = rep.uncertainties[i];
    }
    (void)init;  // reserved for model-specific initial guesses
    if (!out.empty()) {
      std::ofstream f(out);
      f << rj.dump(2) << "\n";
    }
    std::cout << rj.dump(2) << "\n";
    return rep.converged ? 0 : 4;
  } catch (const lerspin::CsvError& e) {
    std::cerr << "{\"error\":\"" << e.what() << "\"}\n";
    return 3;
  } catch (const lerspin::ValidationError& e) {
    std::cerr << "{\"error\":\"" << e.what() << "\"}\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"" << e.what() << "\"}\n";
    return 4;
  }
}

int cmd_plot(const std::string& data, const std::string& style, std::string out) {
  using namespace lerspin;
  try {
    if (out.empty()) out = data.substr(0, data.find_last_of('.')) + ".svg";
    if (style == "map") {
      const MapData d = ingest_s21_map(data);
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
      write_map_svg(map, out);
    } else if (style == "line") {
      const TraceSet t = read_trace_csv(data);
      write_line_svg(t, out);
    } else {
      std::cerr << "{\"error\":\"unknown plot style '" << style << "'\"}\n";
      return 3;
    }
    std::cout << "wrote " << out << "\n";
    return 0;
  } catch (const lerspin::CsvError& e) {
    std::cerr << "{\"error\":\"" << e.what() << "\"}\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"" << e.what() << "\"}\n";
    return 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lerspin: LER / molecular-spin-ensemble simulation and inference"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "execute a scenario configuration");
  run->add_option("config", config_path, "scenario JSON file")->required();

  std::string fit_kind, fit_data, fit_out;
  std::vector<std::string> fit_init;
  bool no_factor4 = false;
  auto* fit = app.add_subcommand("fit", "fit a model to a CSV data file");
  fit->add_option("kind", fit_kind, "resonance | stretched_exp | damped_sine | gaussian_line")
      ->required();
  fit->add_option("data", fit_data, "input CSV")->required();
  fit->add_option("--init", fit_init, "initial guesses as k=v");
  fit->add_flag("--no-factor4", no_factor4, "fit sin(w t) instead of sin(4 w t)");
  fit->add_option("--out", fit_out, "write the report JSON here");

  std::string plot_data, plot_style = "line", plot_out;
  auto* plot = app.add_subcommand("plot", "render a CSV file to SVG");
  plot->add_option("data", plot_data, "input CSV")->required();
  plot->add_option("--style", plot_style, "line | map");
  plot->add_option("--out", plot_out, "output SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (run->parsed()) return cmd_run(config_path);
  if (fit->parsed()) return cmd_fit(fit_kind, fit_data, fit_init, no_factor4, fit_out);
  if (plot->parsed()) return cmd_plot(plot_data, plot_style, plot_out);
  return 2;
}
