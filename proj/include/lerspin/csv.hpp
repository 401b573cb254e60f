#pragma once

// CSV serialization of traces and maps. Numbers are written with shortest
// round-trip formatting so written files re-ingest bit-identically. Header
// unit suffixes (_Hz, _T, _s, _dB) are enforced on ingest; _dB columns are
// converted to linear amplitude.

#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lerspin/core.hpp"
#include "lerspin/fields.hpp"
#include "lerspin/trace.hpp"
#include "lerspin/transmission.hpp"

namespace lerspin {

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw CsvError("CSV: cannot parse number '" + s + "' (" + context + ")");
  if (std::isnan(v)) throw CsvError("CSV: NaN cell rejected (" + context + ")");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline void write_trace_csv(const TraceSet& trace, const std::string& path) {
  trace.validate();
  std::ofstream f(path);
  if (!f) throw CsvError("CSV: cannot open '" + path + "' for writing");
  f << "# lerspin traceset v1\n";
  for (const auto& [k, v] : trace.metadata) f << "# " << k << "=" << v << "\n";
  f << trace.axis_name;
  for (const auto& c : trace.columns) {
    if (c.is_complex())
      f << "," << c.name << "_re," << c.name << "_im";
    else
      f << "," << c.name;
  }
  f << "\n";
  for (std::size_t i = 0; i < trace.axis_values.size(); ++i) {
    f << format_double(trace.axis_values[i]);
    for (const auto& c : trace.columns) {
      f << "," << format_double(c.re[i]);
      if (c.is_complex()) f << "," << format_double(c.im[i]);
    }
    f << "\n";
  }
  if (!f) throw CsvError("CSV: write failed for '" + path + "'");
}

inline TraceSet read_trace_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CsvError("CSV: cannot open '" + path + "'");
  TraceSet trace;
  std::string line;
  std::vector<std::string> header;
  std::vector<bool> complex_col;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string key = line.substr(1, eq - 1);
        while (!key.empty() && key.front() == ' ') key.erase(key.begin());
        trace.metadata[key] = line.substr(eq + 1);
      }
      continue;
    }
    if (header.empty()) {
      header = split_csv_line(line);
      if (header.size() < 2) throw CsvError("CSV: header needs an axis and a column");
      trace.axis_name = header[0];
      for (std::size_t i = 1; i < header.size();) {
        if (i + 1 < header.size() && header[i].size() > 3 &&
            header[i].substr(header[i].size() - 3) == "_re" &&
            header[i + 1] == header[i].substr(0, header[i].size() - 3) + "_im") {
          trace.columns.push_back({header[i].substr(0, header[i].size() - 3), {}, {}});
          complex_col.push_back(true);
          i += 2;
        } else {
          trace.columns.push_back({header[i], {}, {}});
          complex_col.push_back(false);
          ++i;
        }
      }
      continue;
    }
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw CsvError("CSV: row " + std::to_string(lineno) + " has " +
                     std::to_string(cells.size()) + " cells, expected " +
                     std::to_string(header.size()));
    trace.axis_values.push_back(parse_double(cells[0], "row " + std::to_string(lineno)));
    std::size_t ci = 1;
    for (std::size_t k = 0; k < trace.columns.size(); ++k) {
      trace.columns[k].re.push_back(parse_double(cells[ci++], "row " + std::to_string(lineno)));
      if (complex_col[k])
        trace.columns[k].im.push_back(parse_double(cells[ci++], "row " + std::to_string(lineno)));
    }
  }
  if (header.empty()) throw CsvError("CSV: '" + path + "' has no header");
  trace.validate();
  return trace;
}

inline void write_map_csv(const TransmissionMap& map, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw CsvError("CSV: cannot open '" + path + "' for writing");
  f << "# lerspin s21map v1\n";
  if (!map.metadata.empty()) f << "# meta=" << map.metadata << "\n";
  f << "b_T,f_Hz,s21_re,s21_im\n";
  for (std::size_t ib = 0; ib < map.b_axis.size(); ++ib)
    for (std::size_t jf = 0; jf < map.f_axis.size(); ++jf) {
      const auto v = map.at(ib, jf);
      f << format_double(map.b_axis[ib]) << "," << format_double(map.f_axis[jf]) << ","
        << format_double(v.real()) << "," << format_double(v.imag()) << "\n";
    }
}

inline void write_coupling_map_csv(const CouplingMap& map, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw CsvError("CSV: cannot open '" + path + "' for writing");
  std::size_t masked = 0;
  for (bool m : map.masked) masked += m ? 1 : 0;
  f << "# lerspin couplingmap v1\n";
  f << "# current_A=" << format_double(map.current_used) << "\n";
  f << "# masked_points=" << masked << "\n";
  f << "x_m,y_m,z_m,b_T,g1_Hz\n";
  for (std::size_t i = 0; i < map.grid.size(); ++i) {
    if (map.masked[i]) continue;
    f << format_double(map.grid[i][0]) << "," << format_double(map.grid[i][1]) << ","
      << format_double(map.grid[i][2]) << "," << format_double(map.b_perp[i]) << ","
      << format_double(map.g1[i]) << "\n";
  }
}

enum class IngestKind { s21_sweep, s21_map, decay, shift_trace };

struct SweepData {
  std::vector<double> f;
  std::vector<std::complex<double>> s21;
};

struct XYData {
  std::vector<double> x;
  std::vector<double> y;
};

struct MapData {
  std::vector<double> b;
  std::vector<double> f;
  std::vector<std::complex<double>> s21;  ///< one entry per row (long format)
};

namespace csvdetail {

inline bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

inline void require_axis_unit(const std::string& name, const std::string& suffix,
                              const std::string& kind) {
  if (!has_suffix(name, suffix))
    throw CsvError("CSV: " + kind + " expects axis '" + suffix + "' suffix, got '" + name + "'");
}

}  // namespace csvdetail

/// Ingest a complex sweep (f_Hz, re, im) or magnitude sweep (f_Hz, mag) /
/// (f_Hz, mag_dB); dB converts as 10^(dB/20) with zero phase.
inline SweepData ingest_s21_sweep(const std::string& path) {
  const TraceSet t = read_trace_csv(path);
  csvdetail::require_axis_unit(t.axis_name, "_Hz", "s21_sweep");
  SweepData out;
  out.f = t.axis_values;
  if (t.has_column("re") && t.has_column("im")) {
    const auto& re = t.column("re");
    const auto& im = t.column("im");
    for (std::size_t i = 0; i < t.size(); ++i) out.s21.push_back({re.re[i], im.re[i]});
  } else if (t.has_column("s21") && t.column("s21").is_complex()) {
    const auto& c = t.column("s21");
    for (std::size_t i = 0; i < t.size(); ++i) out.s21.push_back({c.re[i], c.im[i]});
  } else if (t.has_column("mag_dB")) {
    for (std::size_t i = 0; i < t.size(); ++i)
      out.s21.push_back({std::pow(10.0, t.column("mag_dB").re[i] / 20.0), 0.0});
  } else if (t.has_column("mag")) {
    for (std::size_t i = 0; i < t.size(); ++i) out.s21.push_back({t.column("mag").re[i], 0.0});
  } else {
    throw CsvError("CSV: s21_sweep needs columns (re, im), s21_re/s21_im, mag or mag_dB");
  }
  return out;
}

/// Ingest a long-format map (b_T, f_Hz, s21_re, s21_im).
inline MapData ingest_s21_map(const std::string& path) {
  const TraceSet t = read_trace_csv(path);
  csvdetail::require_axis_unit(t.axis_name, "_T", "s21_map");
  if (!t.has_column("f_Hz") || !t.has_column("s21"))
    throw CsvError("CSV: s21_map needs columns f_Hz, s21_re, s21_im");
  MapData out;
  out.b = t.axis_values;
  out.f = t.column("f_Hz").re;
  const auto& c = t.column("s21");
  if (!c.is_complex()) throw CsvError("CSV: s21_map s21 column must be complex");
  for (std::size_t i = 0; i < t.size(); ++i) out.s21.push_back({c.re[i], c.im[i]});
  return out;
}

/// Ingest decay / shift traces: (t_s, shift) or (t_s, shift_Hz).
inline XYData ingest_xy_time(const std::string& path) {
  const TraceSet t = read_trace_csv(path);
  csvdetail::require_axis_unit(t.axis_name, "_s", "time trace");
  XYData out;
  out.x = t.axis_values;
  if (t.has_column("shift_Hz"))
    out.y = t.column("shift_Hz").re;
  else if (t.has_column("shift"))
    out.y = t.column("shift").re;
  else if (!t.columns.empty() && !t.columns[0].is_complex())
    out.y = t.columns[0].re;
  else
    throw CsvError("CSV: time trace needs a real 'shift' or 'shift_Hz' column");
  return out;
}

}  // namespace lerspin
