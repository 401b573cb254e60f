#pragma once

// Self-contained SVG output: line plots for traces and heat maps for 2D
// data. No display server, no external assets.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lerspin/trace.hpp"
#include "lerspin/transmission.hpp"

namespace lerspin {

struct SvgError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace svgdetail {

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* line_color(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  return colors[i % 8];
}

/// Blue -> green -> yellow ramp for heat maps.
inline std::string heat_color(double u) {
  u = std::clamp(u, 0.0, 1.0);
  const int r = static_cast<int>(std::round(255.0 * std::clamp(1.5 * u - 0.4, 0.0, 1.0)));
  const int g = static_cast<int>(std::round(255.0 * std::clamp(1.4 * u, 0.0, 1.0)));
  const int b = static_cast<int>(std::round(255.0 * std::clamp(1.0 - 1.3 * u, 0.05, 1.0)));
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

struct Frame {
  double w = 720, h = 480;
  double ml = 80, mr = 24, mt = 24, mb = 56;
  double px(double u) const { return ml + u * (w - ml - mr); }
  double py(double u) const { return h - mb - u * (h - mt - mb); }
};

inline void axes(std::ostringstream& os, const Frame& fr, double xmin, double xmax, double ymin,
                 double ymax, const std::string& xlabel, const std::string& ylabel) {
  os << "<rect x='" << num(fr.ml) << "' y='" << num(fr.mt) << "' width='"
     << num(fr.w - fr.ml - fr.mr) << "' height='" << num(fr.h - fr.mt - fr.mb)
     << "' fill='none' stroke='black'/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double u = k / 4.0;
    const double xv = xmin + u * (xmax - xmin);
    const double yv = ymin + u * (ymax - ymin);
    os << "<text x='" << num(fr.px(u)) << "' y='" << num(fr.h - fr.mb + 18)
       << "' font-size='11' text-anchor='middle'>" << num(xv) << "</text>\n";
    os << "<text x='" << num(fr.ml - 6) << "' y='" << num(fr.py(u) + 4)
       << "' font-size='11' text-anchor='end'>" << num(yv) << "</text>\n";
    os << "<line x1='" << num(fr.px(u)) << "' y1='" << num(fr.h - fr.mb) << "' x2='"
       << num(fr.px(u)) << "' y2='" << num(fr.h - fr.mb + 4) << "' stroke='black'/>\n";
  }
  os << "<text x='" << num((fr.ml + fr.w - fr.mr) / 2) << "' y='" << num(fr.h - 12)
     << "' font-size='13' text-anchor='middle'>" << escape(xlabel) << "</text>\n";
  os << "<text x='16' y='" << num((fr.mt + fr.h - fr.mb) / 2)
     << "' font-size='13' text-anchor='middle' transform='rotate(-90 16 "
     << num((fr.mt + fr.h - fr.mb) / 2) << ")'>" << escape(ylabel) << "</text>\n";
}

}  // namespace svgdetail

/// Line plot of every real column (complex columns plot their magnitude).
inline void write_line_svg(const TraceSet& trace, const std::string& path) {
  trace.validate();
  if (trace.axis_values.empty() || trace.columns.empty())
    throw SvgError("SVG: empty dataset, nothing to plot");
  using namespace svgdetail;

  std::vector<std::vector<double>> series;
  std::vector<std::string> names;
  for (const auto& c : trace.columns) {
    std::vector<double> v(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i)
      v[i] = c.is_complex() ? std::hypot(c.re[i], c.im[i]) : c.re[i];
    series.push_back(std::move(v));
    names.push_back(c.is_complex() ? "|" + c.name + "|" : c.name);
  }

  double xmin = trace.axis_values.front(), xmax = trace.axis_values.back();
  if (xmin == xmax) xmax = xmin + 1.0;
  double ymin = series[0][0], ymax = series[0][0];
  for (const auto& s : series)
    for (double v : s) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  if (ymin == ymax) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  Frame fr;
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << num(fr.w) << "' height='"
     << num(fr.h) << "' viewBox='0 0 " << num(fr.w) << " " << num(fr.h) << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  axes(os, fr, xmin, xmax, ymin, ymax, trace.axis_name, names.size() == 1 ? names[0] : "value");
  for (std::size_t s = 0; s < series.size(); ++s) {
    os << "<polyline fill='none' stroke='" << line_color(s) << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const double ux = (trace.axis_values[i] - xmin) / (xmax - xmin);
      const double uy = (series[s][i] - ymin) / (ymax - ymin);
      os << num(fr.px(ux)) << "," << num(fr.py(uy)) << " ";
    }
    os << "'/>\n";
    if (series.size() > 1)
      os << "<text x='" << num(fr.w - fr.mr - 8) << "' y='" << num(fr.mt + 16 + 14 * s)
         << "' font-size='11' text-anchor='end' fill='" << line_color(s) << "'>"
         << escape(names[s]) << "</text>\n";
  }
  os << "</svg>\n";

  std::ofstream f(path);
  if (!f) throw SvgError("SVG: cannot open '" + path + "' for writing");
  f << os.str();
  if (!f) throw SvgError("SVG: write failed for '" + path + "'");
}

/// Heat map of |S21| with field on x and frequency on y.
inline void write_map_svg(const TransmissionMap& map, const std::string& path) {
  if (map.b_axis.empty() || map.f_axis.empty()) throw SvgError("SVG: empty map");
  using namespace svgdetail;
  const std::size_t nb = map.b_axis.size(), nf = map.f_axis.size();
  double vmin = std::abs(map.s21[0]), vmax = vmin;
  for (const auto& v : map.s21) {
    vmin = std::min(vmin, std::abs(v));
    vmax = std::max(vmax, std::abs(v));
  }
  if (vmin == vmax) vmax = vmin + 1.0;

  Frame fr;
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << num(fr.w) << "' height='"
     << num(fr.h) << "' viewBox='0 0 " << num(fr.w) << " " << num(fr.h) << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  const double cw = (fr.w - fr.ml - fr.mr) / nb;
  const double ch = (fr.h - fr.mt - fr.mb) / nf;
  for (std::size_t ib = 0; ib < nb; ++ib)
    for (std::size_t jf = 0; jf < nf; ++jf) {
      const double u = (std::abs(map.at(ib, jf)) - vmin) / (vmax - vmin);
      os << "<rect x='" << num(fr.ml + ib * cw) << "' y='" << num(fr.h - fr.mb - (jf + 1) * ch)
         << "' width='" << num(cw + 0.5) << "' height='" << num(ch + 0.5) << "' fill='"
         << heat_color(u) << "'/>\n";
    }
  axes(os, fr, map.b_axis.front(), map.b_axis.back(), map.f_axis.front(), map.f_axis.back(),
       "B_T", "f_Hz");
  os << "<text x='" << num(fr.w - fr.mr - 8) << "' y='16' font-size='11' text-anchor='end'>|S21| "
     << num(vmin) << " to " << num(vmax) << "</text>\n";
  os << "</svg>\n";

  std::ofstream f(path);
  if (!f) throw SvgError("SVG: cannot open '" + path + "' for writing");
  f << os.str();
  if (!f) throw SvgError("SVG: write failed for '" + path + "'");
}

}  // namespace lerspin
