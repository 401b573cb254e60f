#pragma once

// TraceSet: the tabular exchange format for simulation and measurement
// results. One axis, named real or complex columns, and provenance metadata.

#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace lerspin {

struct TraceColumn {
  std::string name;
  std::vector<double> re;
  std::vector<double> im;  ///< empty for real columns

  bool is_complex() const { return !im.empty(); }
};

struct TraceSet {
  std::string axis_name;  ///< includes the unit suffix, e.g. "t_s", "f_Hz"
  std::vector<double> axis_values;
  std::vector<TraceColumn> columns;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return axis_values.size(); }

  TraceColumn& add_column(const std::string& name) {
    columns.push_back({name, std::vector<double>(axis_values.size(), 0.0), {}});
    return columns.back();
  }
  TraceColumn& add_complex_column(const std::string& name) {
    columns.push_back({name, std::vector<double>(axis_values.size(), 0.0),
                       std::vector<double>(axis_values.size(), 0.0)});
    return columns.back();
  }

  const TraceColumn& column(const std::string& name) const {
    for (const auto& c : columns)
      if (c.name == name) return c;
    throw std::out_of_range("TraceSet: no column named '" + name + "'");
  }
  bool has_column(const std::string& name) const {
    for (const auto& c : columns)
      if (c.name == name) return true;
    return false;
  }

  void validate() const {
    for (const auto& c : columns) {
      if (c.re.size() != axis_values.size())
        throw std::invalid_argument("TraceSet: column '" + c.name + "' length mismatch");
      if (!c.im.empty() && c.im.size() != axis_values.size())
        throw std::invalid_argument("TraceSet: column '" + c.name + "' imag length mismatch");
    }
  }
};

}  // namespace lerspin
