#pragma once

#include <string>
#include <vector>

namespace glstm::cli {

struct Series {
  std::string name;
  std::vector<double> values;  // one per x label
};

/// Static SVG line chart over categorical x positions.
std::string svg_line_plot(const std::string& title, const std::string& y_label,
                          const std::vector<std::string>& x_labels, const std::vector<Series>& series);

}  // namespace glstm::cli
