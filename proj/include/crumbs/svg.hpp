#pragma once

// Minimal SVG charts for the CLI's figure-equivalent outputs.

#include <string>
#include <vector>

namespace crumbs::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;  // nan values break the line
};

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series);

std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                      const std::vector<double>& values);

}  // namespace crumbs::svg
