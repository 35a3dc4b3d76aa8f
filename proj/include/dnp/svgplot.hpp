#pragma once

#include <string>
#include <vector>

namespace dnp {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

// Standalone SVG line chart. Non-finite samples break the polyline.
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<PlotSeries>& series);

}  // namespace dnp
