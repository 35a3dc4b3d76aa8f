#include "dnp/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "dnp/errors.hpp"

namespace dnp {

static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                "#9467bd", "#8c564b", "#e377c2"};

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<PlotSeries>& series) {
  const double width = 720, height = 440;
  const double ml = 70, mr = 20, mt = 40, mb = 50;

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  if (!std::isfinite(x_min)) { x_min = 0; x_max = 1; y_min = 0; y_max = 1; }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (width - ml - mr); };
  auto py = [&](double y) { return height - mb - (y - y_min) / (y_max - y_min) * (height - mt - mb); };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' viewBox='0 0 " << width << " " << height << "'>\n";
  svg << "<rect width='100%' height='100%' fill='white'/>\n";
  svg << "<text x='" << width / 2 << "' y='22' text-anchor='middle' font-size='15' "
      << "font-family='sans-serif'>" << title << "</text>\n";

  // frame and tick labels
  svg << "<rect x='" << ml << "' y='" << mt << "' width='" << width - ml - mr << "' height='"
      << height - mt - mb << "' fill='none' stroke='#444'/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 4.0;
    const double fy = y_min + (y_max - y_min) * i / 4.0;
    svg << "<text x='" << px(fx) << "' y='" << height - mb + 18
        << "' text-anchor='middle' font-size='11' font-family='sans-serif'>";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", fx);
    svg << buf << "</text>\n";
    std::snprintf(buf, sizeof(buf), "%.3g", fy);
    svg << "<text x='" << ml - 8 << "' y='" << py(fy) + 4
        << "' text-anchor='end' font-size='11' font-family='sans-serif'>" << buf << "</text>\n";
  }
  svg << "<text x='" << width / 2 << "' y='" << height - 12
      << "' text-anchor='middle' font-size='13' font-family='sans-serif'>" << x_label
      << "</text>\n";
  svg << "<text x='16' y='" << height / 2 << "' text-anchor='middle' font-size='13' "
      << "font-family='sans-serif' transform='rotate(-90 16 " << height / 2 << ")'>" << y_label
      << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kColors[si % (sizeof(kColors) / sizeof(kColors[0]))];
    std::ostringstream points;
    bool in_segment = false;
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        if (in_segment) {
          svg << "<polyline fill='none' stroke='" << color << "' stroke-width='1.4' points='"
              << points.str() << "'/>\n";
          points.str("");
          in_segment = false;
        }
        continue;
      }
      points << px(s.x[i]) << "," << py(s.y[i]) << " ";
      in_segment = true;
    }
    if (in_segment)
      svg << "<polyline fill='none' stroke='" << color << "' stroke-width='1.4' points='"
          << points.str() << "'/>\n";
    svg << "<text x='" << width - mr - 8 << "' y='" << mt + 16 + 16 * si
        << "' text-anchor='end' font-size='12' font-family='sans-serif' fill='" << color << "'>"
        << s.label << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write SVG: " + path);
  out << svg.str();
}

}  // namespace dnp
