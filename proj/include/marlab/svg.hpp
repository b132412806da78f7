#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "marlab/errors.hpp"

namespace marlab {

struct SvgSeries {
  std::string label;
  std::string color = "#1f77b4";
  std::vector<std::pair<double, double>> points;  // (x, y), plotted in order
};

/// Minimal SVG line chart: axes, min/max tick labels, one polyline per
/// series, legend in the top-left corner. Enough for eyeballing sweeps.
inline void write_svg_line_chart(const std::string& path, const std::string& title,
                                 const std::vector<SvgSeries>& series) {
  const double width = 640, height = 420;
  const double left = 70, right = 20, top = 40, bottom = 50;

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        xmin = xmax = x;
        ymin = ymax = y;
        first = false;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  ymin = std::min(ymin, 0.0);

  auto px = [&](double x) {
    return left + (x - xmin) / (xmax - xmin) * (width - left - right);
  };
  auto py = [&](double y) {
    return height - bottom - (y - ymin) / (ymax - ymin) * (height - top - bottom);
  };

  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' viewBox='0 0 " << width << " " << height << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << width / 2 << "' y='22' text-anchor='middle' font-size='15'>" << title
      << "</text>\n";
  out << "<line x1='" << left << "' y1='" << py(ymin) << "' x2='" << width - right << "' y2='"
      << py(ymin) << "' stroke='black'/>\n";
  out << "<line x1='" << left << "' y1='" << py(ymin) << "' x2='" << left << "' y2='" << top
      << "' stroke='black'/>\n";
  out << "<text x='" << left << "' y='" << height - bottom + 18 << "' font-size='11'>" << xmin
      << "</text>\n";
  out << "<text x='" << width - right << "' y='" << height - bottom + 18
      << "' text-anchor='end' font-size='11'>" << xmax << "</text>\n";
  out << "<text x='" << left - 6 << "' y='" << py(ymin) << "' text-anchor='end' font-size='11'>"
      << ymin << "</text>\n";
  out << "<text x='" << left - 6 << "' y='" << top + 4 << "' text-anchor='end' font-size='11'>"
      << ymax << "</text>\n";

  double legend_y = top + 8;
  for (const auto& s : series) {
    if (s.points.empty()) continue;
    out << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
    for (const auto& [x, y] : s.points) out << px(x) << "," << py(y) << " ";
    out << "'/>\n";
    for (const auto& [x, y] : s.points)
      out << "<circle cx='" << px(x) << "' cy='" << py(y) << "' r='2.5' fill='" << s.color
          << "'/>\n";
    out << "<text x='" << left + 10 << "' y='" << legend_y << "' font-size='11' fill='"
        << s.color << "'>" << s.label << "</text>\n";
    legend_y += 14;
  }
  out << "</svg>\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace marlab
