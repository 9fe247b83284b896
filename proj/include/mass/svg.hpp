#pragma once

#include <string>
#include <vector>

namespace mass {

struct ChartSeries {
  std::string label;
  std::vector<double> values;
};

// Minimal multi-series line chart (axes, min/max labels, one polyline per
// series) as a standalone SVG document.
std::string render_line_chart(const std::string& title,
                              const std::vector<ChartSeries>& series,
                              int width = 900, int height = 420);

// Stacked area chart for per-day weight vectors (each column sums to ~1).
std::string render_stacked_area(const std::string& title,
                                const std::vector<ChartSeries>& series,
                                int width = 900, int height = 420);

}  // namespace mass
