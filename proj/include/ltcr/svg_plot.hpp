#pragma once

#include <string>
#include <vector>

namespace ltcr {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Writes a self-contained SVG line chart. Series with no points are
/// skipped; a chart with no data renders a "no data" placeholder.
void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<PlotSeries>& series);

}  // namespace ltcr
