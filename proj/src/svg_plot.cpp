#include "ltcr/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ltcr/errors.hpp"

namespace ltcr {

namespace {

constexpr int kWidth = 860;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 160;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt_tick(double v) {
  char buf[32];
  if (std::abs(v) >= 1000.0 || (std::abs(v) < 0.01 && v != 0.0))
    std::snprintf(buf, sizeof(buf), "%.2g", v);
  else
    std::snprintf(buf, sizeof(buf), "%g", std::round(v * 100.0) / 100.0);
  return buf;
}

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<PlotSeries>& series) {
  std::ofstream out(path);
  if (!out) throw RunError("cannot open plot file: " + path);

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-size=\"16\">" << title << "</text>\n";

  bool any = false;
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  for (const PlotSeries& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!any) {
        x_min = x_max = s.x[i];
        y_min = y_max = s.y[i];
        any = true;
      } else {
        x_min = std::min(x_min, s.x[i]);
        x_max = std::max(x_max, s.x[i]);
        y_min = std::min(y_min, s.y[i]);
        y_max = std::max(y_max, s.y[i]);
      }
    }
  }
  if (!any) {
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight / 2
        << "\" text-anchor=\"middle\" font-size=\"20\" fill=\"#999\">no data"
        << "</text>\n</svg>\n";
    return;
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + 1.0;
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto px = [&](double x) {
    return kMarginLeft + (x - x_min) / (x_max - x_min) * plot_w;
  };
  auto py = [&](double y) {
    return kMarginTop + plot_h - (y - y_min) / (y_max - y_min) * plot_h;
  };

  // Axes and ticks.
  out << "<g stroke=\"#333\" stroke-width=\"1\">\n";
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h
      << "\" x2=\"" << kMarginLeft + plot_w << "\" y2=\"" << kMarginTop + plot_h
      << "\"/>\n";
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\""
      << kMarginLeft << "\" y2=\"" << kMarginTop + plot_h << "\"/>\n";
  out << "</g>\n";
  for (int t = 0; t <= 5; ++t) {
    const double fx = x_min + (x_max - x_min) * t / 5.0;
    const double fy = y_min + (y_max - y_min) * t / 5.0;
    out << "<text x=\"" << px(fx) << "\" y=\"" << kMarginTop + plot_h + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt_tick(fx)
        << "</text>\n";
    out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << py(fy) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_tick(fy)
        << "</text>\n";
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << py(fy) << "\" x2=\""
        << kMarginLeft + plot_w << "\" y2=\"" << py(fy)
        << "\" stroke=\"#eee\"/>\n";
  }
  out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
  out << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << kMarginTop + plot_h / 2 << ")\">" << y_label << "</text>\n";

  int color = 0;
  int legend_y = kMarginTop + 10;
  for (const PlotSeries& s : series) {
    if (s.x.empty()) continue;
    const char* c = kPalette[color % (sizeof(kPalette) / sizeof(kPalette[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << c
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    out << "\"/>\n";
    out << "<line x1=\"" << kWidth - kMarginRight + 10 << "\" y1=\"" << legend_y
        << "\" x2=\"" << kWidth - kMarginRight + 34 << "\" y2=\"" << legend_y
        << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kWidth - kMarginRight + 40 << "\" y=\"" << legend_y + 4
        << "\" font-size=\"12\">" << s.label << "</text>\n";
    legend_y += 18;
    ++color;
  }
  out << "</svg>\n";
}

}  // namespace ltcr
