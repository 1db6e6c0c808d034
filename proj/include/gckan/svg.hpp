#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gckan/common.hpp"

namespace gckan {

namespace svg_detail {

struct Rgb {
  int r, g, b;
};

/// Compact viridis-like ramp, interpolated between 5 anchors.
inline Rgb colormap(double t) {
  static const Rgb stops[5] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140},
                               {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(t));
  const double f = t - i;
  return {static_cast<int>(stops[i].r + f * (stops[i + 1].r - stops[i].r)),
          static_cast<int>(stops[i].g + f * (stops[i + 1].g - stops[i].g)),
          static_cast<int>(stops[i].b + f * (stops[i + 1].b - stops[i].b))};
}

inline std::string fill(const Rgb& c) {
  return "rgb(" + std::to_string(c.r) + "," + std::to_string(c.g) + "," + std::to_string(c.b) +
         ")";
}

}  // namespace svg_detail

/// Heatmap in the Fig-2 layout: x-axis input series, y-axis input lags.
inline void write_heatmap_svg(const std::filesystem::path& path, const Matrix& values,
                              const std::string& title) {
  const int rows = static_cast<int>(values.rows());  // lags
  const int cols = static_cast<int>(values.cols());  // series
  const int cell = 24, left = 56, top = 40, bottom = 34;
  const int w = left + cols * cell + 16, h = top + rows * cell + bottom;
  const double vmax = std::max(values.maxCoeff(), 1e-300);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  out << "<text x='" << left << "' y='20' font-size='13' font-family='sans-serif'>" << title
      << "</text>\n";
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const auto col = svg_detail::colormap(values(r, c) / vmax);
      out << "<rect x='" << left + c * cell << "' y='" << top + r * cell << "' width='" << cell
          << "' height='" << cell << "' fill='" << svg_detail::fill(col) << "'/>\n";
    }
    out << "<text x='" << left - 8 << "' y='" << top + r * cell + cell / 2 + 4
        << "' font-size='11' text-anchor='end' font-family='sans-serif'>lag " << (r + 1)
        << "</text>\n";
  }
  for (int c = 0; c < cols; ++c)
    out << "<text x='" << left + c * cell + cell / 2 << "' y='" << top + rows * cell + 14
        << "' font-size='10' text-anchor='middle' font-family='sans-serif'>" << c << "</text>\n";
  out << "<text x='" << left + cols * cell / 2 << "' y='" << h - 6
      << "' font-size='11' text-anchor='middle' font-family='sans-serif'>input series</text>\n";
  out << "</svg>\n";
}

/// Overlayed ROC curves, one polyline per seed, with the chance diagonal.
inline void write_roc_svg(const std::filesystem::path& path,
                          const std::vector<std::vector<std::pair<double, double>>>& curves,
                          const std::vector<std::string>& labels, const std::string& title) {
  const int size = 360, margin = 46;
  const int plot = size - 2 * margin;
  auto px = [&](double fpr) { return margin + fpr * plot; };
  auto py = [&](double tpr) { return size - margin - tpr * plot; };
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f"};
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << size + 130 << "' height='" << size
      << "'>\n";
  out << "<rect x='" << margin << "' y='" << margin << "' width='" << plot << "' height='" << plot
      << "' fill='none' stroke='black'/>\n";
  out << "<line x1='" << px(0) << "' y1='" << py(0) << "' x2='" << px(1) << "' y2='" << py(1)
      << "' stroke='#bbbbbb' stroke-dasharray='4 3'/>\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    out << "<polyline fill='none' stroke='" << palette[k % 8] << "' stroke-width='1.6' points='";
    for (const auto& [fpr, tpr] : curves[k]) out << px(fpr) << "," << py(tpr) << " ";
    out << "'/>\n";
    if (k < labels.size())
      out << "<text x='" << size + 6 << "' y='" << margin + 16 * k + 10
          << "' font-size='11' font-family='sans-serif' fill='" << palette[k % 8] << "'>"
          << labels[k] << "</text>\n";
  }
  out << "<text x='" << size / 2 << "' y='" << size - 10
      << "' font-size='12' text-anchor='middle' font-family='sans-serif'>FPR</text>\n";
  out << "<text x='14' y='" << size / 2
      << "' font-size='12' font-family='sans-serif' transform='rotate(-90 14 " << size / 2
      << ")'>TPR</text>\n";
  out << "<text x='" << margin << "' y='20' font-size='13' font-family='sans-serif'>" << title
      << "</text>\n";
  out << "</svg>\n";
}

/// Horizontal bar chart with error whiskers (report view).
inline void write_bars_svg(const std::filesystem::path& path,
                           const std::vector<std::string>& labels,
                           const std::vector<double>& values, const std::vector<double>& errors,
                           const std::string& title) {
  const int bar_h = 22, gap = 8, left = 210, top = 36, width = 640;
  const int n = static_cast<int>(values.size());
  const int h = top + n * (bar_h + gap) + 24;
  const int plot = width - left - 70;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << h
      << "'>\n";
  out << "<text x='12' y='20' font-size='13' font-family='sans-serif'>" << title << "</text>\n";
  for (int i = 0; i < n; ++i) {
    const double v = std::clamp(values[static_cast<std::size_t>(i)], 0.0, 1.0);
    const int y = top + i * (bar_h + gap);
    out << "<text x='" << left - 8 << "' y='" << y + bar_h - 6
        << "' font-size='11' text-anchor='end' font-family='sans-serif'>"
        << labels[static_cast<std::size_t>(i)] << "</text>\n";
    out << "<rect x='" << left << "' y='" << y << "' width='" << v * plot << "' height='"
        << bar_h << "' fill='#4878a8'/>\n";
    const double e = errors[static_cast<std::size_t>(i)];
    if (e > 0) {
      const double x0 = left + std::max(0.0, v - e) * plot, x1 = left + std::min(1.0, v + e) * plot;
      out << "<line x1='" << x0 << "' y1='" << y + bar_h / 2 << "' x2='" << x1 << "' y2='"
          << y + bar_h / 2 << "' stroke='black'/>\n";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", values[static_cast<std::size_t>(i)]);
    out << "<text x='" << left + v * plot + 6 << "' y='" << y + bar_h - 6
        << "' font-size='11' font-family='sans-serif'>" << buf << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace gckan
