#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "collapse/spin.hpp"

namespace collapse::svg {

struct LineSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Bar {
  std::string label;
  double value = 0.0;
  /// Half-length of the error bar; 0 draws none.
  double error = 0.0;
};

namespace detail {

inline constexpr double width = 640;
inline constexpr double height = 420;
inline constexpr double left = 70;
inline constexpr double right = 20;
inline constexpr double top = 40;
inline constexpr double bottom = 55;

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
  return colors[i % 6];
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

inline std::string header(const std::string& title) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n",
      width, height, width / 2, escape(title));
}

/// Frame, ticks and axis labels for the plot area.
inline std::string axes(const Range& xr, const Range& yr, const std::string& xlabel,
                        const std::string& ylabel, bool x_ticks = true) {
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  std::string s = fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
                              left, top, pw, ph);
  for (int i = 0; i <= 4; ++i) {
    const double f = i / 4.0;
    const double yv = yr.lo + f * (yr.hi - yr.lo);
    const double py = top + ph * (1 - f);
    s += fmt::format("<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"black\"/>\n", left - 4, py, left, py);
    s += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{:.3g}</text>\n", left - 6, py + 4, yv);
    if (x_ticks) {
      const double xv = xr.lo + f * (xr.hi - xr.lo);
      const double px = left + pw * f;
      s += fmt::format("<line x1=\"{:.2f}\" y1=\"{}\" x2=\"{:.2f}\" y2=\"{}\" stroke=\"black\"/>\n", px,
                       top + ph, px, top + ph + 4);
      s += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n", px, top + ph + 17, xv);
    }
  }
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", left + pw / 2, height - 12,
                   escape(xlabel));
  s += fmt::format("<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
                   top + ph / 2, escape(ylabel));
  return s;
}

}  // namespace detail

/// Polyline chart of one or more series sharing the axes.
inline std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<LineSeries>& series) {
  using namespace detail;
  Range xr, yr;
  for (const auto& s : series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.settle();
  yr.settle();
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto px = [&](double v) { return left + pw * (v - xr.lo) / (xr.hi - xr.lo); };
  auto py = [&](double v) { return top + ph * (1 - (v - yr.lo) / (yr.hi - yr.lo)); };

  std::string out = header(title) + axes(xr, yr, xlabel, ylabel);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    std::string pts;
    const std::size_t n = std::min(s.x.size(), s.y.size());
    // Long series are thinned for file size; CSV keeps every sample.
    const std::size_t step = std::max<std::size_t>(1, n / 2000);
    for (std::size_t i = 0; i < n; i += step) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      pts += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
    }
    if (n > 0 && (n - 1) % step != 0) pts += fmt::format("{:.2f},{:.2f}", px(s.x[n - 1]), py(s.y[n - 1]));
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\" points=\"{}\"/>\n", palette(k), pts);
    if (!s.name.empty()) {
      const double ly = top + 14 + 16 * static_cast<double>(k);
      out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                         width - right - 150, ly - 4, width - right - 130, palette(k));
      out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", width - right - 125, ly, escape(s.name));
    }
  }
  return out + "</svg>\n";
}

/// Bars with symmetric error bars; the value axis starts at zero.
inline std::string bar_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                             const std::vector<Bar>& bars) {
  using namespace detail;
  Range yr;
  yr.add(0.0);
  for (const auto& b : bars) yr.add(b.value + b.error);
  yr.settle();
  yr.hi *= 1.05;
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto py = [&](double v) { return top + ph * (1 - (v - yr.lo) / (yr.hi - yr.lo)); };

  std::string out = header(title) + axes({0, 1}, yr, xlabel, ylabel, false);
  const double slot = bars.empty() ? pw : pw / static_cast<double>(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double cx = left + slot * (static_cast<double>(i) + 0.5);
    const double bw = slot * 0.6;
    const double y0 = py(0.0);
    const double y1 = py(std::max(0.0, b.value));
    out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                       cx - bw / 2, y1, bw, y0 - y1, palette(0));
    if (b.error > 0.0) {
      const double lo = py(std::max(0.0, b.value - b.error));
      const double hi = py(b.value + b.error);
      out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", cx, lo, hi);
      for (double yy : {lo, hi}) {
        out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"black\"/>\n",
                           cx - bw / 6, yy, cx + bw / 6, yy);
      }
    }
    out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", cx, top + ph + 17,
                       escape(b.label));
  }
  return out + "</svg>\n";
}

/// Path on the Bloch sphere under a fixed orthographic view.
inline std::string bloch_path(const std::string& title, const std::vector<BlochVector>& path) {
  constexpr double az = 0.6;
  constexpr double el = 0.35;
  const double cx = detail::width / 2;
  const double cy = detail::height / 2 + 10;
  const double r = 160;
  auto project = [&](double x, double y, double z, double& px, double& py) {
    const double u = -x * std::sin(az) + y * std::cos(az);
    const double depth = x * std::cos(az) + y * std::sin(az);
    const double v = z * std::cos(el) - depth * std::sin(el);
    px = cx + r * u;
    py = cy - r * v;
  };

  std::string out = detail::header(title);
  out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"#999\"/>\n", cx, cy, r);
  std::string equator;
  for (int k = 0; k <= 72; ++k) {
    const double phi = 2 * 3.14159265358979 * k / 72;
    double px, py;
    project(std::cos(phi), std::sin(phi), 0, px, py);
    equator += fmt::format("{:.2f},{:.2f} ", px, py);
  }
  out += fmt::format("<polyline fill=\"none\" stroke=\"#ccc\" points=\"{}\"/>\n", equator);
  const char* names[] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    double px, py;
    project(a == 0 ? 1.15 : 0, a == 1 ? 1.15 : 0, a == 2 ? 1.15 : 0, px, py);
    out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#666\" stroke-dasharray=\"3,3\"/>\n",
                       cx, cy, px, py);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", px + 4, py - 4, names[a]);
  }
  std::string pts;
  const std::size_t step = std::max<std::size_t>(1, path.size() / 4000);
  for (std::size_t i = 0; i < path.size(); i += step) {
    double px, py;
    project(path[i].sx, path[i].sy, path[i].sz, px, py);
    pts += fmt::format("{:.2f},{:.2f} ", px, py);
  }
  out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"0.8\" points=\"{}\"/>\n",
                     detail::palette(1), pts);
  if (!path.empty()) {
    double px, py;
    project(path.front().sx, path.front().sy, path.front().sz, px, py);
    out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"{}\"/>\n", px, py, detail::palette(2));
  }
  return out + "</svg>\n";
}

}  // namespace collapse::svg
