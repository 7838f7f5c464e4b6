#pragma once

// Minimal static SVG line charts: polylines, optional shaded bands, axis
// ticks, linear or log10 axes, and a legend.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "batd/numkit.hpp"

namespace batd::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> lo;  // optional band, same length as y
  std::vector<double> hi;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 720;
  int height = 440;
  std::size_t max_points = 800;  // per series; longer series are strided
};

namespace detail {

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  return palette[i % 8];
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct Axis {
  bool log = false;
  double lo = 0.0, hi = 1.0;  // in transformed units
  double pix0 = 0.0, pix1 = 1.0;

  double t(double v) const { return log ? std::log10(v) : v; }
  double map(double v) const { return pix0 + (t(v) - lo) / (hi - lo) * (pix1 - pix0); }

  // Tick values in data units.
  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      const int a = static_cast<int>(std::ceil(lo - 1e-9)), b = static_cast<int>(std::floor(hi + 1e-9));
      const int step = std::max(1, (b - a) / 8 + 1);
      for (int k = a; k <= b; k += step) out.push_back(std::pow(10.0, k));
      return out;
    }
    const double span = hi - lo;
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (m * mag >= raw) {
        step = m * mag;
        break;
      }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step)
      out.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
    return out;
  }
};

inline void fit(Axis& ax, double mn, double mx) {
  if (ax.log) {
    mn = std::log10(mn);
    mx = std::log10(mx);
    mn = std::floor(mn);
    mx = std::ceil(mx);
  }
  if (!(mx > mn)) {
    const double pad = mn == 0.0 ? 1.0 : std::abs(mn) * 0.1;
    mn -= pad;
    mx += pad;
  }
  ax.lo = mn;
  ax.hi = mx;
}

}  // namespace detail

/// Renders the chart. On a log axis non-positive values are clamped to the
/// smallest positive value present.
inline std::string render(const Chart& chart, const std::vector<Series>& series) {
  if (series.empty()) throw InvalidModel("svg: no series");
  const double left = 80, right = 170, top = 40, bottom = 56;
  detail::Axis ax{chart.log_x}, ay{chart.log_y};
  ax.pix0 = left;
  ax.pix1 = chart.width - right;
  ay.pix0 = chart.height - bottom;
  ay.pix1 = top;

  double min_pos_x = std::numeric_limits<double>::infinity();
  double min_pos_y = std::numeric_limits<double>::infinity();
  for (const auto& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty()) throw InvalidModel("svg: series '" + s.name + "' is malformed");
    if (!s.lo.empty() && (s.lo.size() != s.y.size() || s.hi.size() != s.y.size()))
      throw InvalidModel("svg: band length mismatch in '" + s.name + "'");
    for (double v : s.x)
      if (v > 0 && std::isfinite(v)) min_pos_x = std::min(min_pos_x, v);
    for (const auto* vec : {&s.y, &s.lo, &s.hi})
      for (double v : *vec)
        if (v > 0 && std::isfinite(v)) min_pos_y = std::min(min_pos_y, v);
  }
  if (chart.log_x && !std::isfinite(min_pos_x)) throw InvalidModel("svg: log x axis needs positive data");
  if (chart.log_y && !std::isfinite(min_pos_y)) throw InvalidModel("svg: log y axis needs positive data");
  auto cx = [&](double v) { return chart.log_x ? std::max(v, min_pos_x) : v; };
  auto cy = [&](double v) { return chart.log_y ? std::max(v, min_pos_y) : v; };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double v : s.x)
      if (std::isfinite(v)) x0 = std::min(x0, cx(v)), x1 = std::max(x1, cx(v));
    for (const auto* vec : {&s.y, &s.lo, &s.hi})
      for (double v : *vec)
        if (std::isfinite(v)) y0 = std::min(y0, cy(v)), y1 = std::max(y1, cy(v));
  }
  detail::fit(ax, x0, x1);
  detail::fit(ay, y0, y1);

  const auto stride = [&](std::size_t n) {
    return std::max<std::size_t>(1, (n + chart.max_points - 1) / chart.max_points);
  };
  auto point = [&](double x, double y) {
    return detail::num(ax.map(cx(x))) + "," + detail::num(ay.map(cy(y)));
  };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(chart.width) +
       "\" height=\"" + std::to_string(chart.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + detail::num(chart.width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       detail::escape(chart.title) + "</text>\n";

  // Axes and ticks.
  s += "<g stroke=\"#444\" stroke-width=\"1\">\n";
  s += "<line x1=\"" + detail::num(ax.pix0) + "\" y1=\"" + detail::num(ay.pix0) + "\" x2=\"" +
       detail::num(ax.pix1) + "\" y2=\"" + detail::num(ay.pix0) + "\"/>\n";
  s += "<line x1=\"" + detail::num(ax.pix0) + "\" y1=\"" + detail::num(ay.pix0) + "\" x2=\"" +
       detail::num(ax.pix0) + "\" y2=\"" + detail::num(ay.pix1) + "\"/>\n";
  s += "</g>\n<g fill=\"#222\">\n";
  for (double v : ax.ticks()) {
    const double px = ax.map(v);
    s += "<line x1=\"" + detail::num(px) + "\" y1=\"" + detail::num(ay.pix0) + "\" x2=\"" +
         detail::num(px) + "\" y2=\"" + detail::num(ay.pix0 + 5) + "\" stroke=\"#444\"/>\n";
    s += "<text x=\"" + detail::num(px) + "\" y=\"" + detail::num(ay.pix0 + 18) +
         "\" text-anchor=\"middle\">" + detail::tick_label(v) + "</text>\n";
  }
  for (double v : ay.ticks()) {
    const double py = ay.map(v);
    s += "<line x1=\"" + detail::num(ax.pix0 - 5) + "\" y1=\"" + detail::num(py) + "\" x2=\"" +
         detail::num(ax.pix0) + "\" y2=\"" + detail::num(py) + "\" stroke=\"#444\"/>\n";
    s += "<line x1=\"" + detail::num(ax.pix0) + "\" y1=\"" + detail::num(py) + "\" x2=\"" +
         detail::num(ax.pix1) + "\" y2=\"" + detail::num(py) + "\" stroke=\"#eee\"/>\n";
    s += "<text x=\"" + detail::num(ax.pix0 - 8) + "\" y=\"" + detail::num(py + 4) +
         "\" text-anchor=\"end\">" + detail::tick_label(v) + "</text>\n";
  }
  s += "<text x=\"" + detail::num((ax.pix0 + ax.pix1) / 2) + "\" y=\"" +
       detail::num(chart.height - 14.0) + "\" text-anchor=\"middle\">" + detail::escape(chart.x_label) +
       "</text>\n";
  s += "<text transform=\"translate(18," + detail::num((ay.pix0 + ay.pix1) / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" + detail::escape(chart.y_label) + "</text>\n";
  s += "</g>\n";

  // Bands first so every line stays visible.
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& sr = series[k];
    if (sr.lo.empty()) continue;
    const std::size_t st = stride(sr.x.size());
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < sr.x.size(); i += st)
      if (std::isfinite(sr.lo[i]) && std::isfinite(sr.hi[i])) idx.push_back(i);
    if (idx.empty()) continue;
    std::string pts;
    for (std::size_t i : idx) pts += point(sr.x[i], sr.hi[i]) + " ";
    for (auto it = idx.rbegin(); it != idx.rend(); ++it) pts += point(sr.x[*it], sr.lo[*it]) + " ";
    pts.pop_back();
    s += "<polygon points=\"" + pts + "\" fill=\"" + detail::color(k) +
         "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& sr = series[k];
    const std::size_t st = stride(sr.x.size());
    std::string pts;
    for (std::size_t i = 0; i < sr.x.size(); i += st) {
      if (!std::isfinite(sr.y[i])) continue;
      pts += point(sr.x[i], sr.y[i]) + " ";
    }
    if (!pts.empty()) pts.pop_back();
    s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + detail::color(k) +
         "\" stroke-width=\"1.6\"/>\n";
  }

  // Legend.
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double y = top + 10 + 18.0 * static_cast<double>(k);
    const double x = chart.width - right + 16;
    s += "<line x1=\"" + detail::num(x) + "\" y1=\"" + detail::num(y) + "\" x2=\"" +
         detail::num(x + 22) + "\" y2=\"" + detail::num(y) + "\" stroke=\"" + detail::color(k) +
         "\" stroke-width=\"2.5\"/>\n";
    s += "<text x=\"" + detail::num(x + 28) + "\" y=\"" + detail::num(y + 4) + "\">" +
         detail::escape(series[k].name) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace batd::svg
