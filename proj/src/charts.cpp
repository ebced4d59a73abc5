// SPDX-License-Identifier: Apache-2.0
#include "blockveil/charts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace blockveil {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 55;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};

std::string num(double v, const char* fmt = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Series {
  std::string label;
  bool dashed = false;
  int color = 0;
  std::vector<std::pair<double, double>> pts;
};

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;
  double pixel_lo = 0, pixel_hi = 1;

  double map(double v) const {
    const double a = log ? std::log10(lo) : lo, b = log ? std::log10(hi) : hi;
    const double t = ((log ? std::log10(v) : v) - a) / (b - a);
    return pixel_lo + t * (pixel_hi - pixel_lo);
  }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      for (double e = std::floor(std::log10(lo)); e <= std::ceil(std::log10(hi)) + 1e-9; e += 1.0) {
        const double v = std::pow(10.0, e);
        if (v >= lo * (1 - 1e-9) && v <= hi * (1 + 1e-9)) out.push_back(v);
      }
      return out;
    }
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double f : {1.0, 2.0, 2.5, 5.0, 10.0})
      if (f * mag >= raw) {
        step = f * mag;
        break;
      }
    for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + 1e-9 * span; v += step)
      out.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
    return out;
  }
};

Axis make_axis(std::vector<double> values, bool log, double pixel_lo, double pixel_hi) {
  Axis ax;
  ax.log = log;
  ax.pixel_lo = pixel_lo;
  ax.pixel_hi = pixel_hi;
  if (values.empty()) {
    ax.lo = log ? 1e-3 : 0.0;
    ax.hi = 1.0;
    return ax;
  }
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  ax.lo = *mn;
  ax.hi = *mx;
  if (log) {
    ax.lo = std::pow(10.0, std::floor(std::log10(ax.lo)));
    ax.hi = std::pow(10.0, std::ceil(std::log10(ax.hi)));
    if (ax.hi <= ax.lo) ax.hi = ax.lo * 10.0;
  } else if (ax.hi <= ax.lo) {
    const double pad = ax.lo == 0.0 ? 1.0 : std::abs(ax.lo) * 0.1;
    ax.lo -= pad;
    ax.hi += pad;
  } else {
    const double pad = 0.05 * (ax.hi - ax.lo);
    ax.lo -= pad;
    ax.hi += pad;
  }
  return ax;
}

}  // namespace

std::string render_svg(const ResultTable& table, const ChartSpec& spec) {
  if (table.empty()) throw std::invalid_argument("cannot chart an empty result table");
  if (spec.x_key.empty()) throw std::invalid_argument("chart needs an x key");
  if (spec.metrics.empty() && spec.dashed_metrics.empty()) throw std::invalid_argument("chart needs a metric");

  // Series in order of first appearance; colors follow the series value so
  // a dashed overlay shares the color of its solid counterpart.
  std::vector<Series> series;
  std::map<std::string, std::size_t> index;
  std::vector<double> series_values;
  auto color_of = [&](double key) {
    auto it = std::find(series_values.begin(), series_values.end(), key);
    if (it == series_values.end()) {
      series_values.push_back(key);
      return static_cast<int>(series_values.size() - 1);
    }
    return static_cast<int>(it - series_values.begin());
  };
  for (const auto& row : table.rows()) {
    const bool solid = std::find(spec.metrics.begin(), spec.metrics.end(), row.metric) != spec.metrics.end();
    const bool dashed =
        std::find(spec.dashed_metrics.begin(), spec.dashed_metrics.end(), row.metric) != spec.dashed_metrics.end();
    if (!solid && !dashed) continue;
    const auto x = row.get(spec.x_key);
    if (!x) continue;
    std::string label = row.metric;
    double skey = 0.0;
    int metric_pos = static_cast<int>(
        solid ? std::find(spec.metrics.begin(), spec.metrics.end(), row.metric) - spec.metrics.begin()
              : std::find(spec.dashed_metrics.begin(), spec.dashed_metrics.end(), row.metric) -
                    spec.dashed_metrics.begin());
    if (!spec.series_key.empty()) {
      const auto s = row.get(spec.series_key);
      if (!s) continue;
      skey = *s;
      label += " " + spec.series_key + "=" + num(*s, "%g");
    }
    auto [it, fresh] = index.emplace(label, series.size());
    if (fresh) {
      Series s;
      s.label = label;
      s.dashed = !solid;
      s.color = spec.series_key.empty() ? color_of(metric_pos + (solid ? 0 : 100)) : color_of(skey);
      series.push_back(std::move(s));
    }
    if (spec.log_y && !(row.value > 0.0)) continue;
    if (spec.log_x && !(*x > 0.0)) continue;
    series[it->second].pts.emplace_back(*x, row.value);
  }
  if (series.empty()) throw std::invalid_argument("no table rows match the chart metrics");

  std::vector<double> xs, ys;
  for (auto& s : series) {
    std::stable_sort(s.pts.begin(), s.pts.end(), [](auto& a, auto& b) { return a.first < b.first; });
    for (auto [x, y] : s.pts) {
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  const Axis ax = make_axis(xs, spec.log_x, kLeft, kWidth - kRight);
  const Axis ay = make_axis(ys, spec.log_y, kHeight - kBottom, kTop);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    svg << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(spec.title) << "</text>\n";

  const char* tick_fmt = "%g";
  for (double t : ax.ticks()) {
    const double px = ax.map(t);
    svg << "<line x1=\"" << num(px) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(px) << "\" y2=\""
        << num(kHeight - kBottom) << "\" stroke=\"#e0e0e0\"/>\n";
    svg << "<text x=\"" << num(px) << "\" y=\"" << num(kHeight - kBottom + 16) << "\" text-anchor=\"middle\">"
        << num(t, tick_fmt) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double py = ay.map(t);
    svg << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py) << "\" x2=\"" << num(kWidth - kRight) << "\" y2=\""
        << num(py) << "\" stroke=\"#e0e0e0\"/>\n";
    svg << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py + 4) << "\" text-anchor=\"end\">" << num(t, tick_fmt)
        << "</text>\n";
  }
  svg << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(kWidth - kLeft - kRight)
      << "\" height=\"" << num(kHeight - kTop - kBottom) << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"" << num(kHeight - 14)
      << "\" text-anchor=\"middle\">" << escape(spec.x_label.empty() ? spec.x_key : spec.x_label) << "</text>\n";
  svg << "<text transform=\"translate(18," << num((kTop + kHeight - kBottom) / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(spec.y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[static_cast<std::size_t>(s.color) % std::size(kPalette)];
    const char* dash = s.dashed ? " stroke-dasharray=\"6,4\"" : "";
    if (s.pts.size() > 1) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\"" << dash << " points=\"";
      for (std::size_t i = 0; i < s.pts.size(); ++i)
        svg << (i ? " " : "") << num(ax.map(s.pts[i].first)) << "," << num(ay.map(s.pts[i].second));
      svg << "\"/>\n";
    }
    if (!s.dashed)
      for (auto [x, y] : s.pts)
        svg << "<circle cx=\"" << num(ax.map(x)) << "\" cy=\"" << num(ay.map(y)) << "\" r=\"3\" fill=\"" << color
            << "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(k);
    const double lx = kWidth - kRight + 10;
    svg << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(lx + 22) << "\" y2=\""
        << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"1.8\"" << dash << "/>\n";
    svg << "<text x=\"" << num(lx + 28) << "\" y=\"" << num(ly) << "\" font-size=\"10\">" << escape(s.label)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::filesystem::path emit_chart(const ResultTable& table, const ChartSpec& spec, const std::filesystem::path& dir) {
  const std::string svg = render_svg(table, spec);
  std::filesystem::create_directories(dir);
  const auto path = dir / spec.file_name;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << svg;
  return path;
}

}  // namespace blockveil
