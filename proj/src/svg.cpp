#include "logcvx/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace logcvx {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
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
    if (hi - lo < 1e-300 + 1e-12 * std::abs(hi)) {
      const double pad = std::max(1e-12, 0.5 * std::abs(hi));
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

std::string render_svg(const Plot& plot, int width, int height) {
  const double left = 70, right = 20, top = 30, bottom = 45;
  const double pw = width - left - right, ph = height - top - bottom;
  Range xr, yr;
  for (const auto& s : plot.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  if (plot.band) {
    for (double v : plot.band->x) xr.add(v);
    for (double v : plot.band->lower) yr.add(v);
    for (double v : plot.band->upper) yr.add(v);
  }
  xr.settle();
  yr.settle();
  auto X = [&](double v) { return left + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto Y = [&](double v) { return top + (1.0 - (v - yr.lo) / (yr.hi - yr.lo)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << escape(plot.title)
    << "</text>\n";
  o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0, yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    o << "<text x=\"" << num(X(xv)) << "\" y=\"" << num(top + ph + 15) << "\" text-anchor=\"middle\">" << tick(xv)
      << "</text>\n";
    o << "<text x=\"" << num(left - 5) << "\" y=\"" << num(Y(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
      << "</text>\n";
    o << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + pw) << "\" y1=\"" << num(Y(yv)) << "\" y2=\""
      << num(Y(yv)) << "\" stroke=\"#eee\"/>\n";
  }
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << height - 8 << "\" text-anchor=\"middle\">"
    << escape(plot.xlabel) << "</text>\n";
  o << "<text transform=\"translate(14," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(plot.ylabel) << "</text>\n";

  int legend = 0;
  auto legend_entry = [&](const std::string& label, const std::string& color) {
    const double y = top + 12 + 14 * legend++;
    o << "<rect x=\"" << num(left + pw - 150) << "\" y=\"" << num(y - 8) << "\" width=\"10\" height=\"10\" fill=\""
      << color << "\"/>\n";
    o << "<text x=\"" << num(left + pw - 135) << "\" y=\"" << num(y + 1) << "\">" << escape(label) << "</text>\n";
  };

  if (plot.band) {
    const Band& b = *plot.band;
    std::string pts;
    for (std::size_t i = 0; i < b.x.size(); ++i)
      if (std::isfinite(b.upper[i])) pts += num(X(b.x[i])) + "," + num(Y(b.upper[i])) + " ";
    for (std::size_t i = b.x.size(); i-- > 0;)
      if (std::isfinite(b.lower[i])) pts += num(X(b.x[i])) + "," + num(Y(b.lower[i])) + " ";
    o << "<polygon points=\"" << pts << "\" fill=\"#aec7e8\" fill-opacity=\"0.6\" stroke=\"none\"/>\n";
    legend_entry(b.label, "#aec7e8");
  }
  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const Series& s = plot.series[k];
    const std::string color = kColors[k % 6];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        o << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
      pts.clear();
    };
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
        pts += num(X(s.x[i])) + "," + num(Y(s.y[i])) + " ";
      else
        flush();
    }
    flush();
    legend_entry(s.label, color);
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace logcvx
