#pragma once

#include <optional>
#include <string>
#include <vector>

namespace logcvx {

struct Series {
  std::string label;
  std::vector<double> x, y;
};

/// Shaded region between two curves sharing x.
struct Band {
  std::string label;
  std::vector<double> x, lower, upper;
};

struct Plot {
  std::string title;
  std::string xlabel, ylabel;
  std::vector<Series> series;
  std::optional<Band> band;
};

/// Standalone SVG document; non-finite points split the polyline.
std::string render_svg(const Plot& plot, int width = 640, int height = 400);

}  // namespace logcvx
