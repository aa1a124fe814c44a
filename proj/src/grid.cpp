#include "logcvx/grid.hpp"

#include <cmath>
#include <string>

namespace logcvx {

TorusGrid TorusGrid::make(int dim, int n, double length) {
  if (dim != 1 && dim != 2)
    throw ConfigError("grid.dim must be 1 or 2, got " + std::to_string(dim));
  if (n < 8 || n % 2 != 0)
    throw ConfigError("grid.n must be even and >= 8, got " + std::to_string(n));
  if (!(length > 0.0) || !std::isfinite(length))
    throw ConfigError("grid.length must be positive and finite");
  return TorusGrid{dim, n, length};
}

double TorusGrid::cell_volume() const {
  const double h = spacing();
  return dim == 1 ? h : h * h;
}

Point TorusGrid::point(Index flat) const {
  const double h = spacing();
  if (dim == 1) return Point(h * double(flat), 0.0);
  return Point(h * double(flat % n), h * double(flat / n));
}

void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* what) {
  if (!(a == b)) throw DimensionError(std::string(what) + ": grid mismatch");
}

}  // namespace logcvx
