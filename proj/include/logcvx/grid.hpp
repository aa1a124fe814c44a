#pragma once

#include "logcvx/common.hpp"

#include <utility>

namespace logcvx {

/// Uniform periodic grid on the 1- or 2-torus with period `length` per axis.
///
/// Flat index of point (ix, iy) is ix + n * iy, so a 2D field viewed as an
/// n x n column-major matrix has x along rows and y along columns.
struct TorusGrid {
  int dim = 1;
  int n = 64;
  double length = 2.0 * kPi;

  /// Validating constructor: dim in {1, 2}, n even and >= 8, length > 0.
  static TorusGrid make(int dim, int n, double length = 2.0 * kPi);

  double spacing() const { return length / n; }
  Index size() const { return dim == 1 ? Index(n) : Index(n) * n; }
  double cell_volume() const;
  Point point(Index flat) const;
  Index index(int ix, int iy = 0) const { return Index(ix) + Index(n) * iy; }

  bool operator==(const TorusGrid& o) const {
    return dim == o.dim && n == o.n && length == o.length;
  }
};

/// Samples f(Point) at every grid point.
template <class F>
Vec sample(const TorusGrid& grid, F&& f) {
  Vec out(grid.size());
  for (Index k = 0; k < grid.size(); ++k) out[k] = f(grid.point(k));
  return out;
}

void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* what);

}  // namespace logcvx
