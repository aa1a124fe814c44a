#pragma once

// Independent oracles and generators shared by the unit tests.

#include "logcvx/common.hpp"
#include "logcvx/grid.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using logcvx::Index;
using logcvx::kPi;
using logcvx::Mat;
using logcvx::Vec;

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Dense periodic spectral differentiation matrix on n points of [0, L), n even:
/// D_ij = (1/2)(-1)^(i-j) cot((i-j)h/2), scaled by 2 pi / L.
inline Mat cot_matrix(int n, double length) {
  Mat D = Mat::Zero(n, n);
  const double h = 2.0 * kPi / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) D(i, j) = 0.5 * ((i - j) % 2 == 0 ? 1.0 : -1.0) / std::tan((i - j) * h / 2.0);
  return D * (2.0 * kPi / length);
}

/// Axis derivative on a 2D grid (flat index ix + n iy) via Kronecker products.
inline Mat dense_derivative(const logcvx::TorusGrid& grid, int axis) {
  const Mat D = cot_matrix(grid.n, grid.length);
  if (grid.dim == 1) return D;
  const Mat I = Mat::Identity(grid.n, grid.n);
  Mat out = Mat::Zero(grid.size(), grid.size());
  for (int a = 0; a < grid.n; ++a)
    for (int b = 0; b < grid.n; ++b) {
      // axis 0 acts on ix (fast index), axis 1 on iy
      const Mat block = axis == 0 ? Mat(I(a, b) * D) : Mat(D(a, b) * I);
      out.block(Index(a) * grid.n, Index(b) * grid.n, grid.n, grid.n) = block;
    }
  return out;
}

/// Deterministic generator of band-limited trigonometric fields.
class FieldGen {
 public:
  explicit FieldGen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  /// Sum over |mode| < band of random cos/sin coefficients in [-1, 1].
  Vec field(const logcvx::TorusGrid& grid, int band) {
    const double w = 2.0 * kPi / grid.length;
    Vec out = Vec::Zero(grid.size());
    const int ylo = grid.dim == 2 ? -(band - 1) : 0, yhi = grid.dim == 2 ? band - 1 : 0;
    for (int kx = 0; kx < band; ++kx)
      for (int ky = ylo; ky <= yhi; ++ky) {
        const double a = uniform(-1, 1), b = uniform(-1, 1);
        for (Index p = 0; p < grid.size(); ++p) {
          const auto x = grid.point(p);
          const double arg = w * (kx * x[0] + (grid.dim == 2 ? ky * x[1] : 0.0));
          out[p] += a * std::cos(arg) + b * std::sin(arg);
        }
      }
    return out;
  }

  Mat fields(const logcvx::TorusGrid& grid, int m, int band) {
    Mat out(grid.size(), m);
    for (int c = 0; c < m; ++c) out.col(c) = field(grid, band);
    return out;
  }

 private:
  std::mt19937_64 rng_;
};

/// Trapezoid sum h^d sum f.
inline double trapezoid(const logcvx::TorusGrid& grid, const Vec& f) { return grid.cell_volume() * f.sum(); }

}  // namespace oracle

#include "logcvx/trajectory.hpp"

namespace oracle {

struct Mode {
  int k;
  double a;
};

/// Exact solution of d_tau X = (-1)^{j} Delta^{j} X (order 2j) on the flat 1D torus,
/// X = sum a e^{k^order tau} sin(k x), sampled at count uniform taus in [0, omega].
inline logcvx::Trajectory exact_modes(const logcvx::TorusGrid& grid, const std::vector<Mode>& modes, double omega,
                                      int count, int order = 2) {
  using namespace logcvx;
  Trajectory t;
  t.name = "exact";
  t.geometry = flat_geometry(grid);
  t.order = order;
  t.meta.method = "closed form";
  t.meta.dtau = omega / (count - 1);
  for (int i = 0; i < count; ++i) {
    const double tau = omega * i / (count - 1);
    Vec x = Vec::Zero(grid.size()), dx = Vec::Zero(grid.size());
    for (const auto& m : modes) {
      const double rate = std::pow(double(m.k), order);
      const double amp = m.a * std::exp(rate * tau);
      const Vec s = sample(grid, [&](const Point& p) { return std::sin(m.k * p.x()); });
      x += amp * s;
      dx += rate * amp * s;
    }
    TrajectorySample smp;
    smp.tau = tau;
    smp.X = Section::scalar(grid, x);
    smp.dX = Section::scalar(grid, dx);
    smp.Y = Section::zero(grid, 1);
    smp.dY = Section::zero(grid, 1);
    t.samples.push_back(smp);
  }
  return t;
}

/// Closed-form frequency of exact_modes at tau (order 2j: weights k^order).
inline double modes_frequency(const std::vector<Mode>& modes, double tau, int order = 2) {
  double num = 0.0, den = 0.0;
  for (const auto& m : modes) {
    const double rate = std::pow(double(m.k), order);
    const double w = m.a * m.a * std::exp(2.0 * rate * tau);
    num += w * rate;
    den += w;
  }
  return num / den;
}

}  // namespace oracle
