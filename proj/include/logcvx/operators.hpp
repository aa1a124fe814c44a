#pragma once

#include "logcvx/geometry.hpp"

#include <vector>

namespace logcvx {

/// Discrete section of a fiber bundle, possibly with covariant indices.
///
/// A rank-r section stores d^r components; component (i1, ..., ir) lives at
/// comps[i1 + d*i2 + ...] as an npts x fiber_dim matrix.
struct Section {
  TorusGrid grid;
  int fiber_dim = 1;
  int rank = 0;
  std::vector<Mat> comps;

  static Section zero(const TorusGrid& grid, int fiber_dim, int rank = 0);
  static Section from(const TorusGrid& grid, Mat values);
  static Section scalar(const TorusGrid& grid, const Vec& values) { return from(grid, Mat(values)); }

  const Mat& value() const { return comps.at(0); }
  Mat& value() { return comps.at(0); }
  Index points() const { return grid.size(); }

  /// Throws DimensionError / InvariantViolation on bad shapes or non-finite entries.
  void validate() const;

  Section& operator+=(const Section& o);
  Section& operator-=(const Section& o);
  Section& operator*=(double c);
};

Section operator+(Section a, const Section& b);
Section operator-(Section a, const Section& b);
Section operator*(double c, Section a);

enum class Backend { spectral, finite_difference };

/// Second-order centered difference along one axis (cross-check backend).
Mat fd_derivative(const TorusGrid& grid, const Mat& f, int axis);

/// Connection gradient dhat X = dX + A X, and for rank 1 the induced
/// connection with the metric's Christoffel symbols. Rank > 1 is unsupported.
Section grad_hat(const Section& X, const GeometrySample& geo, Backend backend = Backend::spectral);

/// Ell X = Lambda^{ij} dhat_i dhat_j X + (nabla_i Lambda^{ij}) dhat_j X on rank-0 sections.
Section elliptic_apply(const Section& X, const GeometrySample& geo, Backend backend = Backend::spectral);

/// L_B X = d_tau X + Ell X.
Section l_backward(const Section& X, const Section& dtau_X, const GeometrySample& geo);
/// L_F X = d_tau X - Ell X.
Section l_forward(const Section& X, const Section& dtau_X, const GeometrySample& geo);

/// k-fold flat Laplacian, multiplier (-|xi|^2)^k, 1 <= k <= max_power.
Section laplace_power(const Section& X, int k, int max_power = 3);

/// (U, V) = int <U, V>_gamma dmu; rank-1 sections are contracted with g^{ij}.
double inner(const Section& U, const Section& V, const GeometrySample& geo);
double norm2(const Section& U, const GeometrySample& geo);

/// int Lambda^{ij} <dhat_i X, dhat_j X>_gamma dmu for an already computed gradient.
double lambda_energy(const Section& grad, const GeometrySample& geo);

/// |(Ell X, X) + F(X)| / max(F(X), eps); zero when F vanishes.
double ibp_residual(const Section& X, const GeometrySample& geo);

/// Pointwise fiber norm |U| (gamma and g^{-1} contractions), one entry per grid point.
Vec pointwise_norm(const Section& U, const GeometrySample& geo);

}  // namespace logcvx
