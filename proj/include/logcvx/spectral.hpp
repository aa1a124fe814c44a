#pragma once

#include "logcvx/grid.hpp"

#include <complex>
#include <functional>

namespace logcvx {

/// Fourier pseudo-spectral calculus on a TorusGrid.
///
/// Wavenumbers use the even-n convention with the Nyquist mode mapped to
/// zero, so the first-derivative operator is exactly skew-adjoint under the
/// trapezoid rule and every Laplacian power is a polynomial in the
/// directional derivatives.
class Spectral {
 public:
  using Multiplier = std::function<std::complex<double>(double kx, double ky)>;

  explicit Spectral(const TorusGrid& grid);

  const TorusGrid& grid() const { return grid_; }

  /// Integer mode index of FFT slot j (Nyquist slot reported as n/2).
  int mode(int j) const;
  /// Physical wavenumber of FFT slot j, zero at Nyquist.
  double wavenumber(int j) const;

  /// Applies m(kx, ky) in Fourier space to every column of f.
  Mat apply(const Mat& f, const Multiplier& m) const;

  Mat derivative(const Mat& f, int axis) const;
  /// Flat Laplacian raised to the power k >= 0, multiplier (-|xi|^2)^k.
  Mat laplacian_power(const Mat& f, int k) const;
  /// exp(scale * |xi|^order) per mode; with band > 0, modes outside the band are dropped.
  Mat exponential(const Mat& f, double scale, int order, int band = 0) const;
  /// Keeps modes with |mode_x| < band and |mode_y| < band.
  Mat project(const Mat& f, int band) const;

  /// Sum over columns and modes of |xi|^(2p) |f_hat|^2, scaled so that p = 0
  /// reproduces the trapezoid L2 norm; equals ||grad^p f||^2 on the flat torus.
  double sobolev_norm2(const Mat& f, int p) const;

  /// Largest |mode| carrying more than `rel` of the max coefficient magnitude.
  int max_mode(const Mat& f, double rel = 1e-12) const;
  /// Fraction of energy in modes with max(|mode_x|, |mode_y|) >= from.
  double tail_fraction(const Mat& f, int from) const;

 private:
  Mat apply_slots(const Mat& f, const std::function<std::complex<double>(int, int)>& m) const;
  Eigen::MatrixXcd forward(const Vec& column) const;
  Vec inverse(const Eigen::MatrixXcd& coeffs) const;

  TorusGrid grid_;
};

}  // namespace logcvx
