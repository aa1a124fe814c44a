#include "logcvx/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>

namespace logcvx {

namespace {

Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine;
  return engine;
}

void transform_columns(Eigen::MatrixXcd& c, bool inverse) {
  auto& fft = fft_engine();
  Eigen::VectorXcd in, out;
  for (Index j = 0; j < c.cols(); ++j) {
    in = c.col(j);
    if (inverse)
      fft.inv(out, in);
    else
      fft.fwd(out, in);
    c.col(j) = out;
  }
}

void transform_rows(Eigen::MatrixXcd& c, bool inverse) {
  auto& fft = fft_engine();
  Eigen::VectorXcd in, out;
  for (Index i = 0; i < c.rows(); ++i) {
    in = c.row(i).transpose();
    if (inverse)
      fft.inv(out, in);
    else
      fft.fwd(out, in);
    c.row(i) = out.transpose();
  }
}

}  // namespace

Spectral::Spectral(const TorusGrid& grid) : grid_(grid) {}

int Spectral::mode(int j) const {
  const int n = grid_.n;
  if (j < n / 2) return j;
  if (j == n / 2) return n / 2;
  return j - n;
}

double Spectral::wavenumber(int j) const {
  if (j == grid_.n / 2) return 0.0;
  return 2.0 * kPi / grid_.length * double(mode(j));
}

Eigen::MatrixXcd Spectral::forward(const Vec& column) const {
  const int n = grid_.n;
  const int ny = grid_.dim == 1 ? 1 : n;
  Eigen::MatrixXcd c = Eigen::Map<const Eigen::MatrixXd>(column.data(), n, ny).cast<std::complex<double>>();
  transform_columns(c, false);
  if (grid_.dim == 2) transform_rows(c, false);
  return c;
}

Vec Spectral::inverse(const Eigen::MatrixXcd& coeffs) const {
  Eigen::MatrixXcd c = coeffs;
  if (grid_.dim == 2) transform_rows(c, true);
  transform_columns(c, true);
  Vec out(grid_.size());
  Eigen::Map<Eigen::MatrixXd>(out.data(), c.rows(), c.cols()) = c.real();
  return out;
}

Mat Spectral::apply(const Mat& f, const Multiplier& m) const {
  return apply_slots(f, [&](int jx, int jy) {
    return m(wavenumber(jx), grid_.dim == 1 ? 0.0 : wavenumber(jy));
  });
}

Mat Spectral::apply_slots(const Mat& f, const std::function<std::complex<double>(int, int)>& m) const {
  if (f.rows() != grid_.size()) throw DimensionError("spectral apply: field size does not match grid");
  const int n = grid_.n;
  const int ny = grid_.dim == 1 ? 1 : n;
  Eigen::MatrixXcd mult(n, ny);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < n; ++ix) mult(ix, iy) = m(ix, iy);
  Mat out(f.rows(), f.cols());
  for (Index c = 0; c < f.cols(); ++c) {
    Eigen::MatrixXcd coeffs = forward(f.col(c));
    coeffs.array() *= mult.array();
    out.col(c) = inverse(coeffs);
  }
  return out;
}

Mat Spectral::derivative(const Mat& f, int axis) const {
  if (axis < 0 || axis >= grid_.dim) throw DimensionError("derivative axis out of range");
  const std::complex<double> i(0.0, 1.0);
  return apply(f, [&](double kx, double ky) { return i * (axis == 0 ? kx : ky); });
}

Mat Spectral::laplacian_power(const Mat& f, int k) const {
  return apply(f, [k](double kx, double ky) {
    return std::complex<double>(std::pow(-(kx * kx + ky * ky), k), 0.0);
  });
}

Mat Spectral::exponential(const Mat& f, double scale, int order, int band) const {
  return apply_slots(f, [=, this](int jx, int jy) {
    if (band > 0 && (std::abs(mode(jx)) >= band || (grid_.dim == 2 && std::abs(mode(jy)) >= band)))
      return std::complex<double>(0.0, 0.0);
    const double kx = wavenumber(jx), ky = grid_.dim == 1 ? 0.0 : wavenumber(jy);
    return std::complex<double>(std::exp(scale * std::pow(kx * kx + ky * ky, 0.5 * order)), 0.0);
  });
}

Mat Spectral::project(const Mat& f, int band) const {
  return apply_slots(f, [&](int jx, int jy) {
    const bool keep = std::abs(mode(jx)) < band && (grid_.dim == 1 || std::abs(mode(jy)) < band);
    return std::complex<double>(keep ? 1.0 : 0.0, 0.0);
  });
}

double Spectral::sobolev_norm2(const Mat& f, int p) const {
  if (f.rows() != grid_.size()) throw DimensionError("sobolev_norm2: field size does not match grid");
  const int n = grid_.n;
  const int ny = grid_.dim == 1 ? 1 : n;
  double total = 0.0;
  for (Index c = 0; c < f.cols(); ++c) {
    const Eigen::MatrixXcd coeffs = forward(f.col(c));
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const double kx = wavenumber(ix);
        const double ky = grid_.dim == 1 ? 0.0 : wavenumber(iy);
        total += std::pow(kx * kx + ky * ky, p) * std::norm(coeffs(ix, iy));
      }
  }
  return total * grid_.cell_volume() / double(grid_.size());
}

int Spectral::max_mode(const Mat& f, double rel) const {
  const int n = grid_.n;
  const int ny = grid_.dim == 1 ? 1 : n;
  int best = 0;
  double peak = 0.0;
  std::vector<Eigen::MatrixXcd> all;
  for (Index c = 0; c < f.cols(); ++c) {
    all.push_back(forward(f.col(c)));
    peak = std::max(peak, all.back().cwiseAbs().maxCoeff());
  }
  if (peak == 0.0) return 0;
  for (const auto& coeffs : all)
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < n; ++ix)
        if (std::abs(coeffs(ix, iy)) > rel * peak)
          best = std::max({best, std::abs(mode(ix)), grid_.dim == 1 ? 0 : std::abs(mode(iy))});
  return best;
}

double Spectral::tail_fraction(const Mat& f, int from) const {
  const int n = grid_.n;
  const int ny = grid_.dim == 1 ? 1 : n;
  double tail = 0.0, total = 0.0;
  for (Index c = 0; c < f.cols(); ++c) {
    const Eigen::MatrixXcd coeffs = forward(f.col(c));
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const double e = std::norm(coeffs(ix, iy));
        total += e;
        const int m = std::max(std::abs(mode(ix)), grid_.dim == 1 ? 0 : std::abs(mode(iy)));
        if (m >= from) tail += e;
      }
  }
  return total > 0.0 ? tail / total : 0.0;
}

}  // namespace logcvx
