#pragma once

#include "logcvx/grid.hpp"
#include "logcvx/spectral.hpp"

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace logcvx {

template <class T>
using Field = std::function<T(const Point&, double tau)>;

/// Time-dependent Riemannian metric g(x, tau) with its tau-derivative b.
struct MetricFamily {
  int dim = 1;
  Field<SpaceMat> g;
  Field<SpaceMat> b;
  /// Christoffel symbols, entry [k](i, j) = Gamma^k_ij. Empty means zero.
  Field<std::array<SpaceMat, 2>> christoffel;
  /// Declared lower bound for the smallest eigenvalue of g.
  double floor = 1.0;

  /// B = g^{ij} b_ij.
  double trace_rate(const Point& p, double tau) const;
};

/// Bundle metric gamma, its rate beta, and a connection dhat = d + A.
struct BundleStructure {
  int fiber_dim = 1;
  Field<FiberMat> gamma;
  Field<FiberMat> beta;
  /// A_i per axis; empty means the trivial connection.
  Field<std::array<FiberMat, 2>> connection;
  /// [d_tau, dhat_i] = d_tau A_i.
  Field<std::array<FiberMat, 2>> connection_rate;
  /// Whether d_i gamma = gamma A_i + A_i^T gamma is declared.
  bool compatible = true;
};

/// Coefficient field Lambda^{ij} of the elliptic operator.
struct EllipticCoefficient {
  Field<SpaceMat> lambda;
  Field<SpaceMat> rate;
  /// (nabla_i Lambda^{ij})_j.
  Field<SpaceVec> divergence;
  /// lambda in  lambda g^{-1} <= Lambda.
  double floor = 1.0;
  /// c(tau) such that the operator equals c(tau) * flat Laplacian when
  /// `constant_coefficient` holds; otherwise the isotropic part used by
  /// the integrating factor.
  std::function<double(double)> principal;
  bool constant_coefficient = true;
};

/// Geometric background frozen at one tau, sampled on every grid point.
struct GeometrySample {
  double tau = 0.0;
  TorusGrid grid;
  std::shared_ptr<const Spectral> spectral;
  int fiber_dim = 1;

  Vec density;      // sqrt(det g)
  Vec trace_rate;   // B
  std::vector<SpaceMat> g_inv;
  std::vector<SpaceMat> lambda;
  std::vector<SpaceMat> lambda_rate;
  std::vector<SpaceVec> div_lambda;
  std::vector<std::array<SpaceMat, 2>> christoffel;  // empty when flat
  std::vector<FiberMat> gamma;
  std::vector<FiberMat> beta;
  std::vector<std::array<FiberMat, 2>> connection;       // empty when trivial
  std::vector<std::array<FiberMat, 2>> connection_rate;  // empty when trivial
  bool gamma_identity = true;  // gamma = I and beta = 0 everywhere

  int dim() const { return grid.dim; }
  Index size() const { return grid.size(); }
  double cell() const { return grid.cell_volume(); }
};

/// A discretized background: grid, metric, bundle and elliptic coefficient.
struct Geometry {
  std::string name;
  TorusGrid grid;
  std::shared_ptr<const Spectral> spectral;
  MetricFamily metric;
  BundleStructure bundle;
  EllipticCoefficient coefficient;
  double tau_min = 0.0;
  double tau_max = 2.0 * kPi;
  /// Time-independent metric, bundle and coefficient.
  bool is_static = true;
  /// Empirical uniform bound over grid samples.
  double L0 = 0.0;
  /// Max |Gauss curvature| of g over the samples (0 for spatially constant metrics).
  double gauss_curvature_max = 0.0;

  int fiber_dim() const { return bundle.fiber_dim; }
  bool flat_metric() const { return !metric.christoffel; }

  /// Freezes every field at tau. Throws OutOfRange outside [tau_min, tau_max].
  GeometrySample at(double tau) const;
  void require_tau(double tau) const;
};

struct PresetOptions {
  /// Breathing amplitude a in g = exp(2a sin tau) delta.
  double amplitude = 0.1;
  /// Connection strength of the twisted bundle.
  double twist = 0.1;
  double tau_min = 0.0;
  double tau_max = 2.0 * kPi;
};

std::vector<std::string> preset_names();

/// Builds one of the documented presets; unknown names raise ConfigError.
Geometry build_preset(std::string_view name, const TorusGrid& grid, const PresetOptions& opts = {});

/// Flat static background with trivial bundle of fiber dimension m.
Geometry flat_geometry(const TorusGrid& grid, int fiber_dim = 1);

/// Conformal metric g = exp(2u) delta (static) with Lambda = g^{-1}; u and its gradient in closed form.
Geometry conformal_static_geometry(const TorusGrid& grid, std::function<double(const Point&)> u,
                                   std::function<SpaceVec(const Point&)> grad_u);

/// Grid max over tau samples of |b| + |grad b| + |Lambda| + |grad Lambda| + |d_tau Lambda| + |d_tau A|.
double estimate_L0(const Geometry& geo, int tau_samples = 17);

/// sqrt(det g) at every grid point; InvariantViolation on a non-SPD sample.
Vec volume_density(const Geometry& geo, double tau);

/// Trapezoid rule h^d sum f sqrt(det g).
double quadrature(const Vec& f, const Geometry& geo, double tau);
double quadrature(const Vec& f, const GeometrySample& s);

}  // namespace logcvx
