#include "logcvx/geometry.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace logcvx {

double MetricFamily::trace_rate(const Point& p, double tau) const {
  const SpaceMat gm = g(p, tau);
  return gm.ldlt().solve(b(p, tau)).trace();
}

void Geometry::require_tau(double tau) const {
  const double slack = 1e-12 * std::max(1.0, std::abs(tau_max - tau_min));
  if (!(tau >= tau_min - slack && tau <= tau_max + slack))
    throw OutOfRange("tau = " + std::to_string(tau) + " outside the geometry interval [" +
                     std::to_string(tau_min) + ", " + std::to_string(tau_max) + "]");
}

GeometrySample Geometry::at(double tau) const {
  require_tau(tau);
  GeometrySample s;
  s.tau = tau;
  s.grid = grid;
  s.spectral = spectral;
  s.fiber_dim = bundle.fiber_dim;
  const Index np = grid.size();
  const int d = grid.dim;
  const int m = bundle.fiber_dim;
  s.density.resize(np);
  s.trace_rate.resize(np);
  s.g_inv.resize(np);
  s.lambda.resize(np);
  s.lambda_rate.resize(np);
  s.div_lambda.resize(np);
  s.gamma.resize(np);
  s.beta.resize(np);
  if (metric.christoffel) s.christoffel.resize(np);
  if (bundle.connection) {
    s.connection.resize(np);
    s.connection_rate.resize(np);
  }
  const FiberMat eye = identity_fiber(m);
  for (Index k = 0; k < np; ++k) {
    const Point p = grid.point(k);
    const SpaceMat gm = metric.g(p, tau);
    Eigen::LLT<SpaceMat> llt(gm);
    if (llt.info() != Eigen::Success)
      throw InvariantViolation("metric sample is not positive definite at point " + std::to_string(k));
    s.density[k] = std::sqrt(gm.determinant());
    s.g_inv[k] = llt.solve(identity_space(d));
    s.trace_rate[k] = (s.g_inv[k] * metric.b(p, tau)).trace();
    s.lambda[k] = coefficient.lambda(p, tau);
    s.lambda_rate[k] = coefficient.rate(p, tau);
    s.div_lambda[k] = coefficient.divergence(p, tau);
    if (metric.christoffel) s.christoffel[k] = metric.christoffel(p, tau);
    s.gamma[k] = bundle.gamma(p, tau);
    s.beta[k] = bundle.beta(p, tau);
    if (bundle.connection) {
      s.connection[k] = bundle.connection(p, tau);
      s.connection_rate[k] = bundle.connection_rate(p, tau);
    }
    if (s.gamma_identity && (!s.gamma[k].isApprox(eye, 0.0) || s.beta[k].norm() != 0.0)) s.gamma_identity = false;
  }
  return s;
}

namespace {

FiberMat rotation_generator() {
  FiberMat j(2, 2);
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

void trivial_bundle(BundleStructure& bundle, int m) {
  bundle.fiber_dim = m;
  bundle.gamma = [m](const Point&, double) { return identity_fiber(m); };
  bundle.beta = [m](const Point&, double) -> FiberMat { return FiberMat::Zero(m, m); };
}

void flat_metric(MetricFamily& metric, int d) {
  metric.dim = d;
  metric.g = [d](const Point&, double) { return identity_space(d); };
  metric.b = [d](const Point&, double) -> SpaceMat { return SpaceMat::Zero(d, d); };
  metric.floor = 1.0;
}

void unit_coefficient(EllipticCoefficient& c, int d) {
  c.lambda = [d](const Point&, double) { return identity_space(d); };
  c.rate = [d](const Point&, double) -> SpaceMat { return SpaceMat::Zero(d, d); };
  c.divergence = [d](const Point&, double) -> SpaceVec { return SpaceVec::Zero(d); };
  c.floor = 1.0;
  c.principal = [](double) { return 1.0; };
  c.constant_coefficient = true;
}

Geometry skeleton(std::string name, const TorusGrid& grid, const PresetOptions& opts) {
  Geometry geo;
  geo.name = std::move(name);
  geo.grid = grid;
  geo.spectral = std::make_shared<Spectral>(grid);
  geo.tau_min = opts.tau_min;
  geo.tau_max = opts.tau_max;
  flat_metric(geo.metric, grid.dim);
  trivial_bundle(geo.bundle, 1);
  unit_coefficient(geo.coefficient, grid.dim);
  return geo;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"flat-static", "conformal-breathing", "anisotropic-lambda", "twisted-bundle"};
}

Geometry flat_geometry(const TorusGrid& grid, int fiber_dim) {
  Geometry geo = skeleton("flat-static", grid, PresetOptions{});
  trivial_bundle(geo.bundle, fiber_dim);
  geo.tau_min = -1e6;
  geo.tau_max = 1e6;
  return geo;
}

Geometry build_preset(std::string_view name, const TorusGrid& grid, const PresetOptions& opts) {
  const int d = grid.dim;
  Geometry geo = skeleton(std::string(name), grid, opts);

  if (name == "flat-static") {
    // identity case
  } else if (name == "conformal-breathing") {
    const double a = opts.amplitude;
    geo.is_static = false;
    geo.metric.g = [a, d](const Point&, double t) -> SpaceMat {
      return std::exp(2.0 * a * std::sin(t)) * identity_space(d);
    };
    geo.metric.b = [a, d](const Point&, double t) -> SpaceMat {
      return 2.0 * a * std::cos(t) * std::exp(2.0 * a * std::sin(t)) * identity_space(d);
    };
    geo.metric.floor = std::exp(-2.0 * std::abs(a));
    geo.coefficient.lambda = [a, d](const Point&, double t) -> SpaceMat {
      return std::exp(-2.0 * a * std::sin(t)) * identity_space(d);
    };
    geo.coefficient.rate = [a, d](const Point&, double t) -> SpaceMat {
      return -2.0 * a * std::cos(t) * std::exp(-2.0 * a * std::sin(t)) * identity_space(d);
    };
    geo.coefficient.principal = [a](double t) { return std::exp(-2.0 * a * std::sin(t)); };
    geo.coefficient.floor = 1.0;
  } else if (name == "anisotropic-lambda") {
    geo.coefficient.lambda = [d](const Point& p, double) -> SpaceMat {
      return (2.0 + std::cos(p.x())) * identity_space(d);
    };
    geo.coefficient.divergence = [d](const Point& p, double) -> SpaceVec {
      SpaceVec v = SpaceVec::Zero(d);
      v[0] = -std::sin(p.x());
      return v;
    };
    geo.coefficient.floor = 1.0;
    geo.coefficient.principal = [](double) { return 2.0; };
    geo.coefficient.constant_coefficient = false;
  } else if (name == "twisted-bundle") {
    const double eps = opts.twist;
    geo.is_static = false;
    trivial_bundle(geo.bundle, 2);
    const FiberMat J = rotation_generator();
    // A_1 = a(tau) cos(y) J, A_2 = a(tau) cos(x) J in 2D (curved); A_1 = a(tau) cos(x) J in 1D.
    geo.bundle.connection = [eps, d, J](const Point& p, double t) {
      const double a = eps * (1.0 + 0.5 * std::sin(t));
      std::array<FiberMat, 2> A{FiberMat::Zero(2, 2), FiberMat::Zero(2, 2)};
      if (d == 1) {
        A[0] = a * std::cos(p.x()) * J;
      } else {
        A[0] = a * std::cos(p.y()) * J;
        A[1] = a * std::cos(p.x()) * J;
      }
      return A;
    };
    geo.bundle.connection_rate = [eps, d, J](const Point& p, double t) {
      const double da = eps * 0.5 * std::cos(t);
      std::array<FiberMat, 2> A{FiberMat::Zero(2, 2), FiberMat::Zero(2, 2)};
      if (d == 1) {
        A[0] = da * std::cos(p.x()) * J;
      } else {
        A[0] = da * std::cos(p.y()) * J;
        A[1] = da * std::cos(p.x()) * J;
      }
      return A;
    };
    geo.coefficient.constant_coefficient = false;
  } else {
    std::string valid;
    for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + std::string(name) + "'; valid presets: " + valid);
  }
  geo.L0 = estimate_L0(geo);
  return geo;
}

Geometry conformal_static_geometry(const TorusGrid& grid, std::function<double(const Point&)> u,
                                   std::function<SpaceVec(const Point&)> grad_u) {
  PresetOptions opts;
  opts.tau_min = -1e6;
  opts.tau_max = 1e6;
  Geometry geo = skeleton("conformal-static", grid, opts);
  const int d = grid.dim;
  geo.metric.g = [u, d](const Point& p, double) -> SpaceMat { return std::exp(2.0 * u(p)) * identity_space(d); };
  geo.metric.christoffel = [grad_u, d](const Point& p, double) {
    const SpaceVec du = grad_u(p);
    std::array<SpaceMat, 2> G{SpaceMat::Zero(d, d), SpaceMat::Zero(d, d)};
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          G[k](i, j) = (k == i ? du[j] : 0.0) + (k == j ? du[i] : 0.0) - (i == j ? du[k] : 0.0);
    return G;
  };
  // Lambda = g^{-1}: nabla_i g^{ij} = 0, so the operator is Laplace-Beltrami.
  geo.coefficient.lambda = [u, d](const Point& p, double) -> SpaceMat {
    return std::exp(-2.0 * u(p)) * identity_space(d);
  };
  geo.coefficient.constant_coefficient = false;
  const Vec us = sample(grid, u);
  geo.metric.floor = std::exp(2.0 * us.minCoeff());
  const Vec lap = geo.spectral->laplacian_power(us, 1);
  geo.gauss_curvature_max = ((-2.0 * us).array().exp() * lap.array()).abs().maxCoeff();
  geo.L0 = estimate_L0(geo, 1);
  return geo;
}

double estimate_L0(const Geometry& geo, int tau_samples) {
  const TorusGrid& grid = geo.grid;
  const Index np = grid.size();
  const int d = grid.dim;
  const double t0 = std::max(geo.tau_min, -1.0);
  const double t1 = std::min(geo.tau_max, 2.0 * kPi);
  double best = 0.0;
  for (int s = 0; s < tau_samples; ++s) {
    const double tau = tau_samples == 1 ? t0 : t0 + (t1 - t0) * s / double(tau_samples - 1);
    Mat b(np, d * d), lam(np, d * d);
    Vec pointwise = Vec::Zero(np);
    for (Index k = 0; k < np; ++k) {
      const Point p = grid.point(k);
      const SpaceMat bk = geo.metric.b(p, tau);
      const SpaceMat lk = geo.coefficient.lambda(p, tau);
      for (int i = 0; i < d * d; ++i) {
        b(k, i) = bk(i % d, i / d);
        lam(k, i) = lk(i % d, i / d);
      }
      double extra = bk.norm() + lk.norm() + geo.coefficient.rate(p, tau).norm();
      if (geo.bundle.connection_rate) {
        const auto dA = geo.bundle.connection_rate(p, tau);
        for (int i = 0; i < d; ++i) extra += dA[i].norm();
      }
      pointwise[k] = extra;
    }
    for (int axis = 0; axis < d; ++axis) {
      pointwise += geo.spectral->derivative(b, axis).rowwise().norm();
      pointwise += geo.spectral->derivative(lam, axis).rowwise().norm();
    }
    best = std::max(best, pointwise.maxCoeff());
  }
  return best + geo.gauss_curvature_max;
}

Vec volume_density(const Geometry& geo, double tau) {
  geo.require_tau(tau);
  return geo.at(tau).density;
}

double quadrature(const Vec& f, const GeometrySample& s) {
  if (f.size() != s.size()) throw DimensionError("quadrature: field has " + std::to_string(f.size()) +
                                                 " samples, grid has " + std::to_string(s.size()));
  return s.cell() * f.dot(s.density);
}

double quadrature(const Vec& f, const Geometry& geo, double tau) {
  if (f.size() != geo.grid.size()) throw DimensionError("quadrature: field/grid shape mismatch");
  return quadrature(f, geo.at(tau));
}

}  // namespace logcvx
