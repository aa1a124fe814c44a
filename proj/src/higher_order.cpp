#include "logcvx/higher_order.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace logcvx {

double interpolation_constant(double eps, int k, int l) {
  if (!(eps > 0.0)) throw OutOfRange("interpolation: eps must be positive");
  if (l < 0 || l >= k || k > 3) throw OutOfRange("interpolation: need 0 <= l < k <= 3");
  return std::pow(eps, -double(l) / double(k - l));
}

InterpolationResult interpolation_check(const Section& X, int l, int k, double eps) {
  if (X.rank != 0) throw UnsupportedRank("interpolation_check expects a rank-0 section");
  InterpolationResult r;
  r.C_used = interpolation_constant(eps, k, l);
  const Spectral sp(X.grid);
  r.lhs = sp.sobolev_norm2(X.value(), l);
  r.rhs = r.C_used * sp.sobolev_norm2(X.value(), 0) + eps * sp.sobolev_norm2(X.value(), k);
  r.slack = r.lhs > 0.0 ? r.rhs / r.lhs - 1.0 : (r.rhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  r.pass = r.lhs <= r.rhs * (1.0 + 1e-12) + 1e-300;
  return r;
}

ModeSearch tightest_interpolation_mode(const TorusGrid& grid, int l, int k, double eps) {
  if (grid.dim != 1) throw DimensionError("mode search runs on one-dimensional grids");
  ModeSearch best{0, std::numeric_limits<double>::infinity()};
  for (int m = 1; m < grid.n / 2; ++m) {
    const double kk = 2.0 * kPi * m / grid.length;
    const Section X = Section::scalar(grid, sample(grid, [&](const Point& x) { return std::sin(kk * x[0]); }));
    const InterpolationResult r = interpolation_check(X, l, k, eps);
    if (r.slack < best.slack) best = {m, r.slack};
  }
  return best;
}

GaardingResult gaarding_check(const Section& X, const Geometry& geo, double eps, double tau) {
  if (!(eps > 0.0 && eps < 1.0)) throw OutOfRange("gaarding_check: eps must lie in (0, 1)");
  const GeometrySample s = geo.at(tau);
  bool flat = s.christoffel.empty();
  for (Index p = 0; p < s.size() && flat; ++p) flat = (s.g_inv[p] - identity_space(s.dim())).norm() <= 1e-14;
  if (!flat) throw ConfigError("gaarding_check needs the flat metric");
  const int d = s.dim();
  GaardingResult r;
  const Section g1 = grad_hat(X, s);
  const Section g2 = grad_hat(g1, s);
  Section lap = Section::zero(X.grid, X.fiber_dim);
  for (int i = 0; i < d; ++i) lap.value() += g2.comps[i + d * i];
  r.lap2 = norm2(lap, s);
  r.hess2 = norm2(g2, s);
  r.X2 = norm2(X, s);

  if (d == 2 && !s.connection.empty()) {
    const Spectral& sp = *s.spectral;
    const int m = X.fiber_dim;
    const Index np = s.size();
    // entries of A_i as grid fields
    auto field = [&](int axis, int a, int b) {
      Vec v(np);
      for (Index p = 0; p < np; ++p) v[p] = s.connection[p][axis](a, b);
      return v;
    };
    std::vector<FiberMat> omega(np, FiberMat::Zero(m, m));
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const Vec d1A2 = sp.derivative(field(1, a, b), 0).col(0);
        const Vec d2A1 = sp.derivative(field(0, a, b), 1).col(0);
        for (Index p = 0; p < np; ++p) omega[p](a, b) = d1A2[p] - d2A1[p];
      }
    for (Index p = 0; p < np; ++p) {
      const FiberMat& A1 = s.connection[p][0];
      const FiberMat& A2 = s.connection[p][1];
      omega[p] += A1 * A2 - A2 * A1;
      r.omega_F = std::max(r.omega_F, omega[p].operatorNorm());
    }
    // Omega_12 = omega, Omega_21 = -omega; (nabla . Omega)_i = sum_j d_j Omega_ij + [A_j, Omega_ij]
    for (int i = 0; i < 2; ++i) {
      const int j = 1 - i;
      const double sign = i == 0 ? 1.0 : -1.0;
      std::vector<FiberMat> div(np, FiberMat::Zero(m, m));
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          Vec w(np);
          for (Index p = 0; p < np; ++p) w[p] = omega[p](a, b);
          const Vec dw = sp.derivative(w, j).col(0);
          for (Index p = 0; p < np; ++p) div[p](a, b) = sign * dw[p];
        }
      for (Index p = 0; p < np; ++p) {
        const FiberMat& Aj = s.connection[p][j];
        div[p] += sign * (Aj * omega[p] - omega[p] * Aj);
        r.div_omega = std::max(r.div_omega, div[p].operatorNorm());
      }
    }
  }
  const double A = 2.0 * (d - 1) * r.omega_F;
  const double B = std::sqrt(double(d)) * r.div_omega;
  r.C = (A + 0.5 * B) * (A + 0.5 * B) * d / (4.0 * eps) + 0.5 * B;
  const double round = 1e-12 * std::max(r.lap2, r.hess2);
  r.slack_lower = r.lap2 - (-r.C * r.X2 + (1.0 - eps) * r.hess2);
  r.slack_upper = (1.0 + eps) * r.hess2 + r.C * r.X2 - r.lap2;
  r.lower_ok = r.slack_lower >= -round;
  r.upper_ok = r.slack_upper >= -round;
  return r;
}

OrderFunctionals order_functionals(const Section& X, const Section& Y, int k) {
  if (k < 0 || k > 3) throw OutOfRange("order_functionals: k must lie in [0, 3]");
  const Geometry flat = flat_geometry(X.grid, X.fiber_dim);
  const GeometrySample s = flat.at(0.0);
  OrderFunctionals f;
  f.E = energy(X, Y, s).E;
  f.F = order_functional(X, k, s);
  if (f.E > energy_threshold(X.grid)) f.N = f.F / f.E;
  const Spectral& sp = *s.spectral;
  f.E_tilde = sp.sobolev_norm2(X.value(), 0) + sp.sobolev_norm2(X.value(), 3 * k + 1) + sp.sobolev_norm2(Y.value(), 0) +
              sp.sobolev_norm2(Y.value(), 2 * k + 2);
  return f;
}

double kcf_functionals(const Section& X, int k) {
  if (k < 1 || k > 3) throw OutOfRange("kcf_functionals: k must be 1, 2 or 3 (got " + std::to_string(k) + ")");
  const Geometry flat = flat_geometry(X.grid, X.fiber_dim);
  return order_functional(X, k, flat.at(0.0));
}

HigherOrderReport higher_order_frequency_trace(const Trajectory& traj) {
  if (traj.order < 4) throw ConfigError("higher-order trace needs an order >= 4 trajectory");
  HigherOrderReport rep;
  rep.trace = frequency_trace(traj);
  rep.sandwich_ok = rep.trace.summarize().sandwich_ok;
  for (const TraceRow& row : rep.trace.rows) {
    if (row.quality != StencilQuality::full || !row.dN || !row.report.N) continue;
    const EnergyReport& r = row.report;
    const double forcing = (r.normLB2 + r.normdY2) / (2.0 * r.E);
    const double need = -(*row.dN + forcing + row.sandwich_tol) / (*r.N + 1.0);
    rep.C_sandwich = std::max(rep.C_sandwich, need);
  }
  rep.bound = frequency_bound_experiment(rep.trace);
  rep.logconvexity = logconvexity_certificate(rep.trace, rep.bound);
  rep.pass = rep.sandwich_ok && rep.bound.certificate && rep.logconvexity.certificate;
  return rep;
}

HigherOrderReport fourth_order_frequency_trace(const Trajectory& traj) {
  if (traj.order != 4) throw ConfigError("fourth-order trace needs an order-4 trajectory");
  return higher_order_frequency_trace(traj);
}

}  // namespace logcvx
