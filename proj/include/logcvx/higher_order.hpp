#pragma once

#include "logcvx/evolution.hpp"

#include <optional>

namespace logcvx {

/// C(eps, k, l) = eps^{-l/(k-l)}: per mode |xi|^{2l} <= eps |xi|^{2k} + C.
double interpolation_constant(double eps, int k, int l);

struct InterpolationResult {
  double lhs = 0.0;     // ||grad^l X||^2
  double rhs = 0.0;     // C ||X||^2 + eps ||grad^k X||^2
  double C_used = 0.0;
  double slack = 0.0;   // rhs / lhs - 1 (infinite when lhs = 0 < rhs)
  bool pass = false;
};

/// ||grad^l X||^2 <= C ||X||^2 + eps ||grad^k X||^2 on the flat torus, 0 <= l < k <= 3.
InterpolationResult interpolation_check(const Section& X, int l, int k, double eps);

struct ModeSearch {
  int mode = 0;
  double slack = 0.0;
};

/// Single mode sin(m x) with 1 <= m < n/2 minimizing the slack of the interpolation inequality.
ModeSearch tightest_interpolation_mode(const TorusGrid& grid, int l, int k, double eps);

struct GaardingResult {
  double lap2 = 0.0;   // ||Delta X||^2
  double hess2 = 0.0;  // ||grad^2 X||^2
  double X2 = 0.0;
  double C = 0.0;      // a-priori constant from the connection curvature
  double omega_F = 0.0;      // max |Omega_ij|
  double div_omega = 0.0;    // max |sum_j nabla_j Omega_ij|
  double slack_lower = 0.0;  // ||Delta X||^2 - (-C||X||^2 + (1 - eps)||grad^2 X||^2)
  double slack_upper = 0.0;  // (1 + eps)||grad^2 X||^2 + C||X||^2 - ||Delta X||^2
  bool lower_ok = false;
  bool upper_ok = false;
};

/// -C||X||^2 + (1 - eps)||grad^2 X||^2 <= ||Delta X||^2 <= (1 + eps)||grad^2 X||^2 + C||X||^2
/// on the flat metric with a metric-compatible connection frozen at tau, with
///   C = (A + B/2)^2 d / (4 eps) + B/2,  A = 2 (d - 1) max|Omega|,  B = sqrt(d) max|nabla . Omega|.
GaardingResult gaarding_check(const Section& X, const Geometry& geo, double eps, double tau = 0.0);

struct OrderFunctionals {
  double E = 0.0;
  double F = 0.0;
  std::optional<double> N;
  double E_tilde = 0.0;  // ||X||^2 + ||grad^{3k+1} X||^2 + ||Y||^2 + ||grad^{2k+2} Y||^2
};

/// Order-(2k+2) functionals on the flat torus; k = 1 gives F4 = ||Delta X||^2.
OrderFunctionals order_functionals(const Section& X, const Section& Y, int k);

/// F for the order-(2k+2) system, k in {1, 2, 3}.
double kcf_functionals(const Section& X, int k);

struct HigherOrderReport {
  FrequencyTrace trace;
  /// Smallest C with dN >= -C(N + 1) - (||L_B X||^2 + ||d_tau Y||^2)/(2E) - tol.
  double C_sandwich = 0.0;
  bool sandwich_ok = false;
  FrequencyBound bound;
  LogConvexity logconvexity;
  bool pass = false;
};

/// Trace, sandwich, frequency bound and log-convexity for an order >= 4 trajectory.
HigherOrderReport higher_order_frequency_trace(const Trajectory& traj);
/// Same, restricted to order 4.
HigherOrderReport fourth_order_frequency_trace(const Trajectory& traj);

}  // namespace logcvx
