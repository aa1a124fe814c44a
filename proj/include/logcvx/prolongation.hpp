#pragma once

#include "logcvx/grid.hpp"
#include "logcvx/spectral.hpp"

#include <array>
#include <vector>

namespace logcvx {

/// Conformal metrics g = e^{2u} delta on T^2 under Ricci flow, u_t = e^{-2u} Delta_0 u,
/// stored at increasing tau = omega - t.
struct ConformalFlowState {
  TorusGrid grid;
  double omega = 0.0;
  std::vector<double> tau;
  std::vector<Vec> u;
  double dt = 0.0;
  double cfl = 0.0;  // dt * max e^{-2u} |xi|^2 at the start

  std::size_t size() const { return tau.size(); }
};

/// Tensor fields on T^2 stored component-wise; index conventions:
///   rank-2  T_ij            at i + 2j
///   Y1      Gamma^k_ij      at k + 2i + 4j
///   Y2      (nabla_l Y1)^k_ij at l + 2k + 4i + 8j
using Tensor2 = std::array<Vec, 4>;
using Tensor3 = std::array<Vec, 8>;
using Tensor4 = std::array<Vec, 16>;

Vec gauss_curvature(const TorusGrid& grid, const Vec& u);
Tensor3 christoffel_field(const TorusGrid& grid, const Vec& u);

/// Explicit RK4 forward in t on [0, omega]; StepperFailure when dt violates the
/// stability bound 2.5 / (max e^{-2u} |xi|^2).
ConformalFlowState solve_conformal_ricci(const TorusGrid& grid, const Vec& u0, double omega, double dt,
                                         int record_every = 1);

/// Differences between two solutions; the first is the reference metric g.
struct ProlongedSections {
  Vec X0;                 // K - K~
  std::array<Vec, 2> X1;  // dK - dK~
  Tensor2 Y0;             // g - g~
  Tensor3 Y1;             // Gamma - Gamma~
  Tensor4 Y2;             // nabla Y1 (reference connection)
};

ProlongedSections build_prolonged(const ConformalFlowState& a, const ConformalFlowState& b, std::size_t index);

/// Y1 from Y0 = g - g~ through (1/2) g~^{kl}(nabla_i Y0_jl + nabla_j Y0_il - nabla_l Y0_ij).
Tensor3 y1_from_metric_difference(const ConformalFlowState& a, const ConformalFlowState& b, std::size_t index);

/// Pointwise g-norms (reference metric) of the X and Y blocks.
struct ProlongedNorms {
  Vec X, Y;
};
ProlongedNorms prolonged_norms(const ProlongedSections& s, const Vec& u);

struct ProlongAudit {
  double epsilon = 0.0;
  double C_pde = 0.0;
  double C_ode = 0.0;
  double C0_empirical = 0.0;
  std::array<double, 2> worst_point{0.0, 0.0};
  double worst_time = 0.0;
  /// max |D2 - D4| / max |D4| over the time derivatives.
  double time_mismatch = 0.0;
};

/// Smallest constants with |d_tau X + Delta X| <= C(|X| + |Y|) and
/// |d_tau Y| <= C(|X| + |nabla X| + |Y|) over all interior samples, Delta the
/// reference Laplacian (scalars: e^{-2u} Delta_0; 1-forms: rough Laplacian).
/// Points whose denominator falls below 1e-14 of the largest are skipped.
/// Refuses when second- and fourth-order time differences disagree by more than `max_mismatch`.
ProlongAudit prolongation_audit(const ConformalFlowState& a, const ConformalFlowState& b, double epsilon = 0.0,
                                double max_mismatch = 1e-3);

}  // namespace logcvx
