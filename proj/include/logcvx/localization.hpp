#pragma once

#include "logcvx/evolution.hpp"

#include <optional>
#include <vector>

namespace logcvx {

/// Surrogate distance rho = sqrt(1 + r^2) about a center of a large 1D torus,
/// exponential weight rate Bw and (optionally) a cutoff phi_R.
struct WeightProfile {
  TorusGrid grid;
  double center = 0.0;
  double Bw = 1.0;
  /// Support sets must stay inside r <= safe_radius (a quarter of the torus).
  double safe_radius = 0.0;
  Vec r;
  /// rho and its x-derivatives of orders 0..4.
  std::array<Vec, 5> rho;
  double C1 = std::sqrt(2.0);
  /// max over the safe region of |rho^{(m)}|, m = 1..4.
  double C2 = 0.0;

  double R = 0.0;  // 0 until a cutoff is built
  int smoothness = 2;
  /// phi_R and its derivatives of orders 0..4.
  std::array<Vec, 5> phi;
  /// max |phi'| + |phi''|.
  double C3 = 0.0;

  bool has_cutoff() const { return R > 0.0; }
};

/// The weight-rate prescription max(L1, V0).
double weight_rate(double L1, double V0);

/// Quintic (C^2, smoothness 2) or degree-9 (C^4, smoothness 4) smoothstep and
/// its derivatives of orders 0..4 at t, clamped outside [0, 1].
std::array<double, 5> smoothstep(double t, int smoothness);

/// rho about `center`; the grid must be one-dimensional.
WeightProfile build_rho(const TorusGrid& grid, double center, double Bw = 1.0);

/// phi_R = 1 - S((rho - rho_R)/(rho_2R - rho_R)). Throws ConfigError when 2R
/// leaves the safe region.
WeightProfile build_cutoff(const WeightProfile& profile, double R, int smoothness = 2);

/// (e^{-3 Bw rho} X, e^{-3 Bw rho} Y), multiplied by phi_R when a cutoff is present.
std::pair<Section, Section> weighted_localize(const Section& X, const Section& Y, const WeightProfile& profile);

/// Exact backward heat-kernel solution X = (T/(T - tau))^{1/2} exp(-(x - c)^2 / (4 (T - tau)))
/// sampled at `samples` uniform tau values on [0, omega], Y = 0.
Trajectory heat_kernel_trajectory(const TorusGrid& grid, double center, double T, double omega, int samples);

struct CutoffRow {
  double R = 0.0;
  std::vector<double> E, F, N, Q;  // per tau sample
  double correction = 0.0;         // e^{-2 Bw R} Q_R(a)
  double P = 0.0;                  // N0 + 1 + correction
  double lhs = 0.0;                // e^{-C P (omega - a)} E_R(omega)
  double rhs = 0.0;                // E_R(a) + e^{-2 Bw R}/P (1 - e^{-C P (omega - a)})
  double max_dev = 0.0;            // max_tau |N_R - N_inf|
  double C3 = 0.0;
  bool bound_ok = false;
};

struct CutoffReport {
  std::vector<double> tau;
  std::vector<double> N_inf;  // weighted, unlocalized
  std::vector<CutoffRow> rows;
  double N0 = 0.0;
  double C_growth = 0.0;
  double Bw = 1.0;
  bool trivially_zero = false;
  bool monotone_ok = false;
  bool decay_ok = false;
  bool c3_ok = false;
  bool pass = false;
};

/// Localized energies along the trajectory for each R (sorted ascending).
/// Refuses when the data does not vanish (below 1e-12 of its max) outside 2 R_max.
CutoffReport cutoff_limit_experiment(const Trajectory& traj, const WeightProfile& profile,
                                     std::vector<double> R_list, int smoothness = 2);

}  // namespace logcvx
