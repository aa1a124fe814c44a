#pragma once

#include "logcvx/numeric.hpp"
#include "logcvx/trajectory.hpp"

#include <optional>
#include <string>
#include <vector>

namespace logcvx {

struct EnergyParts {
  double E = 0.0;
  double X2 = 0.0;  // ||X||^2
  double Y2 = 0.0;  // ||Y||^2
};

struct ErrorTerms {
  double I1 = 0.0;
  double I2 = 0.0;
};

/// Energies, error terms and operator pairings at one tau.
struct EnergyReport {
  double tau = 0.0;
  double E = 0.0;
  double X2 = 0.0;
  double Y2 = 0.0;
  double F = 0.0;
  std::optional<double> N;
  double I1 = 0.0;
  double I2 = 0.0;
  double Ic = 0.0;
  double normLB2 = 0.0;
  double normLF2 = 0.0;
  double normdY2 = 0.0;
  double LBX_X = 0.0;  // (L_B X, X)
  double LFX_X = 0.0;  // (L_F X, X)
  double dY_Y = 0.0;   // (d_tau Y, Y)
};

struct Sandwich {
  double lower = 0.0;
  double upper = 0.0;
};

/// E is positive iff it exceeds 1e-30 times the number of grid points.
double energy_threshold(const TorusGrid& grid);

EnergyParts energy(const Section& X, const Section& Y, const GeometrySample& geo);

/// F(X) = int Lambda^{ij} <dhat_i X, dhat_j X> dmu.
double dirichlet(const Section& X, const GeometrySample& geo);

/// Order-(2k+2) flat functional: ||Delta^m X||^2 (k = 2m-1) or ||grad Delta^m X||^2 (k = 2m); k = 0 gives ||grad X||^2.
double order_functional(const Section& X, int k, const GeometrySample& geo);

/// Flat operator (-1)^k Delta^{k+1} of the order-(2k+2) systems.
Section flat_elliptic(const Section& X, int k);

/// I1 and I2 at the sample's tau; dX_hat must be grad_hat(X).
ErrorTerms error_terms(const Section& X, const Section& Y, const Section& dX_hat, const GeometrySample& geo);

/// Report for one sample. `order` selects the geometry operator (2) or the flat (2k+2) one.
EnergyReport evaluate(const TrajectorySample& s, const GeometrySample& geo, int order = 2);

/// Bounds on dN/dtau; throws UndefinedFrequency when N is undefined.
Sandwich frequency_sandwich(const EnergyReport& r);

/// Both right-hand sides of the L2 evolution identity.
double l2ev_rhs_first(const EnergyReport& r);
double l2ev_rhs_second(const EnergyReport& r);

/// Relative residual of dE/dtau (sampled) against the first RHS.
double check_identity_l2ev(const std::vector<EnergyReport>& reports, std::size_t i, StencilQuality* quality = nullptr);
/// Relative gap between the two RHS forms.
double check_identity_l2ev_forms(const EnergyReport& r);
/// F = (1/2)((L_F X, X) - (L_B X, X)), relative residual.
double check_identity_h1arr1(const EnergyReport& r);
/// dF/dtau (sampled) against (1/2)(||L_F X||^2 - ||L_B X||^2) + I2.
double check_identity_h1ev(const std::vector<EnergyReport>& reports, std::size_t i, StencilQuality* quality = nullptr);

/// max(1e-8, 10 dtau^4 + 1e-12 amplification).
double discretization_budget(double dtau, double amplification);

struct TraceRow {
  EnergyReport report;
  std::optional<double> dN;  // sampled dN/dtau where N is defined on the stencil
  StencilQuality quality = StencilQuality::full;
  std::optional<double> sandwich_lower;
  std::optional<double> sandwich_upper;
  double sandwich_tol = 0.0;
  double res_l2ev = 0.0;
  double res_l2ev_forms = 0.0;
  double res_h1arr1 = 0.0;
  double res_h1ev = 0.0;
};

/// Reports, sampled derivatives, sandwich bounds and identity residuals along a trajectory.
struct FrequencyTrace {
  std::string name;
  int order = 2;
  double budget = 0.0;
  double amplification = 1.0;
  std::vector<TraceRow> rows;

  std::vector<double> taus() const;
  std::vector<double> energies() const;

  struct Summary {
    double max_res_l2ev = 0.0;
    double max_res_l2ev_forms = 0.0;
    double max_res_h1arr1 = 0.0;
    double max_res_h1ev = 0.0;
    /// Smallest (dN - lower + tol) and (upper + tol - dN) over full-stencil rows.
    double min_lower_margin = 0.0;
    double min_upper_margin = 0.0;
    std::size_t worst_row = 0;
    std::size_t checked_rows = 0;
    bool sandwich_ok = true;
  };
  /// Maxima over full-stencil rows.
  Summary summarize() const;
};

/// A positive `budget` replaces the default discretization budget.
FrequencyTrace frequency_trace(const Trajectory& traj, double budget = 0.0);

}  // namespace logcvx
