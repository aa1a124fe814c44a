#pragma once

#include "logcvx/energetics.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace logcvx {

/// Lower-order coupling of a PDE-ODE system:
///   d_tau X = -Ell X + S_X,  d_tau Y = S_Y            (order 2)
///   d_tau X = (-1)^{k+1} Delta^{k+1} X + S_X          (order 2k+2, flat)
struct CoupledSystem {
  using Source = std::function<Section(const Section& X, const Section& Y, const GeometrySample& geo)>;

  std::string name;
  int order = 2;
  double C0 = 0.0;
  std::string coupling = "none";
  Source source_x;
  Source source_y;

  int k() const { return order / 2 - 1; }
};

std::vector<std::string> coupling_names();

/// Couplings:
///   none             S_X = S_Y = 0
///   standard         S_X = C0 Y, S_Y = C0 (X + sum_i e_i X / sqrt d)
///   fourth-standard  S_X = C0 Y, S_Y = C0 (X + sum_i d_i d_i X / sqrt d)
/// where e_i X = (g^{-1/2})_i^j dhat_j X is the orthonormal-frame gradient.
CoupledSystem make_system(const std::string& coupling, double C0, int order = 2);

struct AuditReport {
  double max_ratio = 0.0;  // max pointwise |S| / (sum_p |grad^p X| + |Y|)
  double bound = 0.0;      // C0
  bool pass = true;
  int samples = 0;
};

/// Pointwise structural audit over random band-limited states. The derivative
/// depth in the denominator is order/2 (one derivative at order 2, two at order 4).
AuditReport structural_audit(const CoupledSystem& sys, const Geometry& geo, std::uint64_t seed = 1, int samples = 8,
                             double tol = 1e-9);

struct EvolveOptions {
  double tau0 = 0.0;
  double omega = 0.1;
  double dt = 1e-3;
  int record_every = 1;
  /// Galerkin band: modes with |mode| < band per axis are kept; 0 means n/4.
  int band = 0;
};

/// Integrating-factor RK4 in the growth direction. The principal part
/// c(tau)|xi|^order is integrated exactly per mode; the remainder and the
/// coupling are stepped explicitly. Throws StepperFailure on instability.
Trajectory evolve(const CoupledSystem& sys, const Geometry& geo, const Section& X0, const Section& Y0,
                  const EvolveOptions& opts);

/// Largest ratio |N(Z)|/|Z| of the explicit part over random probes.
double explicit_lipschitz(const CoupledSystem& sys, const Geometry& geo, double tau, int band, std::uint64_t seed = 7);

/// Random band-limited section, modes with |mode| < band, deterministic in seed.
Section random_band_limited(const TorusGrid& grid, int fiber_dim, int band, std::uint64_t seed);

struct FrequencyBound {
  bool trivially_zero = false;
  /// First sample where E drops to the threshold, when it happens.
  std::optional<std::size_t> split_index;
  double C = 0.0;
  double N_omega = 0.0;
  double N0 = 0.0;
  double max_N = 0.0;
  std::size_t worst_index = 0;  // sample attaining the smallest dN/dtau + C(N+1)
  bool certificate = false;
};

/// N(tau) <= e^{C omega}(N(omega) + 1) with C the smallest constant such that
/// dN/dtau >= -C(N + 1) - tol at every full-stencil sample.
FrequencyBound frequency_bound_experiment(const FrequencyTrace& trace);

struct LogConvexity {
  bool trivially_zero = false;
  double C_growth = 0.0;
  double min_second_difference = 0.0;  // of log E over interior samples
  double worst_excess = 0.0;           // largest violation of the pair bound (<= 0 when certified)
  std::size_t worst_i = 0, worst_j = 0;
  bool certificate = false;
};

/// log E(t_j) - log E(t_i) <= C_growth (N0 + 1)(t_j - t_i) over all sample pairs.
LogConvexity logconvexity_certificate(const FrequencyTrace& trace, const FrequencyBound& bound);

struct SweepEntry {
  double epsilon = 0.0;
  double E0 = 0.0;
  double E_omega = 0.0;
  double ratio = 0.0;  // E(omega)/E(0)
  double K = 0.0;      // C_growth (N0 + 1) omega
  bool bound_ok = false;
};

struct UniquenessReport {
  AuditReport audit;
  bool zero_data_ok = false;
  double zero_data_max_E = 0.0;
  std::vector<SweepEntry> sweep;
  double ratio_spread = 0.0;  // max/min ratio - 1 over nonzero epsilons
  bool trivially_zero = false;
  bool pass = false;
};

/// Zero data stays zero; for X0 = eps * base the terminal/initial energy ratio is
/// eps-independent and bounded by e^K. Refuses when the audit fails.
UniquenessReport backward_uniqueness_experiment(const CoupledSystem& sys, const Geometry& geo, const Section& base,
                                                const std::vector<double>& eps_list, const EvolveOptions& opts);

}  // namespace logcvx
