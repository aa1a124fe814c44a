#pragma once

#include "logcvx/operators.hpp"

#include <string>
#include <vector>

namespace logcvx {

/// State (X, Y) and its tau-derivative at one time.
struct TrajectorySample {
  double tau = 0.0;
  Section X, Y, dX, dY;
};

struct StepperMeta {
  std::string method;
  double dtau = 0.0;
  int band = 0;
  /// dtau times the estimated Lipschitz rate of the explicitly stepped part.
  double explicit_rate = 0.0;
  /// Largest tail-energy fraction seen (top quarter of the retained band).
  double tail_fraction = 0.0;
};

/// Time-indexed family of section pairs on a fixed geometry.
///
/// `order` is 2 for the geometry's elliptic operator, or 2k+2 for the flat
/// operator (-1)^k Delta^{k+1}.
struct Trajectory {
  std::string name;
  Geometry geometry;
  int order = 2;
  std::vector<TrajectorySample> samples;
  StepperMeta meta;

  std::vector<double> taus() const;
  /// Strictly increasing tau, matching shapes, finite entries.
  void validate() const;
};

}  // namespace logcvx
