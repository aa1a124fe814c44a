#include "logcvx/trajectory.hpp"

#include <string>

namespace logcvx {

std::vector<double> Trajectory::taus() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.tau);
  return out;
}

void Trajectory::validate() const {
  if (order < 2 || order % 2 != 0) throw ConfigError("trajectory order must be an even integer >= 2");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const TrajectorySample& s = samples[i];
    if (i > 0 && !(s.tau > samples[i - 1].tau))
      throw InvariantViolation("trajectory tau samples must be strictly increasing (index " + std::to_string(i) + ")");
    for (const Section* sec : {&s.X, &s.Y, &s.dX, &s.dY}) {
      sec->validate();
      require_same_grid(sec->grid, geometry.grid, "trajectory sample");
    }
    if (s.X.fiber_dim != s.dX.fiber_dim || s.Y.fiber_dim != s.dY.fiber_dim)
      throw DimensionError("trajectory derivative shape mismatch");
  }
}

}  // namespace logcvx
