#pragma once

#include <Eigen/Dense>

#include <numbers>
#include <stdexcept>
#include <string>

namespace logcvx {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Grid point in the periodic box; the second coordinate is unused in 1D.
using Point = Eigen::Vector2d;

/// Small dense types with fixed upper bounds so per-point evaluation never allocates.
using SpaceMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;
using SpaceVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;
using FiberMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

inline constexpr int kMaxFiber = 4;
inline constexpr double kPi = std::numbers::pi;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad preset name, malformed key, unsafe radius and similar user-facing problems.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class UnsupportedRank : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

/// Raised when N = F/E is requested while E is at or below the positivity threshold.
class UndefinedFrequency : public Error {
 public:
  using Error::Error;
};

class StepperFailure : public Error {
 public:
  using Error::Error;
};

/// An experiment whose premise is not met (support violation, failed audit, coarse sampling).
class Refused : public Error {
 public:
  using Error::Error;
};

inline SpaceMat identity_space(int dim) { return SpaceMat::Identity(dim, dim); }
inline FiberMat identity_fiber(int m) { return FiberMat::Identity(m, m); }

}  // namespace logcvx
