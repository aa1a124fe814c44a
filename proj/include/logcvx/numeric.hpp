#pragma once

#include "logcvx/common.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace logcvx {

/// Accuracy class of a sampled time derivative.
enum class StencilQuality {
  full,       // 8th-order centered
  reduced,    // lower-order centered near the ends
  one_sided,  // first/last sample
};

struct Derivative {
  double value = 0.0;
  StencilQuality quality = StencilQuality::full;
};

/// d/dtau of uniformly sampled values at index i.
Derivative sampled_derivative(const std::vector<double>& tau, const std::vector<double>& values, std::size_t i);

/// Second centered difference (values[i+1] - 2 values[i] + values[i-1]) / dtau^2 for interior i.
double second_difference(const std::vector<double>& tau, const std::vector<double>& values, std::size_t i);

/// Trapezoid integral of sampled values from index `from` to the last sample.
double tail_integral(const std::vector<double>& tau, const std::vector<double>& values, std::size_t from);

/// Worker count honoring LOGCVX_THREADS (default: hardware concurrency, at least 1).
unsigned worker_count();

/// Runs fn(i) for i in [0, count) on up to worker_count() threads; results keep index order.
template <class T>
std::vector<T> parallel_map(std::size_t count, const std::function<T(std::size_t)>& fn);

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

template <class T>
std::vector<T> parallel_map(std::size_t count, const std::function<T(std::size_t)>& fn) {
  std::vector<T> out(count);
  parallel_for(count, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace logcvx
