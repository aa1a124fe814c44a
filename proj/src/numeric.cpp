#include "logcvx/numeric.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace logcvx {

namespace {

constexpr std::array<double, 4> kCentral8{4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
constexpr std::array<double, 3> kCentral6{3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0};
constexpr std::array<double, 2> kCentral4{2.0 / 3.0, -1.0 / 12.0};
constexpr std::array<double, 5> kForward4{-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -1.0 / 4.0};

double spacing(const std::vector<double>& tau) {
  if (tau.size() < 2) throw DimensionError("sampled derivative needs at least two samples");
  const double h = (tau.back() - tau.front()) / double(tau.size() - 1);
  for (std::size_t i = 1; i < tau.size(); ++i)
    if (std::abs((tau[i] - tau[i - 1]) - h) > 1e-9 * std::abs(h))
      throw InvariantViolation("tau samples must be uniformly spaced and strictly increasing");
  if (!(h > 0.0)) throw InvariantViolation("tau samples must be strictly increasing");
  return h;
}

template <std::size_t K>
double central(const std::array<double, K>& c, const std::vector<double>& v, std::size_t i, double h) {
  double s = 0.0;
  for (std::size_t k = 0; k < K; ++k) s += c[k] * (v[i + k + 1] - v[i - k - 1]);
  return s / h;
}

}  // namespace

Derivative sampled_derivative(const std::vector<double>& tau, const std::vector<double>& values, std::size_t i) {
  if (tau.size() != values.size()) throw DimensionError("tau/value length mismatch");
  const double h = spacing(tau);
  const std::size_t n = values.size();
  const std::size_t room = std::min(i, n - 1 - i);
  if (room >= 4) return {central(kCentral8, values, i, h), StencilQuality::full};
  if (room == 3) return {central(kCentral6, values, i, h), StencilQuality::reduced};
  if (room == 2) return {central(kCentral4, values, i, h), StencilQuality::reduced};
  if (room == 1) return {(values[i + 1] - values[i - 1]) / (2.0 * h), StencilQuality::reduced};
  if (n >= 5) {
    double s = 0.0;
    const bool forward = (i == 0);
    for (std::size_t k = 0; k < 5; ++k) s += kForward4[k] * values[forward ? k : n - 1 - k];
    return {forward ? s / h : -s / h, StencilQuality::one_sided};
  }
  const double d = i == 0 ? values[1] - values[0] : values[n - 1] - values[n - 2];
  return {d / h, StencilQuality::one_sided};
}

double second_difference(const std::vector<double>& tau, const std::vector<double>& values, std::size_t i) {
  const double h = spacing(tau);
  if (i == 0 || i + 1 >= values.size()) throw OutOfRange("second_difference needs an interior index");
  return (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (h * h);
}

double tail_integral(const std::vector<double>& tau, const std::vector<double>& values, std::size_t from) {
  double s = 0.0;
  for (std::size_t i = from; i + 1 < values.size(); ++i) s += 0.5 * (values[i] + values[i + 1]) * (tau[i + 1] - tau[i]);
  return s;
}

unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LOGCVX_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) hw = std::min(hw, unsigned(cap));
    } catch (const std::exception&) {
      // unparsable cap is ignored
    }
  }
  return hw;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = std::min<std::size_t>(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace logcvx
