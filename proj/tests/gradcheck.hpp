#pragma once

// Finite-difference helpers. The loss is always evaluated in double through
// an independent reference computation; analytic gradients come from the
// float tape. Central differences, step 1e-3, tolerance 1e-2 relative with a
// 1e-4 absolute floor.

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "raw/tensor.hpp"

namespace gradcheck {

inline constexpr double kFdStep = 1e-3;
inline constexpr double kRelTol = 1e-2;
inline constexpr double kAbsFloor = 1e-4;

inline bool grad_close(double analytic, double fd, double rel = kRelTol,
                       double abs_floor = kAbsFloor) {
  const double err = std::fabs(analytic - fd);
  return err <= std::max(abs_floor, rel * std::max(std::fabs(analytic), std::fabs(fd)));
}

inline double central_diff(std::vector<double>& x, size_t i, const std::function<double()>& f,
                           double h = kFdStep) {
  const double orig = x[i];
  x[i] = orig + h;
  const double up = f();
  x[i] = orig - h;
  const double dn = f();
  x[i] = orig;
  return (up - dn) / (2.0 * h);
}

// compare every element of the analytic grad against central differences of
// f over the double mirror
inline void check_tensor_grad(const raw::nn::Tensor& t, std::vector<double>& mirror,
                              const std::function<double()>& f, double rel = kRelTol,
                              double abs_floor = kAbsFloor) {
  REQUIRE(mirror.size() == static_cast<size_t>(t.numel()));
  const auto g = t.grad();
  for (size_t i = 0; i < mirror.size(); ++i) {
    const double fd = central_diff(mirror, i, f);
    const bool ok = grad_close(g[i], fd, rel, abs_floor);
    if (!ok) {
      CAPTURE(i);
      CAPTURE(g[i]);
      CAPTURE(fd);
    }
    REQUIRE(ok);
  }
}

// spot-check a random subset of elements (for big parameter tensors)
inline void check_tensor_grad_sampled(const raw::nn::Tensor& t, std::vector<double>& mirror,
                                      const std::function<double()>& f, int samples,
                                      std::mt19937_64& rng, double rel = kRelTol,
                                      double abs_floor = kAbsFloor) {
  std::uniform_int_distribution<size_t> pick(0, mirror.size() - 1);
  const auto g = t.grad();
  for (int s = 0; s < samples; ++s) {
    const size_t i = pick(rng);
    const double fd = central_diff(mirror, i, f);
    const bool ok = grad_close(g[i], fd, rel, abs_floor);
    if (!ok) {
      CAPTURE(i);
      CAPTURE(g[i]);
      CAPTURE(fd);
    }
    REQUIRE(ok);
  }
}

inline std::vector<float> random_vec(std::mt19937_64& rng, size_t n, float lo = -1.0f,
                                     float hi = 1.0f) {
  std::uniform_real_distribution<float> d(lo, hi);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline std::vector<double> to_double(std::span<const float> v) {
  return std::vector<double>(v.begin(), v.end());
}

}  // namespace gradcheck
