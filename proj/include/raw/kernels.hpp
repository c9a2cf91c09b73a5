#pragma once

#include <cmath>
#include <cstdint>

namespace raw::nn {

// Row bodies are templated and shared between the serial reference kernels
// (any scalar type, used by tests as an independent double-precision oracle)
// and the OpenMP drivers (float). Parallelism is always across output rows
// with a fixed per-row summation order, so serial and parallel runs produce
// bitwise-identical results for the same scalar type.

namespace body {

// c[i,:] (+)= a[i,:] * b,  a: [m x k], b: [k x n]
template <typename T>
inline void matmul_row(const T* a, const T* b, T* c, int i, int k, int n, bool accumulate) {
  T* ci = c + static_cast<int64_t>(i) * n;
  const T* ai = a + static_cast<int64_t>(i) * k;
  if (!accumulate) {
    for (int j = 0; j < n; ++j) ci[j] = T(0);
  }
  for (int p = 0; p < k; ++p) {
    const T aip = ai[p];
    const T* bp = b + static_cast<int64_t>(p) * n;
    for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
  }
}

// c[i,:] (+)= a[i,:] * b^T,  a: [m x k], b: [n x k]. Dot products are
// accumulated in 8 independent lanes so the loop vectorizes without
// reassociation; the lane-combine order is fixed.
template <typename T>
inline void matmul_nt_row(const T* a, const T* b, T* c, int i, int k, int n, bool accumulate) {
  T* ci = c + static_cast<int64_t>(i) * n;
  const T* ai = a + static_cast<int64_t>(i) * k;
  for (int j = 0; j < n; ++j) {
    const T* bj = b + static_cast<int64_t>(j) * k;
    T lane[8] = {T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0)};
    int p = 0;
    for (; p + 8 <= k; p += 8) {
      for (int l = 0; l < 8; ++l) lane[l] += ai[p + l] * bj[p + l];
    }
    T tail = T(0);
    for (; p < k; ++p) tail += ai[p] * bj[p];
    T dot = ((lane[0] + lane[1]) + (lane[2] + lane[3])) +
            ((lane[4] + lane[5]) + (lane[6] + lane[7])) + tail;
    if (accumulate) {
      ci[j] += dot;
    } else {
      ci[j] = dot;
    }
  }
}

// c[i,:] (+)= a[:,i]^T * b,  a: [k x m], b: [k x n]
template <typename T>
inline void matmul_tn_row(const T* a, const T* b, T* c, int i, int k, int m, int n,
                          bool accumulate) {
  T* ci = c + static_cast<int64_t>(i) * n;
  if (!accumulate) {
    for (int j = 0; j < n; ++j) ci[j] = T(0);
  }
  for (int p = 0; p < k; ++p) {
    const T api = a[static_cast<int64_t>(p) * m + i];
    const T* bp = b + static_cast<int64_t>(p) * n;
    for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
  }
}

// Exact (erf-based) GELU.
template <typename T>
inline T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * T(0.7071067811865475)));
}

template <typename T>
inline T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * T(0.7071067811865475)));
  const T pdf = std::exp(T(-0.5) * x * x) * T(0.3989422804014327);
  return cdf + x * pdf;
}

// Numerically stabilized softmax over x[0..n). Sum accumulates in double.
template <typename T>
inline void softmax_row(const T* x, T* y, int n) {
  T mx = x[0];
  for (int j = 1; j < n; ++j) mx = x[j] > mx ? x[j] : mx;
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    y[j] = std::exp(x[j] - mx);
    sum += static_cast<double>(y[j]);
  }
  const T inv = T(1.0 / sum);
  for (int j = 0; j < n; ++j) y[j] *= inv;
}

// y = (x - mean) * rstd * gain + bias over one slice of length n.
// Statistics accumulate in double; population variance.
template <typename T>
inline void layer_norm_row(const T* x, const T* gain, const T* bias, T* y, int n, T eps,
                           T* mean_out, T* rstd_out) {
  double mean = 0.0;
  for (int j = 0; j < n; ++j) mean += static_cast<double>(x[j]);
  mean /= n;
  double var = 0.0;
  for (int j = 0; j < n; ++j) {
    const double d = static_cast<double>(x[j]) - mean;
    var += d * d;
  }
  var /= n;
  const T mu = T(mean);
  const T rstd = T(1.0 / std::sqrt(var + static_cast<double>(eps)));
  for (int j = 0; j < n; ++j) y[j] = (x[j] - mu) * rstd * gain[j] + bias[j];
  if (mean_out) *mean_out = mu;
  if (rstd_out) *rstd_out = rstd;
}

}  // namespace body

// Serial reference kernels. Templated; instantiated at double they are the
// finite-difference / oracle substrate for the test suite.
namespace ref {

template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
  for (int i = 0; i < m; ++i) body::matmul_row(a, b, c, i, k, n, accumulate);
}

template <typename T>
void matmul_nt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
  for (int i = 0; i < m; ++i) body::matmul_nt_row(a, b, c, i, k, n, accumulate);
}

template <typename T>
void matmul_tn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
  for (int i = 0; i < m; ++i) body::matmul_tn_row(a, b, c, i, k, m, n, accumulate);
}

template <typename T>
void gelu(const T* x, T* y, int64_t count) {
  for (int64_t i = 0; i < count; ++i) y[i] = body::gelu(x[i]);
}

template <typename T>
void softmax_rows(const T* x, T* y, int rows, int n) {
  for (int i = 0; i < rows; ++i)
    body::softmax_row(x + static_cast<int64_t>(i) * n, y + static_cast<int64_t>(i) * n, n);
}

template <typename T>
void layer_norm_rows(const T* x, const T* gain, const T* bias, T* y, int rows, int n, T eps,
                     T* mean_out, T* rstd_out) {
  for (int i = 0; i < rows; ++i) {
    body::layer_norm_row(x + static_cast<int64_t>(i) * n, gain, bias,
                         y + static_cast<int64_t>(i) * n, n, eps,
                         mean_out ? mean_out + i : nullptr, rstd_out ? rstd_out + i : nullptr);
  }
}

}  // namespace ref

// OpenMP drivers (float). Bitwise-equal to the ref::* kernels at float.
void matmul(const float* a, const float* b, float* c, int m, int k, int n,
            bool accumulate = false);
void matmul_nt(const float* a, const float* b, float* c, int m, int k, int n,
               bool accumulate = false);
void matmul_tn(const float* a, const float* b, float* c, int m, int k, int n,
               bool accumulate = false);
void gelu_forward(const float* x, float* y, int64_t count);
void gelu_backward(const float* x, const float* dy, float* dx, int64_t count);
void softmax_rows(const float* x, float* y, int rows, int n);
void layer_norm_rows(const float* x, const float* gain, const float* bias, float* y, int rows,
                     int n, float eps, float* mean_out, float* rstd_out);

}  // namespace raw::nn
