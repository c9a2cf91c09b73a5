#include "raw/kernels.hpp"

namespace raw::nn {

void matmul(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) body::matmul_row(a, b, c, i, k, n, accumulate);
}

void matmul_nt(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) body::matmul_nt_row(a, b, c, i, k, n, accumulate);
}

void matmul_tn(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) body::matmul_tn_row(a, b, c, i, k, m, n, accumulate);
}

void gelu_forward(const float* x, float* y, int64_t count) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < count; ++i) y[i] = body::gelu(x[i]);
}

// accumulates into dx
void gelu_backward(const float* x, const float* dy, float* dx, int64_t count) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < count; ++i) dx[i] += dy[i] * body::gelu_grad(x[i]);
}

void softmax_rows(const float* x, float* y, int rows, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i)
    body::softmax_row(x + static_cast<int64_t>(i) * n, y + static_cast<int64_t>(i) * n, n);
}

void layer_norm_rows(const float* x, const float* gain, const float* bias, float* y, int rows,
                     int n, float eps, float* mean_out, float* rstd_out) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    body::layer_norm_row(x + static_cast<int64_t>(i) * n, gain, bias,
                         y + static_cast<int64_t>(i) * n, n, eps,
                         mean_out ? mean_out + i : nullptr, rstd_out ? rstd_out + i : nullptr);
  }
}

}  // namespace raw::nn
