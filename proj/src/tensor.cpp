#include "raw/tensor.hpp"

#include <cmath>
#include <sstream>

#include "raw/kernels.hpp"

namespace raw::nn {

namespace {

int64_t shape_numel(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

void ensure_finite(std::span<const float> v, const char* op) {
  for (float x : v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string(op) + " produced a non-finite value");
    }
  }
}

void require_2d(const Tensor& t, const char* op) {
  if (t.ndim() != 2) {
    throw ShapeError(std::string(op) + " expects a 2-d tensor, got " + shape_str(t.shape()));
  }
}

}  // namespace

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

Tensor make_op_output(std::vector<int> shape, bool requires_grad, const void* tape) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->values.resize(static_cast<size_t>(shape_numel(impl->shape)));
  impl->requires_grad = requires_grad;
  if (requires_grad) impl->grad.assign(impl->values.size(), 0.0f);
  impl->creator_tape = tape;
  return Tensor(std::move(impl));
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  return make_op_output(std::move(shape), requires_grad, nullptr);
}

Tensor Tensor::full(std::vector<int> shape, float value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (auto& v : t.impl_->values) v = value;
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<float> data, bool requires_grad) {
  const int64_t n = shape_numel(shape);
  if (n != static_cast<int64_t>(data.size())) {
    throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " +
                     shape_str(shape));
  }
  Tensor t = zeros(std::move(shape), requires_grad);
  t.impl_->values = std::move(data);
  return t;
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

Tensor Tensor::randn(std::vector<int> shape, std::mt19937_64& rng, float stddev,
                     bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::normal_distribution<float> dist(0.0f, stddev);
  for (auto& v : t.impl_->values) v = dist(rng);
  return t;
}

std::span<const float> Tensor::grad() const {
  if (!impl_->requires_grad) throw ValueError("tensor does not require grad");
  return impl_->grad;
}

std::span<float> Tensor::grad_mut() {
  if (!impl_->requires_grad) throw ValueError("tensor does not require grad");
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_->requires_grad) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

float Tensor::item() const {
  if (numel() != 1) throw ValueError("item() on non-scalar tensor " + shape_str(shape()));
  return impl_->values[0];
}

float Tensor::at(int i, int j) const {
  return impl_->values[static_cast<size_t>(i) * static_cast<size_t>(impl_->shape[1]) +
                       static_cast<size_t>(j)];
}

namespace {

// common op epilogue: finite check + requires_grad propagation
Tensor new_output(Tape& tape, std::vector<int> shape, bool any_input_grad, const char* op) {
  const bool rg = tape.recording() && any_input_grad;
  return make_op_output(std::move(shape), rg, rg ? static_cast<const void*>(&tape) : nullptr);
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul inner dimensions disagree: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = new_output(tape, {m, n}, a.requires_grad() || b.requires_grad(), "matmul");
  nn::matmul(a.values().data(), b.values().data(), out.values_mut().data(), m, k, n);
  ensure_finite(out.values(), "matmul");
  if (out.requires_grad()) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape.record("matmul", [ai, bi, oi, m, k, n] {
      if (ai->requires_grad)
        nn::matmul_nt(oi->grad.data(), bi->values.data(), ai->grad.data(), m, n, k, true);
      if (bi->requires_grad)
        nn::matmul_tn(ai->values.data(), oi->grad.data(), bi->grad.data(), k, m, n, true);
    });
  }
  return out;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + " shapes disagree: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = new_output(tape, a.shape(), a.requires_grad() || b.requires_grad(), "add");
  const auto av = a.values(), bv = b.values();
  auto ov = out.values_mut();
  for (int64_t i = 0; i < out.numel(); ++i) ov[i] = av[i] + bv[i];
  ensure_finite(out.values(), "add");
  if (out.requires_grad()) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape.record("add", [ai, bi, oi] {
      const size_t n = oi->grad.size();
      if (ai->requires_grad)
        for (size_t i = 0; i < n; ++i) ai->grad[i] += oi->grad[i];
      if (bi->requires_grad)
        for (size_t i = 0; i < n; ++i) bi->grad[i] += oi->grad[i];
    });
  }
  return out;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = new_output(tape, a.shape(), a.requires_grad() || b.requires_grad(), "sub");
  const auto av = a.values(), bv = b.values();
  auto ov = out.values_mut();
  for (int64_t i = 0; i < out.numel(); ++i) ov[i] = av[i] - bv[i];
  ensure_finite(out.values(), "sub");
  if (out.requires_grad()) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape.record("sub", [ai, bi, oi] {
      const size_t n = oi->grad.size();
      if (ai->requires_grad)
        for (size_t i = 0; i < n; ++i) ai->grad[i] += oi->grad[i];
      if (bi->requires_grad)
        for (size_t i = 0; i < n; ++i) bi->grad[i] -= oi->grad[i];
    });
  }
  return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = new_output(tape, a.shape(), a.requires_grad() || b.requires_grad(), "mul");
  const auto av = a.values(), bv = b.values();
  auto ov = out.values_mut();
  for (int64_t i = 0; i < out.numel(); ++i) ov[i] = av[i] * bv[i];
  ensure_finite(out.values(), "mul");
  if (out.requires_grad()) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape.record("mul", [ai, bi, oi] {
      const size_t n = oi->grad.size();
      if (ai->requires_grad)
        for (size_t i = 0; i < n; ++i) ai->grad[i] += oi->grad[i] * bi->values[i];
      if (bi->requires_grad)
        for (size_t i = 0; i < n; ++i) bi->grad[i] += oi->grad[i] * ai->values[i];
    });
  }
  return out;
}

Tensor scale(Tape& tape, const Tensor& a, float s) {
  if (!std::isfinite(s)) throw ValueError("scale factor must be finite");
  Tensor out = new_output(tape, a.shape(), a.requires_grad(), "scale");
  const auto av = a.values();
  auto ov = out.values_mut();
  for (int64_t i = 0; i < out.numel(); ++i) ov[i] = av[i] * s;
  ensure_finite(out.values(), "scale");
  if (out.requires_grad()) {
    auto ai = a.impl(), oi = out.impl();
    tape.record("scale", [ai, oi, s] {
      for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i] * s;
    });
  }
  return out;
}

Tensor add_bias(Tape& tape, const Tensor& a, const Tensor& bias) {
  require_2d(a, "add_bias");
  if (bias.ndim() != 1 || bias.dim(0) != a.dim(1)) {
    throw ShapeError("add_bias expects bias [n] matching " + shape_str(a.shape()) + ", got " +
                     shape_str(bias.shape()));
  }
  const int m = a.dim(0), n = a.dim(1);
  Tensor out = new_output(tape, a.shape(), a.requires_grad() || bias.requires_grad(), "add_bias");
  const auto av = a.values(), bv = bias.values();
  auto ov = out.values_mut();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) ov[static_cast<size_t>(i) * n + j] = av[static_cast<size_t>(i) * n + j] + bv[j];
  ensure_finite(out.values(), "add_bias");
  if (out.requires_grad()) {
    auto ai = a.impl(), bi = bias.impl(), oi = out.impl();
    tape.record("add_bias", [ai, bi, oi, m, n] {
      if (ai->requires_grad)
        for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i];
      if (bi->requires_grad)
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) bi->grad[j] += oi->grad[static_cast<size_t>(i) * n + j];
    });
  }
  return out;
}

Tensor transpose(Tape& tape, const Tensor& a) {
  require_2d(a, "transpose");
  const int m = a.dim(0), n = a.dim(1);
  Tensor out = new_output(tape, {n, m}, a.requires_grad(), "transpose");
  const auto av = a.values();
  auto ov = out.values_mut();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) ov[static_cast<size_t>(j) * m + i] = av[static_cast<size_t>(i) * n + j];
  if (out.requires_grad()) {
    auto ai = a.impl(), oi = out.impl();
    tape.record("transpose", [ai, oi, m, n] {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          ai->grad[static_cast<size_t>(i) * n + j] += oi->grad[static_cast<size_t>(j) * m + i];
    });
  }
  return out;
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols needs at least one tensor");
  const int m = parts[0].dim(0);
  int total = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    require_2d(p, "concat_cols");
    if (p.dim(0) != m) {
      throw ShapeError("concat_cols row counts disagree: " + shape_str(parts[0].shape()) +
                       " vs " + shape_str(p.shape()));
    }
    total += p.dim(1);
    any_grad = any_grad || p.requires_grad();
  }
  Tensor out = new_output(tape, {m, total}, any_grad, "concat_cols");
  auto ov = out.values_mut();
  int offset = 0;
  for (const auto& p : parts) {
    const int n = p.dim(1);
    const auto pv = p.values();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        ov[static_cast<size_t>(i) * total + offset + j] = pv[static_cast<size_t>(i) * n + j];
    offset += n;
  }
  if (out.requires_grad()) {
    std::vector<std::shared_ptr<TensorImpl>> impls;
    impls.reserve(parts.size());
    for (const auto& p : parts) impls.push_back(p.impl());
    auto oi = out.impl();
    tape.record("concat_cols", [impls, oi, m, total] {
      int off = 0;
      for (const auto& pi : impls) {
        const int n = pi->shape[1];
        if (pi->requires_grad) {
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
              pi->grad[static_cast<size_t>(i) * n + j] +=
                  oi->grad[static_cast<size_t>(i) * total + off + j];
        }
        off += n;
      }
    });
  }
  return out;
}

Tensor slice_cols(Tape& tape, const Tensor& a, int c0, int c1) {
  require_2d(a, "slice_cols");
  if (c0 < 0 || c1 > a.dim(1) || c0 >= c1) {
    throw ShapeError("slice_cols [" + std::to_string(c0) + "," + std::to_string(c1) +
                     ") out of range for " + shape_str(a.shape()));
  }
  const int m = a.dim(0), n = a.dim(1), w = c1 - c0;
  Tensor out = new_output(tape, {m, w}, a.requires_grad(), "slice_cols");
  const auto av = a.values();
  auto ov = out.values_mut();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < w; ++j)
      ov[static_cast<size_t>(i) * w + j] = av[static_cast<size_t>(i) * n + c0 + j];
  if (out.requires_grad()) {
    auto ai = a.impl(), oi = out.impl();
    tape.record("slice_cols", [ai, oi, m, n, w, c0] {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < w; ++j)
          ai->grad[static_cast<size_t>(i) * n + c0 + j] += oi->grad[static_cast<size_t>(i) * w + j];
    });
  }
  return out;
}

Tensor slice_rows(Tape& tape, const Tensor& a, int r0, int r1) {
  require_2d(a, "slice_rows");
  if (r0 < 0 || r1 > a.dim(0) || r0 >= r1) {
    throw ShapeError("slice_rows [" + std::to_string(r0) + "," + std::to_string(r1) +
                     ") out of range for " + shape_str(a.shape()));
  }
  const int n = a.dim(1), h = r1 - r0;
  Tensor out = new_output(tape, {h, n}, a.requires_grad(), "slice_rows");
  const auto av = a.values();
  auto ov = out.values_mut();
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < n; ++j)
      ov[static_cast<size_t>(i) * n + j] = av[static_cast<size_t>(r0 + i) * n + j];
  if (out.requires_grad()) {
    auto ai = a.impl(), oi = out.impl();
    tape.record("slice_rows", [ai, oi, n, h, r0] {
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < n; ++j)
          ai->grad[static_cast<size_t>(r0 + i) * n + j] += oi->grad[static_cast<size_t>(i) * n + j];
    });
  }
  return out;
}

Tensor softmax_lastdim(Tape& tape, const Tensor& a) {
  if (a.ndim() < 1 || a.shape().back() < 1) {
    throw ShapeError("softmax_lastdim needs last dimension >= 1, got " + shape_str(a.shape()));
  }
  const int n = a.shape().back();
  const int rows = static_cast<int>(a.numel() / n);
  Tensor out = new_output(tape, a.shape(), a.requires_grad(), "softmax_lastdim");
  nn::softmax_rows(a.values().data(), out.values_mut().data(), rows, n);
  ensure_finite(out.values(), "softmax_lastdim");
  if (out.requires_grad()) {
    auto ai = a.impl(), oi = out.impl();
    tape.record("softmax_lastdim", [ai, oi, rows, n] {
      for (int r = 0; r < rows; ++r) {
        const float* y = oi->values.data() + static_cast<int64_t>(r) * n;
        const float* dy = oi->grad.data() + static_cast<int64_t>(r) * n;
        float* dx = ai->grad.data() + static_cast<int64_t>(r) * n;
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += static_cast<double>(dy[j]) * y[j];
        for (int j = 0; j < n; ++j) dx[j] += y[j] * (dy[j] - static_cast<float>(dot));
      }
    });
  }
  return out;
}

Tensor causal_masked_softmax(Tape& tape, const Tensor& scores) {
  require_2d(scores, "causal_masked_softmax");
  if (scores.dim(0) != scores.dim(1)) {
    throw ShapeError("causal_masked_softmax expects square scores, got " +
                     shape_str(scores.shape()));
  }
  const int t = scores.dim(0);
  Tensor out = new_output(tape, scores.shape(), scores.requires_grad(), "causal_masked_softmax");
  const auto sv = scores.values();
  auto ov = out.values_mut();
#pragma omp parallel for schedule(static)
  for (int r = 0; r < t; ++r) {
    const float* x = sv.data() + static_cast<int64_t>(r) * t;
    float* y = ov.data() + static_cast<int64_t>(r) * t;
    body::softmax_row(x, y, r + 1);
    for (int j = r + 1; j < t; ++j) y[j] = 0.0f;
  }
  ensure_finite(out.values(), "causal_masked_softmax");
  if (out.requires_grad()) {
    auto si = scores.impl(), oi = out.impl();
    tape.record("causal_masked_softmax", [si, oi, t] {
      for (int r = 0; r < t; ++r) {
        const float* y = oi->values.data() + static_cast<int64_t>(r) * t;
        const float* dy = oi->grad.data() + static_cast<int64_t>(r) * t;
        float* dx = si->grad.data() + static_cast<int64_t>(r) * t;
        double dot = 0.0;
        for (int j = 0; j <= r; ++j) dot += static_cast<double>(dy[j]) * y[j];
        for (int j = 0; j <= r; ++j) dx[j] += y[j] * (dy[j] - static_cast<float>(dot));
      }
    });
  }
  return out;
}

Tensor layer_norm(Tape& tape, const Tensor& a, const Tensor& gain, const Tensor& bias,
                  float eps) {
  if (a.ndim() < 1) throw ShapeError("layer_norm needs at least 1-d input");
  const int d = a.shape().back();
  if (d == 0) throw ShapeError("layer_norm last dimension is zero");
  if (gain.ndim() != 1 || gain.dim(0) != d || bias.ndim() != 1 || bias.dim(0) != d) {
    throw ShapeError("layer_norm gain/bias must be [" + std::to_string(d) + "], got " +
                     shape_str(gain.shape()) + " and " + shape_str(bias.shape()));
  }
  const int rows = static_cast<int>(a.numel() / d);
  Tensor out = new_output(
      tape, a.shape(), a.requires_grad() || gain.requires_grad() || bias.requires_grad(),
      "layer_norm");
  std::vector<float> mean(static_cast<size_t>(rows)), rstd(static_cast<size_t>(rows));
  nn::layer_norm_rows(a.values().data(), gain.values().data(), bias.values().data(),
                      out.values_mut().data(), rows, d, eps, mean.data(), rstd.data());
  ensure_finite(out.values(), "layer_norm");
  if (out.requires_grad()) {
    auto ai = a.impl(), gi = gain.impl(), bi = bias.impl(), oi = out.impl();
    tape.record("layer_norm", [ai, gi, bi, oi, rows, d, mean = std::move(mean),
                               rstd = std::move(rstd)] {
      for (int r = 0; r < rows; ++r) {
        const float* x = ai->values.data() + static_cast<int64_t>(r) * d;
        const float* dy = oi->grad.data() + static_cast<int64_t>(r) * d;
        const float mu = mean[static_cast<size_t>(r)];
        const float rs = rstd[static_cast<size_t>(r)];
        if (gi->requires_grad || bi->requires_grad) {
          for (int j = 0; j < d; ++j) {
            const float xhat = (x[j] - mu) * rs;
            if (gi->requires_grad) gi->grad[j] += dy[j] * xhat;
            if (bi->requires_grad) bi->grad[j] += dy[j];
          }
        }
        if (ai->requires_grad) {
          double m1 = 0.0, m2 = 0.0;
          for (int j = 0; j < d; ++j) {
            const float g = dy[j] * gi->values[static_cast<size_t>(j)];
            const float xhat = (x[j] - mu) * rs;
            m1 += g;
            m2 += static_cast<double>(g) * xhat;
          }
          m1 /= d;
          m2 /= d;
          float* dx = ai->grad.data() + static_cast<int64_t>(r) * d;
          for (int j = 0; j < d; ++j) {
            const float g = dy[j] * gi->values[static_cast<size_t>(j)];
            const float xhat = (x[j] - mu) * rs;
            dx[j] += rs * (g - static_cast<float>(m1) - xhat * static_cast<float>(m2));
          }
        }
      }
    });
  }
  return out;
}

Tensor gelu(Tape& tape, const Tensor& a) {
  Tensor out = new_output(tape, a.shape(), a.requires_grad(), "gelu");
  nn::gelu_forward(a.values().data(), out.values_mut().data(), a.numel());
  ensure_finite(out.values(), "gelu");
  if (out.requires_grad()) {
    auto ai = a.impl(), oi = out.impl();
    tape.record("gelu", [ai, oi] {
      nn::gelu_backward(ai->values.data(), oi->grad.data(), ai->grad.data(),
                        static_cast<int64_t>(ai->values.size()));
    });
  }
  return out;
}

Tensor abs(Tape& tape, const Tensor& a) {
  Tensor out = new_output(tape, a.shape(), a.requires_grad(), "abs");
  const auto av = a.values();
  auto ov = out.values_mut();
  for (int64_t i = 0; i < out.numel(); ++i) ov[i] = std::fabs(av[i]);
  ensure_finite(out.values(), "abs");
  if (out.requires_grad()) {
    auto ai = a.impl(), oi = out.impl();
    tape.record("abs", [ai, oi] {
      for (size_t i = 0; i < oi->grad.size(); ++i) {
        const float x = ai->values[i];
        const float s = x > 0.0f ? 1.0f : (x < 0.0f ? -1.0f : 0.0f);
        ai->grad[i] += oi->grad[i] * s;
      }
    });
  }
  return out;
}

Tensor dropout(Tape& tape, const Tensor& a, float p, bool training, std::mt19937_64& rng) {
  if (p < 0.0f || p >= 1.0f) throw ValueError("dropout p must be in [0,1)");
  if (!training || p == 0.0f) {
    // identity in eval mode (p ignored) and at p == 0
    Tensor out = new_output(tape, a.shape(), a.requires_grad(), "dropout");
    auto ov = out.values_mut();
    const auto av = a.values();
    for (int64_t i = 0; i < out.numel(); ++i) ov[i] = av[i];
    if (out.requires_grad()) {
      auto ai = a.impl(), oi = out.impl();
      tape.record("dropout", [ai, oi] {
        for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i];
      });
    }
    return out;
  }
  Tensor out = new_output(tape, a.shape(), a.requires_grad(), "dropout");
  std::vector<float> mask(static_cast<size_t>(a.numel()));
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  const float keep_scale = 1.0f / (1.0f - p);
  for (auto& m : mask) m = (u(rng) < p) ? 0.0f : keep_scale;
  const auto av = a.values();
  auto ov = out.values_mut();
  for (int64_t i = 0; i < out.numel(); ++i) ov[i] = av[i] * mask[static_cast<size_t>(i)];
  if (out.requires_grad()) {
    auto ai = a.impl(), oi = out.impl();
    tape.record("dropout", [ai, oi, mask = std::move(mask)] {
      for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i] * mask[i];
    });
  }
  return out;
}

Tensor sum(Tape& tape, const Tensor& a) {
  Tensor out = new_output(tape, {1}, a.requires_grad(), "sum");
  double acc = 0.0;
  for (float v : a.values()) acc += static_cast<double>(v);
  out.values_mut()[0] = static_cast<float>(acc);
  ensure_finite(out.values(), "sum");
  if (out.requires_grad()) {
    auto ai = a.impl(), oi = out.impl();
    tape.record("sum", [ai, oi] {
      const float g = oi->grad[0];
      for (auto& dv : ai->grad) dv += g;
    });
  }
  return out;
}

Tensor mean(Tape& tape, const Tensor& a) {
  if (a.numel() == 0) throw ShapeError("mean of empty tensor");
  Tensor out = new_output(tape, {1}, a.requires_grad(), "mean");
  double acc = 0.0;
  for (float v : a.values()) acc += static_cast<double>(v);
  out.values_mut()[0] = static_cast<float>(acc / static_cast<double>(a.numel()));
  ensure_finite(out.values(), "mean");
  if (out.requires_grad()) {
    auto ai = a.impl(), oi = out.impl();
    const float inv = 1.0f / static_cast<float>(a.numel());
    tape.record("mean", [ai, oi, inv] {
      const float g = oi->grad[0] * inv;
      for (auto& dv : ai->grad) dv += g;
    });
  }
  return out;
}

Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits, const std::vector<int>& labels) {
  require_2d(logits, "softmax_cross_entropy");
  const int n = logits.dim(0), c = logits.dim(1);
  if (static_cast<int>(labels.size()) != n) {
    throw ShapeError("softmax_cross_entropy expects " + std::to_string(n) + " labels, got " +
                     std::to_string(labels.size()));
  }
  for (int lab : labels) {
    if (lab < 0 || lab >= c) {
      throw ValueError("label " + std::to_string(lab) + " outside [0," + std::to_string(c) + ")");
    }
  }
  Tensor out = new_output(tape, {1}, logits.requires_grad(), "softmax_cross_entropy");
  std::vector<float> probs(static_cast<size_t>(logits.numel()));
  nn::softmax_rows(logits.values().data(), probs.data(), n, c);
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double p = probs[static_cast<size_t>(i) * c + labels[static_cast<size_t>(i)]];
    loss -= std::log(std::max(p, 1e-30));
  }
  out.values_mut()[0] = static_cast<float>(loss / n);
  ensure_finite(out.values(), "softmax_cross_entropy");
  if (out.requires_grad()) {
    auto li = logits.impl(), oi = out.impl();
    tape.record("softmax_cross_entropy", [li, oi, labels, probs = std::move(probs), n, c] {
      const float g = oi->grad[0] / static_cast<float>(n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < c; ++j) {
          const float y = (j == labels[static_cast<size_t>(i)]) ? 1.0f : 0.0f;
          li->grad[static_cast<size_t>(i) * c + j] += g * (probs[static_cast<size_t>(i) * c + j] - y);
        }
      }
    });
  }
  return out;
}

void backward(const Tensor& loss, Tape& tape) {
  if (loss.numel() != 1) {
    throw ValueError("backward needs a scalar loss, got " + shape_str(loss.shape()));
  }
  if (!loss.requires_grad() || loss.impl()->creator_tape != static_cast<const void*>(&tape)) {
    throw ValueError("backward: loss was not produced under this tape");
  }
  loss.impl()->grad[0] = 1.0f;
  for (auto it = tape.nodes_.rbegin(); it != tape.nodes_.rend(); ++it) it->fn();
}

}  // namespace raw::nn
