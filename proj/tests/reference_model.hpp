#pragma once

// Straight-line serial reimplementation of the network, templated on the
// scalar type. Kept independent of the tensor/tape path so it can serve as
// an oracle: instantiated at double it is the finite-difference substrate,
// at float it cross-checks the layer wiring.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "raw/kernels.hpp"
#include "raw/model.hpp"

namespace refmodel {

template <typename T>
struct Params {
  raw::model::ModelConfig cfg;
  std::map<std::string, std::vector<T>> tensors;

  std::vector<T>& at(const std::string& name) { return tensors.at(name); }
  const std::vector<T>& at(const std::string& name) const { return tensors.at(name); }
};

template <typename T>
Params<T> convert(const raw::model::ModelParams& p) {
  Params<T> out;
  out.cfg = p.cfg;
  for (const auto& [name, t] : p.named()) {
    std::vector<T> v(t.values().begin(), t.values().end());
    out.tensors.emplace(name, std::move(v));
  }
  return out;
}

namespace detail {

template <typename T>
std::vector<T> linear(const std::vector<T>& x, int m, int k, const std::vector<T>& w,
                      const std::vector<T>& b, int n) {
  std::vector<T> y(static_cast<size_t>(m) * n);
  raw::nn::ref::matmul(x.data(), w.data(), y.data(), m, k, n);
  if (!b.empty()) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) y[static_cast<size_t>(i) * n + j] += b[static_cast<size_t>(j)];
  }
  return y;
}

template <typename T>
void gelu_inplace(std::vector<T>& x) {
  for (auto& v : x) v = raw::nn::body::gelu(v);
}

template <typename T>
std::vector<T> layer_norm(const std::vector<T>& x, int rows, int d, const std::vector<T>& gain,
                          const std::vector<T>& bias, T eps) {
  std::vector<T> y(x.size());
  raw::nn::ref::layer_norm_rows(x.data(), gain.data(), bias.data(), y.data(), rows, d, eps,
                                static_cast<T*>(nullptr), static_cast<T*>(nullptr));
  return y;
}

}  // namespace detail

// eval-mode forward (dropout off); coords is [t x 2] row-major normalized
template <typename T>
std::vector<T> forward_embeddings(const Params<T>& p, const std::vector<T>& coords, int t) {
  const int d = p.cfg.d_model;
  const int h = p.cfg.n_heads;
  const int dh = d / h;
  const T eps = T(1e-5);

  // input FFN + positional rows
  std::vector<T> hidden = detail::linear(coords, t, 2, p.at("input_ffn.w1"), p.at("input_ffn.b1"), 4 * d);
  detail::gelu_inplace(hidden);
  std::vector<T> hs = detail::linear(hidden, t, 4 * d, p.at("input_ffn.w2"), p.at("input_ffn.b2"), d);
  const auto& wpos = p.at("wpos");
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < d; ++j) hs[static_cast<size_t>(i) * d + j] += wpos[static_cast<size_t>(i) * d + j];

  for (int l = 0; l < p.cfg.n_layers; ++l) {
    const std::string pre = "layer." + std::to_string(l) + ".";
    std::vector<T> normed =
        detail::layer_norm(hs, t, d, p.at(pre + "ln1.gain"), p.at(pre + "ln1.bias"), eps);

    std::vector<T> q(static_cast<size_t>(t) * d), k(static_cast<size_t>(t) * d), v(static_cast<size_t>(t) * d);
    raw::nn::ref::matmul(normed.data(), p.at(pre + "attn.wq").data(), q.data(), t, d, d);
    raw::nn::ref::matmul(normed.data(), p.at(pre + "attn.wk").data(), k.data(), t, d, d);
    raw::nn::ref::matmul(normed.data(), p.at(pre + "attn.wv").data(), v.data(), t, d, d);

    // per-head causal attention, scaled by sqrt(d_h)
    std::vector<T> cat(static_cast<size_t>(t) * d, T(0));
    const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
    for (int head = 0; head < h; ++head) {
      const int c0 = head * dh;
      for (int i = 0; i < t; ++i) {
        std::vector<T> w(static_cast<size_t>(i) + 1);
        for (int j = 0; j <= i; ++j) {
          T dot = T(0);
          for (int e = 0; e < dh; ++e) {
            dot += q[static_cast<size_t>(i) * d + c0 + e] * k[static_cast<size_t>(j) * d + c0 + e];
          }
          w[static_cast<size_t>(j)] = dot * inv_sqrt;
        }
        T mx = w[0];
        for (int j = 1; j <= i; ++j) mx = std::max(mx, w[static_cast<size_t>(j)]);
        T sum = T(0);
        for (int j = 0; j <= i; ++j) {
          w[static_cast<size_t>(j)] = std::exp(w[static_cast<size_t>(j)] - mx);
          sum += w[static_cast<size_t>(j)];
        }
        for (int e = 0; e < dh; ++e) {
          T acc = T(0);
          for (int j = 0; j <= i; ++j) {
            acc += w[static_cast<size_t>(j)] / sum * v[static_cast<size_t>(j) * d + c0 + e];
          }
          cat[static_cast<size_t>(i) * d + c0 + e] = acc;
        }
      }
    }
    std::vector<T> att(static_cast<size_t>(t) * d);
    raw::nn::ref::matmul(cat.data(), p.at(pre + "attn.wo").data(), att.data(), t, d, d);
    for (size_t i = 0; i < hs.size(); ++i) hs[i] += att[i];

    std::vector<T> normed2 =
        detail::layer_norm(hs, t, d, p.at(pre + "ln2.gain"), p.at(pre + "ln2.bias"), eps);
    std::vector<T> f1 = detail::linear(normed2, t, d, p.at(pre + "ffn.w1"), p.at(pre + "ffn.b1"), 4 * d);
    detail::gelu_inplace(f1);
    std::vector<T> f2 = detail::linear(f1, t, 4 * d, p.at(pre + "ffn.w2"), p.at(pre + "ffn.b2"), d);
    for (size_t i = 0; i < hs.size(); ++i) hs[i] += f2[i];
  }

  return detail::layer_norm(hs, t, d, p.at("final_ln.gain"), p.at("final_ln.bias"), eps);
}

template <typename T>
std::vector<T> forward_predictions(const Params<T>& p, const std::vector<T>& coords, int t) {
  const int d = p.cfg.d_model;
  std::vector<T> e = forward_embeddings(p, coords, t);
  return detail::linear(e, t, d, p.at("output.wo"), p.at("output.bo"), 2);
}

template <typename T>
T next_gps_loss(const std::vector<T>& pred, const std::vector<T>& target, bool l1) {
  T acc = T(0);
  for (size_t i = 0; i < pred.size(); ++i) {
    const T dv = pred[i] - target[i];
    acc += l1 ? std::fabs(dv) : dv * dv;
  }
  return acc / static_cast<T>(pred.size() / 2);
}

template <typename T>
T forward_loss(const Params<T>& p, const std::vector<T>& inputs, const std::vector<T>& targets,
               int t, bool l1) {
  return next_gps_loss(forward_predictions(p, inputs, t), targets, l1);
}

}  // namespace refmodel
