#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "raw/error.hpp"

namespace raw::nn {

struct TensorImpl {
  std::vector<int> shape;
  std::vector<float> values;
  std::vector<float> grad;  // allocated (zeroed) iff requires_grad
  bool requires_grad = false;
  const void* creator_tape = nullptr;  // tape that recorded this tensor, null for leaves
};

// Value-semantics handle over shared storage. Tensors are immutable after an
// op creates them; only grad accumulates. The optimizer mutates parameter
// values through values_mut() between tapes.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, float value, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<float> data, bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);
  // weights ~ Normal(0, stddev^2)
  static Tensor randn(std::vector<int> shape, std::mt19937_64& rng, float stddev,
                      bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const { return impl_->shape; }
  int ndim() const { return static_cast<int>(impl_->shape.size()); }
  int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(impl_->values.size()); }
  bool requires_grad() const { return impl_->requires_grad; }

  std::span<const float> values() const { return impl_->values; }
  // Owner-only escape hatch for optimizers; never call while a tape that saw
  // this tensor is still live.
  std::span<float> values_mut() { return impl_->values; }
  std::span<const float> grad() const;
  std::span<float> grad_mut();
  void zero_grad();

  float item() const;
  float at(int64_t i) const { return impl_->values[static_cast<size_t>(i)]; }
  float at(int i, int j) const;

  std::shared_ptr<TensorImpl> impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl> impl_;

  friend Tensor make_op_output(std::vector<int> shape, bool requires_grad, const void* tape);
};

// Ordered record of executed ops; replaying backward in reverse accumulates
// each tensor's gradient exactly once per use.
class Tape {
 public:
  Tape() = default;
  explicit Tape(bool recording) : recording_(recording) {}
  static Tape inference() { return Tape(false); }

  bool recording() const { return recording_; }
  void record(const char* name, std::function<void()> fn) {
    nodes_.push_back({name, std::move(fn)});
  }
  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    const char* name;
    std::function<void()> fn;
  };
  std::vector<Node> nodes_;
  bool recording_ = true;

  friend void backward(const Tensor& loss, Tape& tape);
};

std::string shape_str(const std::vector<int>& shape);

// ---- ops ----------------------------------------------------------------
// Every op validates shapes, checks its output for NaN/Inf (NumericError),
// and records a backward rule when the tape is recording and any input
// requires grad.

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, float s);
Tensor add_bias(Tape& tape, const Tensor& a, const Tensor& bias);  // a: [m x n], bias: [n]
Tensor transpose(Tape& tape, const Tensor& a);
Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);
Tensor slice_cols(Tape& tape, const Tensor& a, int c0, int c1);
Tensor slice_rows(Tape& tape, const Tensor& a, int r0, int r1);
Tensor softmax_lastdim(Tape& tape, const Tensor& a);
// scores: [t x t]; entry (r, j>r) is excluded from the softmax (output 0),
// equivalent to masking with -inf before a plain softmax.
Tensor causal_masked_softmax(Tape& tape, const Tensor& scores);
Tensor layer_norm(Tape& tape, const Tensor& a, const Tensor& gain, const Tensor& bias,
                  float eps);
Tensor gelu(Tape& tape, const Tensor& a);
Tensor abs(Tape& tape, const Tensor& a);
Tensor dropout(Tape& tape, const Tensor& a, float p, bool training, std::mt19937_64& rng);
Tensor sum(Tape& tape, const Tensor& a);
Tensor mean(Tape& tape, const Tensor& a);
// logits: [n x c], labels in [0, c); returns mean negative log-likelihood
Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits, const std::vector<int>& labels);

// Seeds d(loss)/d(loss) = 1 and replays the tape in reverse. loss must be a
// scalar produced under this tape.
void backward(const Tensor& loss, Tape& tape);

}  // namespace raw::nn
