#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "raw/tensor.hpp"

namespace raw::model {

struct ModelConfig {
  int n_layers = 4;
  int d_model = 128;
  int n_heads = 4;
  int max_seq_len = 96;
  float dropout_p = 0.1f;

  int head_dim() const { return d_model / n_heads; }
  void validate() const;
};

// the desk-scale configuration all trainability tests run on
ModelConfig raw_nano();

struct LayerParams {
  nn::Tensor ln1_gain, ln1_bias;
  nn::Tensor wq, wk, wv;  // fused [d x d]; head i owns columns [i*d_h, (i+1)*d_h)
  nn::Tensor wo;          // [d x d]
  nn::Tensor ln2_gain, ln2_bias;
  nn::Tensor ffn_w1, ffn_b1;  // [d x 4d], [4d]
  nn::Tensor ffn_w2, ffn_b2;  // [4d x d], [d]
};

struct ModelParams {
  ModelConfig cfg;
  nn::Tensor in_w1, in_b1;  // [2 x 4d], [4d]
  nn::Tensor in_w2, in_b2;  // [4d x d], [d]
  nn::Tensor wpos;          // [max_seq_len x d]
  std::vector<LayerParams> layers;
  nn::Tensor final_ln_gain, final_ln_bias;
  nn::Tensor out_w, out_b;  // [d x 2], [2]

  // canonical (name, tensor) pairs in checkpoint order: input_ffn.w1, ...,
  // layer.{l}.attn.wq, ..., final_ln.gain, output.wo, output.bo
  std::vector<std::pair<std::string, nn::Tensor>> named() const;
  void zero_grad();
};

struct ForwardOutput {
  nn::Tensor embeddings;   // E: [seq_len x d]
  nn::Tensor predictions;  // [seq_len x 2]; row j is the model's coordinate j+1
};

ModelParams init_params(const ModelConfig& cfg, uint64_t seed);
int64_t count_params(const ModelConfig& cfg);

// H^0 = dropout(FFN(coords)) + W_p rows; coords is [seq_len x 2], normalized
nn::Tensor input_embed(nn::Tape& tape, const ModelParams& params, const nn::Tensor& coords,
                       bool training, std::mt19937_64& rng);

nn::Tensor masked_multi_head(nn::Tape& tape, const ModelConfig& cfg, const LayerParams& layer,
                             const nn::Tensor& hn);

nn::Tensor decoder_layer(nn::Tape& tape, const ModelConfig& cfg, const LayerParams& layer,
                         const nn::Tensor& h, bool training, std::mt19937_64& rng);

ForwardOutput forward(nn::Tape& tape, const ModelParams& params, const nn::Tensor& coords,
                      bool training, std::mt19937_64& rng);

// eval-mode forward without gradient bookkeeping
ForwardOutput forward_eval(const ModelParams& params, const nn::Tensor& coords);

}  // namespace raw::model
