#include "raw/model.hpp"

#include <cmath>

#include "raw/rng.hpp"

namespace raw::model {

using nn::Tape;
using nn::Tensor;

namespace {
constexpr float kLayerNormEps = 1e-5f;
constexpr float kInitStd = 0.02f;
}  // namespace

void ModelConfig::validate() const {
  if (n_layers < 1) throw ConfigError("n_layers must be >= 1");
  if (d_model < 1 || n_heads < 1 || d_model % n_heads != 0) {
    throw ConfigError("d_model (" + std::to_string(d_model) + ") must be a positive multiple of n_heads (" +
                      std::to_string(n_heads) + ")");
  }
  if (max_seq_len < 1) throw ConfigError("max_seq_len must be >= 1");
  if (dropout_p < 0.0f || dropout_p >= 1.0f) throw ConfigError("dropout_p must be in [0,1)");
}

ModelConfig raw_nano() { return ModelConfig{4, 128, 4, 96, 0.1f}; }

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("input_ffn.w1", in_w1);
  out.emplace_back("input_ffn.b1", in_b1);
  out.emplace_back("input_ffn.w2", in_w2);
  out.emplace_back("input_ffn.b2", in_b2);
  out.emplace_back("wpos", wpos);
  for (size_t l = 0; l < layers.size(); ++l) {
    const std::string p = "layer." + std::to_string(l) + ".";
    const LayerParams& lp = layers[l];
    out.emplace_back(p + "ln1.gain", lp.ln1_gain);
    out.emplace_back(p + "ln1.bias", lp.ln1_bias);
    out.emplace_back(p + "attn.wq", lp.wq);
    out.emplace_back(p + "attn.wk", lp.wk);
    out.emplace_back(p + "attn.wv", lp.wv);
    out.emplace_back(p + "attn.wo", lp.wo);
    out.emplace_back(p + "ln2.gain", lp.ln2_gain);
    out.emplace_back(p + "ln2.bias", lp.ln2_bias);
    out.emplace_back(p + "ffn.w1", lp.ffn_w1);
    out.emplace_back(p + "ffn.b1", lp.ffn_b1);
    out.emplace_back(p + "ffn.w2", lp.ffn_w2);
    out.emplace_back(p + "ffn.b2", lp.ffn_b2);
  }
  out.emplace_back("final_ln.gain", final_ln_gain);
  out.emplace_back("final_ln.bias", final_ln_bias);
  out.emplace_back("output.wo", out_w);
  out.emplace_back("output.bo", out_b);
  return out;
}

void ModelParams::zero_grad() {
  for (auto& [name, t] : named()) t.zero_grad();
}

ModelParams init_params(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  const int d = cfg.d_model;
  auto rng = make_rng(seed, "init");
  // residual-output projections get a 1/sqrt(2L) shrink
  const float resid_std = kInitStd / std::sqrt(2.0f * static_cast<float>(cfg.n_layers));

  ModelParams p;
  p.cfg = cfg;
  p.in_w1 = Tensor::randn({2, 4 * d}, rng, kInitStd, true);
  p.in_b1 = Tensor::zeros({4 * d}, true);
  p.in_w2 = Tensor::randn({4 * d, d}, rng, kInitStd, true);
  p.in_b2 = Tensor::zeros({d}, true);
  p.wpos = Tensor::randn({cfg.max_seq_len, d}, rng, kInitStd, true);
  for (int l = 0; l < cfg.n_layers; ++l) {
    LayerParams lp;
    lp.ln1_gain = Tensor::full({d}, 1.0f, true);
    lp.ln1_bias = Tensor::zeros({d}, true);
    lp.wq = Tensor::randn({d, d}, rng, kInitStd, true);
    lp.wk = Tensor::randn({d, d}, rng, kInitStd, true);
    lp.wv = Tensor::randn({d, d}, rng, kInitStd, true);
    lp.wo = Tensor::randn({d, d}, rng, resid_std, true);
    lp.ln2_gain = Tensor::full({d}, 1.0f, true);
    lp.ln2_bias = Tensor::zeros({d}, true);
    lp.ffn_w1 = Tensor::randn({d, 4 * d}, rng, kInitStd, true);
    lp.ffn_b1 = Tensor::zeros({4 * d}, true);
    lp.ffn_w2 = Tensor::randn({4 * d, d}, rng, resid_std, true);
    lp.ffn_b2 = Tensor::zeros({d}, true);
    p.layers.push_back(std::move(lp));
  }
  p.final_ln_gain = Tensor::full({d}, 1.0f, true);
  p.final_ln_bias = Tensor::zeros({d}, true);
  p.out_w = Tensor::randn({d, 2}, rng, kInitStd, true);
  p.out_b = Tensor::zeros({2}, true);
  return p;
}

int64_t count_params(const ModelConfig& cfg) {
  cfg.validate();
  const int64_t d = cfg.d_model;
  int64_t total = 0;
  total += 2 * 4 * d + 4 * d;  // input ffn w1, b1
  total += 4 * d * d + d;      // input ffn w2, b2
  total += static_cast<int64_t>(cfg.max_seq_len) * d;
  const int64_t per_layer = 2 * d              // ln1
                            + 3 * d * d        // wq, wk, wv
                            + d * d            // wo
                            + 2 * d            // ln2
                            + d * 4 * d + 4 * d  // ffn w1, b1
                            + 4 * d * d + d;     // ffn w2, b2
  total += cfg.n_layers * per_layer;
  total += 2 * d;      // final ln
  total += d * 2 + 2;  // output head
  return total;
}

Tensor input_embed(Tape& tape, const ModelParams& params, const Tensor& coords, bool training,
                   std::mt19937_64& rng) {
  if (coords.ndim() != 2 || coords.dim(1) != 2) {
    throw ShapeError("input_embed expects [seq_len x 2] coords, got " + nn::shape_str(coords.shape()));
  }
  const int t = coords.dim(0);
  if (t > params.cfg.max_seq_len) {
    throw CapacityError("sequence length " + std::to_string(t) + " exceeds max_seq_len " +
                        std::to_string(params.cfg.max_seq_len));
  }
  Tensor h = nn::add_bias(tape, nn::matmul(tape, coords, params.in_w1), params.in_b1);
  h = nn::gelu(tape, h);
  h = nn::add_bias(tape, nn::matmul(tape, h, params.in_w2), params.in_b2);
  h = nn::dropout(tape, h, params.cfg.dropout_p, training, rng);
  Tensor pos = nn::slice_rows(tape, params.wpos, 0, t);
  return nn::add(tape, h, pos);
}

Tensor masked_multi_head(Tape& tape, const ModelConfig& cfg, const LayerParams& layer,
                         const Tensor& hn) {
  const int d_h = cfg.head_dim();
  // per-head scaling by sqrt(d_h)
  const float inv_sqrt_dh = 1.0f / std::sqrt(static_cast<float>(d_h));
  Tensor q = nn::matmul(tape, hn, layer.wq);
  Tensor k = nn::matmul(tape, hn, layer.wk);
  Tensor v = nn::matmul(tape, hn, layer.wv);
  std::vector<Tensor> heads;
  heads.reserve(static_cast<size_t>(cfg.n_heads));
  for (int i = 0; i < cfg.n_heads; ++i) {
    Tensor qi = nn::slice_cols(tape, q, i * d_h, (i + 1) * d_h);
    Tensor ki = nn::slice_cols(tape, k, i * d_h, (i + 1) * d_h);
    Tensor vi = nn::slice_cols(tape, v, i * d_h, (i + 1) * d_h);
    Tensor scores = nn::scale(tape, nn::matmul(tape, qi, nn::transpose(tape, ki)), inv_sqrt_dh);
    Tensor att = nn::causal_masked_softmax(tape, scores);
    heads.push_back(nn::matmul(tape, att, vi));
  }
  Tensor cat = cfg.n_heads == 1 ? heads[0] : nn::concat_cols(tape, heads);
  return nn::matmul(tape, cat, layer.wo);
}

Tensor decoder_layer(Tape& tape, const ModelConfig& cfg, const LayerParams& layer, const Tensor& h,
                     bool training, std::mt19937_64& rng) {
  Tensor normed = nn::layer_norm(tape, h, layer.ln1_gain, layer.ln1_bias, kLayerNormEps);
  Tensor att = masked_multi_head(tape, cfg, layer, normed);
  att = nn::dropout(tape, att, cfg.dropout_p, training, rng);
  Tensor h_mid = nn::add(tape, h, att);
  Tensor normed2 = nn::layer_norm(tape, h_mid, layer.ln2_gain, layer.ln2_bias, kLayerNormEps);
  Tensor f = nn::add_bias(tape, nn::matmul(tape, normed2, layer.ffn_w1), layer.ffn_b1);
  f = nn::gelu(tape, f);
  f = nn::add_bias(tape, nn::matmul(tape, f, layer.ffn_w2), layer.ffn_b2);
  f = nn::dropout(tape, f, cfg.dropout_p, training, rng);
  return nn::add(tape, h_mid, f);
}

ForwardOutput forward(Tape& tape, const ModelParams& params, const Tensor& coords, bool training,
                      std::mt19937_64& rng) {
  Tensor h = input_embed(tape, params, coords, training, rng);
  for (const auto& layer : params.layers) {
    h = decoder_layer(tape, params.cfg, layer, h, training, rng);
  }
  Tensor e = nn::layer_norm(tape, h, params.final_ln_gain, params.final_ln_bias, kLayerNormEps);
  Tensor pred = nn::add_bias(tape, nn::matmul(tape, e, params.out_w), params.out_b);
  return {e, pred};
}

ForwardOutput forward_eval(const ModelParams& params, const Tensor& coords) {
  Tape tape(false);
  std::mt19937_64 rng(0);  // unused: dropout is identity in eval mode
  return forward(tape, params, coords, false, rng);
}

}  // namespace raw::model
