#include "raw/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace raw::model {

using nlohmann::json;

namespace {
constexpr char kMagic[8] = {'R', 'A', 'W', 'C', 'K', 'P', 'T', '1'};
}

const nn::Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  json header;
  header["format_version"] = ck.format_version;
  header["kind"] = ck.kind;
  header["config"] = {{"n_layers", ck.config.n_layers},
                      {"d_model", ck.config.d_model},
                      {"n_heads", ck.config.n_heads},
                      {"max_seq_len", ck.config.max_seq_len},
                      {"dropout_p", ck.config.dropout_p}};
  header["norm_stats"] = {{"lon_center", ck.norm_stats.lon_center},
                          {"lat_center", ck.norm_stats.lat_center},
                          {"lon_scale", ck.norm_stats.lon_scale},
                          {"lat_scale", ck.norm_stats.lat_scale}};
  header["seed"] = ck.seed;
  header["step"] = ck.step;
  if (!ck.rng_state.empty()) header["rng_state"] = ck.rng_state;
  if (!ck.extra.is_null()) header["extra"] = ck.extra;
  json tensors = json::array();
  for (const auto& [name, t] : ck.tensors) {
    tensors.push_back({{"name", name}, {"shape", t.shape()}});
  }
  header["tensors"] = std::move(tensors);

  const std::string hs = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, 8);
  const uint64_t hlen = hs.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& [name, t] : ck.tensors) {
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.numel() * sizeof(float)));
  }
  if (!out) throw IoError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw IoError(path + ": not a RAW checkpoint");
  }
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw IoError(path + ": truncated header");
  json header;
  try {
    header = json::parse(hs);
  } catch (const json::parse_error& e) {
    throw IoError(path + ": bad header: " + e.what());
  }

  Checkpoint ck;
  ck.format_version = header.at("format_version").get<int>();
  if (ck.format_version != 1) {
    throw IoError(path + ": unsupported format version " + std::to_string(ck.format_version));
  }
  ck.kind = header.at("kind").get<std::string>();
  const auto& cfg = header.at("config");
  ck.config.n_layers = cfg.at("n_layers").get<int>();
  ck.config.d_model = cfg.at("d_model").get<int>();
  ck.config.n_heads = cfg.at("n_heads").get<int>();
  ck.config.max_seq_len = cfg.at("max_seq_len").get<int>();
  ck.config.dropout_p = cfg.at("dropout_p").get<float>();
  const auto& ns = header.at("norm_stats");
  ck.norm_stats.lon_center = ns.at("lon_center").get<double>();
  ck.norm_stats.lat_center = ns.at("lat_center").get<double>();
  ck.norm_stats.lon_scale = ns.at("lon_scale").get<double>();
  ck.norm_stats.lat_scale = ns.at("lat_scale").get<double>();
  ck.seed = header.at("seed").get<uint64_t>();
  ck.step = header.at("step").get<int64_t>();
  if (header.contains("rng_state")) ck.rng_state = header.at("rng_state").get<std::string>();
  if (header.contains("extra")) ck.extra = header.at("extra");

  for (const auto& rec : header.at("tensors")) {
    const std::string name = rec.at("name").get<std::string>();
    const std::vector<int> shape = rec.at("shape").get<std::vector<int>>();
    int64_t numel = 1;
    for (int d : shape) numel *= d;
    std::vector<float> data(static_cast<size_t>(numel));
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!in) throw IoError(path + ": truncated tensor data for " + name);
    ck.tensors.emplace_back(name, nn::Tensor::from(shape, std::move(data)));
  }
  return ck;
}

Checkpoint checkpoint_from_params(const ModelParams& params, const data::NormalizationStats& stats,
                                  uint64_t seed, int64_t step) {
  Checkpoint ck;
  ck.kind = "model";
  ck.config = params.cfg;
  ck.norm_stats = stats;
  ck.seed = seed;
  ck.step = step;
  ck.tensors = params.named();
  return ck;
}

namespace {

nn::Tensor take(const Checkpoint& ck, const std::string& name, const std::vector<int>& shape) {
  const nn::Tensor* t = ck.find(name);
  if (!t) throw IoError("checkpoint is missing tensor " + name);
  if (t->shape() != shape) {
    throw IoError("checkpoint tensor " + name + " has shape " + nn::shape_str(t->shape()) +
                  ", expected " + nn::shape_str(shape));
  }
  std::vector<float> data(t->values().begin(), t->values().end());
  return nn::Tensor::from(shape, std::move(data), /*requires_grad=*/true);
}

}  // namespace

ModelParams params_from_checkpoint(const Checkpoint& ck) {
  const ModelConfig& cfg = ck.config;
  cfg.validate();
  const int d = cfg.d_model;
  ModelParams p;
  p.cfg = cfg;
  p.in_w1 = take(ck, "input_ffn.w1", {2, 4 * d});
  p.in_b1 = take(ck, "input_ffn.b1", {4 * d});
  p.in_w2 = take(ck, "input_ffn.w2", {4 * d, d});
  p.in_b2 = take(ck, "input_ffn.b2", {d});
  p.wpos = take(ck, "wpos", {cfg.max_seq_len, d});
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string pre = "layer." + std::to_string(l) + ".";
    LayerParams lp;
    lp.ln1_gain = take(ck, pre + "ln1.gain", {d});
    lp.ln1_bias = take(ck, pre + "ln1.bias", {d});
    lp.wq = take(ck, pre + "attn.wq", {d, d});
    lp.wk = take(ck, pre + "attn.wk", {d, d});
    lp.wv = take(ck, pre + "attn.wv", {d, d});
    lp.wo = take(ck, pre + "attn.wo", {d, d});
    lp.ln2_gain = take(ck, pre + "ln2.gain", {d});
    lp.ln2_bias = take(ck, pre + "ln2.bias", {d});
    lp.ffn_w1 = take(ck, pre + "ffn.w1", {d, 4 * d});
    lp.ffn_b1 = take(ck, pre + "ffn.b1", {4 * d});
    lp.ffn_w2 = take(ck, pre + "ffn.w2", {4 * d, d});
    lp.ffn_b2 = take(ck, pre + "ffn.b2", {d});
    p.layers.push_back(std::move(lp));
  }
  p.final_ln_gain = take(ck, "final_ln.gain", {d});
  p.final_ln_bias = take(ck, "final_ln.bias", {d});
  p.out_w = take(ck, "output.wo", {d, 2});
  p.out_b = take(ck, "output.bo", {2});
  return p;
}

}  // namespace raw::model
