#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "raw/model.hpp"
#include "raw/trajectory.hpp"

namespace raw::model {

// Self-describing container: 8-byte magic, u64 header length, JSON header,
// then row-major float32 (little-endian) tensor data in header order.
struct Checkpoint {
  int format_version = 1;
  std::string kind = "model";  // "model" | "train_state" | "head"
  ModelConfig config;
  data::NormalizationStats norm_stats;
  uint64_t seed = 0;
  int64_t step = 0;
  std::string rng_state;      // serialized engine state, empty when not applicable
  nlohmann::json extra;       // free-form (train config, head metadata, ...)
  std::vector<std::pair<std::string, nn::Tensor>> tensors;

  const nn::Tensor* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint checkpoint_from_params(const ModelParams& params,
                                  const data::NormalizationStats& stats, uint64_t seed,
                                  int64_t step);
// validates canonical tensor names and shapes against ck.config
ModelParams params_from_checkpoint(const Checkpoint& ck);

}  // namespace raw::model
