#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "raw/checkpoint.hpp"
#include "raw/model.hpp"
#include "raw/trajectory.hpp"

namespace raw::train {

enum class LossKind { l1, mse };

struct TrainConfig {
  float learning_rate = 3e-4f;
  float adam_beta1 = 0.9f;
  float adam_beta2 = 0.95f;
  float adam_eps = 1e-8f;
  float weight_decay = 0.01f;  // decoupled; not applied to 1-d tensors (biases, gains)
  int batch_size = 16;
  int64_t total_steps = 2000;
  float grad_clip_norm = 1.0f;
  int64_t lr_warmup_steps = 100;
  uint64_t seed = 0;
  LossKind loss_kind = LossKind::l1;

  void validate() const;
};

struct AdamSlot {
  std::vector<float> m, v;
};

struct TrainState {
  model::ModelParams params;
  data::NormalizationStats stats;
  TrainConfig cfg;
  std::vector<AdamSlot> moments;  // aligned with params.named()
  int64_t step = 0;
  std::mt19937_64 rng;  // dropout stream
  double loss_ema = 0.0;
};

struct StepResult {
  float loss = 0.0f;
  float lr = 0.0f;
  float grad_norm = 0.0f;  // pre-clip global norm
};

TrainState init_train_state(const model::ModelConfig& mcfg, const TrainConfig& tcfg,
                            const data::NormalizationStats& stats, uint64_t master_seed);

// mean over valid positions of |dx|+|dy| (L1) or dx^2+dy^2 (MSE), in
// normalized units; valid_mask.size() == rows of predictions
nn::Tensor next_gps_loss(nn::Tape& tape, const nn::Tensor& predictions, const nn::Tensor& targets,
                         const std::vector<bool>& valid_mask, LossKind kind);

// inputs = normalized coords[0..n-2], targets = normalized coords[1..n-1]:
// position j carries coordinate j+1 as its target
std::pair<nn::Tensor, nn::Tensor> teacher_forcing_pair(const data::GriddedTrajectory& traj,
                                                       const data::NormalizationStats& stats);

// teacher forcing: row inputs coords[0..n-2], targets coords[1..n-1];
// backward, global-norm clip, AdamW update with bias correction
StepResult train_step(TrainState& state, const std::vector<data::GriddedTrajectory>& batch);

// eval-mode mean next-GPS loss over a dataset (no parameter update)
double evaluate_loss(const model::ModelParams& params, const data::NormalizationStats& stats,
                     const std::vector<data::GriddedTrajectory>& trajs, LossKind kind);

// greedy autoregressive continuation; returns n_future denormalized points
std::vector<geo::LonLat> rollout(const model::ModelParams& params,
                                 const data::NormalizationStats& stats,
                                 const data::GriddedTrajectory& prompt, int n_future);

model::Checkpoint train_state_checkpoint(const TrainState& state, uint64_t master_seed);
TrainState train_state_from_checkpoint(const model::Checkpoint& ck);

struct TrainLogRecord {
  int64_t step = 0;
  float loss = 0.0f;
  float lr = 0.0f;
  float grad_norm = 0.0f;
  double wall_ms = 0.0;
};

// line-delimited {"step": ..., "loss": ..., "lr": ..., "grad_norm": ..., "wall_ms": ...}
class TrainLogWriter {
 public:
  explicit TrainLogWriter(const std::string& path);
  void append(const TrainLogRecord& rec);

 private:
  std::ofstream out_;
};

}  // namespace raw::train
