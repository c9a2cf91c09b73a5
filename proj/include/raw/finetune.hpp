#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "raw/checkpoint.hpp"
#include "raw/model.hpp"
#include "raw/region.hpp"
#include "raw/trajectory.hpp"

namespace raw::ft {

enum class Pooling { last, mean };

struct TrajectoryEmbedding {
  std::string user_id;
  std::vector<float> vector;  // d
  int64_t window_t0 = 0;
  int64_t window_t1 = 0;
};

struct RegionEmbedding {
  std::string region_id;
  std::vector<float> vector;  // exact sum of contributing user embeddings
  int contributing_user_count = 0;
  int64_t window_t0 = 0;
  int64_t window_t1 = 0;
  int k_days = 0;
  double proximity_m = 0.0;
};

// eval-mode forward; the embedding is row E[last] (or the row mean under
// Pooling::mean), deterministic per checkpoint
TrajectoryEmbedding embed_trajectory(const model::ModelParams& params,
                                     const data::NormalizationStats& stats,
                                     const data::GriddedTrajectory& traj,
                                     Pooling pooling = Pooling::last);

// select members via region_membership over [as_of - k_days*86400, as_of),
// embed each member's window slice, sum
RegionEmbedding region_embed(const model::ModelParams& params,
                             const data::NormalizationStats& stats,
                             const std::vector<data::GriddedTrajectory>& user_trajs,
                             const data::Region& region, int64_t as_of, int k_days,
                             double proximity_m, Pooling pooling = Pooling::last);

// same result as calling region_embed per region, but each user's window
// slice is embedded once and reused
std::vector<RegionEmbedding> region_embed_all(const model::ModelParams& params,
                                              const data::NormalizationStats& stats,
                                              const std::vector<data::GriddedTrajectory>& user_trajs,
                                              const std::vector<data::Region>& regions,
                                              int64_t as_of, int k_days, double proximity_m,
                                              Pooling pooling = Pooling::last);

enum class TaskKind { classification, regression };

struct HeadConfig {
  int hidden = -1;  // -1: same width as the input
  float learning_rate = 1e-3f;
  float adam_beta1 = 0.9f;
  float adam_beta2 = 0.999f;
  float adam_eps = 1e-8f;
  int batch_size = 32;
  int steps = 500;
  uint64_t seed = 0;
};

struct TrainExample {
  std::string id;
  std::vector<float> x;
  double y = 0.0;  // class index (classification) or value (regression)
};

// Fine-tuned predictor on frozen embeddings: standardize -> linear ->
// GELU -> linear. Inputs and regression labels are standardized with
// training-split statistics stored in the head.
struct TaskHead {
  std::string task_id;
  TaskKind kind = TaskKind::classification;
  int n_classes = 0;  // classification only
  Pooling pooling = Pooling::last;
  int in_dim = 0;
  int hidden = 0;
  std::vector<float> x_mean, x_std;
  double y_mean = 0.0, y_std = 1.0;
  nn::Tensor w1, b1, w2, b2;
};

// deterministic per seed and invariant to example order (examples are
// canonicalized by id before training)
TaskHead train_head(const std::vector<TrainExample>& examples, TaskKind kind,
                    const std::string& task_id, const HeadConfig& cfg,
                    Pooling pooling = Pooling::last);

// classification: per-class probabilities (sum to 1); regression: one value
// mapped back through the head's label scaling
std::vector<double> predict(const TaskHead& head, std::span<const float> vector);

void save_head(const std::string& path, const TaskHead& head);
TaskHead load_head(const std::string& path);

// line-delimited {"user_id": ..., "vector": [...]} (or region_id)
void write_user_embeddings_jsonl(const std::string& path,
                                 const std::vector<TrajectoryEmbedding>& embs);
std::vector<TrajectoryEmbedding> read_user_embeddings_jsonl(const std::string& path);
void write_region_embeddings_jsonl(const std::string& path,
                                   const std::vector<RegionEmbedding>& embs);
std::vector<RegionEmbedding> read_region_embeddings_jsonl(const std::string& path);

}  // namespace raw::ft
