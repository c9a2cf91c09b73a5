#include "raw/train.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "raw/rng.hpp"

namespace raw::train {

using nn::Tape;
using nn::Tensor;

void TrainConfig::validate() const {
  if (learning_rate < 0.0f) throw ConfigError("learning_rate must be >= 0");
  if (adam_beta1 <= 0.0f || adam_beta1 >= 1.0f || adam_beta2 <= 0.0f || adam_beta2 >= 1.0f) {
    throw ConfigError("adam betas must be in (0,1)");
  }
  if (adam_eps <= 0.0f) throw ConfigError("adam_eps must be > 0");
  if (weight_decay < 0.0f) throw ConfigError("weight_decay must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (grad_clip_norm <= 0.0f) throw ConfigError("grad_clip_norm must be > 0");
  if (lr_warmup_steps < 0) throw ConfigError("lr_warmup_steps must be >= 0");
}

TrainState init_train_state(const model::ModelConfig& mcfg, const TrainConfig& tcfg,
                            const data::NormalizationStats& stats, uint64_t master_seed) {
  tcfg.validate();
  TrainState state;
  state.params = model::init_params(mcfg, master_seed);
  state.stats = stats;
  state.cfg = tcfg;
  state.rng = make_rng(master_seed, "dropout");
  for (const auto& [name, t] : state.params.named()) {
    AdamSlot slot;
    slot.m.assign(static_cast<size_t>(t.numel()), 0.0f);
    slot.v.assign(static_cast<size_t>(t.numel()), 0.0f);
    state.moments.push_back(std::move(slot));
  }
  return state;
}

Tensor next_gps_loss(Tape& tape, const Tensor& predictions, const Tensor& targets,
                     const std::vector<bool>& valid_mask, LossKind kind) {
  if (predictions.ndim() != 2 || predictions.dim(1) != 2 ||
      predictions.shape() != targets.shape()) {
    throw ShapeError("next_gps_loss expects matching [n x 2] tensors, got " +
                     nn::shape_str(predictions.shape()) + " vs " +
                     nn::shape_str(targets.shape()));
  }
  const int n = predictions.dim(0);
  if (static_cast<int>(valid_mask.size()) != n) {
    throw ShapeError("valid_mask length " + std::to_string(valid_mask.size()) +
                     " does not match " + std::to_string(n) + " positions");
  }
  int n_valid = 0;
  std::vector<float> mask(static_cast<size_t>(n) * 2, 0.0f);
  for (int i = 0; i < n; ++i) {
    if (valid_mask[static_cast<size_t>(i)]) {
      ++n_valid;
      mask[static_cast<size_t>(i) * 2] = 1.0f;
      mask[static_cast<size_t>(i) * 2 + 1] = 1.0f;
    }
  }
  if (n_valid == 0) throw DataError("next_gps_loss: no valid positions in batch");

  Tensor diff = nn::sub(tape, predictions, targets);
  Tensor per = kind == LossKind::l1 ? nn::abs(tape, diff) : nn::mul(tape, diff, diff);
  Tensor masked = nn::mul(tape, per, Tensor::from({n, 2}, std::move(mask)));
  return nn::scale(tape, nn::sum(tape, masked), 1.0f / static_cast<float>(n_valid));
}

namespace {

Tensor coords_tensor(const data::GriddedTrajectory& traj, const data::NormalizationStats& stats,
                     size_t lo, size_t hi, bool requires_grad = false) {
  std::vector<float> v;
  v.reserve((hi - lo) * 2);
  for (size_t j = lo; j < hi; ++j) {
    const geo::LonLat p = data::normalize_point(traj.coords[j], stats);
    v.push_back(static_cast<float>(p[0]));
    v.push_back(static_cast<float>(p[1]));
  }
  return Tensor::from({static_cast<int>(hi - lo), 2}, std::move(v), requires_grad);
}

}  // namespace

std::pair<Tensor, Tensor> teacher_forcing_pair(const data::GriddedTrajectory& traj,
                                               const data::NormalizationStats& stats) {
  const size_t n = traj.coords.size();
  if (n < 2) {
    throw DataError("teacher_forcing_pair: trajectory " + traj.user_id +
                    " has fewer than 2 grid points");
  }
  return {coords_tensor(traj, stats, 0, n - 1), coords_tensor(traj, stats, 1, n)};
}

namespace {

double global_grad_norm(const std::vector<std::pair<std::string, Tensor>>& named) {
  double sq = 0.0;
  for (const auto& [name, t] : named) {
    for (float g : t.grad()) sq += static_cast<double>(g) * g;
  }
  return std::sqrt(sq);
}

float max_abs_grad(const std::vector<std::pair<std::string, Tensor>>& named) {
  float mx = 0.0f;
  for (const auto& [name, t] : named) {
    for (float g : t.grad()) mx = std::max(mx, std::fabs(g));
  }
  return mx;
}

}  // namespace

StepResult train_step(TrainState& state, const std::vector<data::GriddedTrajectory>& batch) {
  if (batch.empty()) throw DataError("train_step: empty batch");
  for (const auto& traj : batch) {
    if (traj.coords.size() < 2) {
      throw DataError("train_step: trajectory " + traj.user_id + " has fewer than 2 grid points");
    }
  }

  auto named = state.params.named();
  Tape tape;
  Tensor total;
  int64_t total_positions = 0;

  try {
    for (const auto& traj : batch) {
      const size_t n = traj.coords.size();
      auto [inputs, targets] = teacher_forcing_pair(traj, state.stats);
      model::ForwardOutput out = model::forward(tape, state.params, inputs, true, state.rng);
      std::vector<bool> mask(n - 1, true);
      Tensor row_sum = nn::scale(
          tape, next_gps_loss(tape, out.predictions, targets, mask, state.cfg.loss_kind),
          static_cast<float>(n - 1));
      total = total.defined() ? nn::add(tape, total, row_sum) : row_sum;
      total_positions += static_cast<int64_t>(n - 1);
    }
    Tensor loss = nn::scale(tape, total, 1.0f / static_cast<float>(total_positions));
    nn::backward(loss, tape);

    StepResult res;
    res.loss = loss.item();

    const double norm = global_grad_norm(named);
    if (!std::isfinite(norm)) {
      throw NumericError("non-finite gradient norm");
    }
    res.grad_norm = static_cast<float>(norm);
    if (norm > state.cfg.grad_clip_norm) {
      const float s = state.cfg.grad_clip_norm / static_cast<float>(norm);
      for (auto& [name, t] : named) {
        for (auto& g : t.grad_mut()) g *= s;
      }
    }

    // linear warmup, then constant
    const int64_t t = state.step + 1;
    float lr = state.cfg.learning_rate;
    if (state.cfg.lr_warmup_steps > 0 && t < state.cfg.lr_warmup_steps) {
      lr *= static_cast<float>(t) / static_cast<float>(state.cfg.lr_warmup_steps);
    }
    res.lr = lr;

    const double bc1 = 1.0 - std::pow(static_cast<double>(state.cfg.adam_beta1), static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(static_cast<double>(state.cfg.adam_beta2), static_cast<double>(t));
    for (size_t i = 0; i < named.size(); ++i) {
      Tensor& p = named[i].second;
      AdamSlot& slot = state.moments[i];
      auto pv = p.values_mut();
      const auto gv = p.grad();
      const bool decay = p.ndim() >= 2;
      const float b1 = state.cfg.adam_beta1, b2 = state.cfg.adam_beta2;
      for (size_t j = 0; j < pv.size(); ++j) {
        const float g = gv[j];
        slot.m[j] = b1 * slot.m[j] + (1.0f - b1) * g;
        slot.v[j] = b2 * slot.v[j] + (1.0f - b2) * g * g;
        const float mhat = slot.m[j] / static_cast<float>(bc1);
        const float vhat = slot.v[j] / static_cast<float>(bc2);
        float update = mhat / (std::sqrt(vhat) + state.cfg.adam_eps);
        if (decay) update += state.cfg.weight_decay * pv[j];
        pv[j] -= lr * update;
      }
    }

    state.params.zero_grad();
    state.step += 1;
    state.loss_ema = state.step == 1 ? res.loss : 0.95 * state.loss_ema + 0.05 * res.loss;
    return res;
  } catch (const NumericError& e) {
    throw NumericError("train_step aborted at step " + std::to_string(state.step) + ": " +
                       e.what() + " (max|grad| = " + std::to_string(max_abs_grad(named)) + ")");
  }
}

double evaluate_loss(const model::ModelParams& params, const data::NormalizationStats& stats,
                     const std::vector<data::GriddedTrajectory>& trajs, LossKind kind) {
  double total = 0.0;
  int64_t count = 0;
  for (const auto& traj : trajs) {
    if (traj.coords.size() < 2) continue;
    const size_t n = traj.coords.size();
    Tensor inputs = coords_tensor(traj, stats, 0, n - 1);
    Tensor targets = coords_tensor(traj, stats, 1, n);
    model::ForwardOutput out = model::forward_eval(params, inputs);
    const auto pv = out.predictions.values();
    const auto tv = targets.values();
    for (size_t j = 0; j < pv.size(); j += 2) {
      const double dx = static_cast<double>(pv[j]) - tv[j];
      const double dy = static_cast<double>(pv[j + 1]) - tv[j + 1];
      total += kind == LossKind::l1 ? std::fabs(dx) + std::fabs(dy) : dx * dx + dy * dy;
    }
    count += static_cast<int64_t>(n - 1);
  }
  if (count == 0) throw DataError("evaluate_loss: no valid positions");
  return total / static_cast<double>(count);
}

std::vector<geo::LonLat> rollout(const model::ModelParams& params,
                                 const data::NormalizationStats& stats,
                                 const data::GriddedTrajectory& prompt, int n_future) {
  if (n_future < 0) throw ValueError("rollout: n_future must be >= 0");
  if (n_future == 0) return {};
  if (prompt.coords.empty()) throw DataError("rollout: empty prompt");
  const int total = static_cast<int>(prompt.coords.size()) + n_future;
  if (total > params.cfg.max_seq_len) {
    throw CapacityError("rollout needs " + std::to_string(total) + " positions, max_seq_len is " +
                        std::to_string(params.cfg.max_seq_len));
  }

  std::vector<float> coords;
  coords.reserve(static_cast<size_t>(total) * 2);
  for (const auto& c : prompt.coords) {
    const geo::LonLat p = data::normalize_point(c, stats);
    coords.push_back(static_cast<float>(p[0]));
    coords.push_back(static_cast<float>(p[1]));
  }

  std::vector<geo::LonLat> out;
  out.reserve(static_cast<size_t>(n_future));
  for (int s = 0; s < n_future; ++s) {
    const int n = static_cast<int>(coords.size() / 2);
    Tensor in = Tensor::from({n, 2}, coords);
    model::ForwardOutput fwd = model::forward_eval(params, in);
    const float nx = fwd.predictions.at(n - 1, 0);
    const float ny = fwd.predictions.at(n - 1, 1);
    coords.push_back(nx);
    coords.push_back(ny);
    out.push_back(data::denormalize_point({static_cast<double>(nx), static_cast<double>(ny)}, stats));
  }
  return out;
}

model::Checkpoint train_state_checkpoint(const TrainState& state, uint64_t master_seed) {
  model::Checkpoint ck;
  ck.kind = "train_state";
  ck.config = state.params.cfg;
  ck.norm_stats = state.stats;
  ck.seed = master_seed;
  ck.step = state.step;
  std::ostringstream rs;
  rs << state.rng;
  ck.rng_state = rs.str();
  ck.extra = {{"learning_rate", state.cfg.learning_rate},
              {"adam_beta1", state.cfg.adam_beta1},
              {"adam_beta2", state.cfg.adam_beta2},
              {"adam_eps", state.cfg.adam_eps},
              {"weight_decay", state.cfg.weight_decay},
              {"batch_size", state.cfg.batch_size},
              {"total_steps", state.cfg.total_steps},
              {"grad_clip_norm", state.cfg.grad_clip_norm},
              {"lr_warmup_steps", state.cfg.lr_warmup_steps},
              {"train_seed", state.cfg.seed},
              {"loss_kind", state.cfg.loss_kind == LossKind::l1 ? "L1" : "MSE"},
              {"loss_ema", state.loss_ema}};
  ck.tensors = state.params.named();
  auto named = state.params.named();
  for (size_t i = 0; i < named.size(); ++i) {
    ck.tensors.emplace_back("adam.m." + named[i].first,
                            nn::Tensor::from(named[i].second.shape(),
                                             std::vector<float>(state.moments[i].m)));
    ck.tensors.emplace_back("adam.v." + named[i].first,
                            nn::Tensor::from(named[i].second.shape(),
                                             std::vector<float>(state.moments[i].v)));
  }
  return ck;
}

TrainState train_state_from_checkpoint(const model::Checkpoint& ck) {
  if (ck.kind != "train_state") throw IoError("checkpoint kind is not train_state");
  TrainState state;
  state.params = model::params_from_checkpoint(ck);
  state.stats = ck.norm_stats;
  state.step = ck.step;
  const auto& e = ck.extra;
  state.cfg.learning_rate = e.at("learning_rate").get<float>();
  state.cfg.adam_beta1 = e.at("adam_beta1").get<float>();
  state.cfg.adam_beta2 = e.at("adam_beta2").get<float>();
  state.cfg.adam_eps = e.at("adam_eps").get<float>();
  state.cfg.weight_decay = e.at("weight_decay").get<float>();
  state.cfg.batch_size = e.at("batch_size").get<int>();
  state.cfg.total_steps = e.at("total_steps").get<int64_t>();
  state.cfg.grad_clip_norm = e.at("grad_clip_norm").get<float>();
  state.cfg.lr_warmup_steps = e.at("lr_warmup_steps").get<int64_t>();
  state.cfg.seed = e.at("train_seed").get<uint64_t>();
  state.cfg.loss_kind = e.at("loss_kind").get<std::string>() == "MSE" ? LossKind::mse : LossKind::l1;
  state.loss_ema = e.at("loss_ema").get<double>();
  if (!ck.rng_state.empty()) {
    std::istringstream rs(ck.rng_state);
    rs >> state.rng;
  }
  auto named = state.params.named();
  for (const auto& [name, t] : named) {
    const nn::Tensor* m = ck.find("adam.m." + name);
    const nn::Tensor* v = ck.find("adam.v." + name);
    if (!m || !v) throw IoError("train_state checkpoint missing Adam moments for " + name);
    AdamSlot slot;
    slot.m.assign(m->values().begin(), m->values().end());
    slot.v.assign(v->values().begin(), v->values().end());
    state.moments.push_back(std::move(slot));
  }
  return state;
}

TrainLogWriter::TrainLogWriter(const std::string& path) : out_(path) {
  if (!out_) throw IoError("cannot open " + path + " for writing");
}

void TrainLogWriter::append(const TrainLogRecord& rec) {
  nlohmann::json j = {{"step", rec.step},
                      {"loss", rec.loss},
                      {"lr", rec.lr},
                      {"grad_norm", rec.grad_norm},
                      {"wall_ms", rec.wall_ms}};
  out_ << j.dump() << "\n";
  out_.flush();
}

}  // namespace raw::train
