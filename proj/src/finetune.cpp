#include "raw/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "raw/rng.hpp"
#include "raw/tensor.hpp"

namespace raw::ft {

using nlohmann::json;
using nn::Tape;
using nn::Tensor;

TrajectoryEmbedding embed_trajectory(const model::ModelParams& params,
                                     const data::NormalizationStats& stats,
                                     const data::GriddedTrajectory& traj, Pooling pooling) {
  const size_t n = traj.coords.size();
  if (n == 0) throw DataError("embed_trajectory: trajectory " + traj.user_id + " is empty");
  if (static_cast<int>(n) > params.cfg.max_seq_len) {
    throw CapacityError("embed_trajectory: " + std::to_string(n) + " points exceed max_seq_len " +
                        std::to_string(params.cfg.max_seq_len));
  }
  std::vector<float> coords;
  coords.reserve(n * 2);
  for (const auto& c : traj.coords) {
    const geo::LonLat p = data::normalize_point(c, stats);
    coords.push_back(static_cast<float>(p[0]));
    coords.push_back(static_cast<float>(p[1]));
  }
  model::ForwardOutput out =
      model::forward_eval(params, Tensor::from({static_cast<int>(n), 2}, std::move(coords)));

  const int d = params.cfg.d_model;
  TrajectoryEmbedding emb;
  emb.user_id = traj.user_id;
  emb.window_t0 = traj.start_t;
  emb.window_t1 = traj.time_at(n - 1) + data::kGridStepS;
  emb.vector.resize(static_cast<size_t>(d));
  if (pooling == Pooling::last) {
    for (int j = 0; j < d; ++j) emb.vector[static_cast<size_t>(j)] = out.embeddings.at(static_cast<int>(n) - 1, j);
  } else {
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) acc += out.embeddings.at(static_cast<int>(i), j);
      emb.vector[static_cast<size_t>(j)] = static_cast<float>(acc / static_cast<double>(n));
    }
  }
  return emb;
}

namespace {

RegionEmbedding sum_members(const data::Region& region, int d,
                            const std::vector<const TrajectoryEmbedding*>& members, int64_t t0,
                            int64_t t1, int k_days, double proximity_m) {
  RegionEmbedding out;
  out.region_id = region.region_id;
  out.vector.assign(static_cast<size_t>(d), 0.0f);
  out.contributing_user_count = static_cast<int>(members.size());
  out.window_t0 = t0;
  out.window_t1 = t1;
  out.k_days = k_days;
  out.proximity_m = proximity_m;
  for (const TrajectoryEmbedding* m : members) {
    for (size_t j = 0; j < out.vector.size(); ++j) out.vector[j] += m->vector[j];
  }
  return out;
}

}  // namespace

RegionEmbedding region_embed(const model::ModelParams& params,
                             const data::NormalizationStats& stats,
                             const std::vector<data::GriddedTrajectory>& user_trajs,
                             const data::Region& region, int64_t as_of, int k_days,
                             double proximity_m, Pooling pooling) {
  std::vector<data::Region> one = {region};
  return region_embed_all(params, stats, user_trajs, one, as_of, k_days, proximity_m, pooling)[0];
}

std::vector<RegionEmbedding> region_embed_all(const model::ModelParams& params,
                                              const data::NormalizationStats& stats,
                                              const std::vector<data::GriddedTrajectory>& user_trajs,
                                              const std::vector<data::Region>& regions,
                                              int64_t as_of, int k_days, double proximity_m,
                                              Pooling pooling) {
  if (k_days < 1) throw ValueError("region_embed: k_days must be >= 1");
  const int64_t t0 = as_of - static_cast<int64_t>(k_days) * 86400;
  const int64_t t1 = as_of;

  // one window slice + embedding per user, shared across regions
  std::vector<data::GriddedTrajectory> slices;
  std::vector<TrajectoryEmbedding> embs;
  slices.reserve(user_trajs.size());
  for (const auto& traj : user_trajs) {
    data::GriddedTrajectory s = data::slice_window(traj, t0, t1);
    if (s.coords.empty()) {
      slices.push_back(std::move(s));
      embs.emplace_back();
      continue;
    }
    embs.push_back(embed_trajectory(params, stats, s, pooling));
    slices.push_back(std::move(s));
  }

  std::vector<RegionEmbedding> out;
  out.reserve(regions.size());
  for (const auto& region : regions) {
    std::vector<const TrajectoryEmbedding*> members;
    for (size_t u = 0; u < slices.size(); ++u) {
      if (slices[u].coords.empty()) continue;
      if (data::region_membership(slices[u], region, t0, t1, proximity_m)) {
        members.push_back(&embs[u]);
      }
    }
    out.push_back(sum_members(region, params.cfg.d_model, members, t0, t1, k_days, proximity_m));
  }
  return out;
}

TaskHead train_head(const std::vector<TrainExample>& raw_examples, TaskKind kind,
                    const std::string& task_id, const HeadConfig& cfg, Pooling pooling) {
  if (raw_examples.size() < 2) throw DataError("train_head: need >= 2 examples");

  // canonical order, so the result is independent of caller-side shuffling
  std::vector<TrainExample> examples = raw_examples;
  std::sort(examples.begin(), examples.end(),
            [](const TrainExample& a, const TrainExample& b) { return a.id < b.id; });

  const int n = static_cast<int>(examples.size());
  const int d = static_cast<int>(examples[0].x.size());
  for (const auto& e : examples) {
    if (static_cast<int>(e.x.size()) != d) {
      throw ShapeError("train_head: inconsistent feature width for " + e.id);
    }
  }

  TaskHead head;
  head.task_id = task_id;
  head.kind = kind;
  head.pooling = pooling;
  head.in_dim = d;
  head.hidden = cfg.hidden > 0 ? cfg.hidden : d;

  std::vector<int> labels;
  if (kind == TaskKind::classification) {
    std::set<int> distinct;
    for (const auto& e : examples) {
      const int c = static_cast<int>(std::lround(e.y));
      if (c < 0) throw ValueError("train_head: negative class label for " + e.id);
      labels.push_back(c);
      distinct.insert(c);
    }
    if (distinct.size() < 2) {
      throw DegenerateError("train_head: single-class classification training set");
    }
    head.n_classes = *distinct.rbegin() + 1;
  }

  // per-dimension standardization from the training set
  head.x_mean.assign(static_cast<size_t>(d), 0.0f);
  head.x_std.assign(static_cast<size_t>(d), 1.0f);
  for (int j = 0; j < d; ++j) {
    double m = 0.0;
    for (const auto& e : examples) m += e.x[static_cast<size_t>(j)];
    m /= n;
    double var = 0.0;
    for (const auto& e : examples) {
      const double dv = e.x[static_cast<size_t>(j)] - m;
      var += dv * dv;
    }
    head.x_mean[static_cast<size_t>(j)] = static_cast<float>(m);
    head.x_std[static_cast<size_t>(j)] = static_cast<float>(std::max(std::sqrt(var / n), 1e-6));
  }
  if (kind == TaskKind::regression) {
    double m = 0.0;
    for (const auto& e : examples) m += e.y;
    m /= n;
    double var = 0.0;
    for (const auto& e : examples) var += (e.y - m) * (e.y - m);
    head.y_mean = m;
    head.y_std = std::max(std::sqrt(var / n), 1e-6);
  }

  std::vector<float> xs(static_cast<size_t>(n) * d);
  std::vector<float> ys(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      xs[static_cast<size_t>(i) * d + j] =
          (examples[static_cast<size_t>(i)].x[static_cast<size_t>(j)] - head.x_mean[static_cast<size_t>(j)]) /
          head.x_std[static_cast<size_t>(j)];
    }
    ys[static_cast<size_t>(i)] =
        static_cast<float>((examples[static_cast<size_t>(i)].y - head.y_mean) / head.y_std);
  }

  const int out_dim = kind == TaskKind::classification ? head.n_classes : 1;
  auto rng = make_rng(cfg.seed, "head_init");
  head.w1 = Tensor::randn({d, head.hidden}, rng, 0.02f, true);
  head.b1 = Tensor::zeros({head.hidden}, true);
  head.w2 = Tensor::randn({head.hidden, out_dim}, rng, 0.02f, true);
  head.b2 = Tensor::zeros({out_dim}, true);

  std::vector<Tensor> params = {head.w1, head.b1, head.w2, head.b2};
  struct Slot {
    std::vector<float> m, v;
  };
  std::vector<Slot> moments(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    moments[i].m.assign(static_cast<size_t>(params[i].numel()), 0.0f);
    moments[i].v.assign(static_cast<size_t>(params[i].numel()), 0.0f);
  }

  auto order_rng = make_rng(cfg.seed, "head_batches");
  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  size_t cursor = static_cast<size_t>(n);  // triggers shuffle on first use

  const int bsz = std::min(cfg.batch_size, n);
  for (int step = 1; step <= cfg.steps; ++step) {
    // gather a mini-batch, reshuffling at epoch boundaries
    std::vector<int> batch_idx;
    batch_idx.reserve(static_cast<size_t>(bsz));
    while (static_cast<int>(batch_idx.size()) < bsz) {
      if (cursor >= order.size()) {
        std::shuffle(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      batch_idx.push_back(order[cursor++]);
    }

    std::vector<float> bx(static_cast<size_t>(bsz) * d);
    for (int i = 0; i < bsz; ++i) {
      std::copy_n(xs.begin() + static_cast<size_t>(batch_idx[static_cast<size_t>(i)]) * d, d,
                  bx.begin() + static_cast<size_t>(i) * d);
    }

    Tape tape;
    Tensor x = Tensor::from({bsz, d}, std::move(bx));
    Tensor h = nn::gelu(tape, nn::add_bias(tape, nn::matmul(tape, x, head.w1), head.b1));
    Tensor out = nn::add_bias(tape, nn::matmul(tape, h, head.w2), head.b2);

    Tensor loss;
    if (kind == TaskKind::classification) {
      std::vector<int> blab(static_cast<size_t>(bsz));
      for (int i = 0; i < bsz; ++i) blab[static_cast<size_t>(i)] = labels[static_cast<size_t>(batch_idx[static_cast<size_t>(i)])];
      loss = nn::softmax_cross_entropy(tape, out, blab);
    } else {
      std::vector<float> by(static_cast<size_t>(bsz));
      for (int i = 0; i < bsz; ++i) by[static_cast<size_t>(i)] = ys[static_cast<size_t>(batch_idx[static_cast<size_t>(i)])];
      loss = nn::mean(tape, nn::abs(tape, nn::sub(tape, out, Tensor::from({bsz, 1}, std::move(by)))));
    }
    nn::backward(loss, tape);

    const double bc1 = 1.0 - std::pow(static_cast<double>(cfg.adam_beta1), step);
    const double bc2 = 1.0 - std::pow(static_cast<double>(cfg.adam_beta2), step);
    for (size_t pi = 0; pi < params.size(); ++pi) {
      auto pv = params[pi].values_mut();
      const auto gv = params[pi].grad();
      for (size_t j = 0; j < pv.size(); ++j) {
        const float g = gv[j];
        moments[pi].m[j] = cfg.adam_beta1 * moments[pi].m[j] + (1.0f - cfg.adam_beta1) * g;
        moments[pi].v[j] = cfg.adam_beta2 * moments[pi].v[j] + (1.0f - cfg.adam_beta2) * g * g;
        const float mhat = moments[pi].m[j] / static_cast<float>(bc1);
        const float vhat = moments[pi].v[j] / static_cast<float>(bc2);
        pv[j] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
      }
      params[pi].zero_grad();
    }
  }
  return head;
}

std::vector<double> predict(const TaskHead& head, std::span<const float> vector) {
  if (static_cast<int>(vector.size()) != head.in_dim) {
    throw ShapeError("predict: vector width " + std::to_string(vector.size()) +
                     " does not match head input " + std::to_string(head.in_dim));
  }
  std::vector<float> x(vector.size());
  for (size_t j = 0; j < x.size(); ++j) {
    x[j] = (vector[j] - head.x_mean[j]) / head.x_std[j];
  }
  Tape tape(false);
  Tensor xt = Tensor::from({1, head.in_dim}, std::move(x));
  Tensor h = nn::gelu(tape, nn::add_bias(tape, nn::matmul(tape, xt, head.w1), head.b1));
  Tensor out = nn::add_bias(tape, nn::matmul(tape, h, head.w2), head.b2);
  if (head.kind == TaskKind::classification) {
    Tensor probs = nn::softmax_lastdim(tape, out);
    std::vector<double> p(static_cast<size_t>(head.n_classes));
    for (int c = 0; c < head.n_classes; ++c) p[static_cast<size_t>(c)] = probs.at(0, c);
    return p;
  }
  return {static_cast<double>(out.at(0, 0)) * head.y_std + head.y_mean};
}

void save_head(const std::string& path, const TaskHead& head) {
  model::Checkpoint ck;
  ck.kind = "head";
  ck.extra = {{"task_id", head.task_id},
              {"task_kind", head.kind == TaskKind::classification ? "classification" : "regression"},
              {"n_classes", head.n_classes},
              {"pooling", head.pooling == Pooling::last ? "last" : "mean"},
              {"in_dim", head.in_dim},
              {"hidden", head.hidden},
              {"y_mean", head.y_mean},
              {"y_std", head.y_std}};
  ck.tensors = {{"w1", head.w1},
                {"b1", head.b1},
                {"w2", head.w2},
                {"b2", head.b2},
                {"x_mean", nn::Tensor::from({head.in_dim}, std::vector<float>(head.x_mean))},
                {"x_std", nn::Tensor::from({head.in_dim}, std::vector<float>(head.x_std))}};
  model::save_checkpoint(path, ck);
}

TaskHead load_head(const std::string& path) {
  model::Checkpoint ck = model::load_checkpoint(path);
  if (ck.kind != "head") throw IoError(path + ": checkpoint kind is not head");
  TaskHead head;
  head.task_id = ck.extra.at("task_id").get<std::string>();
  head.kind = ck.extra.at("task_kind").get<std::string>() == "classification"
                  ? TaskKind::classification
                  : TaskKind::regression;
  head.n_classes = ck.extra.at("n_classes").get<int>();
  head.pooling = ck.extra.at("pooling").get<std::string>() == "mean" ? Pooling::mean : Pooling::last;
  head.in_dim = ck.extra.at("in_dim").get<int>();
  head.hidden = ck.extra.at("hidden").get<int>();
  head.y_mean = ck.extra.at("y_mean").get<double>();
  head.y_std = ck.extra.at("y_std").get<double>();
  auto take = [&](const std::string& name) {
    const nn::Tensor* t = ck.find(name);
    if (!t) throw IoError(path + ": missing tensor " + name);
    return *t;
  };
  head.w1 = take("w1");
  head.b1 = take("b1");
  head.w2 = take("w2");
  head.b2 = take("b2");
  const nn::Tensor xm = take("x_mean"), xs = take("x_std");
  head.x_mean.assign(xm.values().begin(), xm.values().end());
  head.x_std.assign(xs.values().begin(), xs.values().end());
  return head;
}

void write_user_embeddings_jsonl(const std::string& path,
                                 const std::vector<TrajectoryEmbedding>& embs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& e : embs) {
    json rec = {{"user_id", e.user_id}, {"vector", e.vector}};
    out << rec.dump() << "\n";
  }
}

std::vector<TrajectoryEmbedding> read_user_embeddings_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<TrajectoryEmbedding> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    TrajectoryEmbedding e;
    e.user_id = rec.at("user_id").get<std::string>();
    e.vector = rec.at("vector").get<std::vector<float>>();
    out.push_back(std::move(e));
  }
  return out;
}

void write_region_embeddings_jsonl(const std::string& path,
                                   const std::vector<RegionEmbedding>& embs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& e : embs) {
    json rec = {{"region_id", e.region_id}, {"vector", e.vector}};
    out << rec.dump() << "\n";
  }
}

std::vector<RegionEmbedding> read_region_embeddings_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<RegionEmbedding> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    RegionEmbedding e;
    e.region_id = rec.at("region_id").get<std::string>();
    e.vector = rec.at("vector").get<std::vector<float>>();
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace raw::ft
