#include "raw/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "raw/rng.hpp"

namespace raw::eval {

namespace {

void require_paired(size_t a, size_t b, const char* op) {
  if (a == 0) throw ValueError(std::string(op) + ": empty input");
  if (a != b) {
    throw ShapeError(std::string(op) + ": length mismatch " + std::to_string(a) + " vs " +
                     std::to_string(b));
  }
}

}  // namespace

double mae(std::span<const double> preds, std::span<const double> targets) {
  require_paired(preds.size(), targets.size(), "mae");
  double acc = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) acc += std::fabs(preds[i] - targets[i]);
  return acc / static_cast<double>(preds.size());
}

double rmse(std::span<const double> preds, std::span<const double> targets) {
  require_paired(preds.size(), targets.size(), "rmse");
  double acc = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(preds.size()));
}

std::optional<double> pcc(std::span<const double> preds, std::span<const double> targets) {
  require_paired(preds.size(), targets.size(), "pcc");
  const double n = static_cast<double>(preds.size());
  double mp = 0.0, mt = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    mp += preds[i];
    mt += targets[i];
  }
  mp /= n;
  mt /= n;
  double cov = 0.0, vp = 0.0, vt = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const double dp = preds[i] - mp, dt = targets[i] - mt;
    cov += dp * dt;
    vp += dp * dp;
    vt += dt * dt;
  }
  if (vp <= 0.0 || vt <= 0.0) return std::nullopt;
  return cov / std::sqrt(vp * vt);
}

double acc(std::span<const int> pred_labels, std::span<const int> true_labels) {
  require_paired(pred_labels.size(), true_labels.size(), "acc");
  size_t match = 0;
  for (size_t i = 0; i < pred_labels.size(); ++i) {
    if (pred_labels[i] == true_labels[i]) ++match;
  }
  return static_cast<double>(match) / static_cast<double>(pred_labels.size());
}

double hamming(std::span<const int> pred_labels, std::span<const int> true_labels) {
  require_paired(pred_labels.size(), true_labels.size(), "hamming");
  size_t mismatch = 0;
  for (size_t i = 0; i < pred_labels.size(); ++i) {
    if (pred_labels[i] != true_labels[i]) ++mismatch;
  }
  return static_cast<double>(mismatch) / static_cast<double>(pred_labels.size());
}

UniqueBaseline unique_baseline(std::span<const int> train_labels) {
  if (train_labels.empty()) throw ValueError("unique_baseline: empty training labels");
  std::map<int, int> counts;
  for (int l : train_labels) counts[l]++;
  int best = train_labels[0], best_count = -1;
  for (const auto& [label, count] : counts) {
    if (count > best_count) {  // map order makes ties resolve to the smallest label
      best = label;
      best_count = count;
    }
  }
  UniqueBaseline u;
  u.is_classification = true;
  u.klass = best;
  u.value = static_cast<double>(best);
  return u;
}

UniqueBaseline unique_baseline(std::span<const double> train_values) {
  if (train_values.empty()) throw ValueError("unique_baseline: empty training values");
  UniqueBaseline u;
  u.is_classification = false;
  u.value = std::accumulate(train_values.begin(), train_values.end(), 0.0) /
            static_cast<double>(train_values.size());
  return u;
}

Split split_indices(size_t n, uint64_t seed) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  auto rng = make_rng(seed, "split");
  std::shuffle(idx.begin(), idx.end(), rng);
  const size_t n_train = static_cast<size_t>(n * 0.8);
  const size_t n_val = static_cast<size_t>(n * 0.1);
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<ptrdiff_t>(n_train));
  s.val.assign(idx.begin() + static_cast<ptrdiff_t>(n_train),
               idx.begin() + static_cast<ptrdiff_t>(n_train + n_val));
  s.test.assign(idx.begin() + static_cast<ptrdiff_t>(n_train + n_val), idx.end());
  return s;
}

}  // namespace raw::eval
