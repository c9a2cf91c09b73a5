#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "raw/error.hpp"
#include "raw/geo.hpp"

namespace raw::eval {

using geo::haversine_m;

double mae(std::span<const double> preds, std::span<const double> targets);
double rmse(std::span<const double> preds, std::span<const double> targets);
// nullopt (rendered "-") when either argument has zero variance
std::optional<double> pcc(std::span<const double> preds, std::span<const double> targets);

double acc(std::span<const int> pred_labels, std::span<const int> true_labels);
// single-label setting: fraction mismatched, equals 1 - acc
double hamming(std::span<const int> pred_labels, std::span<const int> true_labels);

// constant predictor: majority class (ties -> smallest label) or training mean
struct UniqueBaseline {
  bool is_classification = false;
  int klass = 0;
  double value = 0.0;
};

UniqueBaseline unique_baseline(std::span<const int> train_labels);
UniqueBaseline unique_baseline(std::span<const double> train_values);

// seeded 80/10/10 split by index
struct Split {
  std::vector<size_t> train, val, test;
};
Split split_indices(size_t n, uint64_t seed);

}  // namespace raw::eval
