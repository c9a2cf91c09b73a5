#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "raw/baselines.hpp"
#include "raw/finetune.hpp"
#include "raw/metrics.hpp"

namespace raw::eval {

using MetricValue = std::optional<double>;  // nullopt renders as "-"

struct ModelRow {
  std::string model;
  std::vector<std::pair<std::string, MetricValue>> metrics;
};

struct MetricReport {
  std::string task_id;
  std::string kind;  // "classification" | "regression"
  std::vector<std::pair<std::string, int>> split_sizes;
  std::vector<ModelRow> rows;  // Unique first, then trained feature sources
  std::optional<RolloutTable> rollout;

  const MetricValue* metric(const std::string& model, const std::string& name) const;
  std::string to_text() const;
  nlohmann::json to_json() const;
};

// Train one head per feature source on the train split, score everything on
// the test split, and put the Unique constant predictor alongside. All
// sources must provide examples for the same ids with the same labels.
MetricReport run_task(const std::string& task_id, ft::TaskKind kind,
                      const std::vector<std::pair<std::string, std::vector<ft::TrainExample>>>& sources,
                      const ft::HeadConfig& head_cfg, uint64_t split_seed);

std::string reports_to_text(const std::vector<MetricReport>& reports);
nlohmann::json reports_to_json(const std::vector<MetricReport>& reports);

}  // namespace raw::eval
