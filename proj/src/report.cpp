#include "raw/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace raw::eval {

using nlohmann::json;

const MetricValue* MetricReport::metric(const std::string& model, const std::string& name) const {
  for (const auto& row : rows) {
    if (row.model != model) continue;
    for (const auto& [k, v] : row.metrics) {
      if (k == name) return &v;
    }
  }
  return nullptr;
}

std::string MetricReport::to_text() const {
  std::ostringstream os;
  os << "Task: " << task_id << " (" << kind << ")";
  for (const auto& [name, size] : split_sizes) os << "  " << name << "=" << size;
  os << "\n";
  std::vector<std::string> cols;
  if (!rows.empty()) {
    for (const auto& [k, v] : rows[0].metrics) cols.push_back(k);
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-10s", "Model");
  os << buf;
  for (const auto& c : cols) {
    std::snprintf(buf, sizeof(buf), " %10s", c.c_str());
    os << buf;
  }
  os << "\n";
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%-10s", row.model.c_str());
    os << buf;
    for (const auto& [k, v] : row.metrics) {
      if (v.has_value()) {
        std::snprintf(buf, sizeof(buf), " %10.4f", *v);
      } else {
        std::snprintf(buf, sizeof(buf), " %10s", "-");
      }
      os << buf;
    }
    os << "\n";
  }
  if (rollout.has_value()) {
    os << "\n" << rollout->to_text();
  }
  return os.str();
}

json MetricReport::to_json() const {
  json j;
  j["task_id"] = task_id;
  j["kind"] = kind;
  json splits;
  for (const auto& [name, size] : split_sizes) splits[name] = size;
  j["split_sizes"] = std::move(splits);
  json rows_json = json::array();
  for (const auto& row : rows) {
    json metrics;
    for (const auto& [k, v] : row.metrics) {
      if (v.has_value()) {
        metrics[k] = *v;
      } else {
        metrics[k] = nullptr;
      }
    }
    rows_json.push_back({{"model", row.model}, {"metrics", std::move(metrics)}});
  }
  j["rows"] = std::move(rows_json);
  if (rollout.has_value()) {
    json rt;
    rt["start_labels"] = rollout->start_labels;
    rt["horizons"] = rollout->horizons;
    rt["mean_error_m"] = rollout->mean_error_m;
    rt["counts"] = rollout->counts;
    j["rollout"] = std::move(rt);
  }
  return j;
}

MetricReport run_task(const std::string& task_id, ft::TaskKind kind,
                      const std::vector<std::pair<std::string, std::vector<ft::TrainExample>>>& sources,
                      const ft::HeadConfig& head_cfg, uint64_t split_seed) {
  if (sources.empty()) throw ValueError("run_task: no feature sources");

  // canonicalize each source by id and check alignment
  std::vector<std::pair<std::string, std::vector<ft::TrainExample>>> sorted = sources;
  for (auto& [name, examples] : sorted) {
    std::sort(examples.begin(), examples.end(),
              [](const ft::TrainExample& a, const ft::TrainExample& b) { return a.id < b.id; });
  }
  const size_t n = sorted[0].second.size();
  if (n < 5) throw DataError("run_task: too few examples (" + std::to_string(n) + ")");
  for (const auto& [name, examples] : sorted) {
    if (examples.size() != n) throw DataError("run_task: source " + name + " size mismatch");
    for (size_t i = 0; i < n; ++i) {
      if (examples[i].id != sorted[0].second[i].id || examples[i].y != sorted[0].second[i].y) {
        throw DataError("run_task: source " + name + " misaligned at " + examples[i].id);
      }
    }
  }

  const Split split = split_indices(n, split_seed);

  MetricReport report;
  report.task_id = task_id;
  report.kind = kind == ft::TaskKind::classification ? "classification" : "regression";
  report.split_sizes = {{"train", static_cast<int>(split.train.size())},
                        {"val", static_cast<int>(split.val.size())},
                        {"test", static_cast<int>(split.test.size())}};

  const auto& base = sorted[0].second;
  std::vector<int> test_labels;
  std::vector<double> test_values;
  for (size_t i : split.test) {
    test_labels.push_back(static_cast<int>(std::lround(base[i].y)));
    test_values.push_back(base[i].y);
  }

  if (kind == ft::TaskKind::classification) {
    std::vector<int> train_labels;
    for (size_t i : split.train) train_labels.push_back(static_cast<int>(std::lround(base[i].y)));
    const UniqueBaseline u = unique_baseline(std::span<const int>(train_labels));
    std::vector<int> pred(test_labels.size(), u.klass);
    ModelRow row{"Unique",
                 {{"acc", acc(pred, test_labels)}, {"hamming", hamming(pred, test_labels)}}};
    report.rows.push_back(std::move(row));
  } else {
    std::vector<double> train_values;
    for (size_t i : split.train) train_values.push_back(base[i].y);
    const UniqueBaseline u = unique_baseline(std::span<const double>(train_values));
    std::vector<double> pred(test_values.size(), u.value);
    ModelRow row{"Unique",
                 {{"mae", mae(pred, test_values)},
                  {"rmse", rmse(pred, test_values)},
                  {"pcc", pcc(pred, test_values)}}};
    report.rows.push_back(std::move(row));
  }

  for (const auto& [name, examples] : sorted) {
    std::vector<ft::TrainExample> train_set;
    for (size_t i : split.train) train_set.push_back(examples[i]);
    const ft::TaskHead head = ft::train_head(train_set, kind, task_id, head_cfg);

    if (kind == ft::TaskKind::classification) {
      std::vector<int> pred;
      for (size_t i : split.test) {
        const std::vector<double> probs = ft::predict(head, examples[i].x);
        pred.push_back(static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin()));
      }
      ModelRow row{name,
                   {{"acc", acc(pred, test_labels)}, {"hamming", hamming(pred, test_labels)}}};
      report.rows.push_back(std::move(row));
    } else {
      std::vector<double> pred;
      for (size_t i : split.test) pred.push_back(ft::predict(head, examples[i].x)[0]);
      ModelRow row{name,
                   {{"mae", mae(pred, test_values)},
                    {"rmse", rmse(pred, test_values)},
                    {"pcc", pcc(pred, test_values)}}};
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::string reports_to_text(const std::vector<MetricReport>& reports) {
  std::ostringstream os;
  for (size_t i = 0; i < reports.size(); ++i) {
    if (i) os << "\n";
    os << reports[i].to_text();
  }
  return os.str();
}

json reports_to_json(const std::vector<MetricReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(r.to_json());
  return arr;
}

}  // namespace raw::eval
