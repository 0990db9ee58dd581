#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "socratic/error.hpp"
#include "socratic/plan_eval.hpp"
#include "socratic/socratic_engine.hpp"

namespace socratic {

struct TaskGroundTruth {
  GtAnnotation gt;
  std::string task_type;
};

using GroundTruthMap = std::map<std::string, TaskGroundTruth, std::less<>>;

/// Per-episode scores. HLP compares the first plan the planner produced.
struct EpisodeScore {
  std::string task_id;
  std::string task_type;
  int sr = 0;
  double gc = 0.0;
  bool strict_hlp = false;
  bool relaxed_hlp = false;
  std::size_t gt_length = 0;
};

/// Aggregates are percentages; empty groups carry no value.
struct MetricsRow {
  std::string task_type;
  std::size_t n = 0;
  std::optional<double> mean_gt_length;
  std::optional<double> sr;
  std::optional<double> gc;
  std::optional<double> strict_hlp;
  std::optional<double> relaxed_hlp;
};

struct MetricsReport {
  MetricsRow overall;
  std::vector<MetricsRow> per_type;  // known task types first, in a fixed order
};

class MetricsError : public Error {
 public:
  explicit MetricsError(const std::string& task_id);
  const std::string& task_id() const { return task_id_; }

 private:
  std::string task_id_;
};

/// Known task types, in report order.
const std::vector<std::string>& known_task_types();

EpisodeScore score_trace(const EpisodeTrace& t, const TaskGroundTruth& gt);

/// OpenMP over traces. Throws MetricsError when a trace has no ground truth.
MetricsReport score_dataset(const std::vector<EpisodeTrace>& traces, const GroundTruthMap& gt);
MetricsReport score_dataset_serial(const std::vector<EpisodeTrace>& traces, const GroundTruthMap& gt);

MetricsReport aggregate(const std::vector<EpisodeScore>& scores);

nlohmann::json report_to_json(const MetricsReport& r);
std::string render_report_table(const MetricsReport& r);

}  // namespace socratic
