#include "socratic/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace socratic {
namespace {

MetricsRow summarize(std::string task_type, const std::vector<const EpisodeScore*>& group) {
  MetricsRow row;
  row.task_type = std::move(task_type);
  row.n = group.size();
  if (group.empty()) return row;
  double sr = 0, gc = 0, strict = 0, relaxed = 0, length = 0;
  for (const auto* s : group) {
    length += static_cast<double>(s->gt_length);
    sr += s->sr;
    gc += s->gc;
    strict += s->strict_hlp ? 1 : 0;
    relaxed += s->relaxed_hlp ? 1 : 0;
  }
  const double n = static_cast<double>(group.size());
  row.mean_gt_length = length / n;
  row.sr = 100.0 * sr / n;
  row.gc = 100.0 * gc / n;
  row.strict_hlp = 100.0 * strict / n;
  row.relaxed_hlp = 100.0 * relaxed / n;
  return row;
}

nlohmann::json row_to_json(const MetricsRow& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"task_type", r.task_type}, {"n", r.n}, {"mean_gt_length", opt(r.mean_gt_length)}, {"sr", opt(r.sr)},
          {"gc", opt(r.gc)},          {"strict_hlp", opt(r.strict_hlp)}, {"relaxed_hlp", opt(r.relaxed_hlp)}};
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", *v);
  return buf;
}

const TaskGroundTruth& lookup(const GroundTruthMap& gt, const EpisodeTrace& t) {
  auto it = gt.find(t.task_id);
  if (it == gt.end()) throw MetricsError(t.task_id);
  return it->second;
}

}  // namespace

MetricsError::MetricsError(const std::string& task_id)
    : Error("MissingGroundTruth: no ground truth for task '" + task_id + "'"), task_id_(task_id) {}

const std::vector<std::string>& known_task_types() {
  static const std::vector<std::string> kTypes{"Heat", "Cool", "Clean", "Pick Two", "Stack", "Pick", "Examine"};
  return kTypes;
}

EpisodeScore score_trace(const EpisodeTrace& t, const TaskGroundTruth& gt) {
  EpisodeScore s;
  s.task_id = t.task_id;
  s.task_type = gt.task_type.empty() ? t.task_type : gt.task_type;
  s.sr = t.sr;
  s.gc = t.gc;
  s.strict_hlp = strict_match(t.initial_plan, gt.gt);
  s.relaxed_hlp = relaxed_match(t.initial_plan, compile_relaxed_spec(gt.gt));
  s.gt_length = gt.gt.core.size();
  return s;
}

MetricsReport aggregate(const std::vector<EpisodeScore>& scores) {
  std::vector<const EpisodeScore*> all;
  std::map<std::string, std::vector<const EpisodeScore*>> by_type;
  for (const auto& s : scores) {
    all.push_back(&s);
    by_type[s.task_type].push_back(&s);
  }
  MetricsReport r;
  r.overall = summarize("All", all);
  const auto& known = known_task_types();
  for (const auto& type : known) {
    auto it = by_type.find(type);
    if (it != by_type.end()) r.per_type.push_back(summarize(type, it->second));
  }
  for (const auto& [type, group] : by_type) {  // std::map iterates alphabetically
    if (std::find(known.begin(), known.end(), type) == known.end()) r.per_type.push_back(summarize(type, group));
  }
  return r;
}

MetricsReport score_dataset_serial(const std::vector<EpisodeTrace>& traces, const GroundTruthMap& gt) {
  std::vector<EpisodeScore> scores;
  scores.reserve(traces.size());
  for (const auto& t : traces) scores.push_back(score_trace(t, lookup(gt, t)));
  return aggregate(scores);
}

MetricsReport score_dataset(const std::vector<EpisodeTrace>& traces, const GroundTruthMap& gt) {
  for (const auto& t : traces) lookup(gt, t);  // fail before spawning threads
  std::vector<EpisodeScore> scores(traces.size());
  const auto n = static_cast<std::ptrdiff_t>(traces.size());
  std::vector<std::string> errors(traces.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      scores[k] = score_trace(traces[k], gt.find(traces[k].task_id)->second);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (!errors[k].empty()) throw Error("scoring task '" + traces[k].task_id + "': " + errors[k]);
  }
  return aggregate(scores);
}

nlohmann::json report_to_json(const MetricsReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.per_type) rows.push_back(row_to_json(row));
  return {{"n_episodes", r.overall.n}, {"overall", row_to_json(r.overall)}, {"per_type", rows}};
}

std::string render_report_table(const MetricsReport& r) {
  std::vector<std::vector<std::string>> rows{{"Task type", "N", "Length", "SR", "GC", "Strict HLP", "Relaxed HLP"}};
  auto add = [&](const MetricsRow& m) {
    rows.push_back({m.task_type, std::to_string(m.n), cell(m.mean_gt_length), cell(m.sr), cell(m.gc), cell(m.strict_hlp), cell(m.relaxed_hlp)});
  };
  for (const auto& m : r.per_type) add(m);
  add(r.overall);

  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        out << row[c] << std::string(width[c] - row[c].size(), ' ');
      } else {
        out << "  " << std::string(width[c] - row[c].size(), ' ') << row[c];
      }
    }
    out << '\n';
  };
  emit(rows[0]);
  std::size_t total = width[0];
  for (std::size_t c = 1; c < width.size(); ++c) total += 2 + width[c];
  out << std::string(total, '-') << '\n';
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) emit(rows[i]);
  out << std::string(total, '-') << '\n';
  emit(rows.back());
  return out.str();
}

}  // namespace socratic
