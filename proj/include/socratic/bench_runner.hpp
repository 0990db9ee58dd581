#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "socratic/error.hpp"
#include "socratic/metrics.hpp"
#include "socratic/model_gateway.hpp"
#include "socratic/prompt_forge.hpp"
#include "socratic/scenario.hpp"
#include "socratic/socratic_engine.hpp"

namespace socratic {

enum class BenchErrorKind { Config, MalformedTaskSet, SchemaMismatch, Io };

class BenchError : public Error {
 public:
  BenchError(BenchErrorKind kind, const std::string& detail);
  BenchErrorKind kind() const { return kind_; }

 private:
  BenchErrorKind kind_;
};

struct TaskSet {
  std::string name;
  std::string version;
  std::vector<Scenario> scenarios;

  const Scenario* find(std::string_view id) const;
};

/// Accepts `{"name", "version", "scenarios": [...]}` or a bare array.
TaskSet parse_tasks(const nlohmann::json& j);
TaskSet load_tasks(const std::filesystem::path& path);
GroundTruthMap ground_truth(const TaskSet& tasks);

struct RunConfig {
  EpisodeConfig episode;
  std::uint64_t seed = 0;
  int parallelism = 1;
  std::filesystem::path out_dir;  // empty: write nothing
};

/// Per-episode noise seed, independent of scheduling order.
std::uint64_t episode_seed(std::uint64_t global_seed, std::string_view task_id);
std::uint64_t fnv1a64(std::string_view s);

/// Episodes run concurrently; traces come back in task-file order and are
/// written through one ordered writer to `<out_dir>/traces.jsonl`.
std::vector<EpisodeTrace> run_bench(const TaskSet& tasks, Gateway& gw, const PromptForge& prompts,
                                    const RunConfig& cfg);
std::vector<EpisodeTrace> run_bench_serial(const TaskSet& tasks, Gateway& gw, const PromptForge& prompts,
                                           const RunConfig& cfg);

/// Writes report.json and report.txt into `out_dir`.
MetricsReport score_files(const std::filesystem::path& traces, const std::filesystem::path& tasks,
                          const std::filesystem::path& out_dir);

/// One file per exchange: `<dir>/<task_id>/<NN>-<stage>.txt`.
void dump_exchanges(const std::vector<EpisodeTrace>& traces, const std::filesystem::path& dir);

/// Renders every template for one scenario without calling a model. Returns
/// the files written.
std::vector<std::filesystem::path> dump_rendered_prompts(const Scenario& s, const PromptForge& prompts,
                                                         const EpisodeConfig& cfg, const std::filesystem::path& dir);

/// Rebuilds the episode configuration recorded in a trace.
EpisodeConfig config_from_trace(const EpisodeTrace& t);

/// Re-executes the episode behind `t` and returns the fresh trace.
EpisodeTrace replay_episode(const EpisodeTrace& t, const TaskSet& tasks, Gateway& gw, const PromptForge& prompts);

}  // namespace socratic
