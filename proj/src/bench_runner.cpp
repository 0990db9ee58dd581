#include "socratic/bench_runner.hpp"

#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "socratic/trace_io.hpp"

namespace socratic {
namespace {

namespace fs = std::filesystem;

std::string kind_prefix(BenchErrorKind kind) {
  switch (kind) {
    case BenchErrorKind::Config: return "ConfigError: ";
    case BenchErrorKind::MalformedTaskSet: return "MalformedTaskSet: ";
    case BenchErrorKind::SchemaMismatch: return "SchemaMismatch: ";
    case BenchErrorKind::Io: return "IoError: ";
  }
  return "";
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw BenchError(BenchErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw BenchError(BenchErrorKind::Io, "cannot write " + path.string());
  return out;
}

Scenario seeded(const Scenario& s, std::uint64_t global_seed) {
  Scenario copy = s;
  copy.initial.noise_seed = episode_seed(global_seed, s.id);
  return copy;
}

std::string prompt_file_text(const std::string& system, const std::string& user, const std::string* reply) {
  std::string text = "[system]\n" + system + "\n[user]\n" + user;
  if (reply) text += "\n[reply]\n" + *reply + "\n";
  return text;
}

std::string two_digits(std::size_t n) { return (n < 10 ? "0" : "") + std::to_string(n); }

}  // namespace

BenchError::BenchError(BenchErrorKind kind, const std::string& detail) : Error(kind_prefix(kind) + detail), kind_(kind) {}

const Scenario* TaskSet::find(std::string_view id) const {
  for (const auto& s : scenarios) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

TaskSet parse_tasks(const nlohmann::json& j) {
  TaskSet ts;
  const nlohmann::json* list = &j;
  if (j.is_object()) {
    ts.name = j.value("name", std::string());
    ts.version = j.value("version", std::string());
    if (!j.contains("scenarios")) throw BenchError(BenchErrorKind::MalformedTaskSet, "missing 'scenarios'");
    list = &j.at("scenarios");
  }
  if (!list->is_array()) throw BenchError(BenchErrorKind::MalformedTaskSet, "scenarios must be an array");
  std::set<std::string> seen;
  for (const auto& sj : *list) {
    try {
      ts.scenarios.push_back(scenario_from_json(sj));
    } catch (const InvalidScenarioError& e) {
      throw BenchError(BenchErrorKind::MalformedTaskSet, e.what());
    }
    if (!seen.insert(ts.scenarios.back().id).second) {
      throw BenchError(BenchErrorKind::MalformedTaskSet, "duplicate task id '" + ts.scenarios.back().id + "'");
    }
  }
  return ts;
}

TaskSet load_tasks(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw BenchError(BenchErrorKind::Io, "cannot open task file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw BenchError(BenchErrorKind::MalformedTaskSet, path.string() + ": " + e.what());
  }
  return parse_tasks(j);
}

GroundTruthMap ground_truth(const TaskSet& tasks) {
  GroundTruthMap out;
  for (const auto& s : tasks.scenarios) out.emplace(s.id, TaskGroundTruth{s.gt, s.task_type});
  return out;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t episode_seed(std::uint64_t global_seed, std::string_view task_id) {
  return splitmix64(global_seed ^ fnv1a64(task_id));
}

std::vector<EpisodeTrace> run_bench_serial(const TaskSet& tasks, Gateway& gw, const PromptForge& prompts,
                                           const RunConfig& cfg) {
  const SocraticPlanner planner(gw, prompts, cfg.episode);
  std::optional<std::ofstream> out;
  if (!cfg.out_dir.empty()) {
    ensure_dir(cfg.out_dir);
    out = open_out(cfg.out_dir / "traces.jsonl");
  }
  std::vector<EpisodeTrace> traces;
  traces.reserve(tasks.scenarios.size());
  for (const auto& s : tasks.scenarios) {
    traces.push_back(planner.run_episode(seeded(s, cfg.seed)));
    if (out) *out << trace_to_line(traces.back()) << '\n';
  }
  if (out && !*out) throw BenchError(BenchErrorKind::Io, "write failed in " + cfg.out_dir.string());
  return traces;
}

std::vector<EpisodeTrace> run_bench(const TaskSet& tasks, Gateway& gw, const PromptForge& prompts,
                                    const RunConfig& cfg) {
  if (cfg.parallelism < 1) throw BenchError(BenchErrorKind::Config, "parallelism must be at least 1");
  const SocraticPlanner planner(gw, prompts, cfg.episode);
  std::optional<std::ofstream> out;
  if (!cfg.out_dir.empty()) {
    ensure_dir(cfg.out_dir);
    out = open_out(cfg.out_dir / "traces.jsonl");
  }
  const auto n = static_cast<std::ptrdiff_t>(tasks.scenarios.size());
  std::vector<EpisodeTrace> traces(tasks.scenarios.size());
  std::vector<std::string> errors(tasks.scenarios.size());

#pragma omp parallel for ordered schedule(dynamic, 1) num_threads(cfg.parallelism)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    std::string line;
    try {
      traces[k] = planner.run_episode(seeded(tasks.scenarios[k], cfg.seed));
      if (out) line = trace_to_line(traces[k]);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
#pragma omp ordered
    {
      if (out && errors[k].empty()) *out << line << '\n';
    }
  }

  for (const auto& e : errors) {
    if (!e.empty()) throw BenchError(BenchErrorKind::Config, e);
  }
  if (out && !*out) throw BenchError(BenchErrorKind::Io, "write failed in " + cfg.out_dir.string());
  return traces;
}

MetricsReport score_files(const fs::path& traces_path, const fs::path& tasks_path, const fs::path& out_dir) {
  std::vector<EpisodeTrace> traces;
  try {
    traces = read_traces(traces_path);
  } catch (const TraceError& e) {
    const auto kind = e.kind() == TraceErrorKind::SchemaMismatch ? BenchErrorKind::SchemaMismatch
                      : e.kind() == TraceErrorKind::Io           ? BenchErrorKind::Io
                                                                 : BenchErrorKind::Config;
    throw BenchError(kind, e.what());
  }
  const auto tasks = load_tasks(tasks_path);
  const auto report = score_dataset(traces, ground_truth(tasks));
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    open_out(out_dir / "report.json") << report_to_json(report).dump(2) << '\n';
    open_out(out_dir / "report.txt") << render_report_table(report);
  }
  return report;
}

void dump_exchanges(const std::vector<EpisodeTrace>& traces, const fs::path& dir) {
  for (const auto& t : traces) {
    const auto task_dir = dir / t.task_id;
    ensure_dir(task_dir);
    for (std::size_t i = 0; i < t.exchanges.size(); ++i) {
      const auto& ex = t.exchanges[i];
      open_out(task_dir / (two_digits(i) + "-" + ex.stage + ".txt"))
          << prompt_file_text(ex.system_text, ex.user_text, &ex.reply);
    }
  }
}

std::vector<fs::path> dump_rendered_prompts(const Scenario& s, const PromptForge& prompts, const EpisodeConfig& cfg,
                                            const fs::path& dir) {
  ensure_dir(dir);
  std::vector<fs::path> written;
  auto write = [&](const std::string& stem, const RenderedPrompt& p, const SceneSnapshot* scene) {
    const auto path = dir / (two_digits(written.size()) + "-" + stem + ".txt");
    open_out(path) << prompt_file_text(p.system_text, user_message(p, scene), nullptr);
    written.push_back(path);
  };

  // Stand-ins for model output, so later templates can be filled in.
  QATranscript sample;
  if (cfg.use_cot) {
    sample.chain_of_thought = true;
    sample.turns.push_back({"", "<step-by-step decomposition>"});
    write("decompose", prompts.gen_cot_prompt(s.instruction), nullptr);
    write("plan", prompts.gen_tp_cot_prompt(s.instruction, sample), nullptr);
  } else if (cfg.use_std) {
    sample.turns.push_back({"<question>", "<answer>"});
    write("decompose", prompts.gen_std_prompt(s.instruction), nullptr);
    write("plan", prompts.gen_tp_prompt(s.instruction, sample), nullptr);
  } else {
    write("plan", prompts.gen_tp_no_std_prompt(s.instruction), nullptr);
  }

  if (cfg.replanning_enabled && !s.gt.core.empty()) {
    const auto world = new_world(s);
    const auto scene = render_scene(world);
    const auto& sg = s.gt.core.front();
    const Validity v{Verdict::Invalid, "<validity reply>"};
    Plan plan;
    plan.steps = s.gt.core;
    write("validity", prompts.gen_validity_prompt(sg), &scene);
    write("feedback", prompts.gen_feedback_prompt(sg, v), &scene);
    write("replan", prompts.gen_replan_prompt(Feedback{"<feedback reply>"}, plan, detect_objects(world), v, s.instruction),
          nullptr);
  }
  return written;
}

EpisodeConfig config_from_trace(const EpisodeTrace& t) {
  EpisodeConfig c;
  c.failure_budget = t.config.failure_budget;
  c.replanning_enabled = t.config.replanning_enabled;
  c.use_std = t.config.use_std;
  c.use_cot = t.config.use_cot;
  c.decode = t.config.decode;
  c.noise_override = t.config.noise;
  return c;
}

EpisodeTrace replay_episode(const EpisodeTrace& t, const TaskSet& tasks, Gateway& gw, const PromptForge& prompts) {
  const auto* s = tasks.find(t.task_id);
  if (!s) throw BenchError(BenchErrorKind::Config, "task '" + t.task_id + "' is not in the task file");
  Scenario copy = *s;
  copy.initial.noise_seed = t.config.noise_seed;
  const SocraticPlanner planner(gw, prompts, config_from_trace(t));
  return planner.run_episode(copy);
}

}  // namespace socratic
