// Command-line front end: run episodes, score traces, replay one trace line,
// and dump rendered prompts.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "socratic/bench_runner.hpp"
#include "socratic/metrics.hpp"
#include "socratic/model_gateway.hpp"
#include "socratic/prompt_forge.hpp"
#include "socratic/trace_io.hpp"

namespace fs = std::filesystem;
using namespace socratic;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMismatch = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct GatewayOptions {
  std::string kind = "scripted";
  std::string script;
  std::string endpoint = HttpConfig{}.endpoint;
  std::string model = HttpConfig{}.model;
  std::string api_key_env = HttpConfig{}.api_key_env;
  std::string record;
};

struct AblationOptions {
  bool static_mode = false;
  bool no_std = false;
  bool cot = false;
  std::size_t budget = kDefaultFailureBudget;
  std::optional<double> noise;
};

void add_gateway_options(CLI::App* cmd, GatewayOptions& g) {
  cmd->add_option("--gateway", g.kind, "Model backend")->check(CLI::IsMember({"http", "scripted"}));
  cmd->add_option("--script", g.script, "Oracle script for the scripted gateway");
  cmd->add_option("--endpoint", g.endpoint, "Chat-completions endpoint URL");
  cmd->add_option("--model", g.model, "Model name sent to the endpoint");
  cmd->add_option("--api-key-env", g.api_key_env, "Environment variable holding the API key");
  cmd->add_option("--record", g.record, "Save every model exchange as an oracle script");
}

void add_ablation_options(CLI::App* cmd, AblationOptions& a) {
  cmd->add_flag("--static", a.static_mode, "Disable validity checks, feedback and replanning");
  cmd->add_flag("--no-std", a.no_std, "Skip the self-QA decomposition");
  cmd->add_flag("--cot", a.cot, "Use a step-by-step decomposition instead of self-QA");
  cmd->add_option("--budget", a.budget, "Failure budget per episode")->check(CLI::PositiveNumber);
  cmd->add_option("--noise", a.noise, "Controller noise probability")->check(CLI::Range(0.0, 1.0));
}

EpisodeConfig episode_config(const AblationOptions& a) {
  EpisodeConfig c;
  c.failure_budget = a.budget;
  c.replanning_enabled = !a.static_mode;
  c.use_std = !a.no_std;
  c.use_cot = a.cot;
  c.noise_override = a.noise;
  return c;
}

std::shared_ptr<Gateway> build_gateway(const GatewayOptions& g) {
  if (g.kind == "scripted") {
    if (g.script.empty()) throw BenchError(BenchErrorKind::Config, "--script is required with --gateway scripted");
    return make_gateway(GatewayConfig{ScriptedConfig{g.script}});
  }
  HttpConfig http;
  http.endpoint = g.endpoint;
  http.model = g.model;
  http.api_key_env = g.api_key_env;
  return make_gateway(GatewayConfig{http});
}

PromptForge load_prompts(const std::string& dir) {
  return dir.empty() ? PromptForge::load_default() : PromptForge::load(dir);
}

void save_recording(const std::shared_ptr<RecordingGateway>& rec, const std::string& path) {
  if (rec && !path.empty()) save_script(rec->recorded(), path);
}

int cmd_run(const std::string& tasks_path, const GatewayOptions& g, const AblationOptions& a, std::uint64_t seed,
            int parallel, const std::string& prompts_dir, const std::string& out) {
  const auto tasks = load_tasks(tasks_path);
  const auto prompts = load_prompts(prompts_dir);
  auto gw = build_gateway(g);
  std::shared_ptr<RecordingGateway> recorder;
  if (!g.record.empty()) {
    recorder = std::make_shared<RecordingGateway>(gw);
    gw = recorder;
  }

  RunConfig cfg;
  cfg.episode = episode_config(a);
  cfg.seed = seed;
  cfg.parallelism = parallel;
  cfg.out_dir = out;
  const auto traces = run_bench(tasks, *gw, prompts, cfg);
  dump_exchanges(traces, fs::path(out) / "prompts");
  save_recording(recorder, g.record);

  for (const auto& t : traces) {
    std::cout << t.task_id << "  " << to_string(t.outcome) << "  sr=" << t.sr << "  gc=" << t.gc
              << "  failures=" << t.failure_count << "  redos=" << t.redo_count << "  replans=" << t.replan_count
              << '\n';
  }
  std::cout << "wrote " << (fs::path(out) / "traces.jsonl").string() << '\n';
  return kExitOk;
}

int cmd_score(const std::string& traces, const std::string& tasks, const std::string& format, std::string out) {
  if (out.empty()) out = fs::path(traces).parent_path().string();
  const auto report = score_files(traces, tasks, out.empty() ? fs::path(".") : fs::path(out));
  if (format == "json") {
    std::cout << report_to_json(report).dump(2) << '\n';
  } else {
    std::cout << render_report_table(report);
  }
  return kExitOk;
}

int cmd_replay(const std::string& traces_path, std::size_t line, const std::string& tasks_path,
               const GatewayOptions& g, const std::string& prompts_dir, bool print) {
  const auto traces = read_traces(traces_path);
  if (line == 0 || line > traces.size()) {
    throw BenchError(BenchErrorKind::Config, "trace line " + std::to_string(line) + " out of range (file has " +
                                                 std::to_string(traces.size()) + " traces)");
  }
  const auto& original = traces[line - 1];
  const auto tasks = load_tasks(tasks_path);
  const auto prompts = load_prompts(prompts_dir);
  auto gw = build_gateway(g);
  const auto fresh = replay_episode(original, tasks, *gw, prompts);

  if (print) {
    for (const auto& s : fresh.steps) {
      std::cout << s.plan_index << "  " << render_subgoal(s.subgoal) << "  " << to_string(s.reason);
      if (s.decision) std::cout << "  -> " << *s.decision;
      std::cout << '\n';
    }
    std::cout << "outcome " << to_string(fresh.outcome) << "  sr=" << fresh.sr << "  gc=" << fresh.gc << '\n';
  }
  if (trace_to_line(fresh) == trace_to_line(original)) {
    std::cout << "replay of " << original.task_id << ": identical\n";
    return kExitOk;
  }
  std::cout << "replay of " << original.task_id << ": DIFFERS (outcome " << to_string(original.outcome) << " -> "
            << to_string(fresh.outcome) << ")\n";
  return kExitMismatch;
}

int cmd_prompts(const std::string& tasks_path, const std::string& task_id, const AblationOptions& a,
                const std::string& prompts_dir, const std::string& out) {
  const auto tasks = load_tasks(tasks_path);
  const auto prompts = load_prompts(prompts_dir);
  const auto cfg = episode_config(a);
  std::size_t files = 0;
  for (const auto& s : tasks.scenarios) {
    if (!task_id.empty() && s.id != task_id) continue;
    files += dump_rendered_prompts(s, prompts, cfg, fs::path(out) / s.id).size();
  }
  if (files == 0) throw BenchError(BenchErrorKind::Config, "no task matched '" + task_id + "'");
  std::cout << "wrote " << files << " prompt files under " << out << '\n';
  return kExitOk;
}

int exit_code_for(const BenchError& e) { return e.kind() == BenchErrorKind::Io ? kExitIo : kExitConfig; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Socratic planner harness"};
  app.require_subcommand(1);

  GatewayOptions gw_opts;
  AblationOptions ab_opts;
  std::string tasks, out, prompts_dir, traces, format = "table", task_id;
  std::uint64_t seed = 0;
  int parallel = 1;
  std::size_t line = 1;
  bool print_steps = false;

  auto* run = app.add_subcommand("run", "Run every task in a task file");
  run->add_option("--tasks", tasks, "Task file (JSON)")->required();
  run->add_option("--seed", seed, "Global seed for controller noise");
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--parallel", parallel, "Concurrent episodes")->check(CLI::PositiveNumber);
  run->add_option("--prompts", prompts_dir, "Template directory");
  add_gateway_options(run, gw_opts);
  add_ablation_options(run, ab_opts);

  auto* score = app.add_subcommand("score", "Score a trace file against task ground truth");
  score->add_option("--traces", traces, "Trace file (JSONL)")->required();
  score->add_option("--tasks", tasks, "Task file (JSON)")->required();
  score->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "table"}));
  score->add_option("--out", out, "Directory for report.json and report.txt (default: next to the traces)");

  auto* replay = app.add_subcommand("replay", "Re-execute one trace line and compare");
  replay->add_option("--traces", traces, "Trace file (JSONL)")->required();
  replay->add_option("--line", line, "1-based trace line");
  replay->add_option("--tasks", tasks, "Task file (JSON)")->required();
  replay->add_option("--prompts", prompts_dir, "Template directory");
  replay->add_flag("--print", print_steps, "Print the replayed steps");
  add_gateway_options(replay, gw_opts);

  auto* prompts = app.add_subcommand("prompts", "Render prompts for a scenario without calling a model");
  prompts->add_option("--tasks", tasks, "Task file (JSON)")->required();
  prompts->add_option("--task", task_id, "Task id (default: all)");
  prompts->add_option("--out", out, "Output directory")->required();
  prompts->add_option("--prompts", prompts_dir, "Template directory");
  add_ablation_options(prompts, ab_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(tasks, gw_opts, ab_opts, seed, parallel, prompts_dir, out);
    if (*score) return cmd_score(traces, tasks, format, out);
    if (*replay) return cmd_replay(traces, line, tasks, gw_opts, prompts_dir, print_steps);
    if (*prompts) return cmd_prompts(tasks, task_id, ab_opts, prompts_dir, out);
  } catch (const BenchError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const TraceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == TraceErrorKind::Io ? kExitIo : kExitConfig;
  } catch (const PromptError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GatewayError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == GatewayErrorKind::MalformedScript ? kExitConfig : kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
