#include <benchmark/benchmark.h>

#include <filesystem>

#include "socratic/bench_runner.hpp"

namespace {

using namespace socratic;

const std::filesystem::path kRoot = SOCRATIC_SOURCE_DIR;

struct Fixture {
  TaskSet tasks;
  PromptForge prompts;
  ScriptedGateway gateway;
  std::vector<EpisodeTrace> traces;

  Fixture()
      : tasks(replicate(load_tasks(kRoot / "tasks" / "mini7.json"), 8)),
        prompts(PromptForge::load(kRoot / "prompts")),
        gateway(load_script(kRoot / "oracles" / "mini7.json")) {
    RunConfig cfg;
    cfg.seed = 42;
    traces = run_bench_serial(tasks, gateway, prompts, cfg);
  }

  // The suite is small; copies with fresh ids give the scheduler something to do.
  static TaskSet replicate(TaskSet base, int copies) {
    TaskSet out = base;
    out.scenarios.clear();
    for (int c = 0; c < copies; ++c) {
      for (auto s : base.scenarios) {
        s.id += "#" + std::to_string(c);
        out.scenarios.push_back(std::move(s));
      }
    }
    return out;
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_RunSerial(benchmark::State& state) {
  auto& f = fixture();
  RunConfig cfg;
  cfg.seed = 42;
  for (auto _ : state) benchmark::DoNotOptimize(run_bench_serial(f.tasks, f.gateway, f.prompts, cfg));
}

void BM_RunParallel(benchmark::State& state) {
  auto& f = fixture();
  RunConfig cfg;
  cfg.seed = 42;
  cfg.parallelism = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_bench(f.tasks, f.gateway, f.prompts, cfg));
}

void BM_ScoreSerial(benchmark::State& state) {
  auto& f = fixture();
  const auto gt = ground_truth(f.tasks);
  for (auto _ : state) benchmark::DoNotOptimize(score_dataset_serial(f.traces, gt));
}

void BM_ScoreParallel(benchmark::State& state) {
  auto& f = fixture();
  const auto gt = ground_truth(f.tasks);
  for (auto _ : state) benchmark::DoNotOptimize(score_dataset(f.traces, gt));
}

}  // namespace

BENCHMARK(BM_RunSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ScoreParallel)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
