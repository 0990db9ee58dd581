#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "socratic/bench_runner.hpp"
#include "socratic/socratic_engine.hpp"
#include "socratic/trace_io.hpp"

using namespace socratic;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = SOCRATIC_SOURCE_DIR;

const PromptForge& forge() {
  static const PromptForge f = PromptForge::load(kRoot / "prompts");
  return f;
}

Scenario scenario(const fs::path& file, std::string_view id) {
  const auto tasks = load_tasks(file);
  const auto* s = tasks.find(id);
  REQUIRE(s != nullptr);
  return *s;
}

Scenario bread() { return scenario(kRoot / "tasks/bread.json", "heat_bread"); }
Scenario desklamp() { return scenario(kRoot / "tasks/desklamp.json", "desklamp_light"); }
Scenario pan() { return scenario(fs::path(SOCRATIC_FIXTURES_DIR) / "pan_fridge.json", "pan_fridge"); }

ScriptedGateway oracle(const char* name) { return ScriptedGateway(load_script(kRoot / "oracles" / name)); }

ScriptEntry entry(std::vector<std::string> needles, std::string reply) {
  return ScriptEntry{MatcherKind::ContainsAll, "", std::move(needles), std::move(reply)};
}

// Pan scenario: the first plan forgets to open the fridge.
OracleScript pan_script(const std::string& validity) {
  OracleScript s;
  s.entries = {
      entry({"Reply with VALID or INVALID"}, validity),
      entry({"and failed. The subgoal was judged"}, "The fridge is closed. Open it first."),
      entry({"Revise the plan so that"}, "(Pickup, pan)\n(Open, fridge)\n(Put, pan, fridge)"),
      entry({"Let's think step by step"}, "Take the pan, open the fridge, put the pan inside."),
      entry({"Here are the things to discover"},
            "Q: Which sub-tasks are there?\nA: Moving the pan.\nQ: Which objects?\nA: The pan and the fridge."),
      entry({"Based on this"}, "(Pickup, pan)\n(Put, pan, fridge)"),
      entry({"Follow the template"}, "(Pickup, pan)\n(Put, pan, fridge)"),
  };
  return s;
}

std::size_t count_stage(const EpisodeTrace& t, std::string_view stage) {
  return static_cast<std::size_t>(
      std::count_if(t.exchanges.begin(), t.exchanges.end(), [&](const ModelExchange& e) { return e.stage == stage; }));
}

// Properties every trace must satisfy, whatever the outcome.
void check_trace_invariants(const EpisodeTrace& t) {
  CHECK(t.failure_count <= t.config.failure_budget);
  std::set<std::string> previous;
  std::size_t failures = 0, redos = 0, replans = 0;
  for (const auto& s : t.steps) {
    CHECK(std::includes(s.observed.begin(), s.observed.end(), previous.begin(), previous.end()));
    previous = s.observed;
    if (!s.success) ++failures;
    if (s.decision == "redo") {
      ++redos;
      REQUIRE(s.validity.has_value());
      CHECK(s.validity->verdict == Verdict::Valid);
      CHECK(s.observed.contains(s.subgoal.object));
    }
    if (s.decision == "replan") {
      ++replans;
      CHECK(s.replan.has_value());
      CHECK(s.resume_at.has_value());
    }
  }
  CHECK(failures == t.failure_count);
  CHECK(redos == t.redo_count);
  CHECK(replans == t.replan_count);
  CHECK(t.sr == (std::all_of(t.goal_status.begin(), t.goal_status.end(), [](bool b) { return b; }) ? 1 : 0));
}

}  // namespace

TEST_CASE("a clean run of the bread task succeeds without failures") {
  auto gw = oracle("mini7.json");
  const auto t = SocraticPlanner(gw, forge(), {}).run_episode(bread());
  CHECK(t.outcome == Outcome::Success);
  CHECK(t.sr == 1);
  CHECK(t.gc == doctest::Approx(1.0));
  CHECK(t.failure_count == 0);
  REQUIRE(t.qa.has_value());
  CHECK(t.qa->turns.size() >= 4);
  REQUIRE(t.exchanges.size() == 2);
  CHECK(t.exchanges[0].stage == "decompose");
  CHECK(t.exchanges[1].stage == "plan");
  CHECK(t.config.decode.temperature == 0.0);
  check_trace_invariants(t);
}

TEST_CASE("a forgotten fridge door is repaired by replanning") {
  auto gw = oracle("bread_fridge_recovery.json");
  const auto t = SocraticPlanner(gw, forge(), {}).run_episode(bread());
  CHECK(t.outcome == Outcome::Success);
  CHECK(t.failure_count == 1);
  CHECK(t.replan_count == 1);
  CHECK(t.redo_count == 0);
  const auto failed = std::find_if(t.steps.begin(), t.steps.end(), [](const StepRecord& s) { return !s.success; });
  REQUIRE(failed != t.steps.end());
  CHECK(failed->reason == FailureReason::ReceptacleClosed);
  CHECK(failed->subgoal == Subgoal{ActionKind::Put, "bread", "fridge"});
  REQUIRE(failed->replan.has_value());
  CHECK(failed->replan->replanned_at == failed->plan_index);
  REQUIRE(failed->resume_at.has_value());
  CHECK(failed->replan->steps.at(*failed->resume_at) == Subgoal{ActionKind::Open, "fridge", std::nullopt});
  CHECK(failed->validity->verdict == Verdict::Invalid);
  CHECK(failed->feedback->raw.find("Open the fridge") != std::string::npos);
  check_trace_invariants(t);
}

TEST_CASE("the static ablation skips failed subgoals and never consults the scene model") {
  auto gw = oracle("bread_fridge_recovery.json");
  EpisodeConfig cfg;
  cfg.replanning_enabled = false;
  const auto t = SocraticPlanner(gw, forge(), cfg).run_episode(bread());
  CHECK(t.outcome == Outcome::PlanExhausted);
  CHECK(t.sr == 0);
  CHECK(t.gc == doctest::Approx(2.0 / 3.0));
  CHECK(count_stage(t, "validity") == 0);
  CHECK(count_stage(t, "feedback") == 0);
  CHECK(count_stage(t, "replan") == 0);
  for (const auto& s : t.steps) {
    if (!s.success) CHECK(s.decision == "skip");
  }
  check_trace_invariants(t);
}

TEST_CASE("certain controller noise runs the failure budget out") {
  auto gw = oracle("mini7.json");
  EpisodeConfig cfg;
  cfg.noise_override = 1.0;
  const auto t = SocraticPlanner(gw, forge(), cfg).run_episode(bread());
  CHECK(t.outcome == Outcome::BudgetExhausted);
  CHECK(t.failure_count == kDefaultFailureBudget);
  CHECK(t.redo_count == kDefaultFailureBudget - 1);
  CHECK(t.sr == 0);
  check_trace_invariants(t);
}

TEST_CASE("a transient controller failure is redone") {
  auto s = bread();
  s.initial.noise_seed = episode_seed(5, s.id);
  auto gw = oracle("mini7.json");
  EpisodeConfig cfg;
  cfg.noise_override = 0.05;
  const auto t = SocraticPlanner(gw, forge(), cfg).run_episode(s);
  CHECK(t.outcome == Outcome::Success);
  CHECK(t.failure_count == 1);
  CHECK(t.redo_count == 1);
  CHECK(t.replan_count == 0);
  const auto failed = std::find_if(t.steps.begin(), t.steps.end(), [](const StepRecord& r) { return !r.success; });
  REQUIRE(failed != t.steps.end());
  CHECK(failed->reason == FailureReason::ControllerNoise);
  CHECK(std::next(failed)->subgoal == failed->subgoal);
  check_trace_invariants(t);
}

TEST_CASE("a heavy lamp is switched on in place after feedback") {
  auto gw = oracle("desklamp_replan.json");
  const auto t = SocraticPlanner(gw, forge(), {}).run_episode(desklamp());
  CHECK(t.outcome == Outcome::Success);
  CHECK(t.replan_count == 1);
  REQUIRE_FALSE(t.steps.empty());
  CHECK(t.steps.front().reason == FailureReason::ObjectTooHeavy);
  REQUIRE(t.steps.front().replan.has_value());
  const Subgoal lift{ActionKind::Pickup, "desklamp", std::nullopt};
  const auto& revised = t.steps.front().replan->steps;
  CHECK(std::find(revised.begin(), revised.end(), lift) == revised.end());
  CHECK(t.steps.back().subgoal == Subgoal{ActionKind::ToggleOn, "desklamp", std::nullopt});
  check_trace_invariants(t);
}

TEST_CASE("pan task: invalid verdict leads to a revised plan") {
  ScriptedGateway gw(pan_script("INVALID\nThe fridge is closed."));
  const auto t = SocraticPlanner(gw, forge(), {}).run_episode(pan());
  CHECK(t.outcome == Outcome::Success);
  CHECK(t.replan_count == 1);
  REQUIRE(t.steps.size() == 4);
  CHECK(t.steps[1].resume_at == std::optional<std::size_t>(1));
  CHECK(t.steps[2].subgoal == Subgoal{ActionKind::Open, "fridge", std::nullopt});
  check_trace_invariants(t);
}

TEST_CASE("pan task: a valid verdict on an observed object keeps redoing") {
  ScriptedGateway gw(pan_script("VALID"));
  EpisodeConfig cfg;
  cfg.failure_budget = 3;
  const auto t = SocraticPlanner(gw, forge(), cfg).run_episode(pan());
  CHECK(t.outcome == Outcome::BudgetExhausted);
  CHECK(t.failure_count == 3);
  CHECK(t.redo_count == 2);
  CHECK(t.replan_count == 0);
  CHECK(count_stage(t, "feedback") == 0);
  check_trace_invariants(t);
}

TEST_CASE("handle_failure redoes only observed objects judged valid") {
  ScriptedGateway gw(pan_script("VALID"));
  const SocraticPlanner planner(gw, forge(), {});
  const Subgoal put{ActionKind::Put, "pan", "fridge"};
  const SceneSnapshot scene{"Agent location: kitchen", {"pan", "fridge"}};
  Plan current;
  current.steps = {{ActionKind::Pickup, "pan", std::nullopt}, put};
  const auto instr = Instruction::from("Put the pan in the fridge.");

  ObservedObjects seen;
  seen.add({"pan", "fridge"});
  CHECK(std::holds_alternative<recovery::Redo>(planner.handle_failure(put, scene, seen, current, instr, {})));

  std::vector<ModelExchange> log;
  const auto unseen = planner.handle_failure(put, scene, ObservedObjects{}, current, instr, {}, &log);
  REQUIRE(std::holds_alternative<recovery::Replan>(unseen));
  CHECK(std::get<recovery::Replan>(unseen).plan.size() == 3);
  REQUIRE(log.size() == 3);
  CHECK(log[0].stage == "validity");
  CHECK(log[1].stage == "feedback");
  CHECK(log[2].stage == "replan");

  ScriptedGateway invalid(pan_script("I am not sure."));
  const SocraticPlanner cautious(invalid, forge(), {});
  CHECK(std::holds_alternative<recovery::Replan>(cautious.handle_failure(put, scene, seen, current, instr, {})));
}

TEST_CASE("handle_failure aborts on unusable replies") {
  OracleScript s;
  s.entries = {entry({"Reply with VALID or INVALID"}, "INVALID"),
               entry({"and failed. The subgoal was judged"}, "Open it."),
               entry({"Revise the plan so that"}, "I would rather not.")};
  ScriptedGateway gw(s);
  const SocraticPlanner planner(gw, forge(), {});
  const Subgoal put{ActionKind::Put, "pan", "fridge"};
  const auto d = planner.handle_failure(put, SceneSnapshot{}, ObservedObjects{}, Plan{{put}, std::nullopt},
                                        Instruction::from("x"), {});
  REQUIRE(std::holds_alternative<recovery::Abort>(d));
  CHECK(std::get<recovery::Abort>(d).reason.rfind("ReplanUnparseable", 0) == 0);

  ScriptedGateway empty{OracleScript{}};
  const SocraticPlanner blind(empty, forge(), {});
  const auto miss = blind.handle_failure(put, SceneSnapshot{}, ObservedObjects{}, Plan{{put}, std::nullopt},
                                         Instruction::from("x"), {});
  REQUIRE(std::holds_alternative<recovery::Abort>(miss));
  CHECK(std::get<recovery::Abort>(miss).reason.find("ScriptMiss") != std::string::npos);
}

TEST_CASE("a model that never answers aborts the episode") {
  ScriptedGateway gw{OracleScript{}};
  const auto t = SocraticPlanner(gw, forge(), {}).run_episode(pan());
  CHECK(t.outcome == Outcome::Aborted);
  CHECK(t.outcome_detail.find("ScriptMiss") != std::string::npos);
  REQUIRE(t.exchanges.size() == 1);
  CHECK(t.exchanges[0].error.has_value());
  CHECK(t.sr == 0);
}

TEST_CASE("decomposition variants") {
  ScriptedGateway gw(pan_script("INVALID"));

  EpisodeConfig no_std;
  no_std.use_std = false;
  const auto a = SocraticPlanner(gw, forge(), no_std).run_episode(pan());
  CHECK_FALSE(a.qa.has_value());
  REQUIRE_FALSE(a.exchanges.empty());
  CHECK(a.exchanges[0].stage == "plan");
  CHECK(a.exchanges[0].user_text.find("Q:") == std::string::npos);
  CHECK(a.outcome == Outcome::Success);

  EpisodeConfig cot;
  cot.use_cot = true;
  const auto b = SocraticPlanner(gw, forge(), cot).run_episode(pan());
  REQUIRE(b.qa.has_value());
  CHECK(b.qa->chain_of_thought);
  CHECK(b.exchanges[0].user_text.find("Let's think step by step") != std::string::npos);
  CHECK(b.exchanges[1].user_text.find(kDecompositionLead) != std::string::npos);
  CHECK(b.outcome == Outcome::Success);
}

TEST_CASE("plan() insists the transcript matches the configuration") {
  ScriptedGateway gw(pan_script("INVALID"));
  const auto instr = Instruction::from("Put the pan in the fridge.");
  const SocraticPlanner with_std(gw, forge(), {});
  CHECK_THROWS_AS(with_std.plan(instr, std::nullopt, {}), EngineError);
  EpisodeConfig off;
  off.use_std = false;
  const SocraticPlanner without(gw, forge(), off);
  CHECK(without.plan(instr, std::nullopt, {}).size() == 2);
}

TEST_CASE("invalid configurations are rejected up front") {
  ScriptedGateway gw{OracleScript{}};
  EpisodeConfig zero;
  zero.failure_budget = 0;
  CHECK_THROWS_AS(SocraticPlanner(gw, forge(), zero), EngineError);
  EpisodeConfig loud;
  loud.noise_override = 1.5;
  CHECK_THROWS_AS(SocraticPlanner(gw, forge(), loud), EngineError);
}

TEST_CASE("resume_index skips the replayed prefix and satisfied effects") {
  const auto s = pan();
  auto w = new_world(s);
  const Subgoal pick{ActionKind::Pickup, "pan", std::nullopt};
  const Subgoal open{ActionKind::Open, "fridge", std::nullopt};
  const Subgoal put{ActionKind::Put, "pan", "fridge"};
  const Plan revised{{pick, open, put}, std::nullopt};

  CHECK(resume_index(revised, {}, w) == 0);
  auto after = apply_subgoal(w, pick);
  REQUIRE(after.success);
  w = after.state_after;
  CHECK(resume_index(revised, {pick}, w) == 1);
  // Holding the pan already satisfies the Pickup even with no completed history.
  CHECK(resume_index(revised, {}, w) == 1);
  after = apply_subgoal(w, open);
  REQUIRE(after.success);
  CHECK(resume_index(revised, {pick}, after.state_after) == 2);
  CHECK(resume_index(Plan{{open, put}, std::nullopt}, {pick}, after.state_after) == 1);
}

TEST_CASE("traces survive a JSON round trip") {
  auto gw = oracle("bread_fridge_recovery.json");
  const auto t = SocraticPlanner(gw, forge(), {}).run_episode(bread());
  const auto back = trace_from_json(trace_to_json(t));
  CHECK(trace_to_line(back) == trace_to_line(t));
  CHECK(back.outcome == t.outcome);
  CHECK(back.steps.size() == t.steps.size());

  auto j = trace_to_json(t);
  j["schema_version"] = 99;
  CHECK_THROWS_AS(trace_from_json(j), TraceError);
}

TEST_CASE("episodes are deterministic") {
  auto gw = oracle("mini7.json");
  EpisodeConfig cfg;
  cfg.noise_override = 0.3;
  const SocraticPlanner planner(gw, forge(), cfg);
  CHECK(trace_to_line(planner.run_episode(bread())) == trace_to_line(planner.run_episode(bread())));
}
