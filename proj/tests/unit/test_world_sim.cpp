#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "socratic/scenario.hpp"
#include "socratic/world_sim.hpp"

using namespace socratic;

namespace {

Subgoal sg(ActionKind a, std::string obj, std::optional<std::string> rec = std::nullopt) {
  return Subgoal{a, std::move(obj), std::move(rec)};
}

ObjectEntity entity(std::string id, std::string zone, std::optional<std::string> container,
                    std::initializer_list<std::string_view> flags, std::string cls = "") {
  ObjectEntity e;
  e.id = id;
  e.object_class = cls.empty() ? id : cls;
  e.zone = std::move(zone);
  e.container = std::move(container);
  for (auto f : flags) *object_flag_by_name(e.flags, f) = true;
  return e;
}

void add(WorldState& w, ObjectEntity e) {
  auto key = e.id;
  w.entities.emplace(std::move(key), std::move(e));
}

WorldState kitchen() {
  WorldState w;
  w.agent_zone = "kitchen";
  add(w, entity("countertop", "kitchen", std::nullopt, {"is_receptacle"}));
  add(w, entity("knife", "kitchen", "countertop", {"pickupable"}));
  add(w, entity("bread", "kitchen", "countertop", {"pickupable", "sliceable", "heatable", "coolable"}));
  add(w, entity("pan", "kitchen", "countertop", {"pickupable", "is_receptacle"}));
  add(w, entity("microwave", "kitchen", std::nullopt, {"openable", "toggleable", "is_receptacle"}));
  add(w, entity("fridge", "kitchen", std::nullopt, {"openable", "is_receptacle"}));
  add(w, entity("sink", "kitchen", std::nullopt, {"is_receptacle"}));
  add(w, entity("faucet", "kitchen", std::nullopt, {"toggleable"}));
  add(w, entity("ladle", "kitchen", "countertop", {"pickupable", "cleanable"}));
  add(w, entity("desklamp", "bedroom", std::nullopt, {"pickupable", "toggleable", "heavy"}));
  add(w, entity("bed", "bedroom", std::nullopt, {"is_receptacle"}));
  return w;
}

// Steps a world forward; the test fails if a step does not succeed.
WorldState run(WorldState w, std::initializer_list<Subgoal> steps) {
  for (const auto& s : steps) {
    auto r = apply_subgoal(w, s);
    REQUIRE_MESSAGE(r.success, render_subgoal(s) << " failed: " << r.detail);
    w = std::move(r.state_after);
  }
  return w;
}

// Independent visibility rule: the held object, or same zone with every
// enclosing container open or not openable.
bool oracle_visible(const WorldState& w, const std::string& id) {
  if (w.held && *w.held == id) return true;
  const auto* e = w.find(id);
  if (e->zone != w.agent_zone) return false;
  for (auto c = e->container; c; c = w.find(*c)->container) {
    const auto* parent = w.find(*c);
    if (parent->flags.openable && !parent->flags.is_open) return false;
  }
  return true;
}

std::set<std::string> ids_in_description(const std::string& d) {
  std::set<std::string> ids;
  std::istringstream in(d);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("- ", 0) != 0) continue;
    auto name = line.substr(2);
    name = name.substr(0, name.find(' '));
    ids.insert(name);
  }
  return ids;
}

WorldState random_world(std::mt19937_64& rng) {
  static const char* kZones[] = {"kitchen", "bedroom", "bathroom"};
  std::uniform_int_distribution<int> count(2, 9);
  std::uniform_int_distribution<int> zone(0, 2);
  std::bernoulli_distribution coin(0.5);
  WorldState w;
  w.agent_zone = kZones[zone(rng)];
  const int n = count(rng);
  std::vector<std::string> receptacles;
  for (int i = 0; i < n; ++i) {
    ObjectEntity e;
    e.id = "obj" + std::to_string(i);
    e.object_class = coin(rng) && coin(rng) ? "knife" : e.id;
    e.zone = kZones[zone(rng)];
    e.flags.pickupable = coin(rng);
    e.flags.openable = coin(rng);
    e.flags.is_open = e.flags.openable && coin(rng);
    e.flags.toggleable = coin(rng);
    e.flags.is_on = e.flags.toggleable && coin(rng);
    e.flags.sliceable = coin(rng);
    e.flags.is_receptacle = coin(rng);
    e.flags.heavy = coin(rng) && coin(rng);
    if (!receptacles.empty() && coin(rng)) {
      std::uniform_int_distribution<std::size_t> pick(0, receptacles.size() - 1);
      e.container = receptacles[pick(rng)];
      e.zone = w.find(*e.container)->zone;
    }
    if (e.flags.is_receptacle) receptacles.push_back(e.id);
    add(w, std::move(e));
  }
  return w;
}

Subgoal random_subgoal(std::mt19937_64& rng, const WorldState& w) {
  std::vector<std::string> ids;
  for (const auto& [id, e] : w.entities) ids.push_back(id);
  ids.push_back("ghost");
  std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
  std::uniform_int_distribution<std::size_t> action(0, std::size(kAllActions) - 1);
  Subgoal s{kAllActions[action(rng)], ids[pick(rng)], std::nullopt};
  if (s.action == ActionKind::Put) s.receptacle = ids[pick(rng)];
  return s;
}

}  // namespace

TEST_CASE("bread task loads into a fresh world") {
  std::ifstream in(std::string(SOCRATIC_SOURCE_DIR) + "/tasks/bread.json");
  REQUIRE(in);
  const auto s = scenario_from_json(nlohmann::json::parse(in).at("scenarios").at(0));
  const auto w = new_world(s);
  CHECK(w.step_count == 0);
  const auto* bread = w.find("bread");
  REQUIRE(bread);
  CHECK_FALSE(bread->flags.is_sliced);
  CHECK_FALSE(bread->flags.is_heated);
  CHECK(w.find("knife"));
  CHECK_FALSE(w.find("microwave")->flags.is_open);
  CHECK_FALSE(w.find("fridge")->flags.is_open);
  CHECK_FALSE(check_world_invariants(w).has_value());

  auto state = w;
  for (const auto& step : s.gt.core) {
    auto r = apply_subgoal(state, step);
    REQUIRE_MESSAGE(r.success, render_subgoal(step) << ": " << r.detail);
    state = std::move(r.state_after);
  }
  for (bool b : check_goal_conditions(state, s.goal)) CHECK(b);
  for (bool b : check_goal_conditions(w, s.goal)) CHECK_FALSE(b);
}

TEST_CASE("invalid scenarios are rejected") {
  Scenario s;
  s.id = "bad";
  s.instruction = Instruction::from("do something");
  s.initial = kitchen();
  s.goal.conditions.push_back(goal::Located{"unicorn", "fridge"});
  CHECK_THROWS_AS(new_world(s), InvalidScenarioError);

  Scenario empty;
  empty.id = "empty";
  empty.instruction = Instruction::from("nothing");
  CHECK_THROWS_AS(new_world(empty), InvalidScenarioError);

  Scenario noisy = s;
  noisy.goal.conditions = {goal::Located{"pan", "fridge"}};
  noisy.noise = 1.5;
  CHECK_THROWS_AS(new_world(noisy), InvalidScenarioError);
}

TEST_CASE("closed receptacles reject Put") {
  auto w = run(kitchen(), {sg(ActionKind::Pickup, "pan")});
  const auto r = apply_subgoal(w, sg(ActionKind::Put, "pan", "fridge"));
  CHECK_FALSE(r.success);
  CHECK(r.reason == FailureReason::ReceptacleClosed);
}

TEST_CASE("one hand only") {
  auto w = run(kitchen(), {sg(ActionKind::Pickup, "knife")});
  const auto r = apply_subgoal(w, sg(ActionKind::Pickup, "bread"));
  CHECK(r.reason == FailureReason::HandOccupied);
  CHECK(r.state_after.held == std::optional<std::string>("knife"));
}

TEST_CASE("heavy objects cannot be lifted but can be switched on") {
  auto w = run(kitchen(), {sg(ActionKind::Navigate, "desklamp")});
  CHECK(w.agent_zone == "bedroom");
  CHECK(apply_subgoal(w, sg(ActionKind::Pickup, "desklamp")).reason == FailureReason::ObjectTooHeavy);
  w = run(w, {sg(ActionKind::ToggleOn, "desklamp")});
  CHECK(w.find("desklamp")->flags.is_on);
}

TEST_CASE("open then put places the pan in the fridge") {
  const auto w = run(kitchen(), {sg(ActionKind::Pickup, "pan"), sg(ActionKind::Open, "fridge"),
                                 sg(ActionKind::Put, "pan", "fridge")});
  CHECK(w.find("pan")->container == std::optional<std::string>("fridge"));
  CHECK_FALSE(w.held.has_value());
}

TEST_CASE("other failure reasons") {
  const auto w = kitchen();
  CHECK(apply_subgoal(w, sg(ActionKind::Put, "pan", "fridge")).reason == FailureReason::HandEmpty);
  CHECK(apply_subgoal(w, sg(ActionKind::Pickup, "unicorn")).reason == FailureReason::TargetNotVisible);
  CHECK(apply_subgoal(w, sg(ActionKind::Pickup, "bed")).reason == FailureReason::TargetNotVisible);
  CHECK(apply_subgoal(w, sg(ActionKind::Slice, "bread")).reason == FailureReason::PreconditionViolated);
  CHECK(apply_subgoal(w, sg(ActionKind::Close, "fridge")).reason == FailureReason::PreconditionViolated);
  CHECK(apply_subgoal(w, sg(ActionKind::Open, "countertop")).reason == FailureReason::PreconditionViolated);
  CHECK(apply_subgoal(w, sg(ActionKind::ToggleOff, "faucet")).reason == FailureReason::PreconditionViolated);
  const auto holding_knife = run(w, {sg(ActionKind::Pickup, "knife")});
  CHECK(apply_subgoal(holding_knife, sg(ActionKind::Put, "bread", "sink")).reason ==
        FailureReason::PreconditionViolated);
  CHECK(apply_subgoal(holding_knife, sg(ActionKind::Put, "knife", "knife")).reason ==
        FailureReason::PreconditionViolated);
}

TEST_CASE("appliances apply their effect at the enabling step") {
  auto w = run(kitchen(), {sg(ActionKind::Pickup, "knife"), sg(ActionKind::Slice, "bread"),
                           sg(ActionKind::Put, "knife", "countertop"), sg(ActionKind::Pickup, "bread"),
                           sg(ActionKind::Open, "microwave"), sg(ActionKind::Put, "bread", "microwave"),
                           sg(ActionKind::Close, "microwave")});
  CHECK(w.find("bread")->flags.is_sliced);
  CHECK_FALSE(w.find("bread")->flags.is_heated);
  w = run(w, {sg(ActionKind::ToggleOn, "microwave")});
  CHECK(w.find("bread")->flags.is_heated);

  w = run(w, {sg(ActionKind::Open, "microwave"), sg(ActionKind::Pickup, "bread"), sg(ActionKind::Open, "fridge"),
              sg(ActionKind::Put, "bread", "fridge")});
  CHECK_FALSE(w.find("bread")->flags.is_chilled);
  w = run(w, {sg(ActionKind::Close, "fridge")});
  CHECK(w.find("bread")->flags.is_chilled);

  w = run(w, {sg(ActionKind::Pickup, "ladle"), sg(ActionKind::Put, "ladle", "sink")});
  CHECK_FALSE(w.find("ladle")->flags.is_clean);
  w = run(w, {sg(ActionKind::ToggleOn, "faucet")});
  CHECK(w.find("ladle")->flags.is_clean);
}

TEST_CASE("detector follows zone and container visibility") {
  auto w = run(kitchen(), {sg(ActionKind::Pickup, "pan"), sg(ActionKind::Open, "fridge"),
                           sg(ActionKind::Put, "pan", "fridge"), sg(ActionKind::Close, "fridge")});
  auto seen = detect_objects(w);
  CHECK_FALSE(seen.contains("pan"));
  CHECK(seen.contains("fridge"));
  CHECK_FALSE(seen.contains("desklamp"));

  w = run(w, {sg(ActionKind::Pickup, "knife")});
  CHECK(detect_objects(w).contains("knife"));

  w = run(w, {sg(ActionKind::Navigate, "bed")});
  seen = detect_objects(w);
  CHECK_FALSE(seen.contains("bread"));
  CHECK(seen.contains("knife"));
  CHECK(w.find("knife")->zone == "bedroom");
}

TEST_CASE("scene rendering matches the golden file") {
  WorldState w;
  w.agent_zone = "kitchen";
  add(w, entity("microwave", "kitchen", std::nullopt, {"openable", "is_open", "toggleable", "is_receptacle"}));
  add(w, entity("bread", "kitchen", "microwave", {"pickupable"}));
  add(w, entity("fridge", "bedroom", std::nullopt, {"openable", "is_receptacle"}));
  const auto snap = render_scene(w);

  std::ifstream in(std::string(SOCRATIC_FIXTURES_DIR) + "/scene_open_microwave.txt");
  REQUIRE(in);
  std::stringstream golden;
  golden << in.rdbuf();
  CHECK(snap.description == golden.str());
  CHECK(snap.description.find("microwave (open)") != std::string::npos);
  CHECK(snap.description.find("bread (in microwave)") != std::string::npos);
  CHECK(snap.visible_ids == std::set<std::string>{"bread", "microwave"});
}

TEST_CASE("empty zone renders as nothing visible") {
  WorldState w;
  w.agent_zone = "garage";
  add(w, entity("bed", "bedroom", std::nullopt, {"is_receptacle"}));
  const auto snap = render_scene(w);
  CHECK(snap.visible_ids.empty());
  CHECK(snap.description.find("Visible objects: none") != std::string::npos);
}

TEST_CASE("negated state goals") {
  const auto w = kitchen();
  GoalSpec g;
  g.conditions = {goal::State{"bread", StateFlag::IsHeated, false}, goal::State{"bread", StateFlag::IsHeated, true},
                  goal::InZone{"bread", "kitchen"}, goal::Holding{"bread"}};
  CHECK(check_goal_conditions(w, g) == std::vector<bool>{true, false, true, false});
}

TEST_CASE("visibility and scene agree with an independent rule on random worlds") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 500; ++i) {
    const auto w = random_world(rng);
    REQUIRE_FALSE(check_world_invariants(w).has_value());
    std::set<std::string> expected;
    for (const auto& [id, e] : w.entities) {
      if (oracle_visible(w, id)) expected.insert(id);
    }
    const auto snap = render_scene(w);
    CHECK(detect_objects(w) == expected);
    CHECK(snap.visible_ids == expected);
    CHECK(ids_in_description(snap.description) == expected);
  }
}

TEST_CASE("random subgoal sequences keep the world consistent") {
  std::mt19937_64 rng(7);
  for (int world = 0; world < 200; ++world) {
    auto w = random_world(rng);
    for (int step = 0; step < 30; ++step) {
      const auto s = random_subgoal(rng, w);
      const auto r = apply_subgoal(w, s);
      CHECK(r.success == (r.reason == FailureReason::Ok));
      CHECK(r.reason != FailureReason::ControllerNoise);
      CHECK(r.state_after.step_count == w.step_count + 1);
      const auto again = apply_subgoal(w, s);
      CHECK(again.state_after == r.state_after);
      CHECK(again.reason == r.reason);
      if (!r.success) {
        auto expected = w;
        ++expected.step_count;
        CHECK(r.state_after == expected);
      }
      const auto problem = check_world_invariants(r.state_after);
      CHECK_MESSAGE(!problem.has_value(), *problem);
      std::size_t in_hand = 0;
      for (const auto& [id, e] : r.state_after.entities) {
        if (r.state_after.held && *r.state_after.held == id) ++in_hand;
      }
      CHECK(in_hand <= 1);
      w = r.state_after;
    }
  }
}

TEST_CASE("controller noise is seeded and step-keyed") {
  auto w = kitchen();
  w.noise_seed = 5;
  w.noise_probability = 1.0;
  const auto r = apply_subgoal(w, sg(ActionKind::Pickup, "knife"));
  CHECK(r.reason == FailureReason::ControllerNoise);
  CHECK_FALSE(r.state_after.held.has_value());

  w.noise_probability = 0.5;
  int failures = 0;
  for (std::uint64_t step = 0; step < 2000; ++step) {
    w.step_count = step;
    const auto a = apply_subgoal(w, sg(ActionKind::Navigate, "bed"));
    const auto b = apply_subgoal(w, sg(ActionKind::Navigate, "bed"));
    CHECK(a.reason == b.reason);
    const bool expected = noise_draw(5, step) < 0.5;
    CHECK((a.reason == FailureReason::ControllerNoise) == expected);
    failures += expected ? 1 : 0;
  }
  CHECK(failures > 900);
  CHECK(failures < 1100);
}

TEST_CASE("noise draws lie in the unit interval") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const double d = noise_draw(s, s * 3);
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
  }
}

TEST_CASE("scenario JSON round-trips") {
  std::ifstream in(std::string(SOCRATIC_SOURCE_DIR) + "/tasks/mini7.json");
  REQUIRE(in);
  for (const auto& sj : nlohmann::json::parse(in).at("scenarios")) {
    const auto s = scenario_from_json(sj);
    const auto back = scenario_from_json(scenario_to_json(s));
    CHECK(back.id == s.id);
    CHECK(back.initial == s.initial);
    CHECK(back.gt.core == s.gt.core);
    CHECK(scenario_to_json(back) == scenario_to_json(s));
  }
}
