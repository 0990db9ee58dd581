#include "socratic/scenario.hpp"

#include <set>

namespace socratic {
namespace {

using nlohmann::json;

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
  return j.at(key);
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

InvalidScenarioError::InvalidScenarioError(const std::string& scenario_id, const std::string& detail)
    : Error("InvalidScenario(" + scenario_id + "): " + detail), id_(scenario_id), detail_(detail) {}

std::optional<std::string> check_scenario(const Scenario& s) {
  if (s.instruction.text.empty()) return "instruction is empty";
  if (!(s.noise >= 0.0 && s.noise <= 1.0)) return "noise must lie in [0,1]";
  if (auto bad = check_world_invariants(s.initial)) return bad;
  if (s.goal.conditions.empty()) return "goal has no conditions";
  for (const auto& c : s.goal.conditions) {
    for (const auto& id : referenced_objects(c)) {
      if (!s.initial.find(id)) return "goal " + describe(c) + " references unknown object '" + id + "'";
    }
  }
  try {
    validate_annotation(s.gt);
  } catch (const AnnotationError& e) {
    return std::string("gt: ") + e.what();
  }
  const auto vocab = s.initial.vocabulary();
  for (const auto& sg : s.gt.core) {
    if (auto missing = find_unknown_object(sg, vocab)) {
      return "gt subgoal " + render_subgoal(sg) + " references unknown object '" + *missing + "'";
    }
  }
  return std::nullopt;
}

WorldState new_world(const Scenario& s) {
  if (auto bad = check_scenario(s)) throw InvalidScenarioError(s.id, *bad);
  WorldState w = s.initial;
  w.step_count = 0;
  w.noise_probability = s.noise;
  return w;
}

ObjectEntity entity_from_json(const json& j) {
  ObjectEntity e;
  e.id = require(j, "id").get<std::string>();
  e.object_class = j.value("class", e.id);
  e.zone = require(j, "zone").get<std::string>();
  e.container = optional_string(j, "container");
  for (const auto& f : j.value("flags", json::array())) {
    const auto name = f.get<std::string>();
    bool* slot = object_flag_by_name(e.flags, name);
    if (!slot) throw std::invalid_argument("entity '" + e.id + "' has unknown flag '" + name + "'");
    *slot = true;
  }
  return e;
}

json entity_to_json(const ObjectEntity& e) {
  json j{{"id", e.id}, {"class", e.object_class}, {"zone", e.zone}};
  if (e.container) j["container"] = *e.container;
  json flags = json::array();
  for (auto name : object_flag_names()) {
    if (object_flag_value(e.flags, name)) flags.push_back(std::string(name));
  }
  j["flags"] = std::move(flags);
  return j;
}

GoalCondition goal_condition_from_json(const json& j) {
  const auto type = require(j, "type").get<std::string>();
  const auto object = require(j, "object").get<std::string>();
  if (type == "located") return goal::Located{object, require(j, "receptacle").get<std::string>()};
  if (type == "in_zone") return goal::InZone{object, require(j, "zone").get<std::string>()};
  if (type == "holding") return goal::Holding{object};
  if (type == "state") {
    const auto flag_name = require(j, "flag").get<std::string>();
    auto flag = state_flag_from_string(flag_name);
    if (!flag) throw std::invalid_argument("unknown state flag '" + flag_name + "'");
    return goal::State{object, *flag, j.value("value", true)};
  }
  throw std::invalid_argument("unknown goal type '" + type + "'");
}

json goal_condition_to_json(const GoalCondition& c) {
  return std::visit(
      [](const auto& g) -> json {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, goal::Located>) {
          return {{"type", "located"}, {"object", g.object}, {"receptacle", g.receptacle}};
        } else if constexpr (std::is_same_v<T, goal::InZone>) {
          return {{"type", "in_zone"}, {"object", g.object}, {"zone", g.zone}};
        } else if constexpr (std::is_same_v<T, goal::State>) {
          return {{"type", "state"}, {"object", g.object}, {"flag", std::string(to_string(g.flag))}, {"value", g.value}};
        } else {
          return {{"type", "holding"}, {"object", g.object}};
        }
      },
      c);
}

GtAnnotation gt_from_json(const json& j) {
  GtAnnotation gt;
  for (const auto& line : require(j, "core")) gt.core.push_back(parse_subgoal(line.get<std::string>()));
  const bool has_markup = (j.contains("floating") && !j.at("floating").empty()) ||
                          (j.contains("wildcards") && !j.at("wildcards").empty());
  if (has_markup) gt.markup.resize(gt.core.size());
  auto slot_index = [&](const json& v) {
    auto i = v.get<std::size_t>();
    if (i >= gt.core.size()) throw std::invalid_argument("gt slot index " + std::to_string(i) + " out of range");
    return i;
  };
  for (const auto& pair : j.value("floating", json::array())) {
    if (!pair.is_array() || pair.size() != 2) throw std::invalid_argument("gt floating entries are [slot, anchor]");
    gt.markup[slot_index(pair[0])].floating_after = slot_index(pair[1]);
  }
  for (const auto& w : j.value("wildcards", json::array())) gt.markup[slot_index(w)].wildcard_receptacle = true;
  for (const auto& group : j.value("swap_groups", json::array())) {
    SwapGroup g;
    for (const auto& range : group) {
      if (!range.is_array() || range.size() != 2) throw std::invalid_argument("gt swap blocks are [first, last]");
      g.blocks.push_back(BlockRange{range[0].get<std::size_t>(), range[1].get<std::size_t>()});
    }
    gt.swap_groups.push_back(std::move(g));
  }
  return gt;
}

json gt_to_json(const GtAnnotation& gt) {
  json core = json::array();
  for (const auto& sg : gt.core) core.push_back(render_subgoal(sg));
  json floating = json::array();
  json wildcards = json::array();
  for (std::size_t i = 0; i < gt.markup.size(); ++i) {
    if (gt.markup[i].floating_after) floating.push_back({i, *gt.markup[i].floating_after});
    if (gt.markup[i].wildcard_receptacle) wildcards.push_back(i);
  }
  json groups = json::array();
  for (const auto& g : gt.swap_groups) {
    json blocks = json::array();
    for (const auto& b : g.blocks) blocks.push_back({b.first, b.last});
    groups.push_back(std::move(blocks));
  }
  return {{"core", core}, {"floating", floating}, {"wildcards", wildcards}, {"swap_groups", groups}};
}

Scenario scenario_from_json(const json& j) {
  const std::string id = j.is_object() ? j.value("id", std::string("<unnamed>")) : std::string("<unnamed>");
  try {
    Scenario s;
    s.id = require(j, "id").get<std::string>();
    s.task_type = j.value("task_type", std::string("Unknown"));
    s.instruction = Instruction::from(require(j, "instruction").get<std::string>());
    s.noise = j.value("noise", 0.0);
    s.initial.agent_zone = require(j, "agent_zone").get<std::string>();
    s.initial.held = optional_string(j, "held");
    s.initial.noise_seed = j.value("seed", std::uint64_t{0});
    for (const auto& ej : require(j, "entities")) {
      auto e = entity_from_json(ej);
      if (s.initial.entities.contains(e.id)) throw std::invalid_argument("duplicate entity '" + e.id + "'");
      auto key = e.id;
      s.initial.entities.emplace(std::move(key), std::move(e));
    }
    for (const auto& gj : require(j, "goal")) s.goal.conditions.push_back(goal_condition_from_json(gj));
    if (j.contains("gt")) s.gt = gt_from_json(j.at("gt"));
    if (auto bad = check_scenario(s)) throw InvalidScenarioError(s.id, *bad);
    return s;
  } catch (const InvalidScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw InvalidScenarioError(id, e.what());
  }
}

json scenario_to_json(const Scenario& s) {
  json entities = json::array();
  for (const auto& [id, e] : s.initial.entities) entities.push_back(entity_to_json(e));
  json goal = json::array();
  for (const auto& c : s.goal.conditions) goal.push_back(goal_condition_to_json(c));
  json j{{"id", s.id},
         {"task_type", s.task_type},
         {"instruction", s.instruction.text},
         {"agent_zone", s.initial.agent_zone},
         {"seed", s.initial.noise_seed},
         {"noise", s.noise},
         {"entities", entities},
         {"goal", goal},
         {"gt", gt_to_json(s.gt)}};
  if (s.initial.held) j["held"] = *s.initial.held;
  return j;
}

}  // namespace socratic
