#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "socratic/error.hpp"
#include "socratic/plan_eval.hpp"
#include "socratic/plan_model.hpp"
#include "socratic/world_sim.hpp"

namespace socratic {

/// One benchmark task: starting world, instruction, goal and annotated
/// ground-truth plan.
struct Scenario {
  std::string id;
  std::string task_type;
  WorldState initial;
  Instruction instruction;
  GoalSpec goal;
  GtAnnotation gt;
  double noise = 0.0;  // per-step controller failure probability
};

class InvalidScenarioError : public Error {
 public:
  InvalidScenarioError(const std::string& scenario_id, const std::string& detail);
  const std::string& scenario_id() const { return id_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string id_;
  std::string detail_;
};

/// First violated scenario invariant, if any.
std::optional<std::string> check_scenario(const Scenario& s);

/// Fresh episode world: a copy of the initial state with step_count reset and
/// the scenario's noise probability installed.
WorldState new_world(const Scenario& s);

// JSON mapping. Field reference lives in the README.
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
GtAnnotation gt_from_json(const nlohmann::json& j);
nlohmann::json gt_to_json(const GtAnnotation& gt);
GoalCondition goal_condition_from_json(const nlohmann::json& j);
nlohmann::json goal_condition_to_json(const GoalCondition& c);
ObjectEntity entity_from_json(const nlohmann::json& j);
nlohmann::json entity_to_json(const ObjectEntity& e);

}  // namespace socratic
