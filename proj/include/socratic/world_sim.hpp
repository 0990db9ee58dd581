#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "socratic/error.hpp"
#include "socratic/plan_model.hpp"

namespace socratic {

// Mutable object state that goal predicates can test.
enum class StateFlag { IsOpen, IsOn, IsSliced, IsHeated, IsChilled, IsClean };

std::string_view to_string(StateFlag flag);
std::optional<StateFlag> state_flag_from_string(std::string_view name);

struct ObjectFlags {
  bool pickupable = false;
  bool openable = false;
  bool is_open = false;
  bool toggleable = false;
  bool is_on = false;
  bool sliceable = false;
  bool is_sliced = false;
  bool heatable = false;
  bool is_heated = false;
  bool coolable = false;
  bool is_chilled = false;
  bool cleanable = false;
  bool is_clean = false;
  bool is_receptacle = false;
  bool heavy = false;

  bool get(StateFlag flag) const;
  void set(StateFlag flag, bool value);

  // Every state flag implies its capability flag.
  bool consistent() const;

  friend bool operator==(const ObjectFlags&, const ObjectFlags&) = default;
};

/// Names usable in scenario files, e.g. "pickupable", "is_open", "heavy".
const std::vector<std::string_view>& object_flag_names();
bool* object_flag_by_name(ObjectFlags& flags, std::string_view name);
bool object_flag_value(const ObjectFlags& flags, std::string_view name);

// Class tokens with built-in appliance behaviour.
namespace object_class {
inline constexpr std::string_view kKnife = "knife";
inline constexpr std::string_view kMicrowave = "microwave";
inline constexpr std::string_view kFridge = "fridge";
inline constexpr std::string_view kSink = "sink";
inline constexpr std::string_view kFaucet = "faucet";
}  // namespace object_class

struct ObjectEntity {
  std::string id;
  std::string object_class;
  std::string zone;
  std::optional<std::string> container;
  ObjectFlags flags;

  friend bool operator==(const ObjectEntity&, const ObjectEntity&) = default;
};

using EntityMap = std::map<std::string, ObjectEntity, std::less<>>;

struct WorldState {
  EntityMap entities;
  std::string agent_zone;
  std::optional<std::string> held;
  std::uint64_t step_count = 0;
  std::uint64_t noise_seed = 0;
  double noise_probability = 0.0;

  const ObjectEntity* find(std::string_view id) const;
  ObjectVocabulary vocabulary() const;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

/// Structural checks: flag implications, container targets are receptacles,
/// held object is uncontained and in the agent's zone. Returns the first
/// violation, empty when the state is well formed.
std::optional<std::string> check_world_invariants(const WorldState& w);

namespace goal {
struct Located {
  std::string object;
  std::string receptacle;
  friend bool operator==(const Located&, const Located&) = default;
};
struct InZone {
  std::string object;
  std::string zone;
  friend bool operator==(const InZone&, const InZone&) = default;
};
struct State {
  std::string object;
  StateFlag flag = StateFlag::IsOpen;
  bool value = true;
  friend bool operator==(const State&, const State&) = default;
};
struct Holding {
  std::string object;
  friend bool operator==(const Holding&, const Holding&) = default;
};
}  // namespace goal

using GoalCondition = std::variant<goal::Located, goal::InZone, goal::State, goal::Holding>;

struct GoalSpec {
  std::vector<GoalCondition> conditions;
};

/// Object ids a condition refers to (receptacles included).
std::vector<std::string> referenced_objects(const GoalCondition& c);
std::string describe(const GoalCondition& c);

enum class FailureReason {
  Ok,
  PreconditionViolated,
  TargetNotVisible,
  HandOccupied,
  HandEmpty,
  ReceptacleClosed,
  ObjectTooHeavy,
  ControllerNoise,
};

std::string_view to_string(FailureReason reason);
std::optional<FailureReason> failure_reason_from_string(std::string_view name);

struct ExecutionResult {
  bool success = false;
  FailureReason reason = FailureReason::Ok;
  std::string detail;
  WorldState state_after;
};

struct SceneSnapshot {
  std::string description;
  std::set<std::string> visible_ids;
};

/// Controller step. Never throws on a well-formed subgoal: unknown objects
/// come back as TargetNotVisible. A failed step changes only step_count.
ExecutionResult apply_subgoal(const WorldState& w, const Subgoal& sg);

/// Entities in the agent's zone not enclosed by a closed container, plus
/// whatever the agent holds.
std::set<std::string> detect_objects(const WorldState& w);

SceneSnapshot render_scene(const WorldState& w);

std::vector<bool> check_goal_conditions(const WorldState& w, const GoalSpec& g);

/// Whether the world already reflects the effect `sg` would produce.
bool subgoal_effect_holds(const WorldState& w, const Subgoal& sg);

/// Uniform [0,1) draw keyed by (seed, step). Same inputs, same value.
double noise_draw(std::uint64_t seed, std::uint64_t step);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace socratic
