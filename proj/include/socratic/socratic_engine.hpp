#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "socratic/error.hpp"
#include "socratic/model_gateway.hpp"
#include "socratic/plan_model.hpp"
#include "socratic/prompt_forge.hpp"
#include "socratic/scenario.hpp"
#include "socratic/world_sim.hpp"

namespace socratic {

inline constexpr std::size_t kDefaultFailureBudget = 10;
inline constexpr int kTraceSchemaVersion = 1;

struct EpisodeConfig {
  std::size_t failure_budget = kDefaultFailureBudget;
  bool replanning_enabled = true;  // false = static ablation
  bool use_std = true;
  bool use_cot = false;  // replaces the self-QA decomposition; use_std is then ignored
  std::optional<DecodeParams> decode;  // default: greedy + object-token bias for the scenario
  std::optional<double> noise_override;

  bool decomposes() const { return use_cot || use_std; }
};

/// Objects the detector has reported so far in an episode. Only grows.
class ObservedObjects {
 public:
  void add(const std::set<std::string>& ids) { ids_.insert(ids.begin(), ids.end()); }
  bool contains(const std::string& id) const { return ids_.contains(id); }
  const std::set<std::string>& ids() const { return ids_; }

 private:
  std::set<std::string> ids_;
};

namespace recovery {
struct Redo {
  Validity validity;
};
struct Replan {
  Plan plan;
  Feedback feedback;
  Validity validity;
};
struct Abort {
  std::string reason;
  std::optional<Validity> validity;
  std::optional<Feedback> feedback;
};
}  // namespace recovery

using RecoveryDecision = std::variant<recovery::Redo, recovery::Replan, recovery::Abort>;

/// One request/response with a model, as it went over the wire.
struct ModelExchange {
  std::string stage;  // decompose | plan | validity | feedback | replan
  std::string template_name;
  std::string system_text;
  std::string user_text;
  std::string reply;
  std::string provider_id;
  double latency_ms = 0.0;
  TokenCounts tokens;
  std::optional<std::string> error;
};

struct StepRecord {
  std::size_t plan_index = 0;
  Subgoal subgoal;
  bool success = false;
  FailureReason reason = FailureReason::Ok;
  std::string detail;
  SceneSnapshot scene;
  std::set<std::string> observed;
  std::optional<Validity> validity;
  std::optional<Feedback> feedback;
  std::optional<std::string> decision;  // redo | replan | abort | skip
  std::optional<Plan> replan;
  std::optional<std::size_t> resume_at;
};

enum class Outcome { Success, BudgetExhausted, PlanExhausted, Aborted };
std::string_view to_string(Outcome o);
std::optional<Outcome> outcome_from_string(std::string_view name);

struct ConfigEcho {
  std::size_t failure_budget = kDefaultFailureBudget;
  bool replanning_enabled = true;
  bool use_std = true;
  bool use_cot = false;
  double noise = 0.0;
  std::uint64_t noise_seed = 0;
  DecodeParams decode;
};

struct EpisodeTrace {
  int schema_version = kTraceSchemaVersion;
  std::string task_id;
  std::string task_type;
  std::string instruction;
  std::optional<QATranscript> qa;
  Plan initial_plan;
  std::vector<StepRecord> steps;
  std::vector<ModelExchange> exchanges;
  std::size_t failure_count = 0;
  std::size_t redo_count = 0;
  std::size_t replan_count = 0;
  Outcome outcome = Outcome::PlanExhausted;
  std::string outcome_detail;
  std::vector<bool> goal_status;
  int sr = 0;
  double gc = 0.0;
  ConfigEcho config;
};

enum class EngineErrorKind { Config, PlanningFailed };

class EngineError : public Error {
 public:
  EngineError(EngineErrorKind kind, const std::string& detail);
  EngineErrorKind kind() const { return kind_; }

 private:
  EngineErrorKind kind_;
};

/// Where to continue after a revision: skip the revised plan's prefix that
/// replays the already completed subgoals in order, then skip subgoals whose
/// effect already holds in `w`.
std::size_t resume_index(const Plan& revised, const std::vector<Subgoal>& completed, const WorldState& w);

/// Decompose, plan, execute, and recover from failures under a budget.
/// Holds references only; one planner may serve concurrent episodes as long
/// as the gateway is thread-safe.
class SocraticPlanner {
 public:
  SocraticPlanner(Gateway& gateway, const PromptForge& prompts, EpisodeConfig config);

  const EpisodeConfig& config() const { return config_; }

  /// Self-QA (or chain-of-thought) decomposition of the instruction.
  QATranscript decompose(const Instruction& i, const DecodeParams& params,
                         std::vector<ModelExchange>* log = nullptr) const;

  /// Task planner call. `qa` must be present exactly when decomposition is on.
  Plan plan(const Instruction& i, const std::optional<QATranscript>& qa, const DecodeParams& params,
            std::vector<ModelExchange>* log = nullptr) const;

  /// Redo when the object has been observed and the scene model calls the
  /// subgoal valid; otherwise ask for feedback and a revised plan.
  RecoveryDecision handle_failure(const Subgoal& sg, const SceneSnapshot& scene, const ObservedObjects& observed,
                                  const Plan& current, const Instruction& i, const DecodeParams& params,
                                  std::vector<ModelExchange>* log = nullptr) const;

  /// Never throws for model or execution failures; they end up in the trace.
  /// Throws EngineError(Config) or InvalidScenarioError before the loop.
  EpisodeTrace run_episode(const Scenario& scenario) const;

 private:
  Gateway& gateway_;
  const PromptForge& prompts_;
  EpisodeConfig config_;
};

}  // namespace socratic
