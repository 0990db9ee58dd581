#include "socratic/socratic_engine.hpp"

#include <algorithm>

namespace socratic {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Every exchange lands in the log before control returns to the caller,
// failed ones included.
Completion ask(Gateway& gw, std::string stage, const RenderedPrompt& prompt, const SceneSnapshot* scene,
               const DecodeParams& params, std::vector<ModelExchange>* log) {
  ModelExchange ex;
  ex.stage = std::move(stage);
  ex.template_name = std::string(to_string(prompt.name));
  ex.system_text = prompt.system_text;
  ex.user_text = user_message(prompt, scene);
  try {
    auto c = scene ? gw.complete_multimodal(prompt, *scene, params) : gw.complete(prompt, params);
    ex.reply = c.text;
    ex.provider_id = c.provider_id;
    ex.latency_ms = c.latency_ms;
    ex.tokens = c.tokens;
    if (log) log->push_back(std::move(ex));
    return c;
  } catch (const GatewayError& e) {
    ex.provider_id = gw.provider_id();
    ex.error = e.what();
    if (log) log->push_back(std::move(ex));
    throw;
  }
}

bool all_true(const std::vector<bool>& v) { return std::all_of(v.begin(), v.end(), [](bool b) { return b; }); }

}  // namespace

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "Success";
    case Outcome::BudgetExhausted: return "BudgetExhausted";
    case Outcome::PlanExhausted: return "PlanExhausted";
    case Outcome::Aborted: return "Aborted";
  }
  return "?";
}

std::optional<Outcome> outcome_from_string(std::string_view name) {
  for (auto o : {Outcome::Success, Outcome::BudgetExhausted, Outcome::PlanExhausted, Outcome::Aborted}) {
    if (to_string(o) == name) return o;
  }
  return std::nullopt;
}

EngineError::EngineError(EngineErrorKind kind, const std::string& detail)
    : Error((kind == EngineErrorKind::Config ? "ConfigError: " : "PlanningFailed: ") + detail), kind_(kind) {}

std::size_t resume_index(const Plan& revised, const std::vector<Subgoal>& completed, const WorldState& w) {
  std::size_t k = 0;
  auto from = completed.begin();
  while (k < revised.steps.size()) {
    auto hit = std::find(from, completed.end(), revised.steps[k]);
    if (hit == completed.end()) break;
    from = std::next(hit);
    ++k;
  }
  while (k < revised.steps.size() && subgoal_effect_holds(w, revised.steps[k])) ++k;
  return k;
}

SocraticPlanner::SocraticPlanner(Gateway& gateway, const PromptForge& prompts, EpisodeConfig config)
    : gateway_(gateway), prompts_(prompts), config_(std::move(config)) {
  if (config_.failure_budget == 0) throw EngineError(EngineErrorKind::Config, "failure budget must be positive");
  if (config_.noise_override && !(*config_.noise_override >= 0.0 && *config_.noise_override <= 1.0)) {
    throw EngineError(EngineErrorKind::Config, "noise override must lie in [0,1]");
  }
}

QATranscript SocraticPlanner::decompose(const Instruction& i, const DecodeParams& params,
                                        std::vector<ModelExchange>* log) const {
  if (!config_.decomposes()) throw EngineError(EngineErrorKind::Config, "decomposition is disabled");
  if (config_.use_cot) {
    const auto c = ask(gateway_, "decompose", prompts_.gen_cot_prompt(i), nullptr, params, log);
    const auto text = trim(c.text);
    if (text.empty()) {
      throw PromptError(PromptErrorKind::MalformedTranscript, "MalformedTranscript: empty step-by-step decomposition");
    }
    QATranscript qa;
    qa.chain_of_thought = true;
    qa.turns.push_back(
        {"How can you decompose the instruction: " + i.text + "? " + std::string(kCotMarker) + ".", std::string(text)});
    return qa;
  }
  const auto c = ask(gateway_, "decompose", prompts_.gen_std_prompt(i), nullptr, params, log);
  return parse_qa_transcript(c.text);
}

Plan SocraticPlanner::plan(const Instruction& i, const std::optional<QATranscript>& qa, const DecodeParams& params,
                           std::vector<ModelExchange>* log) const {
  if (qa.has_value() != config_.decomposes()) {
    throw EngineError(EngineErrorKind::Config, "a QA transcript is required exactly when decomposition is enabled");
  }
  RenderedPrompt prompt;
  if (!qa) {
    prompt = prompts_.gen_tp_no_std_prompt(i);
  } else if (qa->chain_of_thought) {
    prompt = prompts_.gen_tp_cot_prompt(i, *qa);
  } else {
    prompt = prompts_.gen_tp_prompt(i, *qa);
  }
  const auto c = ask(gateway_, "plan", prompt, nullptr, params, log);
  try {
    return parse_plan(c.text).plan;
  } catch (const PlanParseError& e) {
    throw EngineError(EngineErrorKind::PlanningFailed, e.what());
  }
}

RecoveryDecision SocraticPlanner::handle_failure(const Subgoal& sg, const SceneSnapshot& scene,
                                                 const ObservedObjects& observed, const Plan& current,
                                                 const Instruction& i, const DecodeParams& params,
                                                 std::vector<ModelExchange>* log) const {
  Validity validity;
  try {
    const auto v = ask(gateway_, "validity", prompts_.gen_validity_prompt(sg), &scene, params, log);
    validity = classify_validity(v.text);
  } catch (const GatewayError& e) {
    return recovery::Abort{std::string("GatewayError: ") + e.what(), std::nullopt, std::nullopt};
  }

  if (observed.contains(sg.object) && validity.verdict == Verdict::Valid) return recovery::Redo{validity};

  Feedback feedback;
  try {
    const auto f = ask(gateway_, "feedback", prompts_.gen_feedback_prompt(sg, validity), &scene, params, log);
    feedback.raw = std::string(trim(f.text));
    if (feedback.raw.empty()) feedback.raw = "No feedback was given.";
    const auto r = ask(gateway_, "replan", prompts_.gen_replan_prompt(feedback, current, observed.ids(), validity, i),
                       nullptr, params, log);
    auto revised = parse_plan(r.text).plan;
    return recovery::Replan{std::move(revised), std::move(feedback), std::move(validity)};
  } catch (const GatewayError& e) {
    return recovery::Abort{std::string("GatewayError: ") + e.what(), validity,
                           feedback.raw.empty() ? std::nullopt : std::optional<Feedback>(feedback)};
  } catch (const PlanParseError& e) {
    return recovery::Abort{std::string("ReplanUnparseable: ") + e.what(), validity, feedback};
  }
}

EpisodeTrace SocraticPlanner::run_episode(const Scenario& scenario) const {
  Scenario effective = scenario;
  if (config_.noise_override) effective.noise = *config_.noise_override;
  WorldState world = new_world(effective);
  const DecodeParams params = config_.decode.value_or(DecodeParams::for_vocabulary(world.vocabulary()));

  EpisodeTrace trace;
  trace.task_id = scenario.id;
  trace.task_type = scenario.task_type;
  trace.instruction = scenario.instruction.text;
  trace.config = ConfigEcho{config_.failure_budget, config_.replanning_enabled, config_.use_std, config_.use_cot,
                            effective.noise,        world.noise_seed,            params};

  auto finish = [&](Outcome outcome, std::string detail) {
    trace.goal_status = check_goal_conditions(world, scenario.goal);
    const auto met = static_cast<std::size_t>(std::count(trace.goal_status.begin(), trace.goal_status.end(), true));
    trace.gc = trace.goal_status.empty() ? 0.0 : static_cast<double>(met) / static_cast<double>(trace.goal_status.size());
    trace.sr = all_true(trace.goal_status) ? 1 : 0;
    trace.outcome = (trace.sr == 1 && outcome == Outcome::PlanExhausted) ? Outcome::Success : outcome;
    trace.outcome_detail = std::move(detail);
  };
  auto goals_met = [&] { return all_true(check_goal_conditions(world, scenario.goal)); };

  Plan plan;
  try {
    std::optional<QATranscript> qa;
    if (config_.decomposes()) {
      qa = decompose(scenario.instruction, params, &trace.exchanges);
      trace.qa = qa;
    }
    plan = this->plan(scenario.instruction, qa, params, &trace.exchanges);
  } catch (const Error& e) {
    finish(Outcome::Aborted, e.what());
    return trace;
  }
  trace.initial_plan = plan;

  if (goals_met()) {
    finish(Outcome::Success, "goal conditions already satisfied");
    return trace;
  }

  ObservedObjects observed;
  std::vector<Subgoal> completed;
  std::size_t idx = 0;
  while (true) {
    if (idx >= plan.steps.size()) {
      finish(Outcome::PlanExhausted, "plan exhausted");
      break;
    }
    const Subgoal sg = plan.steps[idx];
    auto result = apply_subgoal(world, sg);
    world = std::move(result.state_after);
    observed.add(detect_objects(world));

    StepRecord rec;
    rec.plan_index = idx;
    rec.subgoal = sg;
    rec.success = result.success;
    rec.reason = result.reason;
    rec.detail = std::move(result.detail);
    rec.scene = render_scene(world);
    rec.observed = observed.ids();

    if (result.success) {
      completed.push_back(sg);
      trace.steps.push_back(std::move(rec));
      ++idx;
      if (goals_met()) {
        finish(Outcome::Success, "all goal conditions satisfied");
        break;
      }
      continue;
    }

    ++trace.failure_count;
    if (trace.failure_count >= config_.failure_budget) {
      trace.steps.push_back(std::move(rec));
      finish(Outcome::BudgetExhausted, "failure budget of " + std::to_string(config_.failure_budget) + " reached");
      break;
    }
    if (!config_.replanning_enabled) {
      rec.decision = "skip";
      trace.steps.push_back(std::move(rec));
      ++idx;
      continue;
    }

    auto decision = handle_failure(sg, rec.scene, observed, plan, scenario.instruction, params, &trace.exchanges);
    if (auto* redo = std::get_if<recovery::Redo>(&decision)) {
      rec.validity = redo->validity;
      rec.decision = "redo";
      ++trace.redo_count;
      trace.steps.push_back(std::move(rec));
    } else if (auto* replan = std::get_if<recovery::Replan>(&decision)) {
      replan->plan.replanned_at = idx;
      const auto resume = resume_index(replan->plan, completed, world);
      rec.validity = replan->validity;
      rec.feedback = replan->feedback;
      rec.decision = "replan";
      rec.replan = replan->plan;
      rec.resume_at = resume;
      ++trace.replan_count;
      trace.steps.push_back(std::move(rec));
      plan = std::move(replan->plan);
      idx = resume;
    } else {
      auto& abort = std::get<recovery::Abort>(decision);
      rec.validity = abort.validity;
      rec.feedback = abort.feedback;
      rec.decision = "abort";
      trace.steps.push_back(std::move(rec));
      finish(Outcome::Aborted, abort.reason);
      break;
    }
  }
  return trace;
}

}  // namespace socratic
