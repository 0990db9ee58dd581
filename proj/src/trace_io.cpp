#include "socratic/trace_io.hpp"

#include <fstream>

namespace socratic {
namespace {

using nlohmann::json;

[[noreturn]] void malformed(const std::string& detail) { throw TraceError(TraceErrorKind::Malformed, detail); }

json plan_to_json(const Plan& p) {
  json steps = json::array();
  for (const auto& sg : p.steps) steps.push_back(render_subgoal(sg));
  json j{{"steps", steps}};
  if (p.replanned_at) j["replanned_at"] = *p.replanned_at;
  return j;
}

Plan plan_from_json(const json& j) {
  Plan p;
  for (const auto& s : j.at("steps")) p.steps.push_back(parse_subgoal(s.get<std::string>()));
  if (j.contains("replanned_at")) p.replanned_at = j.at("replanned_at").get<std::size_t>();
  return p;
}

json decode_to_json(const DecodeParams& d) {
  return {{"temperature", d.temperature}, {"logit_bias", d.token_bias}, {"max_tokens", d.max_tokens}};
}

DecodeParams decode_from_json(const json& j) {
  DecodeParams d;
  d.temperature = j.at("temperature").get<double>();
  d.token_bias = j.at("logit_bias").get<std::map<std::string, double>>();
  d.max_tokens = j.at("max_tokens").get<int>();
  return d;
}

json validity_to_json(const Validity& v) { return {{"verdict", std::string(to_string(v.verdict))}, {"raw", v.raw}}; }

Validity validity_from_json(const json& j) {
  Validity v;
  const auto name = j.at("verdict").get<std::string>();
  if (name == "VALID") {
    v.verdict = Verdict::Valid;
  } else if (name == "INVALID") {
    v.verdict = Verdict::Invalid;
  } else {
    malformed("unknown verdict '" + name + "'");
  }
  v.raw = j.at("raw").get<std::string>();
  return v;
}

json qa_to_json(const QATranscript& qa) {
  json turns = json::array();
  for (const auto& t : qa.turns) turns.push_back({{"q", t.question}, {"a", t.answer}});
  return {{"turns", turns}, {"chain_of_thought", qa.chain_of_thought}};
}

QATranscript qa_from_json(const json& j) {
  QATranscript qa;
  for (const auto& t : j.at("turns")) qa.turns.push_back({t.at("q").get<std::string>(), t.at("a").get<std::string>()});
  qa.chain_of_thought = j.at("chain_of_thought").get<bool>();
  return qa;
}

json step_to_json(const StepRecord& s) {
  json j{{"plan_index", s.plan_index},
         {"subgoal", render_subgoal(s.subgoal)},
         {"success", s.success},
         {"reason", std::string(to_string(s.reason))},
         {"detail", s.detail},
         {"scene", s.scene.description},
         {"visible", s.scene.visible_ids},
         {"observed", s.observed}};
  if (s.validity) j["validity"] = validity_to_json(*s.validity);
  if (s.feedback) j["feedback"] = s.feedback->raw;
  if (s.decision) j["decision"] = *s.decision;
  if (s.replan) j["replan"] = plan_to_json(*s.replan);
  if (s.resume_at) j["resume_at"] = *s.resume_at;
  return j;
}

StepRecord step_from_json(const json& j) {
  StepRecord s;
  s.plan_index = j.at("plan_index").get<std::size_t>();
  s.subgoal = parse_subgoal(j.at("subgoal").get<std::string>());
  s.success = j.at("success").get<bool>();
  const auto reason = j.at("reason").get<std::string>();
  auto r = failure_reason_from_string(reason);
  if (!r) malformed("unknown failure reason '" + reason + "'");
  s.reason = *r;
  s.detail = j.at("detail").get<std::string>();
  s.scene.description = j.at("scene").get<std::string>();
  s.scene.visible_ids = j.at("visible").get<std::set<std::string>>();
  s.observed = j.at("observed").get<std::set<std::string>>();
  if (j.contains("validity")) s.validity = validity_from_json(j.at("validity"));
  if (j.contains("feedback")) s.feedback = Feedback{j.at("feedback").get<std::string>()};
  if (j.contains("decision")) s.decision = j.at("decision").get<std::string>();
  if (j.contains("replan")) s.replan = plan_from_json(j.at("replan"));
  if (j.contains("resume_at")) s.resume_at = j.at("resume_at").get<std::size_t>();
  return s;
}

json exchange_to_json(const ModelExchange& e) {
  json j{{"stage", e.stage},
         {"template", e.template_name},
         {"system", e.system_text},
         {"user", e.user_text},
         {"reply", e.reply},
         {"provider", e.provider_id},
         {"latency_ms", e.latency_ms},
         {"prompt_tokens", e.tokens.prompt},
         {"completion_tokens", e.tokens.completion}};
  if (e.error) j["error"] = *e.error;
  return j;
}

ModelExchange exchange_from_json(const json& j) {
  ModelExchange e;
  e.stage = j.at("stage").get<std::string>();
  e.template_name = j.at("template").get<std::string>();
  e.system_text = j.at("system").get<std::string>();
  e.user_text = j.at("user").get<std::string>();
  e.reply = j.at("reply").get<std::string>();
  e.provider_id = j.at("provider").get<std::string>();
  e.latency_ms = j.at("latency_ms").get<double>();
  e.tokens.prompt = j.at("prompt_tokens").get<std::uint64_t>();
  e.tokens.completion = j.at("completion_tokens").get<std::uint64_t>();
  if (j.contains("error")) e.error = j.at("error").get<std::string>();
  return e;
}

}  // namespace

TraceError::TraceError(TraceErrorKind kind, const std::string& detail)
    : Error(std::string(kind == TraceErrorKind::SchemaMismatch ? "SchemaMismatch: "
                        : kind == TraceErrorKind::Malformed    ? "MalformedTrace: "
                                                               : "IoError: ") +
            detail),
      kind_(kind) {}

json trace_to_json(const EpisodeTrace& t) {
  json steps = json::array();
  for (const auto& s : t.steps) steps.push_back(step_to_json(s));
  json exchanges = json::array();
  for (const auto& e : t.exchanges) exchanges.push_back(exchange_to_json(e));
  json j{{"schema_version", t.schema_version},
         {"task_id", t.task_id},
         {"task_type", t.task_type},
         {"instruction", t.instruction},
         {"qa", t.qa ? qa_to_json(*t.qa) : json(nullptr)},
         {"initial_plan", plan_to_json(t.initial_plan)},
         {"steps", steps},
         {"exchanges", exchanges},
         {"failure_count", t.failure_count},
         {"redo_count", t.redo_count},
         {"replan_count", t.replan_count},
         {"outcome", std::string(to_string(t.outcome))},
         {"outcome_detail", t.outcome_detail},
         {"goal_status", t.goal_status},
         {"sr", t.sr},
         {"gc", t.gc},
         {"config",
          {{"failure_budget", t.config.failure_budget},
           {"replanning", t.config.replanning_enabled},
           {"use_std", t.config.use_std},
           {"use_cot", t.config.use_cot},
           {"noise", t.config.noise},
           {"noise_seed", t.config.noise_seed},
           {"decode", decode_to_json(t.config.decode)}}}};
  return j;
}

EpisodeTrace trace_from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema_version")) malformed("missing schema_version");
  const auto version = j.at("schema_version");
  if (!version.is_number_integer() || version.get<int>() != kTraceSchemaVersion) {
    throw TraceError(TraceErrorKind::SchemaMismatch,
                     "expected schema_version " + std::to_string(kTraceSchemaVersion) + ", got " + version.dump());
  }
  try {
    EpisodeTrace t;
    t.task_id = j.at("task_id").get<std::string>();
    t.task_type = j.at("task_type").get<std::string>();
    t.instruction = j.at("instruction").get<std::string>();
    if (!j.at("qa").is_null()) t.qa = qa_from_json(j.at("qa"));
    t.initial_plan = plan_from_json(j.at("initial_plan"));
    for (const auto& s : j.at("steps")) t.steps.push_back(step_from_json(s));
    for (const auto& e : j.at("exchanges")) t.exchanges.push_back(exchange_from_json(e));
    t.failure_count = j.at("failure_count").get<std::size_t>();
    t.redo_count = j.at("redo_count").get<std::size_t>();
    t.replan_count = j.at("replan_count").get<std::size_t>();
    const auto outcome = j.at("outcome").get<std::string>();
    auto o = outcome_from_string(outcome);
    if (!o) malformed("unknown outcome '" + outcome + "'");
    t.outcome = *o;
    t.outcome_detail = j.at("outcome_detail").get<std::string>();
    t.goal_status = j.at("goal_status").get<std::vector<bool>>();
    t.sr = j.at("sr").get<int>();
    t.gc = j.at("gc").get<double>();
    const auto& c = j.at("config");
    t.config.failure_budget = c.at("failure_budget").get<std::size_t>();
    t.config.replanning_enabled = c.at("replanning").get<bool>();
    t.config.use_std = c.at("use_std").get<bool>();
    t.config.use_cot = c.at("use_cot").get<bool>();
    t.config.noise = c.at("noise").get<double>();
    t.config.noise_seed = c.at("noise_seed").get<std::uint64_t>();
    t.config.decode = decode_from_json(c.at("decode"));
    return t;
  } catch (const TraceError&) {
    throw;
  } catch (const std::exception& e) {
    malformed(e.what());
  }
}

std::string trace_to_line(const EpisodeTrace& t) { return trace_to_json(t).dump(); }

std::vector<EpisodeTrace> read_traces(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceError(TraceErrorKind::Io, "cannot open " + path.string());
  std::vector<EpisodeTrace> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      malformed(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    try {
      out.push_back(trace_from_json(j));
    } catch (const TraceError& e) {
      throw TraceError(e.kind(), path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_traces(const std::filesystem::path& path, const std::vector<EpisodeTrace>& traces) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TraceError(TraceErrorKind::Io, "cannot write " + path.string());
  for (const auto& t : traces) out << trace_to_line(t) << '\n';
  if (!out) throw TraceError(TraceErrorKind::Io, "write failed for " + path.string());
}

}  // namespace socratic
