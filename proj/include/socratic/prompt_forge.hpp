#pragma once

#include <array>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "socratic/error.hpp"
#include "socratic/plan_model.hpp"

namespace socratic {

enum class TemplateName { STD, TP, TP_NoSTD, STD_CoT, Validity, Feedback, Replan };

inline constexpr std::array<TemplateName, 7> kAllTemplates{TemplateName::STD,     TemplateName::TP,
                                                           TemplateName::TP_NoSTD, TemplateName::STD_CoT,
                                                           TemplateName::Validity, TemplateName::Feedback,
                                                           TemplateName::Replan};

std::string_view to_string(TemplateName name);
/// File under the prompts directory, e.g. "tp_no_std.txt".
std::string_view template_file(TemplateName name);
/// Placeholders a template must use, and the only ones it may use.
const std::vector<std::string_view>& declared_placeholders(TemplateName name);

struct PromptTemplate {
  TemplateName name = TemplateName::STD;
  std::string system_text;
  std::string user_text;
};

struct RenderedPrompt {
  TemplateName name = TemplateName::STD;
  std::string system_text;
  std::string user_text;
};

struct QaTurn {
  std::string question;
  std::string answer;
  friend bool operator==(const QaTurn&, const QaTurn&) = default;
};

struct QATranscript {
  std::vector<QaTurn> turns;
  // Chain-of-thought runs hold one pseudo-turn with the free-form decomposition.
  bool chain_of_thought = false;

  bool empty() const { return turns.empty(); }
  friend bool operator==(const QATranscript&, const QATranscript&) = default;
};

enum class Verdict { Valid, Invalid };
std::string_view to_string(Verdict v);

struct Validity {
  Verdict verdict = Verdict::Invalid;
  std::string raw;
};

struct Feedback {
  std::string raw;
};

enum class PromptErrorKind { TemplateMissing, TemplateInvalid, EmptyTranscript, MalformedTranscript };

class PromptError : public Error {
 public:
  PromptError(PromptErrorKind kind, const std::string& detail);
  PromptErrorKind kind() const { return kind_; }

 private:
  PromptErrorKind kind_;
};

inline constexpr std::string_view kPlanCommand =
    "Based on this conversation, create a detailed plan for executing instructions that consist of various "
    "sub-tasks.";
inline constexpr std::string_view kConversationLead = "Based on this conversation";
inline constexpr std::string_view kDecompositionLead = "Based on this step-by-step decomposition";
inline constexpr std::string_view kTemplateRule =
    "Follow the template: (action, object). For PutObject, only use (action, object, object).";
inline constexpr std::string_view kCotMarker = "Let's think step by step";

/// Immutable set of the seven prompt templates.
///
/// Template files hold a `[system]` section followed by a `[user]` section.
/// Loading checks that each template uses exactly its declared placeholders.
class PromptForge {
 public:
  static PromptForge load(const std::filesystem::path& dir);
  /// Directory from $SOCRATIC_PROMPTS, else the one configured at build time.
  static PromptForge load_default();
  static std::filesystem::path default_dir();

  const PromptTemplate& get(TemplateName name) const;

  RenderedPrompt gen_std_prompt(const Instruction& i) const;
  RenderedPrompt gen_tp_prompt(const Instruction& i, const QATranscript& qa) const;
  RenderedPrompt gen_tp_no_std_prompt(const Instruction& i) const;
  RenderedPrompt gen_cot_prompt(const Instruction& i) const;
  /// TP prompt fed by a chain-of-thought decomposition.
  RenderedPrompt gen_tp_cot_prompt(const Instruction& i, const QATranscript& decomposition) const;
  RenderedPrompt gen_validity_prompt(const Subgoal& sg) const;
  RenderedPrompt gen_feedback_prompt(const Subgoal& sg, const Validity& v) const;
  RenderedPrompt gen_replan_prompt(const Feedback& f, const Plan& p, const std::set<std::string>& observed,
                                   const Validity& v, const Instruction& i) const;

 private:
  std::array<PromptTemplate, kAllTemplates.size()> templates_;
};

/// `{name}` tokens in `text`, in order of appearance.
std::vector<std::string> find_placeholders(std::string_view text);

/// Q:/A: lines, one turn per pair, in order.
std::string serialize_qa(const QATranscript& qa);

/// Reads alternating "Q:" / "A:" lines (list markers and "Q1:" style tags
/// tolerated; continuation lines join the previous entry). Throws
/// MalformedTranscript when no complete pair is present.
QATranscript parse_qa_transcript(std::string_view text);

/// `INVALID` (checked first) -> Invalid, else `VALID` -> Valid, else Invalid.
/// Case-insensitive.
Validity classify_validity(std::string_view raw);

/// Lexical check that the questions touch each "things to discover" item.
struct DiscoveryCoverage {
  bool sub_tasks = false;
  bool ordering = false;
  bool target_objects = false;
  bool execution = false;
  bool complete() const { return sub_tasks && ordering && target_objects && execution; }
};
DiscoveryCoverage discovery_coverage(const QATranscript& qa);

}  // namespace socratic
