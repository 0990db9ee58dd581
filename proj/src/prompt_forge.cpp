#include "socratic/prompt_forge.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace socratic {
namespace {

constexpr std::string_view kSystemHeader = "[system]";
constexpr std::string_view kUserHeader = "[user]";

std::size_t index_of(TemplateName name) {
  return static_cast<std::size_t>(std::find(kAllTemplates.begin(), kAllTemplates.end(), name) - kAllTemplates.begin());
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_placeholder_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ' ' || c == '-';
}

// Single left-to-right pass: substituted values are never rescanned, so text
// coming back from a model cannot inject placeholders.
std::string substitute(std::string_view text, const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      auto close = text.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto key = text.substr(i + 1, close - i - 1);
        if (auto it = values.find(key); it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += text[i++];
  }
  return out;
}

PromptTemplate parse_template(TemplateName name, const std::string& body) {
  auto sys = body.find(kSystemHeader);
  auto usr = body.find(kUserHeader);
  if (sys == std::string::npos || usr == std::string::npos || usr < sys) {
    throw PromptError(PromptErrorKind::TemplateInvalid,
                      std::string(template_file(name)) + ": expected a [system] section followed by [user]");
  }
  PromptTemplate t;
  t.name = name;
  t.system_text = std::string(trim(std::string_view(body).substr(sys + kSystemHeader.size(), usr - sys - kSystemHeader.size())));
  t.user_text = std::string(trim(std::string_view(body).substr(usr + kUserHeader.size())));
  t.user_text += '\n';

  const auto& declared = declared_placeholders(name);
  std::set<std::string, std::less<>> seen;
  for (const auto* part : {&t.system_text, &t.user_text}) {
    for (auto& ph : find_placeholders(*part)) {
      if (std::find(declared.begin(), declared.end(), ph) == declared.end()) {
        throw PromptError(PromptErrorKind::TemplateInvalid,
                          std::string(template_file(name)) + ": undeclared placeholder {" + ph + "}");
      }
      seen.insert(std::move(ph));
    }
  }
  for (auto ph : declared) {
    if (!seen.contains(ph)) {
      throw PromptError(PromptErrorKind::TemplateInvalid,
                        std::string(template_file(name)) + ": missing placeholder {" + std::string(ph) + "}");
    }
  }
  return t;
}

RenderedPrompt render(const PromptTemplate& t, const std::map<std::string, std::string, std::less<>>& values) {
  return RenderedPrompt{t.name, substitute(t.system_text, values), substitute(t.user_text, values)};
}

std::string join_sorted(const std::set<std::string>& items) {
  if (items.empty()) return "none";
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

bool contains_any(const std::string& haystack, std::initializer_list<std::string_view> needles) {
  return std::any_of(needles.begin(), needles.end(),
                     [&](std::string_view n) { return haystack.find(n) != std::string::npos; });
}

// "Q:", "q1:", "3. Q:", "- A2:" -> ('Q'|'A', rest); otherwise 0.
std::pair<char, std::string_view> qa_tag(std::string_view line) {
  auto s = trim(line);
  if (!s.empty() && (s.front() == '-' || s.front() == '*')) s = trim(s.substr(1));
  std::size_t d = 0;
  while (d < s.size() && std::isdigit(static_cast<unsigned char>(s[d]))) ++d;
  if (d > 0 && d < s.size() && (s[d] == '.' || s[d] == ')')) s = trim(s.substr(d + 1));
  if (s.empty()) return {0, {}};
  const char tag = static_cast<char>(std::toupper(static_cast<unsigned char>(s.front())));
  if (tag != 'Q' && tag != 'A') return {0, {}};
  std::size_t k = 1;
  while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
  if (k >= s.size() || s[k] != ':') return {0, {}};
  return {tag, trim(s.substr(k + 1))};
}

}  // namespace

std::string_view to_string(TemplateName name) {
  switch (name) {
    case TemplateName::STD: return "STD";
    case TemplateName::TP: return "TP";
    case TemplateName::TP_NoSTD: return "TP_NoSTD";
    case TemplateName::STD_CoT: return "STD_CoT";
    case TemplateName::Validity: return "Validity";
    case TemplateName::Feedback: return "Feedback";
    case TemplateName::Replan: return "Replan";
  }
  return "?";
}

std::string_view template_file(TemplateName name) {
  switch (name) {
    case TemplateName::STD: return "std.txt";
    case TemplateName::TP: return "tp.txt";
    case TemplateName::TP_NoSTD: return "tp_no_std.txt";
    case TemplateName::STD_CoT: return "std_cot.txt";
    case TemplateName::Validity: return "validity.txt";
    case TemplateName::Feedback: return "feedback.txt";
    case TemplateName::Replan: return "replan.txt";
  }
  return "";
}

const std::vector<std::string_view>& declared_placeholders(TemplateName name) {
  static const std::vector<std::string_view> instruction{"instruction"};
  static const std::vector<std::string_view> tp{"instruction", "QA"};
  static const std::vector<std::string_view> validity{"subgoal"};
  static const std::vector<std::string_view> feedback{"subgoal", "object", "validity"};
  static const std::vector<std::string_view> replan{"instruction", "initial high-level plan", "observed_objects",
                                                    "validity", "feedback"};
  switch (name) {
    case TemplateName::STD:
    case TemplateName::STD_CoT:
    case TemplateName::TP_NoSTD: return instruction;
    case TemplateName::TP: return tp;
    case TemplateName::Validity: return validity;
    case TemplateName::Feedback: return feedback;
    case TemplateName::Replan: return replan;
  }
  return instruction;
}

std::string_view to_string(Verdict v) { return v == Verdict::Valid ? "VALID" : "INVALID"; }

PromptError::PromptError(PromptErrorKind kind, const std::string& detail) : Error(detail), kind_(kind) {}

std::vector<std::string> find_placeholders(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while ((i = text.find('{', i)) != std::string_view::npos) {
    auto close = text.find('}', i + 1);
    if (close == std::string_view::npos) break;
    auto key = text.substr(i + 1, close - i - 1);
    if (!key.empty() && std::all_of(key.begin(), key.end(), is_placeholder_char)) {
      out.emplace_back(key);
      i = close + 1;
    } else {
      ++i;
    }
  }
  return out;
}

PromptForge PromptForge::load(const std::filesystem::path& dir) {
  PromptForge forge;
  for (auto name : kAllTemplates) {
    const auto path = dir / template_file(name);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PromptError(PromptErrorKind::TemplateMissing, "cannot read prompt template " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    forge.templates_[index_of(name)] = parse_template(name, buf.str());
  }
  return forge;
}

std::filesystem::path PromptForge::default_dir() {
  if (const char* env = std::getenv("SOCRATIC_PROMPTS"); env && *env) return env;
#ifdef SOCRATIC_DEFAULT_PROMPTS_DIR
  return SOCRATIC_DEFAULT_PROMPTS_DIR;
#else
  return "prompts";
#endif
}

PromptForge PromptForge::load_default() { return load(default_dir()); }

const PromptTemplate& PromptForge::get(TemplateName name) const { return templates_[index_of(name)]; }

RenderedPrompt PromptForge::gen_std_prompt(const Instruction& i) const {
  return render(get(TemplateName::STD), {{"instruction", i.text}});
}

RenderedPrompt PromptForge::gen_tp_prompt(const Instruction& i, const QATranscript& qa) const {
  if (qa.empty()) throw PromptError(PromptErrorKind::EmptyTranscript, "EmptyTranscript: task planner needs QA turns");
  return render(get(TemplateName::TP), {{"instruction", i.text}, {"QA", serialize_qa(qa)}});
}

RenderedPrompt PromptForge::gen_tp_no_std_prompt(const Instruction& i) const {
  return render(get(TemplateName::TP_NoSTD), {{"instruction", i.text}});
}

RenderedPrompt PromptForge::gen_cot_prompt(const Instruction& i) const {
  return render(get(TemplateName::STD_CoT), {{"instruction", i.text}});
}

RenderedPrompt PromptForge::gen_tp_cot_prompt(const Instruction& i, const QATranscript& decomposition) const {
  if (decomposition.empty()) {
    throw PromptError(PromptErrorKind::EmptyTranscript, "EmptyTranscript: task planner needs a decomposition");
  }
  PromptTemplate t = get(TemplateName::TP);
  if (auto at = t.user_text.find(kConversationLead); at != std::string::npos) {
    t.user_text.replace(at, kConversationLead.size(), kDecompositionLead);
  }
  if (auto at = t.user_text.find("Conversation:\n"); at != std::string::npos) {
    t.user_text.replace(at, 13, "Decomposition:");
  }
  // The decomposition goes in as free text; a Q:/A: rendering would repeat the question.
  std::string text;
  for (const auto& turn : decomposition.turns) {
    if (!text.empty()) text += '\n';
    text += turn.answer;
  }
  return render(t, {{"instruction", i.text}, {"QA", text}});
}

RenderedPrompt PromptForge::gen_validity_prompt(const Subgoal& sg) const {
  return render(get(TemplateName::Validity), {{"subgoal", render_subgoal(sg)}});
}

RenderedPrompt PromptForge::gen_feedback_prompt(const Subgoal& sg, const Validity& v) const {
  return render(get(TemplateName::Feedback),
                {{"subgoal", render_subgoal(sg)}, {"object", sg.object}, {"validity", std::string(to_string(v.verdict))}});
}

RenderedPrompt PromptForge::gen_replan_prompt(const Feedback& f, const Plan& p, const std::set<std::string>& observed,
                                              const Validity& v, const Instruction& i) const {
  auto plan_text = render_plan(p);
  if (!plan_text.empty() && plan_text.back() == '\n') plan_text.pop_back();
  return render(get(TemplateName::Replan), {{"instruction", i.text},
                                            {"initial high-level plan", plan_text},
                                            {"observed_objects", join_sorted(observed)},
                                            {"validity", std::string(to_string(v.verdict))},
                                            {"feedback", std::string(trim(f.raw))}});
}

std::string serialize_qa(const QATranscript& qa) {
  std::string out;
  if (qa.chain_of_thought) {
    for (const auto& t : qa.turns) {
      if (!out.empty()) out += '\n';
      out += t.answer;
    }
    return out;
  }
  for (std::size_t k = 0; k < qa.turns.size(); ++k) {
    if (k) out += '\n';
    out += "Q: " + qa.turns[k].question + "\nA: " + qa.turns[k].answer;
  }
  return out;
}

QATranscript parse_qa_transcript(std::string_view text) {
  QATranscript qa;
  std::string question;
  std::string answer;
  char last = 0;
  auto flush = [&] {
    if (!question.empty() && !answer.empty()) qa.turns.push_back({question, answer});
    question.clear();
    answer.clear();
  };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    auto [tag, rest] = qa_tag(line);
    if (tag == 'Q') {
      flush();
      question = std::string(rest);
      last = 'Q';
    } else if (tag == 'A' && !question.empty()) {
      if (!answer.empty()) answer += ' ';
      answer += std::string(rest);
      last = 'A';
    } else if (auto t = trim(line); !t.empty() && last != 0) {
      auto& target = last == 'Q' ? question : answer;
      if (!target.empty()) target += ' ';
      target += std::string(t);
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  flush();
  if (qa.turns.empty()) {
    throw PromptError(PromptErrorKind::MalformedTranscript, "MalformedTranscript: no Q:/A: pairs in decomposer output");
  }
  return qa;
}

Validity classify_validity(std::string_view raw) {
  const auto up = upper(raw);
  if (up.find("INVALID") != std::string::npos) return {Verdict::Invalid, std::string(raw)};
  if (up.find("VALID") != std::string::npos) return {Verdict::Valid, std::string(raw)};
  return {Verdict::Invalid, std::string(raw)};
}

DiscoveryCoverage discovery_coverage(const QATranscript& qa) {
  DiscoveryCoverage c;
  for (const auto& t : qa.turns) {
    const auto q = lower(t.question);
    c.sub_tasks = c.sub_tasks || contains_any(q, {"sub-task", "subtask", "sub task"});
    c.ordering = c.ordering || contains_any(q, {"order", "sequence", "first", "before", "after"});
    c.target_objects = c.target_objects || contains_any(q, {"object", "receptacle", "which", "where"});
    c.execution = c.execution || contains_any(q, {"how", "execute", "action", "step"});
  }
  return c;
}

}  // namespace socratic
