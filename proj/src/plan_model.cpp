#include "socratic/plan_model.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <variant>

namespace socratic {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

// Drops "12." / "12)" / "-" / "*" list markers.
std::string_view strip_list_marker(std::string_view s) {
  if (!s.empty() && (s.front() == '-' || s.front() == '*')) return trim(s.substr(1));
  std::size_t digits = 0;
  while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
  if (digits > 0 && digits < s.size() && (s[digits] == '.' || s[digits] == ')')) {
    return trim(s.substr(digits + 1));
  }
  return s;
}

std::string normalize_object(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (is_space(c)) continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string_view> split_fields(std::string_view body) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = body.find(',', start);
    fields.push_back(trim(body.substr(start, comma == std::string_view::npos ? body.size() - start : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::variant<Subgoal, std::pair<ParseErrorKind, std::string>> parse_impl(std::string_view line) {
  using Fail = std::pair<ParseErrorKind, std::string>;
  auto s = strip_list_marker(trim(line));
  while (!s.empty() && (s.back() == ',' || s.back() == '.' || s.back() == ';')) s = trim(s.substr(0, s.size() - 1));
  if (s.size() < 2 || s.front() != '(' || s.back() != ')') {
    return Fail{ParseErrorKind::NotATemplate, "not a parenthesized subgoal: '" + std::string(line) + "'"};
  }
  auto body = s.substr(1, s.size() - 2);
  if (body.find_first_of("()") != std::string_view::npos) {
    return Fail{ParseErrorKind::NotATemplate, "nested parentheses in '" + std::string(line) + "'"};
  }
  auto fields = split_fields(body);
  auto action = action_from_string(fields[0]);
  if (!action) return Fail{ParseErrorKind::UnknownAction, "unknown action '" + std::string(fields[0]) + "'"};

  const std::size_t expected = takes_receptacle(*action) ? 3 : 2;
  if (fields.size() != expected) {
    return Fail{ParseErrorKind::ArityMismatch, std::string(to_string(*action)) + " takes " + std::to_string(expected) +
                                                   " fields, got " + std::to_string(fields.size())};
  }
  Subgoal sg{*action, normalize_object(fields[1]), std::nullopt};
  if (sg.object.empty()) return Fail{ParseErrorKind::EmptyObject, "empty object in '" + std::string(line) + "'"};
  if (expected == 3) {
    auto rec = normalize_object(fields[2]);
    if (rec.empty()) return Fail{ParseErrorKind::EmptyObject, "empty receptacle in '" + std::string(line) + "'"};
    sg.receptacle = std::move(rec);
  }
  return sg;
}

}  // namespace

std::string_view to_string(ActionKind action) {
  switch (action) {
    case ActionKind::Pickup: return "Pickup";
    case ActionKind::Put: return "Put";
    case ActionKind::ToggleOn: return "ToggleOn";
    case ActionKind::ToggleOff: return "ToggleOff";
    case ActionKind::Open: return "Open";
    case ActionKind::Close: return "Close";
    case ActionKind::Slice: return "Slice";
    case ActionKind::Navigate: return "Navigate";
  }
  return "?";
}

std::optional<ActionKind> action_from_string(std::string_view name) {
  for (auto a : kAllActions) {
    if (iequals(name, to_string(a))) return a;
  }
  return std::nullopt;
}

Instruction Instruction::from(std::string_view raw) {
  auto t = trim(raw);
  if (t.empty()) throw std::invalid_argument("instruction is empty");
  return Instruction{std::string(t)};
}

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::NotATemplate: return "NotATemplate";
    case ParseErrorKind::UnknownAction: return "UnknownAction";
    case ParseErrorKind::ArityMismatch: return "ArityMismatch";
    case ParseErrorKind::EmptyObject: return "EmptyObject";
    case ParseErrorKind::NoSubgoalsFound: return "NoSubgoalsFound";
  }
  return "?";
}

PlanParseError::PlanParseError(ParseErrorKind kind, std::string detail, std::size_t skipped_lines)
    : Error(std::string(to_string(kind)) + ": " + detail), kind_(kind), skipped_(skipped_lines) {}

UnknownObjectError::UnknownObjectError(std::string name)
    : Error("UnknownObject: '" + name + "'"), name_(std::move(name)) {}

Subgoal parse_subgoal(std::string_view line) {
  auto r = parse_impl(line);
  if (auto* fail = std::get_if<1>(&r)) throw PlanParseError(fail->first, fail->second);
  return std::get<0>(std::move(r));
}

std::optional<Subgoal> try_parse_subgoal(std::string_view line, ParseErrorKind* why) {
  auto r = parse_impl(line);
  if (auto* fail = std::get_if<1>(&r)) {
    if (why) *why = fail->first;
    return std::nullopt;
  }
  return std::get<0>(std::move(r));
}

ParsedPlan parse_plan(std::string_view raw) {
  ParsedPlan out;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    auto nl = raw.find('\n', pos);
    auto line = raw.substr(pos, nl == std::string_view::npos ? raw.size() - pos : nl - pos);
    if (!trim(line).empty()) {
      if (auto sg = try_parse_subgoal(line)) {
        out.plan.steps.push_back(std::move(*sg));
      } else {
        ++out.skipped_lines;
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (out.plan.empty()) {
    throw PlanParseError(ParseErrorKind::NoSubgoalsFound,
                         "no template lines among " + std::to_string(out.skipped_lines) + " non-blank lines",
                         out.skipped_lines);
  }
  return out;
}

std::string render_subgoal(const Subgoal& sg) {
  std::string out = "(";
  out += to_string(sg.action);
  out += ", ";
  out += sg.object;
  if (sg.receptacle) {
    out += ", ";
    out += *sg.receptacle;
  }
  out += ")";
  return out;
}

std::string render_plan(const Plan& plan) {
  std::string out;
  for (const auto& sg : plan.steps) {
    out += render_subgoal(sg);
    out += '\n';
  }
  return out;
}

std::optional<std::string> find_unknown_object(const Subgoal& sg, const ObjectVocabulary& vocab) {
  if (!vocab.contains(sg.object)) return sg.object;
  if (sg.receptacle && !vocab.contains(*sg.receptacle)) return *sg.receptacle;
  return std::nullopt;
}

void validate_subgoal(const Subgoal& sg, const ObjectVocabulary& vocab) {
  if (vocab.empty()) throw std::invalid_argument("object vocabulary is empty");
  if (auto missing = find_unknown_object(sg, vocab)) throw UnknownObjectError(*missing);
}

}  // namespace socratic
