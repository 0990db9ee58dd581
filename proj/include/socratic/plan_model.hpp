#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "socratic/error.hpp"

namespace socratic {

enum class ActionKind { Pickup, Put, ToggleOn, ToggleOff, Open, Close, Slice, Navigate };

inline constexpr ActionKind kAllActions[] = {
    ActionKind::Pickup, ActionKind::Put,   ActionKind::ToggleOn, ActionKind::ToggleOff,
    ActionKind::Open,   ActionKind::Close, ActionKind::Slice,    ActionKind::Navigate};

std::string_view to_string(ActionKind action);

/// Case-insensitive lookup over the closed action set.
std::optional<ActionKind> action_from_string(std::string_view name);

/// Put is the only action that names a receptacle.
constexpr bool takes_receptacle(ActionKind action) { return action == ActionKind::Put; }

/// One step for the low-level controller: (action, object[, receptacle]).
/// `receptacle` is engaged iff `action == Put`.
struct Subgoal {
  ActionKind action = ActionKind::Pickup;
  std::string object;
  std::optional<std::string> receptacle;

  friend bool operator==(const Subgoal&, const Subgoal&) = default;
  friend auto operator<=>(const Subgoal&, const Subgoal&) = default;
};

struct Plan {
  std::vector<Subgoal> steps;
  // Unset for the planner's first plan; otherwise the step index whose
  // failure triggered the revision.
  std::optional<std::size_t> replanned_at;

  bool empty() const { return steps.empty(); }
  std::size_t size() const { return steps.size(); }
  friend bool operator==(const Plan&, const Plan&) = default;
};

struct Instruction {
  std::string text;

  /// Trims surrounding whitespace; throws std::invalid_argument when nothing is left.
  static Instruction from(std::string_view raw);
};

enum class ParseErrorKind { NotATemplate, UnknownAction, ArityMismatch, EmptyObject, NoSubgoalsFound };

std::string_view to_string(ParseErrorKind kind);

class PlanParseError : public Error {
 public:
  PlanParseError(ParseErrorKind kind, std::string detail, std::size_t skipped_lines = 0);
  ParseErrorKind kind() const { return kind_; }
  // Only meaningful for NoSubgoalsFound.
  std::size_t skipped_lines() const { return skipped_; }

 private:
  ParseErrorKind kind_;
  std::size_t skipped_;
};

class UnknownObjectError : public Error {
 public:
  explicit UnknownObjectError(std::string name);
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Parses `(Action, object)` or `(Put, object, receptacle)`.
///
/// Accepts surrounding whitespace, a leading list marker (`3.`, `3)`, `-`, `*`)
/// and trailing `,` `.` `;`. Actions match case-insensitively; object tokens
/// are lower-cased with inner whitespace removed.
Subgoal parse_subgoal(std::string_view line);

/// Non-throwing form used when scanning free text.
std::optional<Subgoal> try_parse_subgoal(std::string_view line, ParseErrorKind* why = nullptr);

struct ParsedPlan {
  Plan plan;
  std::size_t skipped_lines = 0;
};

/// Extracts every template line of a completion in document order. Non-blank
/// lines that fail to parse are skipped and counted. Throws NoSubgoalsFound
/// when nothing parses.
ParsedPlan parse_plan(std::string_view raw);

std::string render_subgoal(const Subgoal& sg);

/// One subgoal per line, canonical form.
std::string render_plan(const Plan& plan);

using ObjectVocabulary = std::set<std::string, std::less<>>;

/// Returns the first name in `sg` missing from `vocab`, if any.
std::optional<std::string> find_unknown_object(const Subgoal& sg, const ObjectVocabulary& vocab);

/// Throws UnknownObjectError; std::invalid_argument on an empty vocabulary.
void validate_subgoal(const Subgoal& sg, const ObjectVocabulary& vocab);

}  // namespace socratic
