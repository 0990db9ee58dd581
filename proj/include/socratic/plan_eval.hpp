#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "socratic/error.hpp"
#include "socratic/plan_model.hpp"

namespace socratic {

// Per-slot relaxations of a ground-truth plan.
struct SlotMarkup {
  // Temporally agnostic: the slot only has to come after this anchor slot.
  std::optional<std::size_t> floating_after;
  // Spatially agnostic: any receptacle satisfies this Put slot.
  bool wildcard_receptacle = false;

  friend bool operator==(const SlotMarkup&, const SlotMarkup&) = default;
};

// Inclusive range of core slot indices.
struct BlockRange {
  std::size_t first = 0;
  std::size_t last = 0;

  friend bool operator==(const BlockRange&, const BlockRange&) = default;
};

// Interchangeable sub-sequences: adjacent blocks whose relative order is free.
struct SwapGroup {
  std::vector<BlockRange> blocks;

  friend bool operator==(const SwapGroup&, const SwapGroup&) = default;
};

/// Ground-truth plan plus the markup describing its admissible variants.
/// Navigate never appears in `core`; it is controller-level and ignored by
/// both matchers.
struct GtAnnotation {
  std::vector<Subgoal> core;
  std::vector<SlotMarkup> markup;  // empty, or one entry per core slot
  std::vector<SwapGroup> swap_groups;

  const SlotMarkup& markup_at(std::size_t slot) const;

  static GtAnnotation strict(std::vector<Subgoal> core);
  friend bool operator==(const GtAnnotation&, const GtAnnotation&) = default;
};

enum class AnnotationErrorKind { InvalidAnnotation, CyclicPrecedence, TooLarge };

class AnnotationError : public Error {
 public:
  AnnotationError(AnnotationErrorKind kind, const std::string& detail);
  AnnotationErrorKind kind() const { return kind_; }

 private:
  AnnotationErrorKind kind_;
};

/// Throws AnnotationError(InvalidAnnotation) on: markup size mismatch, anchor
/// not strictly before its slot, wildcard on a non-Put slot, Navigate in core,
/// out-of-range / overlapping / non-adjacent swap blocks, groups with fewer
/// than two blocks.
void validate_annotation(const GtAnnotation& gt);

struct SlotPattern {
  ActionKind action = ActionKind::Pickup;
  std::string object;
  std::optional<std::string> receptacle;
  bool any_receptacle = false;

  bool matches(const Subgoal& sg) const;
  friend bool operator==(const SlotPattern&, const SlotPattern&) = default;
};

inline constexpr std::size_t kMaxRelaxedSlots = 64;

/// Slot patterns plus a precedence DAG over slot indices.
class RelaxedSpec {
 public:
  RelaxedSpec() = default;
  RelaxedSpec(std::vector<SlotPattern> slots, std::vector<std::uint64_t> predecessors);

  std::size_t size() const { return slots_.size(); }
  const std::vector<SlotPattern>& slots() const { return slots_; }
  // Bit i of predecessors()[j] is set iff slot i must precede slot j.
  const std::vector<std::uint64_t>& predecessors() const { return predecessors_; }
  bool has_edge(std::size_t from, std::size_t to) const { return (predecessors_[to] >> from) & 1U; }
  std::size_t edge_count() const;

 private:
  std::vector<SlotPattern> slots_;
  std::vector<std::uint64_t> predecessors_;
};

/// Builds the precedence relation: all pairs of the core order, minus every
/// edge touching a floating slot (which keeps only anchor -> slot), minus
/// edges between different blocks of a swap group.
RelaxedSpec compile_relaxed_spec(const GtAnnotation& gt);

/// Plan steps that take part in matching (Navigate removed).
std::vector<Subgoal> matchable_steps(const Plan& plan);

/// Exact sequence equality with the core, wildcards ignored.
bool strict_match(const Plan& candidate, const GtAnnotation& gt);

/// True iff the candidate's steps can be assigned one-to-one to slots so that
/// every step matches its slot and the step order is a linear extension of
/// the precedence DAG. Backtracking over slots with a failed-state memo.
bool relaxed_match(const Plan& candidate, const RelaxedSpec& spec);

inline constexpr std::size_t kMaxEnumeratedSlots = 8;

using PlanSet = std::set<std::vector<Subgoal>>;

/// Every linear extension of the DAG times every wildcard instantiation over
/// `receptacles`. Brute force; throws TooLarge beyond kMaxEnumeratedSlots.
PlanSet enumerate_valid_plans(const RelaxedSpec& spec, const std::set<std::string>& receptacles);

}  // namespace socratic
