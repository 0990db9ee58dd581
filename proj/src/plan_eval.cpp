#include "socratic/plan_eval.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <unordered_set>

namespace socratic {
namespace {

constexpr std::uint64_t bit(std::size_t i) { return std::uint64_t{1} << i; }

std::string annotation_error_prefix(AnnotationErrorKind kind) {
  switch (kind) {
    case AnnotationErrorKind::InvalidAnnotation: return "InvalidAnnotation: ";
    case AnnotationErrorKind::CyclicPrecedence: return "CyclicPrecedence: ";
    case AnnotationErrorKind::TooLarge: return "TooLarge: ";
  }
  return "";
}

[[noreturn]] void invalid(const std::string& detail) {
  throw AnnotationError(AnnotationErrorKind::InvalidAnnotation, detail);
}

bool is_acyclic(const std::vector<std::uint64_t>& preds) {
  std::uint64_t placed = 0;
  for (std::size_t round = 0; round < preds.size(); ++round) {
    bool progressed = false;
    for (std::size_t j = 0; j < preds.size(); ++j) {
      if (!(placed & bit(j)) && (preds[j] & ~placed) == 0) {
        placed |= bit(j);
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return std::popcount(placed) == static_cast<int>(preds.size());
}

}  // namespace

const SlotMarkup& GtAnnotation::markup_at(std::size_t slot) const {
  static const SlotMarkup kNone{};
  return slot < markup.size() ? markup[slot] : kNone;
}

GtAnnotation GtAnnotation::strict(std::vector<Subgoal> core) {
  GtAnnotation gt;
  gt.core = std::move(core);
  return gt;
}

AnnotationError::AnnotationError(AnnotationErrorKind kind, const std::string& detail)
    : Error(annotation_error_prefix(kind) + detail), kind_(kind) {}

void validate_annotation(const GtAnnotation& gt) {
  const auto n = gt.core.size();
  if (!gt.markup.empty() && gt.markup.size() != n) {
    invalid("markup has " + std::to_string(gt.markup.size()) + " entries for " + std::to_string(n) + " slots");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& sg = gt.core[i];
    if (sg.action == ActionKind::Navigate) invalid("slot " + std::to_string(i) + " is a Navigate step");
    if (takes_receptacle(sg.action) != sg.receptacle.has_value()) {
      invalid("slot " + std::to_string(i) + " has the wrong receptacle arity");
    }
    const auto& m = gt.markup_at(i);
    if (m.floating_after && *m.floating_after >= i) {
      invalid("floating slot " + std::to_string(i) + " must anchor on an earlier slot");
    }
    if (m.wildcard_receptacle && sg.action != ActionKind::Put) {
      invalid("wildcard receptacle on non-Put slot " + std::to_string(i));
    }
  }

  std::vector<bool> used(n, false);
  for (std::size_t g = 0; g < gt.swap_groups.size(); ++g) {
    auto blocks = gt.swap_groups[g].blocks;
    const auto where = "swap group " + std::to_string(g);
    if (blocks.size() < 2) invalid(where + " needs at least two blocks");
    std::sort(blocks.begin(), blocks.end(), [](const BlockRange& a, const BlockRange& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const auto& b = blocks[k];
      if (b.first > b.last || b.last >= n) invalid(where + " has an out-of-range block");
      for (auto i = b.first; i <= b.last; ++i) {
        if (used[i]) invalid(where + " overlaps another block at slot " + std::to_string(i));
        used[i] = true;
      }
      if (k > 0 && blocks[k - 1].last + 1 != b.first) invalid(where + " has non-adjacent blocks");
    }
  }
}

bool SlotPattern::matches(const Subgoal& sg) const {
  if (sg.action != action || sg.object != object) return false;
  if (!sg.receptacle.has_value()) return !receptacle.has_value() && !any_receptacle;
  return any_receptacle || (receptacle && *receptacle == *sg.receptacle);
}

RelaxedSpec::RelaxedSpec(std::vector<SlotPattern> slots, std::vector<std::uint64_t> predecessors)
    : slots_(std::move(slots)), predecessors_(std::move(predecessors)) {
  if (slots_.size() != predecessors_.size()) {
    throw AnnotationError(AnnotationErrorKind::InvalidAnnotation, "slot and precedence sizes differ");
  }
  if (slots_.size() > kMaxRelaxedSlots) {
    throw AnnotationError(AnnotationErrorKind::TooLarge, std::to_string(slots_.size()) + " slots");
  }
  if (!is_acyclic(predecessors_)) {
    throw AnnotationError(AnnotationErrorKind::CyclicPrecedence, "precedence relation has a cycle");
  }
}

std::size_t RelaxedSpec::edge_count() const {
  std::size_t total = 0;
  for (auto p : predecessors_) total += static_cast<std::size_t>(std::popcount(p));
  return total;
}

RelaxedSpec compile_relaxed_spec(const GtAnnotation& gt) {
  validate_annotation(gt);
  const auto n = gt.core.size();
  if (n > kMaxRelaxedSlots) {
    throw AnnotationError(AnnotationErrorKind::TooLarge, std::to_string(n) + " slots exceeds " +
                                                             std::to_string(kMaxRelaxedSlots));
  }

  std::vector<std::uint64_t> preds(n, 0);
  for (std::size_t j = 0; j < n; ++j) preds[j] = bit(j) - 1;  // every earlier slot

  for (const auto& group : gt.swap_groups) {
    for (std::size_t a = 0; a < group.blocks.size(); ++a) {
      for (std::size_t b = 0; b < group.blocks.size(); ++b) {
        if (a == b) continue;
        const auto& from = group.blocks[a];
        const auto& to = group.blocks[b];
        for (auto j = to.first; j <= to.last; ++j) {
          for (auto i = from.first; i <= from.last; ++i) preds[j] &= ~bit(i);
        }
      }
    }
  }

  for (std::size_t f = 0; f < n; ++f) {
    const auto& m = gt.markup_at(f);
    if (!m.floating_after) continue;
    for (auto& p : preds) p &= ~bit(f);
    preds[f] = bit(*m.floating_after);
  }

  std::vector<SlotPattern> slots;
  slots.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& sg = gt.core[i];
    slots.push_back(SlotPattern{sg.action, sg.object, sg.receptacle, gt.markup_at(i).wildcard_receptacle});
  }
  return RelaxedSpec(std::move(slots), std::move(preds));
}

std::vector<Subgoal> matchable_steps(const Plan& plan) {
  std::vector<Subgoal> out;
  out.reserve(plan.steps.size());
  std::copy_if(plan.steps.begin(), plan.steps.end(), std::back_inserter(out),
               [](const Subgoal& sg) { return sg.action != ActionKind::Navigate; });
  return out;
}

bool strict_match(const Plan& candidate, const GtAnnotation& gt) { return matchable_steps(candidate) == gt.core; }

bool relaxed_match(const Plan& candidate, const RelaxedSpec& spec) {
  const auto steps = matchable_steps(candidate);
  const auto n = spec.size();
  if (steps.size() != n) return false;
  if (n == 0) return true;

  // Cheap rejection: every step needs at least one compatible slot.
  for (const auto& sg : steps) {
    if (std::none_of(spec.slots().begin(), spec.slots().end(), [&](const SlotPattern& p) { return p.matches(sg); })) {
      return false;
    }
  }

  const auto& preds = spec.predecessors();
  // The assigned-slot mask fully determines the remaining subproblem, since the
  // position equals its popcount.
  std::unordered_set<std::uint64_t> dead;
  std::function<bool(std::size_t, std::uint64_t)> assign = [&](std::size_t pos, std::uint64_t used) -> bool {
    if (pos == n) return true;
    if (dead.contains(used)) return false;
    for (std::size_t s = 0; s < n; ++s) {
      if (used & bit(s)) continue;
      if (preds[s] & ~used) continue;
      if (!spec.slots()[s].matches(steps[pos])) continue;
      if (assign(pos + 1, used | bit(s))) return true;
    }
    dead.insert(used);
    return false;
  };
  return assign(0, 0);
}

PlanSet enumerate_valid_plans(const RelaxedSpec& spec, const std::set<std::string>& receptacles) {
  const auto n = spec.size();
  if (n > kMaxEnumeratedSlots) {
    throw AnnotationError(AnnotationErrorKind::TooLarge,
                          std::to_string(n) + " slots exceeds enumeration guard of " + std::to_string(kMaxEnumeratedSlots));
  }
  PlanSet out;
  std::vector<Subgoal> prefix;
  const auto& preds = spec.predecessors();

  std::function<void(std::uint64_t)> extend = [&](std::uint64_t used) {
    if (prefix.size() == n) {
      out.insert(prefix);
      return;
    }
    for (std::size_t s = 0; s < n; ++s) {
      if ((used & bit(s)) || (preds[s] & ~used)) continue;
      const auto& pat = spec.slots()[s];
      Subgoal sg{pat.action, pat.object, pat.receptacle};
      if (pat.any_receptacle) {
        auto options = receptacles;
        if (pat.receptacle) options.insert(*pat.receptacle);
        for (const auto& r : options) {
          sg.receptacle = r;
          prefix.push_back(sg);
          extend(used | bit(s));
          prefix.pop_back();
        }
      } else {
        prefix.push_back(sg);
        extend(used | bit(s));
        prefix.pop_back();
      }
    }
  };
  extend(0);
  return out;
}

}  // namespace socratic
