#include "socratic/world_sim.hpp"

#include <array>
#include <utility>

namespace socratic {
namespace {

using FlagMember = bool ObjectFlags::*;

constexpr std::array<std::pair<std::string_view, FlagMember>, 15> kFlagTable{{
    {"pickupable", &ObjectFlags::pickupable},
    {"openable", &ObjectFlags::openable},
    {"is_open", &ObjectFlags::is_open},
    {"toggleable", &ObjectFlags::toggleable},
    {"is_on", &ObjectFlags::is_on},
    {"sliceable", &ObjectFlags::sliceable},
    {"is_sliced", &ObjectFlags::is_sliced},
    {"heatable", &ObjectFlags::heatable},
    {"is_heated", &ObjectFlags::is_heated},
    {"coolable", &ObjectFlags::coolable},
    {"is_chilled", &ObjectFlags::is_chilled},
    {"cleanable", &ObjectFlags::cleanable},
    {"is_clean", &ObjectFlags::is_clean},
    {"is_receptacle", &ObjectFlags::is_receptacle},
    {"heavy", &ObjectFlags::heavy},
}};

FlagMember state_member(StateFlag flag) {
  switch (flag) {
    case StateFlag::IsOpen: return &ObjectFlags::is_open;
    case StateFlag::IsOn: return &ObjectFlags::is_on;
    case StateFlag::IsSliced: return &ObjectFlags::is_sliced;
    case StateFlag::IsHeated: return &ObjectFlags::is_heated;
    case StateFlag::IsChilled: return &ObjectFlags::is_chilled;
    case StateFlag::IsClean: return &ObjectFlags::is_clean;
  }
  return &ObjectFlags::is_open;
}

bool is_knife(const ObjectEntity& e) {
  const auto& c = e.object_class;
  return c.size() >= object_class::kKnife.size() &&
         c.compare(c.size() - object_class::kKnife.size(), std::string::npos, object_class::kKnife) == 0;
}

// Walks up the container chain. Bounded by the entity count so a malformed
// cycle cannot hang the simulator.
template <typename Fn>
void for_each_enclosing(const WorldState& w, const ObjectEntity& e, Fn&& fn) {
  const ObjectEntity* cur = &e;
  for (std::size_t depth = 0; depth <= w.entities.size() && cur->container; ++depth) {
    const auto* parent = w.find(*cur->container);
    if (!parent) return;
    if (!fn(*parent)) return;
    cur = parent;
  }
}

bool enclosed_by(const WorldState& w, const ObjectEntity& e, std::string_view container_id) {
  bool found = false;
  for_each_enclosing(w, e, [&](const ObjectEntity& parent) {
    found = parent.id == container_id;
    return !found;
  });
  return found;
}

bool is_visible(const WorldState& w, const ObjectEntity& e) {
  if (w.held && *w.held == e.id) return true;
  if (e.zone != w.agent_zone) return false;
  bool open_path = true;
  for_each_enclosing(w, e, [&](const ObjectEntity& parent) {
    if (parent.flags.openable && !parent.flags.is_open) open_path = false;
    return open_path;
  });
  return open_path;
}

// Contents share the zone of their outermost container; the held object
// shares the agent's.
void sync_zones(WorldState& w) {
  if (w.held) {
    if (auto it = w.entities.find(*w.held); it != w.entities.end()) it->second.zone = w.agent_zone;
  }
  for (auto& [id, e] : w.entities) {
    const ObjectEntity* root = &e;
    for_each_enclosing(w, e, [&](const ObjectEntity& parent) {
      root = &parent;
      return true;
    });
    if (root != &e) e.zone = root->zone;
  }
}

void apply_to_contents(WorldState& w, std::string_view container_id, FlagMember capability, FlagMember state) {
  for (auto& [id, e] : w.entities) {
    if ((e.flags.*capability) && enclosed_by(w, e, container_id)) e.flags.*state = true;
  }
}

ExecutionResult fail(const WorldState& w, FailureReason reason, std::string detail) {
  return ExecutionResult{false, reason, std::move(detail), w};
}

ExecutionResult ok(WorldState w) { return ExecutionResult{true, FailureReason::Ok, {}, std::move(w)}; }

ExecutionResult toggle_open(WorldState& w, ObjectEntity& target, bool open) {
  if (!target.flags.openable) return fail(w, FailureReason::PreconditionViolated, target.id + " cannot be opened");
  if (target.flags.is_open == open) {
    return fail(w, FailureReason::PreconditionViolated, target.id + (open ? " is already open" : " is already closed"));
  }
  target.flags.is_open = open;
  if (!open && target.object_class == object_class::kFridge) {
    apply_to_contents(w, target.id, &ObjectFlags::coolable, &ObjectFlags::is_chilled);
  }
  return ok(std::move(w));
}

ExecutionResult toggle_power(WorldState& w, ObjectEntity& target, bool on) {
  if (!target.flags.toggleable) return fail(w, FailureReason::PreconditionViolated, target.id + " cannot be toggled");
  if (target.flags.is_on == on) {
    return fail(w, FailureReason::PreconditionViolated, target.id + (on ? " is already on" : " is already off"));
  }
  target.flags.is_on = on;
  if (on && target.object_class == object_class::kMicrowave) {
    apply_to_contents(w, target.id, &ObjectFlags::heatable, &ObjectFlags::is_heated);
  }
  if (on && target.object_class == object_class::kFaucet) {
    std::vector<std::string> sinks;
    for (const auto& [id, e] : w.entities) {
      if (e.object_class == object_class::kSink && e.zone == target.zone) sinks.push_back(id);
    }
    for (const auto& sink : sinks) apply_to_contents(w, sink, &ObjectFlags::cleanable, &ObjectFlags::is_clean);
  }
  return ok(std::move(w));
}

}  // namespace

std::string_view to_string(StateFlag flag) {
  switch (flag) {
    case StateFlag::IsOpen: return "is_open";
    case StateFlag::IsOn: return "is_on";
    case StateFlag::IsSliced: return "is_sliced";
    case StateFlag::IsHeated: return "is_heated";
    case StateFlag::IsChilled: return "is_chilled";
    case StateFlag::IsClean: return "is_clean";
  }
  return "?";
}

std::optional<StateFlag> state_flag_from_string(std::string_view name) {
  for (auto f : {StateFlag::IsOpen, StateFlag::IsOn, StateFlag::IsSliced, StateFlag::IsHeated, StateFlag::IsChilled,
                 StateFlag::IsClean}) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

bool ObjectFlags::get(StateFlag flag) const { return this->*state_member(flag); }
void ObjectFlags::set(StateFlag flag, bool value) { this->*state_member(flag) = value; }

bool ObjectFlags::consistent() const {
  return (!is_open || openable) && (!is_on || toggleable) && (!is_sliced || sliceable) &&
         (!is_heated || heatable) && (!is_chilled || coolable) && (!is_clean || cleanable);
}

const std::vector<std::string_view>& object_flag_names() {
  static const std::vector<std::string_view> names = [] {
    std::vector<std::string_view> v;
    for (const auto& [name, member] : kFlagTable) v.push_back(name);
    return v;
  }();
  return names;
}

bool* object_flag_by_name(ObjectFlags& flags, std::string_view name) {
  for (const auto& [n, member] : kFlagTable) {
    if (n == name) return &(flags.*member);
  }
  return nullptr;
}

bool object_flag_value(const ObjectFlags& flags, std::string_view name) {
  for (const auto& [n, member] : kFlagTable) {
    if (n == name) return flags.*member;
  }
  return false;
}

const ObjectEntity* WorldState::find(std::string_view id) const {
  auto it = entities.find(id);
  return it == entities.end() ? nullptr : &it->second;
}

ObjectVocabulary WorldState::vocabulary() const {
  ObjectVocabulary vocab;
  for (const auto& [id, e] : entities) vocab.insert(id);
  return vocab;
}

std::optional<std::string> check_world_invariants(const WorldState& w) {
  for (const auto& [id, e] : w.entities) {
    if (id != e.id) return "entity key '" + id + "' does not match id '" + e.id + "'";
    if (!e.flags.consistent()) return "flags of '" + id + "' set a state without its capability";
    if (e.container) {
      const auto* c = w.find(*e.container);
      if (!c) return "'" + id + "' is inside unknown container '" + *e.container + "'";
      if (!c->flags.is_receptacle) return "'" + id + "' is inside non-receptacle '" + *e.container + "'";
      if (*e.container == id || enclosed_by(w, *c, id)) return "container cycle through '" + id + "'";
    }
  }
  if (w.held) {
    const auto* h = w.find(*w.held);
    if (!h) return "held object '" + *w.held + "' does not exist";
    if (h->container) return "held object '" + *w.held + "' is inside '" + *h->container + "'";
    if (h->zone != w.agent_zone) return "held object '" + *w.held + "' is not with the agent";
  }
  if (!(w.noise_probability >= 0.0 && w.noise_probability <= 1.0)) return "noise probability outside [0,1]";
  return std::nullopt;
}

std::vector<std::string> referenced_objects(const GoalCondition& c) {
  return std::visit(
      [](const auto& g) -> std::vector<std::string> {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, goal::Located>) {
          return {g.object, g.receptacle};
        } else {
          return {g.object};
        }
      },
      c);
}

std::string describe(const GoalCondition& c) {
  return std::visit(
      [](const auto& g) -> std::string {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, goal::Located>) {
          return "located(" + g.object + ", " + g.receptacle + ")";
        } else if constexpr (std::is_same_v<T, goal::InZone>) {
          return "in_zone(" + g.object + ", " + g.zone + ")";
        } else if constexpr (std::is_same_v<T, goal::State>) {
          return "state(" + g.object + ", " + std::string(to_string(g.flag)) + ", " + (g.value ? "true" : "false") + ")";
        } else {
          return "holding(" + g.object + ")";
        }
      },
      c);
}

std::string_view to_string(FailureReason reason) {
  switch (reason) {
    case FailureReason::Ok: return "Ok";
    case FailureReason::PreconditionViolated: return "PreconditionViolated";
    case FailureReason::TargetNotVisible: return "TargetNotVisible";
    case FailureReason::HandOccupied: return "HandOccupied";
    case FailureReason::HandEmpty: return "HandEmpty";
    case FailureReason::ReceptacleClosed: return "ReceptacleClosed";
    case FailureReason::ObjectTooHeavy: return "ObjectTooHeavy";
    case FailureReason::ControllerNoise: return "ControllerNoise";
  }
  return "?";
}

std::optional<FailureReason> failure_reason_from_string(std::string_view name) {
  for (auto r : {FailureReason::Ok, FailureReason::PreconditionViolated, FailureReason::TargetNotVisible,
                 FailureReason::HandOccupied, FailureReason::HandEmpty, FailureReason::ReceptacleClosed,
                 FailureReason::ObjectTooHeavy, FailureReason::ControllerNoise}) {
    if (to_string(r) == name) return r;
  }
  return std::nullopt;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double noise_draw(std::uint64_t seed, std::uint64_t step) {
  const auto bits = splitmix64(splitmix64(seed) ^ step);
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

ExecutionResult apply_subgoal(const WorldState& before, const Subgoal& sg) {
  WorldState w = before;
  ++w.step_count;

  if (w.noise_probability > 0.0 && noise_draw(w.noise_seed, before.step_count) < w.noise_probability) {
    return fail(w, FailureReason::ControllerNoise, "controller failed to execute " + render_subgoal(sg));
  }

  auto target_it = w.entities.find(sg.object);
  if (target_it == w.entities.end()) {
    return fail(w, FailureReason::TargetNotVisible, "no object named '" + sg.object + "' in the scene");
  }
  ObjectEntity& target = target_it->second;

  if (sg.action == ActionKind::Navigate) {
    const ObjectEntity* root = &target;
    for_each_enclosing(w, target, [&](const ObjectEntity& parent) {
      root = &parent;
      return true;
    });
    w.agent_zone = (w.held && *w.held == target.id) ? w.agent_zone : root->zone;
    sync_zones(w);
    return ok(std::move(w));
  }

  if (!is_visible(w, target)) return fail(w, FailureReason::TargetNotVisible, target.id + " is not visible");

  switch (sg.action) {
    case ActionKind::Pickup: {
      if (!target.flags.pickupable) return fail(w, FailureReason::PreconditionViolated, target.id + " cannot be picked up");
      if (target.flags.heavy) return fail(w, FailureReason::ObjectTooHeavy, target.id + " is too heavy to lift");
      if (w.held) return fail(w, FailureReason::HandOccupied, "already holding " + *w.held);
      target.container.reset();
      w.held = target.id;
      sync_zones(w);
      return ok(std::move(w));
    }
    case ActionKind::Put: {
      if (!w.held) return fail(w, FailureReason::HandEmpty, "not holding anything");
      if (*w.held != target.id) {
        return fail(w, FailureReason::PreconditionViolated, "holding " + *w.held + ", not " + target.id);
      }
      const auto& rec_id = sg.receptacle.value_or("");
      auto rec_it = w.entities.find(rec_id);
      if (rec_it == w.entities.end()) {
        return fail(w, FailureReason::TargetNotVisible, "no receptacle named '" + rec_id + "' in the scene");
      }
      ObjectEntity& rec = rec_it->second;
      if (!is_visible(w, rec)) return fail(w, FailureReason::TargetNotVisible, rec.id + " is not visible");
      if (!rec.flags.is_receptacle) return fail(w, FailureReason::PreconditionViolated, rec.id + " is not a receptacle");
      if (rec.id == target.id || enclosed_by(w, rec, target.id)) {
        return fail(w, FailureReason::PreconditionViolated, "cannot put " + target.id + " inside itself");
      }
      if (rec.flags.openable && !rec.flags.is_open) {
        return fail(w, FailureReason::ReceptacleClosed, rec.id + " is closed");
      }
      target.container = rec.id;
      w.held.reset();
      sync_zones(w);
      return ok(std::move(w));
    }
    case ActionKind::Open: return toggle_open(w, target, true);
    case ActionKind::Close: return toggle_open(w, target, false);
    case ActionKind::ToggleOn: return toggle_power(w, target, true);
    case ActionKind::ToggleOff: return toggle_power(w, target, false);
    case ActionKind::Slice: {
      const auto* tool = w.held ? w.find(*w.held) : nullptr;
      if (!tool || !is_knife(*tool)) return fail(w, FailureReason::PreconditionViolated, "slicing needs a knife in hand");
      if (!target.flags.sliceable) return fail(w, FailureReason::PreconditionViolated, target.id + " cannot be sliced");
      if (target.flags.is_sliced) return fail(w, FailureReason::PreconditionViolated, target.id + " is already sliced");
      target.flags.is_sliced = true;
      return ok(std::move(w));
    }
    case ActionKind::Navigate: break;
  }
  return fail(w, FailureReason::PreconditionViolated, "unsupported action");
}

std::set<std::string> detect_objects(const WorldState& w) {
  std::set<std::string> out;
  for (const auto& [id, e] : w.entities) {
    if (is_visible(w, e)) out.insert(id);
  }
  return out;
}

SceneSnapshot render_scene(const WorldState& w) {
  SceneSnapshot snap;
  snap.visible_ids = detect_objects(w);
  std::string d = "Agent location: " + w.agent_zone + "\n";
  d += "Holding: " + (w.held ? *w.held : std::string("nothing")) + "\n";
  if (snap.visible_ids.empty()) {
    d += "Visible objects: none\n";
    snap.description = std::move(d);
    return snap;
  }
  d += "Visible objects:\n";
  for (const auto& id : snap.visible_ids) {
    const auto& e = *w.find(id);
    std::vector<std::string> marks;
    if (w.held && *w.held == id) marks.emplace_back("held");
    if (e.flags.openable) marks.emplace_back(e.flags.is_open ? "open" : "closed");
    if (e.flags.is_on) marks.emplace_back("on");
    if (e.flags.is_sliced) marks.emplace_back("sliced");
    if (e.flags.is_heated) marks.emplace_back("heated");
    if (e.flags.is_chilled) marks.emplace_back("chilled");
    if (e.flags.is_clean) marks.emplace_back("clean");
    if (e.container) marks.push_back("in " + *e.container);
    d += "- " + id;
    if (!marks.empty()) {
      d += " (";
      for (std::size_t i = 0; i < marks.size(); ++i) d += (i ? ", " : "") + marks[i];
      d += ")";
    }
    d += "\n";
  }
  snap.description = std::move(d);
  return snap;
}

std::vector<bool> check_goal_conditions(const WorldState& w, const GoalSpec& g) {
  std::vector<bool> out;
  out.reserve(g.conditions.size());
  for (const auto& c : g.conditions) {
    out.push_back(std::visit(
        [&](const auto& cond) -> bool {
          using T = std::decay_t<decltype(cond)>;
          const auto* e = w.find(cond.object);
          if constexpr (std::is_same_v<T, goal::Holding>) {
            return w.held && *w.held == cond.object;
          } else {
            if (!e) return false;
            if constexpr (std::is_same_v<T, goal::Located>) {
              return e->container && *e->container == cond.receptacle;
            } else if constexpr (std::is_same_v<T, goal::InZone>) {
              return e->zone == cond.zone;
            } else {
              return e->flags.get(cond.flag) == cond.value;
            }
          }
        },
        c));
  }
  return out;
}

bool subgoal_effect_holds(const WorldState& w, const Subgoal& sg) {
  const auto* e = w.find(sg.object);
  if (!e) return false;
  switch (sg.action) {
    case ActionKind::Navigate: return e->zone == w.agent_zone;
    case ActionKind::Pickup: return w.held && *w.held == sg.object;
    case ActionKind::Put: return e->container && sg.receptacle && *e->container == *sg.receptacle;
    case ActionKind::Open: return e->flags.is_open;
    case ActionKind::Close: return e->flags.openable && !e->flags.is_open;
    case ActionKind::ToggleOn: return e->flags.is_on;
    case ActionKind::ToggleOff: return e->flags.toggleable && !e->flags.is_on;
    case ActionKind::Slice: return e->flags.is_sliced;
  }
  return false;
}

}  // namespace socratic
