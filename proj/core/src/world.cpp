#include "siftom/world.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace siftom {

namespace {

constexpr std::string_view kHandPrefix = "hand:";

template <class Map>
auto lookup(const Map& m, std::string_view key) -> std::optional<typename Map::mapped_type> {
  auto it = m.find(key);
  if (it == m.end()) return std::nullopt;
  return it->second;
}

}  // namespace

std::string_view to_string(Agent agent) { return agent == Agent::human ? "human" : "robot"; }

Agent agent_from_string(std::string_view text) {
  if (text == "human") return Agent::human;
  if (text == "robot") return Agent::robot;
  throw ConfigError("", "unknown agent '" + std::string(text) + "'");
}

std::string_view to_string(Category c) {
  switch (c) {
    case Category::utensil: return "utensil";
    case Category::dish: return "dish";
    case Category::glass: return "glass";
    case Category::food: return "food";
  }
  return "food";
}

Category category_from_string(std::string_view text) {
  for (auto c : {Category::utensil, Category::dish, Category::glass, Category::food}) {
    if (to_string(c) == text) return c;
  }
  throw ConfigError("", "unknown category '" + std::string(text) + "'");
}

std::string_view to_string(LocationKind k) {
  switch (k) {
    case LocationKind::surface: return "surface";
    case LocationKind::container: return "container";
    case LocationKind::room_floor: return "room-floor";
  }
  return "surface";
}

LocationKind location_kind_from_string(std::string_view text) {
  for (auto k : {LocationKind::surface, LocationKind::container, LocationKind::room_floor}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("", "unknown location kind '" + std::string(text) + "'");
}

std::string_view to_string(Verb v) {
  switch (v) {
    case Verb::noop: return "noop";
    case Verb::walk_to: return "walk_to";
    case Verb::grab: return "grab";
    case Verb::put: return "put";
    case Verb::open: return "open";
    case Verb::close: return "close";
  }
  return "noop";
}

std::optional<ClassIndex> Layout::find_class(std::string_view name) const {
  return lookup(class_index_, name);
}
std::optional<LocationIndex> Layout::find_location(std::string_view id) const {
  return lookup(location_index_, id);
}
std::optional<ObjectIndex> Layout::find_object(std::string_view id) const {
  return lookup(object_index_, id);
}

double action_cost(const Action& action, const ActionCosts& costs) {
  switch (action.verb) {
    case Verb::noop: return 0.0;
    case Verb::walk_to: return costs.walk_to;
    case Verb::grab: return costs.grab;
    case Verb::put: return costs.put;
    case Verb::open: return costs.open;
    case Verb::close: return costs.close;
  }
  return 0.0;
}

IllegalAction::IllegalAction(Agent agent, std::string action, std::string reason)
    : Error(std::string(to_string(agent)) + " cannot " + action + ": " + reason),
      agent_(agent),
      action_(std::move(action)),
      reason_(std::move(reason)) {}

// Grants the free transition functions write access to WorldState internals.
class WorldMutator {
 public:
  static std::vector<std::uint8_t>& open(WorldState& s) { return s.open_; }
  static std::vector<Place>& places(WorldState& s) { return s.places_; }
  static LocationIndex& agent_at(WorldState& s, Agent a) { return s.agent_at_[static_cast<int>(a)]; }
  static std::vector<ObjectIndex>& holding(WorldState& s, Agent a) { return s.holding_[static_cast<int>(a)]; }
  static int& timestep(WorldState& s) { return s.timestep_; }
};

WorldState WorldState::from_scene(const SceneSpec& scene) {
  auto layout = std::make_shared<Layout>();

  auto classes = scene.classes;
  std::sort(classes.begin(), classes.end(), [](auto& a, auto& b) { return a.name < b.name; });
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i].name.empty()) throw ConfigError("classes", "empty class name");
    if (!layout->class_index_.emplace(classes[i].name, static_cast<ClassIndex>(i)).second) {
      throw ConfigError("classes", "duplicate class '" + classes[i].name + "'");
    }
  }
  layout->classes_ = std::move(classes);

  auto locations = scene.locations;
  std::sort(locations.begin(), locations.end(), [](auto& a, auto& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < locations.size(); ++i) {
    const auto& loc = locations[i];
    if (loc.id.empty()) throw ConfigError("locations", "empty location id");
    if (loc.openable && loc.kind != LocationKind::container) {
      throw ConfigError("locations/" + loc.id, "only containers may be openable");
    }
    if (loc.open && !loc.openable) {
      throw ConfigError("locations/" + loc.id, "open requires openable");
    }
    if (!layout->location_index_.emplace(loc.id, static_cast<LocationIndex>(i)).second) {
      throw ConfigError("locations", "duplicate location '" + loc.id + "'");
    }
  }
  layout->locations_ = std::move(locations);
  if (layout->locations_.empty()) throw ConfigError("locations", "scene has no locations");

  auto objects = scene.objects;
  std::sort(objects.begin(), objects.end(), [](auto& a, auto& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    auto cls = layout->find_class(o.cls);
    if (!cls) throw ConfigError("objects/" + o.id, "unknown class '" + o.cls + "'");
    if (!layout->object_index_.emplace(o.id, static_cast<ObjectIndex>(i)).second) {
      throw ConfigError("objects", "duplicate object '" + o.id + "'");
    }
    layout->objects_.push_back({o.id, *cls});
  }

  WorldState s;
  s.open_.reserve(layout->locations_.size());
  for (const auto& loc : layout->locations_) s.open_.push_back(loc.open ? 1 : 0);

  auto start = [&](const std::string& id, const char* field) {
    auto l = layout->find_location(id);
    if (!l) throw ConfigError(field, "unknown location '" + id + "'");
    return *l;
  };
  s.agent_at_[0] = start(scene.human_start, "agents/human");
  s.agent_at_[1] = start(scene.robot_start, "agents/robot");

  s.places_.resize(objects.size());
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& at = objects[i].at;
    if (at.starts_with(kHandPrefix)) {
      Agent a;
      try {
        a = agent_from_string(std::string_view(at).substr(kHandPrefix.size()));
      } catch (const ConfigError&) {
        throw ConfigError("objects/" + objects[i].id, "unknown holder '" + at + "'");
      }
      auto& hand = s.holding_[static_cast<int>(a)];
      if (static_cast<int>(hand.size()) >= kHandCapacity) {
        throw ConfigError("objects/" + objects[i].id, "hand capacity exceeded");
      }
      hand.push_back(static_cast<ObjectIndex>(i));
      s.places_[i] = Place{true, static_cast<std::uint16_t>(a)};
    } else {
      auto l = layout->find_location(at);
      if (!l) throw ConfigError("objects/" + objects[i].id, "unknown location '" + at + "'");
      s.places_[i] = Place{false, *l};
    }
  }
  s.layout_ = std::move(layout);
  return s;
}

bool WorldState::accessible(LocationIndex l) const {
  const auto& loc = layout_->location(l);
  return loc.kind != LocationKind::container || !loc.openable || open_[l] != 0;
}

int WorldState::count_at(ClassIndex cls, LocationIndex loc) const {
  int n = 0;
  const auto& objs = layout_->objects();
  for (std::size_t i = 0; i < places_.size(); ++i) {
    if (!places_[i].in_hand && places_[i].index == loc && objs[i].cls == cls) ++n;
  }
  return n;
}

std::vector<ObjectIndex> WorldState::objects_at(LocationIndex loc) const {
  std::vector<ObjectIndex> out;
  for (std::size_t i = 0; i < places_.size(); ++i) {
    if (!places_[i].in_hand && places_[i].index == loc) out.push_back(static_cast<ObjectIndex>(i));
  }
  return out;
}

std::string WorldState::describe() const {
  std::ostringstream os;
  os << "t=" << timestep_;
  for (Agent a : kAgents) {
    os << ' ' << to_string(a) << '@' << layout_->location(agent_at(a)).id << '[';
    const auto& held = holding(a);
    for (std::size_t i = 0; i < held.size(); ++i) {
      os << (i ? "," : "") << layout_->object(held[i]).id;
    }
    os << ']';
  }
  for (std::size_t l = 0; l < open_.size(); ++l) {
    const auto& loc = layout_->location(static_cast<LocationIndex>(l));
    if (loc.openable) os << ' ' << loc.id << (open_[l] ? ":open" : ":closed");
  }
  for (std::size_t l = 0; l < open_.size(); ++l) {
    auto here = objects_at(static_cast<LocationIndex>(l));
    if (here.empty()) continue;
    os << ' ' << layout_->location(static_cast<LocationIndex>(l)).id << '{';
    for (std::size_t i = 0; i < here.size(); ++i) os << (i ? "," : "") << layout_->object(here[i]).id;
    os << '}';
  }
  return os.str();
}

bool WorldState::same_configuration(const WorldState& other) const {
  return layout_ == other.layout_ && open_ == other.open_ && places_ == other.places_ &&
         agent_at_ == other.agent_at_ && holding_ == other.holding_;
}

bool operator==(const WorldState& a, const WorldState& b) {
  return a.timestep_ == b.timestep_ && a.same_configuration(b);
}

std::optional<std::string> why_illegal(const WorldState& s, const Action& a) {
  const auto& layout = s.layout();
  const auto n_loc = static_cast<int>(layout.locations().size());
  const auto n_obj = static_cast<int>(layout.objects().size());
  const auto here = s.agent_at(a.agent);
  const auto& held = s.holding(a.agent);

  auto check_location = [&]() -> std::optional<std::string> {
    if (a.location < 0 || a.location >= n_loc) return "no such location";
    return std::nullopt;
  };
  auto check_object = [&]() -> std::optional<std::string> {
    if (a.object < 0 || a.object >= n_obj) return "no such object";
    return std::nullopt;
  };

  switch (a.verb) {
    case Verb::noop:
      return std::nullopt;
    case Verb::walk_to:
      if (auto e = check_location()) return e;
      if (a.location == here) return "already there";
      return std::nullopt;
    case Verb::grab: {
      if (auto e = check_object()) return e;
      const auto& p = s.place(static_cast<ObjectIndex>(a.object));
      if (p.in_hand) return "object is held";
      if (p.index != here) return "object is not here";
      if (!s.accessible(p.index)) return "container is closed";
      if (static_cast<int>(held.size()) >= kHandCapacity) return "hands are full";
      return std::nullopt;
    }
    case Verb::put: {
      if (auto e = check_object()) return e;
      if (auto e = check_location()) return e;
      const auto& p = s.place(static_cast<ObjectIndex>(a.object));
      if (!p.in_hand || p.index != static_cast<std::uint16_t>(a.agent)) return "object not held";
      if (a.location != here) return "target is not here";
      if (layout.location(static_cast<LocationIndex>(a.location)).kind == LocationKind::room_floor) {
        return "cannot put on a room floor";
      }
      if (!s.accessible(static_cast<LocationIndex>(a.location))) return "container is closed";
      return std::nullopt;
    }
    case Verb::open:
    case Verb::close: {
      if (auto e = check_location()) return e;
      const auto l = static_cast<LocationIndex>(a.location);
      if (!layout.location(l).openable) return "not openable";
      if (l != here) return "not here";
      const bool want_open = a.verb == Verb::open;
      if (s.is_open(l) == want_open) return want_open ? "already open" : "already closed";
      return std::nullopt;
    }
  }
  return "unknown verb";
}

WorldState apply_action(const WorldState& state, const Action& a) {
  if (auto reason = why_illegal(state, a)) {
    throw IllegalAction(a.agent, render(a, state.layout()), *reason);
  }
  WorldState next = state;
  switch (a.verb) {
    case Verb::noop:
      break;
    case Verb::walk_to:
      WorldMutator::agent_at(next, a.agent) = static_cast<LocationIndex>(a.location);
      break;
    case Verb::grab: {
      const auto o = static_cast<ObjectIndex>(a.object);
      WorldMutator::places(next)[o] = Place{true, static_cast<std::uint16_t>(a.agent)};
      WorldMutator::holding(next, a.agent).push_back(o);
      break;
    }
    case Verb::put: {
      const auto o = static_cast<ObjectIndex>(a.object);
      WorldMutator::places(next)[o] = Place{false, static_cast<std::uint16_t>(a.location)};
      auto& hand = WorldMutator::holding(next, a.agent);
      hand.erase(std::find(hand.begin(), hand.end(), o));
      break;
    }
    case Verb::open:
      WorldMutator::open(next)[static_cast<std::size_t>(a.location)] = 1;
      break;
    case Verb::close:
      WorldMutator::open(next)[static_cast<std::size_t>(a.location)] = 0;
      break;
  }
  return next;
}

WorldState step(const WorldState& state, const Action& human_action, const Action& robot_action) {
  if (human_action.agent != Agent::human) {
    throw IllegalAction(Agent::human, render(human_action, state.layout()), "action belongs to robot");
  }
  if (robot_action.agent != Agent::robot) {
    throw IllegalAction(Agent::robot, render(robot_action, state.layout()), "action belongs to human");
  }
  WorldState next = apply_action(state, human_action);
  next = apply_action(next, robot_action);
  ++WorldMutator::timestep(next);
  return next;
}

std::vector<Action> legal_actions(const WorldState& s, Agent agent) {
  const auto& layout = s.layout();
  const auto n_loc = static_cast<LocationIndex>(layout.locations().size());
  const auto here = s.agent_at(agent);
  const auto& held = s.holding(agent);

  std::vector<Action> out;
  out.push_back(Action::noop(agent));
  for (LocationIndex l = 0; l < n_loc; ++l) {
    if (l != here) out.push_back(Action::walk_to(agent, l));
  }
  if (static_cast<int>(held.size()) < kHandCapacity && s.accessible(here)) {
    for (ObjectIndex o : s.objects_at(here)) out.push_back(Action::grab(agent, o));
  }
  if (layout.location(here).kind != LocationKind::room_floor && s.accessible(here)) {
    auto sorted = held;
    std::sort(sorted.begin(), sorted.end());
    for (ObjectIndex o : sorted) out.push_back(Action::put(agent, o, here));
  }
  if (layout.location(here).openable) {
    out.push_back(s.is_open(here) ? Action::close(agent, here) : Action::open(agent, here));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string render(const Action& a, const Layout& layout) {
  auto loc = [&]() -> std::string {
    if (a.location < 0 || a.location >= static_cast<int>(layout.locations().size())) return "?";
    return layout.location(static_cast<LocationIndex>(a.location)).id;
  };
  auto obj = [&]() -> std::string {
    if (a.object < 0 || a.object >= static_cast<int>(layout.objects().size())) return "?";
    return layout.object(static_cast<ObjectIndex>(a.object)).id;
  };
  switch (a.verb) {
    case Verb::noop: return "noop";
    case Verb::walk_to: return "walk_to(" + loc() + ")";
    case Verb::grab: return "grab(" + obj() + ")";
    case Verb::put: return "put(" + obj() + ", " + loc() + ")";
    case Verb::open: return "open(" + loc() + ")";
    case Verb::close: return "close(" + loc() + ")";
  }
  return "noop";
}

Action parse_action(std::string_view text, Agent agent, const Layout& layout) {
  auto fail = [&](const std::string& why) -> ConfigError {
    return ConfigError("action '" + std::string(text) + "'", why);
  };
  auto trim = [](std::string_view v) {
    while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
    while (!v.empty() && v.back() == ' ') v.remove_suffix(1);
    return v;
  };
  text = trim(text);
  if (text == "noop") return Action::noop(agent);
  auto open_paren = text.find('(');
  if (open_paren == std::string_view::npos || text.back() != ')') throw fail("malformed");
  auto verb = text.substr(0, open_paren);
  auto args_text = text.substr(open_paren + 1, text.size() - open_paren - 2);
  std::vector<std::string_view> args;
  while (true) {
    auto comma = args_text.find(',');
    args.push_back(trim(args_text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    args_text.remove_prefix(comma + 1);
  }
  auto location = [&](std::string_view id) {
    auto l = layout.find_location(id);
    if (!l) throw fail("unknown location '" + std::string(id) + "'");
    return *l;
  };
  auto object = [&](std::string_view id) {
    auto o = layout.find_object(id);
    if (!o) throw fail("unknown object '" + std::string(id) + "'");
    return *o;
  };
  if (verb == "walk_to" && args.size() == 1) return Action::walk_to(agent, location(args[0]));
  if (verb == "grab" && args.size() == 1) return Action::grab(agent, object(args[0]));
  if (verb == "put" && args.size() == 2) return Action::put(agent, object(args[0]), location(args[1]));
  if (verb == "open" && args.size() == 1) return Action::open(agent, location(args[0]));
  if (verb == "close" && args.size() == 1) return Action::close(agent, location(args[0]));
  throw fail("unknown verb or wrong arity");
}

}  // namespace siftom
