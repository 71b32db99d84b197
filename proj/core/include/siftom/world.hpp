#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "siftom/errors.hpp"

namespace siftom {

enum class Agent : std::uint8_t { human = 0, robot = 1 };
inline constexpr std::array<Agent, 2> kAgents{Agent::human, Agent::robot};

std::string_view to_string(Agent agent);
Agent agent_from_string(std::string_view text);
inline constexpr Agent other(Agent a) { return a == Agent::human ? Agent::robot : Agent::human; }

enum class Category : std::uint8_t { utensil, dish, glass, food };
std::string_view to_string(Category c);
Category category_from_string(std::string_view text);

enum class LocationKind : std::uint8_t { surface, container, room_floor };
std::string_view to_string(LocationKind k);
LocationKind location_kind_from_string(std::string_view text);

struct ObjectClass {
  std::string name;
  Category category = Category::food;
  // Extra spoken noun phrases for this class, e.g. "cereal box".
  std::vector<std::string> aliases;
};

struct Location {
  std::string id;
  LocationKind kind = LocationKind::surface;
  bool openable = false;
  bool open = false;
};

// Where an object starts: a location id, or "hand:human" / "hand:robot".
struct ObjectPlacement {
  std::string id;
  std::string cls;
  std::string at;
};

// Plain-data description of a scene, as read from a scenario file.
struct SceneSpec {
  std::vector<ObjectClass> classes;
  std::vector<Location> locations;
  std::vector<ObjectPlacement> objects;
  std::string human_start;
  std::string robot_start;
};

using LocationIndex = std::uint16_t;
using ObjectIndex = std::uint16_t;
using ClassIndex = std::uint16_t;

// Immutable part of a scene. Classes, locations and objects are stored sorted
// by name, so index order equals lexicographic id order.
class Layout {
 public:
  struct ObjectInfo {
    std::string id;
    ClassIndex cls;
  };

  const std::vector<ObjectClass>& classes() const { return classes_; }
  const std::vector<Location>& locations() const { return locations_; }
  const std::vector<ObjectInfo>& objects() const { return objects_; }

  std::optional<ClassIndex> find_class(std::string_view name) const;
  std::optional<LocationIndex> find_location(std::string_view id) const;
  std::optional<ObjectIndex> find_object(std::string_view id) const;

  const ObjectClass& cls(ClassIndex i) const { return classes_.at(i); }
  const Location& location(LocationIndex i) const { return locations_.at(i); }
  const ObjectInfo& object(ObjectIndex i) const { return objects_.at(i); }
  const std::string& class_name_of(ObjectIndex i) const { return classes_.at(objects_.at(i).cls).name; }

 private:
  friend class WorldState;
  std::vector<ObjectClass> classes_;
  std::vector<Location> locations_;
  std::vector<ObjectInfo> objects_;
  std::map<std::string, ClassIndex, std::less<>> class_index_;
  std::map<std::string, LocationIndex, std::less<>> location_index_;
  std::map<std::string, ObjectIndex, std::less<>> object_index_;
};

struct Place {
  bool in_hand = false;
  // Location index, or agent index when in_hand.
  std::uint16_t index = 0;

  friend bool operator==(const Place&, const Place&) = default;
};

enum class Verb : std::uint8_t { noop, walk_to, grab, put, open, close };
std::string_view to_string(Verb v);

struct Action {
  Agent agent = Agent::human;
  Verb verb = Verb::noop;
  int object = -1;
  int location = -1;

  static Action noop(Agent a) { return {a, Verb::noop, -1, -1}; }
  static Action walk_to(Agent a, LocationIndex l) { return {a, Verb::walk_to, -1, l}; }
  static Action grab(Agent a, ObjectIndex o) { return {a, Verb::grab, o, -1}; }
  static Action put(Agent a, ObjectIndex o, LocationIndex l) { return {a, Verb::put, o, l}; }
  static Action open(Agent a, LocationIndex l) { return {a, Verb::open, -1, l}; }
  static Action close(Agent a, LocationIndex l) { return {a, Verb::close, -1, l}; }

  friend auto operator<=>(const Action&, const Action&) = default;
};

// Per-verb costs; noop always costs 0.
struct ActionCosts {
  double walk_to = 1.0;
  double grab = 1.0;
  double put = 1.0;
  double open = 1.0;
  double close = 1.0;
};

double action_cost(const Action& action, const ActionCosts& costs = {});

class IllegalAction : public Error {
 public:
  IllegalAction(Agent agent, std::string action, std::string reason);
  Agent agent() const { return agent_; }
  const std::string& action() const { return action_; }
  const std::string& reason() const { return reason_; }

 private:
  Agent agent_;
  std::string action_;
  std::string reason_;
};

class WorldState {
 public:
  // Validates the scene and builds the initial state (timestep 0).
  // Throws ConfigError on unknown references or broken invariants.
  static WorldState from_scene(const SceneSpec& scene);

  const Layout& layout() const { return *layout_; }
  const std::shared_ptr<const Layout>& layout_ptr() const { return layout_; }

  bool is_open(LocationIndex l) const { return open_[l] != 0; }
  // Surfaces, floors, non-openable containers and open containers.
  bool accessible(LocationIndex l) const;
  const Place& place(ObjectIndex o) const { return places_[o]; }
  LocationIndex agent_at(Agent a) const { return agent_at_[static_cast<int>(a)]; }
  const std::vector<ObjectIndex>& holding(Agent a) const { return holding_[static_cast<int>(a)]; }
  int timestep() const { return timestep_; }

  // Number of instances of `cls` resting at `loc`.
  int count_at(ClassIndex cls, LocationIndex loc) const;
  std::vector<ObjectIndex> objects_at(LocationIndex loc) const;

  // Human-readable one-line summary, stable across runs.
  std::string describe() const;

  // Equal placements, open flags, positions and holdings; ignores the timestep.
  bool same_configuration(const WorldState& other) const;
  friend bool operator==(const WorldState& a, const WorldState& b);

 private:
  friend class WorldMutator;
  std::shared_ptr<const Layout> layout_;
  std::vector<std::uint8_t> open_;
  std::vector<Place> places_;
  std::array<LocationIndex, 2> agent_at_{};
  std::array<std::vector<ObjectIndex>, 2> holding_;
  int timestep_ = 0;
};

inline constexpr int kHandCapacity = 2;

// Returns the reason `action` is illegal for its agent in `state`, or nullopt.
std::optional<std::string> why_illegal(const WorldState& state, const Action& action);
inline bool is_legal(const WorldState& state, const Action& action) {
  return !why_illegal(state, action).has_value();
}

// Applies a single agent's action without advancing time. Throws IllegalAction.
WorldState apply_action(const WorldState& state, const Action& action);

// Joint transition: human first, then robot, then timestep + 1.
WorldState step(const WorldState& state, const Action& human_action, const Action& robot_action);

// Every action of `agent` that `step` accepts; ordered by action encoding.
std::vector<Action> legal_actions(const WorldState& state, Agent agent);

std::string render(const Action& action, const Layout& layout);
Action parse_action(std::string_view text, Agent agent, const Layout& layout);

}  // namespace siftom
