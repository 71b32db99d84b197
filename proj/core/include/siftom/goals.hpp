#pragma once

#include <compare>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "siftom/errors.hpp"
#include "siftom/world.hpp"

namespace siftom {

enum class Relation : std::uint8_t { on, inside };
std::string_view to_string(Relation r);

// "At least `count` instances of `cls` are on/inside `target`."
struct Predicate {
  Relation relation = Relation::on;
  std::string cls;
  std::string target;
  int count = 1;

  // Orders by (cls, target, relation, count).
  friend std::strong_ordering operator<=>(const Predicate& a, const Predicate& b) {
    if (auto c = a.cls <=> b.cls; c != 0) return c;
    if (auto c = a.target <=> b.target; c != 0) return c;
    if (auto c = a.relation <=> b.relation; c != 0) return c;
    return a.count <=> b.count;
  }
  friend bool operator==(const Predicate&, const Predicate&) = default;

  bool same_slot(const Predicate& o) const {
    return cls == o.cls && target == o.target && relation == o.relation;
  }
};

// Canonical form: `on(fork, kitchentable, 3)`.
std::string render(const Predicate& p);
Predicate parse_predicate(std::string_view text);

// A conjunction of predicates: sorted, at most one predicate per
// (class, target, relation) slot, every count >= 1.
class PredicateSet {
 public:
  PredicateSet() = default;
  // Merges same-slot predicates by summing counts; drops zero counts.
  explicit PredicateSet(std::vector<Predicate> predicates);

  const std::vector<Predicate>& items() const { return items_; }
  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  // Count demanded for the slot of `p`, or 0.
  int count_for(const Predicate& p) const;

  friend auto operator<=>(const PredicateSet&, const PredicateSet&) = default;
  friend bool operator==(const PredicateSet&, const PredicateSet&) = default;

 private:
  std::vector<Predicate> items_;
};

// Predicates joined by " & "; the empty set renders as "{}".
std::string render(const PredicateSet& s);
PredicateSet parse_predicate_set(std::string_view text);

// Per-slot count subtraction (`goal \ share`), clamped at zero.
PredicateSet subtract(const PredicateSet& goal, const PredicateSet& share);

enum class TaskFamily : std::uint8_t { set_table, prepare_meal, put_groceries, load_dishwasher, breakfast };
std::string_view to_string(TaskFamily f);
TaskFamily task_family_from_string(std::string_view text);

struct GoalSpec {
  std::string id;
  PredicateSet predicates;
  TaskFamily family = TaskFamily::set_table;

  static GoalSpec make(TaskFamily family, PredicateSet predicates);
};

struct TeamGoal {
  GoalSpec goal;
  PredicateSet human_share;
  PredicateSet robot_share;

  // robot_share must fit inside goal.predicates slot by slot.
  static TeamGoal split(GoalSpec goal, PredicateSet robot_share);
};

class EmptyGoalSpace : public Error {
 public:
  using Error::Error;
};

struct GoalSpace {
  std::vector<GoalSpec> goals;
  std::vector<double> prior;

  // Uniform prior over `goals`, which must be non-empty and duplicate-free.
  static GoalSpace uniform(std::vector<GoalSpec> goals);
  // Checks sizes, duplicates and that the prior sums to 1 within 1e-9.
  void validate() const;
  std::size_t size() const { return goals.size(); }
  const GoalSpec* find(std::string_view id) const;
  double prior_of(std::string_view id) const;
};

struct GoalLimits {
  std::vector<int> counts{2, 3};
};

// Instantiates the goal template of `family` against the scene in `state`.
// Counts are drawn from `limits.counts` and bounded by available instances.
GoalSpace enumerate_goal_space(TaskFamily family, const WorldState& state, const GoalLimits& limits = {});

int satisfied_count(const WorldState& state, const Predicate& p);
bool goal_satisfied(const WorldState& state, const PredicateSet& predicates);

struct Deficit {
  Predicate predicate;
  int deficit = 0;
  friend bool operator==(const Deficit&, const Deficit&) = default;
};
std::vector<Deficit> remaining(const WorldState& state, const PredicateSet& predicates);

struct Delegation {
  PredicateSet share;
  double weight = 0.0;
};

// Robot shares of the remaining work of `goal`: for every unfinished slot the
// robot takes 0..deficit items, at least one slot non-zero. A share's weight
// is partial_weight^(slots taken only in part), normalized; 1 gives uniform
// weights. Keeps the `cap` heaviest (ties by share order), sorted by share.
std::vector<Delegation> candidate_delegations(const GoalSpec& goal, const WorldState& state,
                                              std::size_t cap = std::numeric_limits<std::size_t>::max(),
                                              double partial_weight = 1.0);

// True when every predicate of `share` names a slot of `predicates` that
// still has at least that many items missing in `state`.
bool within_remaining(const PredicateSet& share, const WorldState& state, const PredicateSet& predicates);

}  // namespace siftom
