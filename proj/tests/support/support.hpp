#pragma once

// Independent oracles and scene builders shared by the unit tests and the
// acceptance binary. The oracles search concrete instance-level states and
// enumerate full joint tables, so they share only the world rules with the
// library under test.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "siftom/fusion.hpp"
#include "siftom/goals.hpp"
#include "siftom/inference.hpp"
#include "siftom/planner.hpp"
#include "siftom/random.hpp"
#include "siftom/world.hpp"

namespace siftom::testing {

// Location shorthands for scene construction.
Location surface(std::string id);
Location container(std::string id, bool openable, bool open);
Location floor_location(std::string id);
ObjectClass object_class(std::string name, Category category);

// One apple on the counter, the fridge open, the human at the counter.
WorldState fridge_world();

struct PlannerCase {
  WorldState state;
  PredicateSet goal;
};

// At most `max_objects` objects and `max_locations` locations; the goal may be
// unreachable (absent class or more instances than exist).
PlannerCase random_planner_case(Rng& rng, int max_objects = 6, int max_locations = 4);

// Exhaustive breadth-first search over concrete states (unit costs). nullopt
// when the goal cannot be reached.
std::optional<int> bfs_cost(const WorldState& state, Agent agent, const PredicateSet& goal);

// Boltzmann probability of `action` computed from BFS costs.
double oracle_action_probability(const WorldState& state, const Action& action, const PredicateSet& goal,
                                 const PlannerConfig& cfg);

// Product of oracle_action_probability along the history.
double oracle_likelihood(const ActionHistory& history, const PredicateSet& human_goal, const PlannerConfig& cfg);

struct MicroWorld {
  GoalSpace space;
  ActionHistory history;
};

// <= 3 goals with <= 3 delegations each and <= 4 observed human actions.
MicroWorld random_micro_world(Rng& rng);

// P(G | a_h) by enumeration, keyed by goal id.
std::map<std::string, double> oracle_goal_posterior(const MicroWorld& w, const PlannerConfig& cfg);

// Robot shares by direct enumeration of per-slot takes, uniform weights.
std::vector<PredicateSet> oracle_delegations(const PredicateSet& goal, const WorldState& state);

// Fixed pseudo-random speech likelihood per share.
class TableScorer : public SubgoalScorer {
 public:
  explicit TableScorer(std::uint64_t salt, bool constant = false) : salt_(salt), constant_(constant) {}
  double likelihood(const Transcript& transcript, const PredicateSet& share) const override;

 private:
  std::uint64_t salt_;
  bool constant_;
};

// Normalized sum_G L(G \ g_r) P(G) w(g_r | G) * speech(g_r) over every goal
// and delegation; the action-only table when speech is null.
std::map<PredicateSet, double> oracle_fused(const MicroWorld& w, const PlannerConfig& cfg, const SubgoalScorer* speech);

}  // namespace siftom::testing
