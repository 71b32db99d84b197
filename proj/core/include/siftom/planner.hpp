#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "siftom/goals.hpp"
#include "siftom/posterior.hpp"
#include "siftom/world.hpp"

namespace siftom {

struct PlannerConfig {
  // Boltzmann temperature.
  double temperature = 1.0;
  // Multiplies the cost-to-go inside q-values; 1 gives undiscounted plan cost.
  double discount = 1.0;
  // Longest plan (in actions) the search will consider.
  int max_depth = 40;
  // Time charged for noop while the goal is still unsatisfied.
  double wait_cost = 1.0;
  ActionCosts costs;

  void validate() const;
};

struct Plan {
  std::vector<Action> actions;
  double total_cost = 0.0;
};

class Unreachable : public Error {
 public:
  using Error::Error;
};

class NoFiniteAction : public Error {
 public:
  using Error::Error;
};

// softmax(-cost / T). Non-finite costs get probability 0. Returns all zeros
// when no cost is finite.
std::vector<double> boltzmann_from_costs(std::span<const double> costs, double temperature);

// Optimal single-agent task planning over the symbolic world.
//
// Searches an abstraction where instances of one class are interchangeable:
// (agent location, open flags, held counts per goal class, stock per goal
// class and location). Objects of other classes only matter while held.
// Costs-to-go are memoized per predicate set, so a Planner is cheap to query
// repeatedly but must not be shared between threads.
class Planner {
 public:
  explicit Planner(PlannerConfig cfg = {});
  ~Planner();
  Planner(Planner&&) noexcept;
  Planner& operator=(Planner&&) noexcept;

  const PlannerConfig& config() const { return cfg_; }

  // Minimal cost for `agent` alone to satisfy `goal`; nullopt if unreachable
  // within max_depth actions. Objects held by the other agent are unavailable.
  std::optional<double> optimal_cost(const WorldState& state, Agent agent, const PredicateSet& goal);

  // Cost of `action` plus discounted optimal cost from the resulting state.
  // Throws IllegalAction.
  std::optional<double> q_value(const WorldState& state, const Action& action, const PredicateSet& goal);

  // Boltzmann-rational distribution over the legal actions of `agent`.
  // Throws NoFiniteAction when no legal action can reach the goal.
  PosteriorTable<Action> boltzmann_policy(const WorldState& state, Agent agent, const PredicateSet& goal);

  // Log-probability of `action` under boltzmann_policy; -inf for impossible.
  double action_log_probability(const WorldState& state, const Action& action, const PredicateSet& goal);

  // First optimal action in action-encoding order; noop when satisfied.
  // nullopt if the goal is unreachable.
  std::optional<Action> next_action(const WorldState& state, Agent agent, const PredicateSet& goal);

  // Minimum-cost plan with lexicographic tie-breaking. Throws Unreachable.
  Plan make_plan(const WorldState& state, Agent agent, const PredicateSet& goal);

  // Number of A* searches run so far (memo misses).
  std::size_t searches() const { return searches_; }

 private:
  struct Problem;
  Problem& problem(const WorldState& state, Agent agent, const PredicateSet& goal);
  std::optional<double> search(Problem& p, const std::string& start);

  PlannerConfig cfg_;
  std::map<std::string, std::unique_ptr<Problem>> problems_;
  std::size_t searches_ = 0;
};

// Convenience wrappers using a throwaway Planner.
std::optional<double> optimal_cost(const WorldState& state, Agent agent, const PredicateSet& goal,
                                   const PlannerConfig& cfg = {});
std::optional<double> q_value(const WorldState& state, const Action& action, const PredicateSet& goal,
                              const PlannerConfig& cfg = {});
PosteriorTable<Action> boltzmann_policy(const WorldState& state, Agent agent, const PredicateSet& goal,
                                        const PlannerConfig& cfg = {});
Plan make_plan(const WorldState& state, Agent agent, const PredicateSet& goal, const PlannerConfig& cfg = {});

}  // namespace siftom
