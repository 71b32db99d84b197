#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "siftom/goals.hpp"
#include "siftom/planner.hpp"
#include "siftom/posterior.hpp"
#include "siftom/world.hpp"

namespace siftom {

// Observed human actions from a start state; the robot idles meanwhile.
class ActionHistory {
 public:
  // Replays the actions (robot noop each step). Throws IllegalAction.
  ActionHistory(WorldState start, std::vector<Action> human_actions);

  const WorldState& start_state() const { return states_.front(); }
  const std::vector<Action>& human_actions() const { return actions_; }
  // states()[t] is the state before human_actions()[t]; back() is the current state.
  const std::vector<WorldState>& states() const { return states_; }
  const WorldState& current_state() const { return states_.back(); }
  std::size_t size() const { return actions_.size(); }

 private:
  std::vector<Action> actions_;
  std::vector<WorldState> states_;
};

// log P(a_h | g_h): sum over steps of the Boltzmann log-probability.
double action_log_likelihood(const ActionHistory& history, const PredicateSet& human_goal, Planner& planner);
double action_likelihood(const ActionHistory& history, const PredicateSet& human_goal, Planner& planner);
double action_likelihood(const ActionHistory& history, const PredicateSet& human_goal, const PlannerConfig& cfg);

// P(G | a_h) with the human assumed to pursue the whole goal. Keys are goal
// ids. Falls back to the prior when every likelihood is zero.
PosteriorTable<std::string> goal_posterior(const ActionHistory& history, const GoalSpace& space, Planner& planner);
PosteriorTable<std::string> goal_posterior(const ActionHistory& history, const GoalSpace& space,
                                           const PlannerConfig& cfg);

template <class Key>
std::vector<typename PosteriorTable<Key>::Entry> top_k(const PosteriorTable<Key>& posterior, std::size_t k) {
  return posterior.top_k(k);
}

// One (goal, robot share) term of the action-side joint table.
struct JointTerm {
  std::string goal_id;
  PredicateSet share;
  double log_likelihood;  // log P(a_h | G \ share)
  double prior;           // P(G)
  double weight;          // P(share | G)
};

// Joint table over the K most likely goals and their candidate delegations,
// scoring each share with the human pursuing the rest of the goal.
std::vector<JointTerm> delegation_joint(const ActionHistory& history, const GoalSpace& space, Planner& planner,
                                        std::size_t k_goals, double partial_weight = 1.0);

// P(g_r | a_h) proportional to sum_G P(a_h | G \ g_r) P(G) P(g_r | G) over the
// K most likely goals, truncated to the N best shares and renormalized.
// `partial_weight` shapes P(g_r | G) as in candidate_delegations.
PosteriorTable<PredicateSet> subgoal_posterior(const ActionHistory& history, const GoalSpace& space,
                                               Planner& planner, std::size_t k_goals, std::size_t n_subgoals,
                                               double partial_weight = 1.0);
PosteriorTable<PredicateSet> subgoal_posterior(const ActionHistory& history, const GoalSpace& space,
                                               const PlannerConfig& cfg, std::size_t k_goals, std::size_t n_subgoals,
                                               double partial_weight = 1.0);

// Marginalizes a joint table into shares (unnormalized linear weights),
// rescaled by the largest log term. Exposed for fusion.
std::vector<PosteriorTable<PredicateSet>::Entry> marginal_share_weights(const std::vector<JointTerm>& joint);

}  // namespace siftom
