#include "siftom/inference.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace siftom {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

template <class Key>
PosteriorTable<Key> truncate(const PosteriorTable<Key>& table, std::size_t n) {
  if (table.size() <= n) return table;
  return PosteriorTable<Key>::from_weights(table.top_k(n));
}

}  // namespace

ActionHistory::ActionHistory(WorldState start, std::vector<Action> human_actions)
    : actions_(std::move(human_actions)) {
  states_.reserve(actions_.size() + 1);
  states_.push_back(std::move(start));
  for (const auto& a : actions_) {
    states_.push_back(step(states_.back(), a, Action::noop(Agent::robot)));
  }
}

double action_log_likelihood(const ActionHistory& history, const PredicateSet& human_goal, Planner& planner) {
  double total = 0.0;
  for (std::size_t t = 0; t < history.size(); ++t) {
    total += planner.action_log_probability(history.states()[t], history.human_actions()[t], human_goal);
    if (total == kNegInf) break;
  }
  return total;
}

double action_likelihood(const ActionHistory& history, const PredicateSet& human_goal, Planner& planner) {
  return std::exp(action_log_likelihood(history, human_goal, planner));
}

double action_likelihood(const ActionHistory& history, const PredicateSet& human_goal, const PlannerConfig& cfg) {
  Planner planner(cfg);
  return action_likelihood(history, human_goal, planner);
}

PosteriorTable<std::string> goal_posterior(const ActionHistory& history, const GoalSpace& space, Planner& planner) {
  space.validate();
  std::vector<PosteriorTable<std::string>::Entry> prior;
  std::vector<PosteriorTable<std::string>::Entry> log_w;
  for (std::size_t i = 0; i < space.goals.size(); ++i) {
    prior.emplace_back(space.goals[i].id, space.prior[i]);
    if (history.size() == 0) continue;
    log_w.emplace_back(space.goals[i].id, action_log_likelihood(history, space.goals[i].predicates, planner) +
                                              safe_log(space.prior[i]));
  }
  if (history.size() == 0) return PosteriorTable<std::string>::from_weights(std::move(prior));
  auto post = PosteriorTable<std::string>::from_log_weights(std::move(log_w));
  if (post.empty()) return PosteriorTable<std::string>::from_weights(std::move(prior));
  return post;
}

PosteriorTable<std::string> goal_posterior(const ActionHistory& history, const GoalSpace& space,
                                           const PlannerConfig& cfg) {
  Planner planner(cfg);
  return goal_posterior(history, space, planner);
}

std::vector<JointTerm> delegation_joint(const ActionHistory& history, const GoalSpace& space, Planner& planner,
                                        std::size_t k_goals, double partial_weight) {
  if (k_goals == 0) throw std::invalid_argument("k_goals must be >= 1");
  auto goals = goal_posterior(history, space, planner).top_k(k_goals);
  const WorldState& now = history.current_state();

  std::map<PredicateSet, double> cache;
  std::vector<JointTerm> joint;
  for (const auto& [id, unused] : goals) {
    const GoalSpec& goal = *space.find(id);
    for (auto& d : candidate_delegations(goal, now, std::numeric_limits<std::size_t>::max(), partial_weight)) {
      PredicateSet human = subtract(goal.predicates, d.share);
      auto it = cache.find(human);
      if (it == cache.end()) {
        it = cache.emplace(human, action_log_likelihood(history, human, planner)).first;
      }
      joint.push_back({id, std::move(d.share), it->second, space.prior_of(id), d.weight});
    }
  }
  return joint;
}

std::vector<PosteriorTable<PredicateSet>::Entry> marginal_share_weights(const std::vector<JointTerm>& joint) {
  std::map<PredicateSet, double> log_mass;
  double peak = kNegInf;
  for (const auto& t : joint) {
    const double lw = t.log_likelihood + safe_log(t.prior) + safe_log(t.weight);
    auto [it, fresh] = log_mass.emplace(t.share, lw);
    if (!fresh) it->second = log_sum_exp(it->second, lw);
    peak = std::max(peak, it->second);
  }
  std::vector<PosteriorTable<PredicateSet>::Entry> out;
  out.reserve(log_mass.size());
  for (auto& [share, lw] : log_mass) {
    out.emplace_back(share, peak == kNegInf ? 0.0 : std::exp(lw - peak));
  }
  return out;
}

PosteriorTable<PredicateSet> subgoal_posterior(const ActionHistory& history, const GoalSpace& space,
                                               Planner& planner, std::size_t k_goals, std::size_t n_subgoals,
                                               double partial_weight) {
  if (n_subgoals == 0) throw std::invalid_argument("n_subgoals must be >= 1");
  auto joint = delegation_joint(history, space, planner, k_goals, partial_weight);
  auto post = PosteriorTable<PredicateSet>::from_weights(marginal_share_weights(joint));
  if (post.empty()) {
    // Every share is impossible under the observed actions: use P(G) P(g_r|G).
    std::vector<PosteriorTable<PredicateSet>::Entry> w;
    for (const auto& t : joint) w.emplace_back(t.share, t.prior * t.weight);
    post = PosteriorTable<PredicateSet>::from_weights(std::move(w));
  }
  return truncate(post, n_subgoals);
}

PosteriorTable<PredicateSet> subgoal_posterior(const ActionHistory& history, const GoalSpace& space,
                                               const PlannerConfig& cfg, std::size_t k_goals, std::size_t n_subgoals,
                                               double partial_weight) {
  Planner planner(cfg);
  return subgoal_posterior(history, space, planner, k_goals, n_subgoals, partial_weight);
}

}  // namespace siftom
