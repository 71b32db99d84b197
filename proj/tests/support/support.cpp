#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <unordered_map>
#include <unordered_set>

namespace siftom::testing {

Location surface(std::string id) { return {std::move(id), LocationKind::surface, false, false}; }
Location container(std::string id, bool openable, bool open) {
  return {std::move(id), LocationKind::container, openable, open};
}
Location floor_location(std::string id) { return {std::move(id), LocationKind::room_floor, false, false}; }
ObjectClass object_class(std::string name, Category category) { return {std::move(name), category, {}}; }

WorldState fridge_world() {
  SceneSpec s;
  s.classes = {object_class("apple", Category::food)};
  s.locations = {surface("counter"), container("fridge", true, true)};
  s.objects = {{"apple1", "apple", "counter"}};
  s.human_start = "counter";
  s.robot_start = "counter";
  return WorldState::from_scene(s);
}

namespace {

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

int uniform_int(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))); }

std::string state_key(const WorldState& s) {
  std::string k;
  for (Agent a : kAgents) k += std::to_string(s.agent_at(a)) + ",";
  for (std::size_t l = 0; l < s.layout().locations().size(); ++l) k += s.is_open(static_cast<LocationIndex>(l)) ? 'o' : 'c';
  k += '|';
  for (std::size_t o = 0; o < s.layout().objects().size(); ++o) {
    const auto& p = s.place(static_cast<ObjectIndex>(o));
    k += (p.in_hand ? "h" : "l") + std::to_string(p.index) + ",";
  }
  // Hold order is irrelevant to reachability but part of the state.
  for (Agent a : kAgents) {
    for (auto o : s.holding(a)) k += std::to_string(o) + ";";
    k += '/';
  }
  return k;
}

Relation relation_for(const Location& l) {
  return l.kind == LocationKind::container ? Relation::inside : Relation::on;
}

}  // namespace

PlannerCase random_planner_case(Rng& rng, int max_objects, int max_locations) {
  const std::vector<Location> pool{surface("counter"),           surface("kitchentable"),
                                   container("fridge", true, false), container("cabinet", true, true),
                                   container("sink", false, false),  floor_location("kitchen")};
  const std::vector<ObjectClass> classes{object_class("apple", Category::food), object_class("fork", Category::utensil),
                                         object_class("plate", Category::dish)};
  SceneSpec s;
  const int n_loc = uniform_int(rng, 2, max_locations);
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  for (int i = 0; i < n_loc; ++i) {
    auto l = pool[order[static_cast<std::size_t>(i)]];
    if (l.openable) l.open = rng.below(2) == 1;
    s.locations.push_back(l);
  }
  std::vector<std::string> placeable;
  for (const auto& l : s.locations) {
    if (l.kind != LocationKind::room_floor) placeable.push_back(l.id);
  }
  if (placeable.empty()) {
    s.locations.front() = surface("counter");
    placeable.push_back("counter");
  }
  const int n_cls = uniform_int(rng, 1, 3);
  for (int i = 0; i < n_cls; ++i) s.classes.push_back(classes[static_cast<std::size_t>(i)]);
  const int n_obj = uniform_int(rng, 1, max_objects);
  int held = 0;
  for (int i = 0; i < n_obj; ++i) {
    const auto& cls = pick(rng, s.classes).name;
    std::string at = pick(rng, placeable);
    if (held < 1 && rng.below(6) == 0) {
      at = "hand:human";
      ++held;
    }
    s.objects.push_back({cls + std::to_string(i + 1), cls, at});
  }
  s.human_start = pick(rng, s.locations).id;
  s.robot_start = pick(rng, s.locations).id;
  PlannerCase c{WorldState::from_scene(s), {}};

  std::vector<Predicate> preds;
  const int n_pred = uniform_int(rng, 1, 2);
  for (int i = 0; i < n_pred; ++i) {
    Predicate p;
    p.cls = rng.below(10) == 0 ? std::string("salmon") : pick(rng, s.classes).name;
    const auto& target = s.locations[rng.below(s.locations.size())];
    if (target.kind == LocationKind::room_floor) continue;
    p.target = target.id;
    p.relation = relation_for(target);
    const int have = static_cast<int>(std::count_if(s.objects.begin(), s.objects.end(),
                                                    [&](const ObjectPlacement& o) { return o.cls == p.cls; }));
    p.count = uniform_int(rng, 1, std::max(1, std::min(have, 3)) + (rng.below(8) == 0 ? 1 : 0));
    preds.push_back(p);
  }
  if (preds.empty()) {
    Predicate p;
    p.cls = s.classes.front().name;
    p.target = placeable.front();
    p.relation = relation_for(*std::find_if(s.locations.begin(), s.locations.end(),
                                            [&](const Location& l) { return l.id == p.target; }));
    preds.push_back(p);
  }
  c.goal = PredicateSet(std::move(preds));
  return c;
}

std::optional<int> bfs_cost(const WorldState& start, Agent agent, const PredicateSet& goal) {
  if (goal_satisfied(start, goal)) return 0;
  std::unordered_set<std::string> seen{state_key(start)};
  std::deque<std::pair<WorldState, int>> frontier{{start, 0}};
  while (!frontier.empty()) {
    auto [s, d] = std::move(frontier.front());
    frontier.pop_front();
    for (const auto& a : legal_actions(s, agent)) {
      if (a.verb == Verb::noop) continue;
      WorldState n = apply_action(s, a);
      if (!seen.insert(state_key(n)).second) continue;
      if (goal_satisfied(n, goal)) return d + 1;
      frontier.emplace_back(std::move(n), d + 1);
    }
  }
  return std::nullopt;
}

double oracle_action_probability(const WorldState& state, const Action& action, const PredicateSet& goal,
                                 const PlannerConfig& cfg) {
  const bool done = goal_satisfied(state, goal);
  std::vector<std::pair<Action, double>> q;
  for (const auto& a : legal_actions(state, action.agent)) {
    double c = a.verb == Verb::noop ? (done ? 0.0 : cfg.wait_cost) : 1.0;
    auto rest = bfs_cost(apply_action(state, a), action.agent, goal);
    if (!rest) continue;
    q.emplace_back(a, c + *rest);
  }
  double z = 0.0, mine = 0.0;
  for (const auto& [a, v] : q) {
    const double w = std::exp(-v / cfg.temperature);
    z += w;
    if (a == action) mine = w;
  }
  return z > 0.0 ? mine / z : 0.0;
}

double oracle_likelihood(const ActionHistory& history, const PredicateSet& human_goal, const PlannerConfig& cfg) {
  double l = 1.0;
  for (std::size_t t = 0; t < history.size(); ++t) {
    l *= oracle_action_probability(history.states()[t], history.human_actions()[t], human_goal, cfg);
  }
  return l;
}

MicroWorld random_micro_world(Rng& rng) {
  SceneSpec s;
  s.classes = {object_class("apple", Category::food), object_class("fork", Category::utensil),
               object_class("plate", Category::dish)};
  s.locations = {surface("counter"), surface("kitchentable"), container("fridge", true, rng.below(2) == 1)};
  const std::vector<std::string> sources{"counter", "fridge"};
  int id = 0;
  for (const auto& c : s.classes) {
    const int n = uniform_int(rng, 1, 3);
    for (int i = 0; i < n; ++i) s.objects.push_back({c.name + std::to_string(++id), c.name, pick(rng, sources)});
  }
  s.human_start = pick(rng, s.locations).id;
  s.robot_start = "counter";
  WorldState start = WorldState::from_scene(s);

  auto available = [&](const std::string& cls) {
    return static_cast<int>(std::count_if(s.objects.begin(), s.objects.end(),
                                          [&](const ObjectPlacement& o) { return o.cls == cls; }));
  };
  // Goal shapes with at most three delegations: one slot of 1..3 items, or
  // two slots of one item each.
  std::vector<GoalSpec> goals;
  const int n_goals = uniform_int(rng, 1, 3);
  for (int tries = 0; static_cast<int>(goals.size()) < n_goals && tries < 50; ++tries) {
    std::vector<Predicate> preds;
    if (rng.below(2) == 0) {
      const auto& cls = pick(rng, s.classes).name;
      preds.push_back({Relation::on, cls, "kitchentable", uniform_int(rng, 1, available(cls))});
    } else {
      auto a = pick(rng, s.classes).name;
      auto b = pick(rng, s.classes).name;
      if (a == b) continue;
      preds.push_back({Relation::on, a, "kitchentable", 1});
      preds.push_back({Relation::on, b, "kitchentable", 1});
    }
    auto g = GoalSpec::make(TaskFamily::put_groceries, PredicateSet(std::move(preds)));
    if (std::none_of(goals.begin(), goals.end(), [&](const GoalSpec& x) { return x.id == g.id; })) {
      goals.push_back(std::move(g));
    }
  }
  GoalSpace space = GoalSpace::uniform(std::move(goals));
  if (rng.below(3) == 0) {
    double total = 0.0;
    for (auto& p : space.prior) total += (p = 0.2 + rng.uniform());
    for (auto& p : space.prior) p /= total;
  }

  // Mostly goal-directed actions with occasional random ones.
  const auto& target = space.goals[rng.below(space.goals.size())].predicates;
  Planner planner;
  std::vector<Action> actions;
  WorldState s_now = start;
  const int n_actions = uniform_int(rng, 0, 4);
  for (int i = 0; i < n_actions; ++i) {
    std::optional<Action> a;
    if (rng.below(4) != 0) a = planner.next_action(s_now, Agent::human, target);
    if (!a || a->verb == Verb::noop) a = pick(rng, legal_actions(s_now, Agent::human));
    actions.push_back(*a);
    s_now = step(s_now, *a, Action::noop(Agent::robot));
  }
  return {std::move(space), ActionHistory(start, std::move(actions))};
}

std::map<std::string, double> oracle_goal_posterior(const MicroWorld& w, const PlannerConfig& cfg) {
  std::map<std::string, double> post;
  double total = 0.0;
  for (std::size_t i = 0; i < w.space.goals.size(); ++i) {
    const double v = oracle_likelihood(w.history, w.space.goals[i].predicates, cfg) * w.space.prior[i];
    post[w.space.goals[i].id] = v;
    total += v;
  }
  for (std::size_t i = 0; i < w.space.goals.size(); ++i) {
    auto& v = post[w.space.goals[i].id];
    v = total > 0.0 ? v / total : w.space.prior[i];
  }
  return post;
}

std::vector<PredicateSet> oracle_delegations(const PredicateSet& goal, const WorldState& state) {
  std::vector<std::pair<Predicate, int>> open;
  for (const auto& p : goal) {
    auto c = state.layout().find_class(p.cls);
    auto l = state.layout().find_location(p.target);
    const int have = c && l ? state.count_at(*c, *l) : 0;
    if (have < p.count) open.emplace_back(p, p.count - have);
  }
  if (open.empty()) return {PredicateSet{}};
  std::vector<PredicateSet> out;
  std::vector<std::vector<Predicate>> partial{{}};
  for (const auto& [p, deficit] : open) {
    std::vector<std::vector<Predicate>> next;
    for (const auto& base : partial) {
      for (int take = 0; take <= deficit; ++take) {
        auto v = base;
        if (take > 0) {
          auto q = p;
          q.count = take;
          v.push_back(q);
        }
        next.push_back(std::move(v));
      }
    }
    partial = std::move(next);
  }
  for (auto& v : partial) {
    if (!v.empty()) out.emplace_back(std::move(v));
  }
  return out;
}

double TableScorer::likelihood(const Transcript&, const PredicateSet& share) const {
  if (constant_) return 0.37;
  std::uint64_t h = salt_;
  for (char c : render(share)) h = derive_seed(h, static_cast<unsigned char>(c));
  return 0.05 + 0.9 * static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::map<PredicateSet, double> oracle_fused(const MicroWorld& w, const PlannerConfig& cfg, const SubgoalScorer* speech) {
  const WorldState& now = w.history.current_state();
  std::map<PredicateSet, double> action;
  for (std::size_t i = 0; i < w.space.goals.size(); ++i) {
    const auto& g = w.space.goals[i].predicates;
    const auto shares = oracle_delegations(g, now);
    for (const auto& r : shares) {
      const double l = oracle_likelihood(w.history, subtract(g, r), cfg);
      action[r] += l * w.space.prior[i] / static_cast<double>(shares.size());
    }
  }
  auto normalize = [](std::map<PredicateSet, double> m) {
    double total = 0.0;
    for (const auto& [k, v] : m) total += v;
    if (total > 0.0) {
      for (auto& [k, v] : m) v /= total;
    }
    return std::pair{m, total > 0.0};
  };
  auto [act, act_ok] = normalize(action);
  if (!act_ok) {
    // Prior times delegation weight.
    std::map<PredicateSet, double> prior;
    for (std::size_t i = 0; i < w.space.goals.size(); ++i) {
      const auto shares = oracle_delegations(w.space.goals[i].predicates, now);
      for (const auto& r : shares) prior[r] += w.space.prior[i] / static_cast<double>(shares.size());
    }
    act = normalize(prior).first;
  }
  if (!speech) return act;
  std::map<PredicateSet, double> fused;
  for (const auto& [k, v] : act) fused[k] = v * speech->likelihood(Transcript{}, k);
  auto [out, ok] = normalize(fused);
  return ok ? out : act;
}

}  // namespace siftom::testing
