#include "siftom/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <tuple>

namespace siftom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieEps = 1e-9;

}  // namespace

void PlannerConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("planner/temperature", "must be > 0");
  if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("planner/discount", "must be in (0, 1]");
  if (max_depth < 1) throw ConfigError("planner/max_depth", "must be >= 1");
  if (!(wait_cost >= 0.0)) throw ConfigError("planner/wait_cost", "must be >= 0");
  for (double c : {costs.walk_to, costs.grab, costs.put, costs.open, costs.close}) {
    if (!(c >= 0.0)) throw ConfigError("planner/costs", "action costs must be >= 0");
  }
}

std::vector<double> boltzmann_from_costs(std::span<const double> costs, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  std::vector<double> p(costs.size(), 0.0);
  double best = kInf;
  for (double c : costs) {
    if (std::isfinite(c)) best = std::min(best, c);
  }
  if (!std::isfinite(best)) return p;
  double total = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (!std::isfinite(costs[i])) continue;
    p[i] = std::exp(-(costs[i] - best) / temperature);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

// Abstract search problem for one (layout, agent, goal). State keys are byte
// strings: [loc][open flag per location][held per goal class][junk held]
// [stock per goal class x location].
struct Planner::Problem {
  std::shared_ptr<const Layout> layout;
  Agent agent = Agent::human;
  int n_loc = 0;
  int n_cls = 0;
  std::vector<int> slot_of_class;
  struct Need {
    int cls;
    int loc;
    int count;
  };
  std::vector<Need> needs;
  std::vector<int> need_per_class;
  bool impossible = false;
  int single_target = -1;
  std::vector<std::uint8_t> openable;
  std::vector<std::uint8_t> container;
  std::vector<std::uint8_t> floor;
  std::unordered_map<std::string, std::optional<double>> memo;

  int off_open() const { return 1; }
  int off_held() const { return 1 + n_loc; }
  int off_junk() const { return 1 + n_loc + n_cls; }
  int off_stock() const { return 2 + n_loc + n_cls; }
  int key_size() const { return 2 + n_loc + n_cls + n_cls * n_loc; }

  static std::uint8_t at(const std::string& k, int i) { return static_cast<std::uint8_t>(k[static_cast<std::size_t>(i)]); }
  static void set(std::string& k, int i, int v) { k[static_cast<std::size_t>(i)] = static_cast<char>(v); }

  int stock(const std::string& k, int cls, int loc) const { return at(k, off_stock() + cls * n_loc + loc); }

  bool accessible(const std::string& k, int loc) const {
    return !container[static_cast<std::size_t>(loc)] || !openable[static_cast<std::size_t>(loc)] ||
           at(k, off_open() + loc) != 0;
  }

  std::string encode(const WorldState& s) const {
    std::string k(static_cast<std::size_t>(key_size()), '\0');
    set(k, 0, s.agent_at(agent));
    for (int l = 0; l < n_loc; ++l) set(k, off_open() + l, s.is_open(static_cast<LocationIndex>(l)) ? 1 : 0);
    const auto& objs = layout->objects();
    for (ObjectIndex o : s.holding(agent)) {
      int slot = slot_of_class[objs[o].cls];
      if (slot >= 0) {
        set(k, off_held() + slot, at(k, off_held() + slot) + 1);
      } else {
        set(k, off_junk(), at(k, off_junk()) + 1);
      }
    }
    for (std::size_t o = 0; o < objs.size(); ++o) {
      const auto& p = s.place(static_cast<ObjectIndex>(o));
      int slot = slot_of_class[objs[o].cls];
      if (p.in_hand || slot < 0) continue;
      int i = off_stock() + slot * n_loc + p.index;
      set(k, i, at(k, i) + 1);
    }
    return k;
  }

  bool satisfied(const std::string& k) const {
    for (const auto& n : needs) {
      if (stock(k, n.cls, n.loc) < n.count) return false;
    }
    return true;
  }

  bool has_enough(const std::string& k) const {
    for (int c = 0; c < n_cls; ++c) {
      int have = at(k, off_held() + c);
      for (int l = 0; l < n_loc; ++l) have += stock(k, c, l);
      if (have < need_per_class[static_cast<std::size_t>(c)]) return false;
    }
    return true;
  }

  // Admissible lower bound: required grabs, puts, opens of closed targets and
  // walks. Each term counts distinct actions, so the sum stays admissible.
  double heuristic(const std::string& k, const ActionCosts& costs) const {
    int deficit = 0;
    std::vector<int> missing(static_cast<std::size_t>(n_cls), 0);
    bool at_open_target = false;
    int closed_targets = 0;
    const int here = at(k, 0);
    for (const auto& n : needs) {
      int d = std::max(0, n.count - stock(k, n.cls, n.loc));
      if (d == 0) continue;
      deficit += d;
      missing[static_cast<std::size_t>(n.cls)] += d;
      if (n.loc == here) at_open_target = true;
      if (!accessible(k, n.loc)) ++closed_targets;
    }
    if (deficit == 0) return 0.0;
    int usable = 0;
    for (int c = 0; c < n_cls; ++c) usable += std::min<int>(at(k, off_held() + c), missing[static_cast<std::size_t>(c)]);
    const int picks = deficit - usable;
    int walks = 0;
    if (single_target >= 0) {
      if (here == single_target) {
        walks = 2 * ((picks + 1) / 2);
      } else {
        walks = 2 * ((deficit + 1) / 2) - 1;
      }
    } else if (!at_open_target) {
      walks = 1;
    }
    return costs.grab * picks + costs.put * deficit + costs.open * closed_targets + costs.walk_to * walks;
  }
};

Planner::Planner(PlannerConfig cfg) : cfg_(cfg) { cfg_.validate(); }
Planner::~Planner() = default;
Planner::Planner(Planner&&) noexcept = default;
Planner& Planner::operator=(Planner&&) noexcept = default;

Planner::Problem& Planner::problem(const WorldState& state, Agent agent, const PredicateSet& goal) {
  std::string key = std::to_string(reinterpret_cast<std::uintptr_t>(&state.layout())) + '|' +
                    std::string(to_string(agent)) + '|' + render(goal);
  auto it = problems_.find(key);
  if (it != problems_.end()) return *it->second;

  auto p = std::make_unique<Problem>();
  const Layout& layout = state.layout();
  p->layout = state.layout_ptr();
  p->agent = agent;
  p->n_loc = static_cast<int>(layout.locations().size());
  p->slot_of_class.assign(layout.classes().size(), -1);
  for (const auto& loc : layout.locations()) {
    p->openable.push_back(loc.openable ? 1 : 0);
    p->container.push_back(loc.kind == LocationKind::container ? 1 : 0);
    p->floor.push_back(loc.kind == LocationKind::room_floor ? 1 : 0);
  }
  std::vector<int> targets;
  for (const auto& pred : goal) {
    auto c = layout.find_class(pred.cls);
    auto l = layout.find_location(pred.target);
    if (!c || !l) {
      p->impossible = true;
      continue;
    }
    if (p->slot_of_class[*c] < 0) {
      p->slot_of_class[*c] = p->n_cls++;
      p->need_per_class.push_back(0);
    }
    const int slot = p->slot_of_class[*c];
    p->needs.push_back({slot, *l, pred.count});
    p->need_per_class[static_cast<std::size_t>(slot)] += pred.count;
    if (std::find(targets.begin(), targets.end(), *l) == targets.end()) targets.push_back(*l);
  }
  if (targets.size() == 1) p->single_target = targets.front();
  if (p->n_loc > 255 || layout.objects().size() > 255) {
    throw ConfigError("scene", "planner supports at most 255 locations and objects");
  }
  auto& ref = *p;
  problems_.emplace(std::move(key), std::move(p));
  return ref;
}

std::optional<double> Planner::search(Problem& p, const std::string& start) {
  if (auto it = p.memo.find(start); it != p.memo.end()) return it->second;

  auto finish = [&](std::optional<double> v) {
    p.memo.emplace(start, v);
    return v;
  };
  if (p.impossible) return finish(std::nullopt);
  if (p.satisfied(start)) return finish(0.0);
  for (const auto& n : p.needs) {
    if (p.floor[static_cast<std::size_t>(n.loc)] && p.stock(start, n.cls, n.loc) < n.count) return finish(std::nullopt);
  }
  if (!p.has_enough(start)) return finish(std::nullopt);

  ++searches_;
  const ActionCosts& costs = cfg_.costs;

  struct Node {
    std::string key;
    double g;
    int depth;
    int parent;
  };
  std::vector<Node> nodes;
  std::unordered_map<std::string, int> index;
  // (f, -g, seq, node, exact-terminal)
  using Entry = std::tuple<double, double, std::uint64_t, int, bool>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::uint64_t seq = 0;

  nodes.push_back({start, 0.0, 0, -1});
  index.emplace(start, 0);
  open.emplace(p.heuristic(start, costs), 0.0, seq++, 0, false);

  auto relax = [&](int parent, std::string&& key, double step_cost) {
    const double g = nodes[static_cast<std::size_t>(parent)].g + step_cost;
    const int depth = nodes[static_cast<std::size_t>(parent)].depth + 1;
    auto it = index.find(key);
    int id;
    if (it == index.end()) {
      id = static_cast<int>(nodes.size());
      index.emplace(key, id);
      nodes.push_back({std::move(key), g, depth, parent});
    } else {
      id = it->second;
      auto& n = nodes[static_cast<std::size_t>(id)];
      if (g >= n.g - kTieEps) return;
      n.g = g;
      n.depth = depth;
      n.parent = parent;
    }
    const auto& n = nodes[static_cast<std::size_t>(id)];
    if (auto m = p.memo.find(n.key); m != p.memo.end()) {
      if (m->second) open.emplace(g + *m->second, -g, seq++, id, true);
      return;
    }
    open.emplace(g + p.heuristic(n.key, costs), -g, seq++, id, false);
  };

  while (!open.empty()) {
    auto [f, neg_g, s, id, exact] = open.top();
    open.pop();
    const Node& node = nodes[static_cast<std::size_t>(id)];
    if (-neg_g > node.g + kTieEps) continue;  // stale entry

    if (exact || p.satisfied(node.key)) {
      const double total = exact ? f : node.g;
      for (int cur = id; cur >= 0; cur = nodes[static_cast<std::size_t>(cur)].parent) {
        const auto& n = nodes[static_cast<std::size_t>(cur)];
        p.memo.emplace(n.key, total - n.g);
      }
      return total;
    }
    if (node.depth >= cfg_.max_depth) continue;

    const std::string key = node.key;
    const int here = Problem::at(key, 0);
    for (int l = 0; l < p.n_loc; ++l) {
      if (l == here) continue;
      std::string t = key;
      Problem::set(t, 0, l);
      relax(id, std::move(t), costs.walk_to);
    }
    if (p.accessible(key, here)) {
      int held_total = Problem::at(key, p.off_junk());
      for (int c = 0; c < p.n_cls; ++c) held_total += Problem::at(key, p.off_held() + c);
      if (held_total < kHandCapacity) {
        for (int c = 0; c < p.n_cls; ++c) {
          const int si = p.off_stock() + c * p.n_loc + here;
          if (Problem::at(key, si) == 0) continue;
          std::string t = key;
          Problem::set(t, si, Problem::at(key, si) - 1);
          Problem::set(t, p.off_held() + c, Problem::at(key, p.off_held() + c) + 1);
          relax(id, std::move(t), costs.grab);
        }
      }
      if (!p.floor[static_cast<std::size_t>(here)]) {
        for (int c = 0; c < p.n_cls; ++c) {
          if (Problem::at(key, p.off_held() + c) == 0) continue;
          const int si = p.off_stock() + c * p.n_loc + here;
          std::string t = key;
          Problem::set(t, si, Problem::at(key, si) + 1);
          Problem::set(t, p.off_held() + c, Problem::at(key, p.off_held() + c) - 1);
          relax(id, std::move(t), costs.put);
        }
        if (Problem::at(key, p.off_junk()) > 0) {
          std::string t = key;
          Problem::set(t, p.off_junk(), Problem::at(key, p.off_junk()) - 1);
          relax(id, std::move(t), costs.put);
        }
      }
    }
    if (p.openable[static_cast<std::size_t>(here)] && Problem::at(key, p.off_open() + here) == 0) {
      std::string t = key;
      Problem::set(t, p.off_open() + here, 1);
      relax(id, std::move(t), costs.open);
    }
  }
  return finish(std::nullopt);
}

std::optional<double> Planner::optimal_cost(const WorldState& state, Agent agent, const PredicateSet& goal) {
  auto& p = problem(state, agent, goal);
  return search(p, p.encode(state));
}

std::optional<double> Planner::q_value(const WorldState& state, const Action& action, const PredicateSet& goal) {
  WorldState next = apply_action(state, action);
  double cost = action_cost(action, cfg_.costs);
  if (action.verb == Verb::noop && !goal_satisfied(state, goal)) cost = cfg_.wait_cost;
  auto rest = optimal_cost(next, action.agent, goal);
  if (!rest) return std::nullopt;
  return cost + cfg_.discount * *rest;
}

PosteriorTable<Action> Planner::boltzmann_policy(const WorldState& state, Agent agent, const PredicateSet& goal) {
  auto actions = legal_actions(state, agent);
  std::vector<double> q;
  q.reserve(actions.size());
  for (const auto& a : actions) {
    auto v = q_value(state, a, goal);
    q.push_back(v ? *v : kInf);
  }
  auto probs = boltzmann_from_costs(q, cfg_.temperature);
  std::vector<PosteriorTable<Action>::Entry> weights;
  bool any = false;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    any = any || probs[i] > 0.0;
    weights.emplace_back(actions[i], probs[i]);
  }
  if (!any) throw NoFiniteAction("no legal action of the " + std::string(to_string(agent)) + " reaches " + render(goal));
  return PosteriorTable<Action>::from_weights(std::move(weights));
}

double Planner::action_log_probability(const WorldState& state, const Action& action, const PredicateSet& goal) {
  if (!is_legal(state, action)) {
    throw IllegalAction(action.agent, render(action, state.layout()), *why_illegal(state, action));
  }
  auto actions = legal_actions(state, action.agent);
  std::vector<double> q;
  q.reserve(actions.size());
  std::size_t self = actions.size();
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] == action) self = i;
    auto v = q_value(state, actions[i], goal);
    q.push_back(v ? *v : kInf);
  }
  if (self == actions.size() || !std::isfinite(q[self])) return -kInf;
  double best = kInf;
  for (double c : q) best = std::min(best, c);
  const double t = cfg_.temperature;
  double log_z = 0.0;
  double z = 0.0;
  for (double c : q) {
    if (std::isfinite(c)) z += std::exp(-(c - best) / t);
  }
  log_z = std::log(z);
  return -(q[self] - best) / t - log_z;
}

std::optional<Action> Planner::next_action(const WorldState& state, Agent agent, const PredicateSet& goal) {
  if (goal_satisfied(state, goal)) return Action::noop(agent);
  auto v = optimal_cost(state, agent, goal);
  if (!v) return std::nullopt;
  std::optional<Action> best;
  double best_q = kInf;
  for (const auto& a : legal_actions(state, agent)) {
    if (a.verb == Verb::noop) continue;
    auto rest = optimal_cost(apply_action(state, a), agent, goal);
    if (!rest) continue;
    const double q = action_cost(a, cfg_.costs) + *rest;
    if (q <= *v + kTieEps) return a;
    if (q < best_q - kTieEps) {
      best_q = q;
      best = a;
    }
  }
  return best;
}

Plan Planner::make_plan(const WorldState& state, Agent agent, const PredicateSet& goal) {
  Plan plan;
  WorldState cur = state;
  while (!goal_satisfied(cur, goal)) {
    if (static_cast<int>(plan.actions.size()) >= cfg_.max_depth) {
      throw Unreachable("plan for " + render(goal) + " exceeds max_depth");
    }
    auto a = next_action(cur, agent, goal);
    if (!a) throw Unreachable("no plan for the " + std::string(to_string(agent)) + " reaches " + render(goal));
    plan.total_cost += action_cost(*a, cfg_.costs);
    plan.actions.push_back(*a);
    cur = apply_action(cur, *a);
  }
  return plan;
}

std::optional<double> optimal_cost(const WorldState& state, Agent agent, const PredicateSet& goal,
                                   const PlannerConfig& cfg) {
  return Planner(cfg).optimal_cost(state, agent, goal);
}

std::optional<double> q_value(const WorldState& state, const Action& action, const PredicateSet& goal,
                              const PlannerConfig& cfg) {
  return Planner(cfg).q_value(state, action, goal);
}

PosteriorTable<Action> boltzmann_policy(const WorldState& state, Agent agent, const PredicateSet& goal,
                                        const PlannerConfig& cfg) {
  return Planner(cfg).boltzmann_policy(state, agent, goal);
}

Plan make_plan(const WorldState& state, Agent agent, const PredicateSet& goal, const PlannerConfig& cfg) {
  return Planner(cfg).make_plan(state, agent, goal);
}

}  // namespace siftom
