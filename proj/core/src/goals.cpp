#include "siftom/goals.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

namespace siftom {

namespace {

std::string_view trim(std::string_view v) {
  while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
  while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
  return v;
}

int total_instances(const WorldState& state, std::string_view cls) {
  auto c = state.layout().find_class(cls);
  if (!c) return 0;
  int n = 0;
  for (const auto& o : state.layout().objects()) n += (o.cls == *c) ? 1 : 0;
  return n;
}

bool target_fits(const WorldState& state, std::string_view target, Relation rel) {
  auto l = state.layout().find_location(target);
  if (!l) return false;
  auto kind = state.layout().location(*l).kind;
  return rel == Relation::inside ? kind == LocationKind::container : kind == LocationKind::surface;
}

// One item slot of a template: a class chosen from `choices`.
struct Slot {
  std::vector<std::string> choices;
};

struct Template {
  Relation relation;
  std::vector<std::string> targets;
  std::vector<Slot> slots;
  bool shared_count;  // every slot uses the same count
};

Template template_for(TaskFamily family) {
  switch (family) {
    case TaskFamily::set_table:
      return {Relation::on,
              {"coffeetable", "kitchentable"},
              {{{"fork"}}, {{"plate"}}, {{"waterglass", "wineglass"}}},
              true};
    case TaskFamily::prepare_meal:
      return {Relation::on, {"kitchentable"}, {{{"apple"}}, {{"salmon"}}, {{"cupcake", "pudding"}}}, true};
    case TaskFamily::put_groceries:
      return {Relation::inside, {"fridge"}, {{{"apple", "salmon"}}, {{"cupcake", "pudding"}}}, false};
    case TaskFamily::load_dishwasher:
      // Any two of the four dish classes; expanded separately below.
      return {Relation::inside, {"dishwasher"}, {}, false};
    case TaskFamily::breakfast:
      return {Relation::on, {"diningtable"}, {}, true};
  }
  return {};
}

void add_goal(std::set<PredicateSet>& out, const WorldState& state, Relation rel, const std::string& target,
              const std::vector<std::pair<std::string, int>>& items) {
  if (!target_fits(state, target, rel)) return;
  std::vector<Predicate> preds;
  std::map<std::string, int> demand;
  for (const auto& [cls, count] : items) {
    demand[cls] += count;
    preds.push_back({rel, cls, target, count});
  }
  for (const auto& [cls, need] : demand) {
    if (total_instances(state, cls) < need) return;
  }
  out.insert(PredicateSet(std::move(preds)));
}

}  // namespace

std::string_view to_string(Relation r) { return r == Relation::on ? "on" : "inside"; }

std::string render(const Predicate& p) {
  return std::string(to_string(p.relation)) + "(" + p.cls + ", " + p.target + ", " + std::to_string(p.count) + ")";
}

Predicate parse_predicate(std::string_view text) {
  auto fail = [&](const std::string& why) { return ConfigError("predicate '" + std::string(text) + "'", why); };
  auto t = trim(text);
  auto open = t.find('(');
  if (open == std::string_view::npos || t.empty() || t.back() != ')') throw fail("malformed");
  Predicate p;
  auto rel = trim(t.substr(0, open));
  if (rel == "on") {
    p.relation = Relation::on;
  } else if (rel == "inside") {
    p.relation = Relation::inside;
  } else {
    throw fail("unknown relation");
  }
  auto args = t.substr(open + 1, t.size() - open - 2);
  std::vector<std::string_view> parts;
  while (true) {
    auto comma = args.find(',');
    parts.push_back(trim(args.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    args.remove_prefix(comma + 1);
  }
  if (parts.size() != 3 || parts[0].empty() || parts[1].empty()) throw fail("expected 3 arguments");
  p.cls = std::string(parts[0]);
  p.target = std::string(parts[1]);
  auto [ptr, ec] = std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), p.count);
  if (ec != std::errc() || ptr != parts[2].data() + parts[2].size() || p.count < 1) throw fail("bad count");
  return p;
}

PredicateSet::PredicateSet(std::vector<Predicate> predicates) {
  std::sort(predicates.begin(), predicates.end());
  for (auto& p : predicates) {
    if (p.count < 0) throw std::invalid_argument("negative predicate count");
    if (!items_.empty() && items_.back().same_slot(p)) {
      items_.back().count += p.count;
    } else {
      items_.push_back(std::move(p));
    }
  }
  std::erase_if(items_, [](const Predicate& p) { return p.count == 0; });
}

int PredicateSet::count_for(const Predicate& p) const {
  for (const auto& q : items_) {
    if (q.same_slot(p)) return q.count;
  }
  return 0;
}

std::string render(const PredicateSet& s) {
  if (s.empty()) return "{}";
  std::string out;
  for (const auto& p : s) {
    if (!out.empty()) out += " & ";
    out += render(p);
  }
  return out;
}

PredicateSet parse_predicate_set(std::string_view text) {
  auto t = trim(text);
  if (t == "{}" || t.empty()) return {};
  std::vector<Predicate> preds;
  while (true) {
    auto amp = t.find('&');
    preds.push_back(parse_predicate(t.substr(0, amp)));
    if (amp == std::string_view::npos) break;
    t.remove_prefix(amp + 1);
  }
  return PredicateSet(std::move(preds));
}

PredicateSet subtract(const PredicateSet& goal, const PredicateSet& share) {
  std::vector<Predicate> out;
  for (const auto& p : goal) {
    auto q = p;
    q.count = std::max(0, p.count - share.count_for(p));
    if (q.count > 0) out.push_back(std::move(q));
  }
  return PredicateSet(std::move(out));
}

std::string_view to_string(TaskFamily f) {
  switch (f) {
    case TaskFamily::set_table: return "set_table";
    case TaskFamily::prepare_meal: return "prepare_meal";
    case TaskFamily::put_groceries: return "put_groceries";
    case TaskFamily::load_dishwasher: return "load_dishwasher";
    case TaskFamily::breakfast: return "breakfast";
  }
  return "set_table";
}

TaskFamily task_family_from_string(std::string_view text) {
  for (auto f : {TaskFamily::set_table, TaskFamily::prepare_meal, TaskFamily::put_groceries,
                 TaskFamily::load_dishwasher, TaskFamily::breakfast}) {
    if (to_string(f) == text) return f;
  }
  throw ConfigError("", "unknown task family '" + std::string(text) + "'");
}

GoalSpec GoalSpec::make(TaskFamily family, PredicateSet predicates) {
  if (predicates.empty()) throw ConfigError("goal", "a goal needs at least one predicate");
  GoalSpec g;
  g.id = render(predicates);
  g.predicates = std::move(predicates);
  g.family = family;
  return g;
}

TeamGoal TeamGoal::split(GoalSpec goal, PredicateSet robot_share) {
  for (const auto& p : robot_share) {
    if (p.count > goal.predicates.count_for(p)) {
      throw ConfigError("delegation", render(p) + " is not part of goal " + goal.id);
    }
  }
  TeamGoal t;
  t.human_share = subtract(goal.predicates, robot_share);
  t.robot_share = std::move(robot_share);
  t.goal = std::move(goal);
  return t;
}

GoalSpace GoalSpace::uniform(std::vector<GoalSpec> goals) {
  GoalSpace s;
  s.prior.assign(goals.size(), goals.empty() ? 0.0 : 1.0 / static_cast<double>(goals.size()));
  s.goals = std::move(goals);
  s.validate();
  return s;
}

void GoalSpace::validate() const {
  if (goals.empty()) throw EmptyGoalSpace("goal space is empty");
  if (prior.size() != goals.size()) throw ConfigError("prior", "prior size does not match goal count");
  std::set<std::string> ids;
  double total = 0.0;
  for (std::size_t i = 0; i < goals.size(); ++i) {
    if (!ids.insert(goals[i].id).second) throw ConfigError("goals", "duplicate goal '" + goals[i].id + "'");
    if (!(prior[i] >= 0.0)) throw ConfigError("prior", "negative prior for '" + goals[i].id + "'");
    total += prior[i];
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("prior", "prior does not sum to 1");
}

const GoalSpec* GoalSpace::find(std::string_view id) const {
  for (const auto& g : goals) {
    if (g.id == id) return &g;
  }
  return nullptr;
}

double GoalSpace::prior_of(std::string_view id) const {
  for (std::size_t i = 0; i < goals.size(); ++i) {
    if (goals[i].id == id) return prior[i];
  }
  return 0.0;
}

GoalSpace enumerate_goal_space(TaskFamily family, const WorldState& state, const GoalLimits& limits) {
  std::vector<int> counts = limits.counts;
  std::sort(counts.begin(), counts.end());
  counts.erase(std::unique(counts.begin(), counts.end()), counts.end());
  std::erase_if(counts, [](int c) { return c < 1; });
  if (counts.empty()) throw EmptyGoalSpace("goal limits allow no positive count");

  std::set<PredicateSet> found;
  const Template tpl = template_for(family);

  if (family == TaskFamily::load_dishwasher) {
    const std::vector<std::string> dishes{"fork", "plate", "waterglass", "wineglass"};
    for (std::size_t i = 0; i < dishes.size(); ++i) {
      for (std::size_t j = i + 1; j < dishes.size(); ++j) {
        for (int ci : counts) {
          for (int cj : counts) {
            add_goal(found, state, tpl.relation, tpl.targets[0], {{dishes[i], ci}, {dishes[j], cj}});
          }
        }
      }
    }
  } else if (family == TaskFamily::breakfast) {
    const std::vector<std::vector<std::string>> menus{
        {"bowl", "cereal", "milk"}, {"coffee", "cup", "milk"}, {"cup", "milk", "tea"}};
    for (const auto& menu : menus) {
      std::vector<std::pair<std::string, int>> items;
      for (const auto& c : menu) items.emplace_back(c, 1);
      add_goal(found, state, tpl.relation, tpl.targets[0], items);
    }
  } else {
    // Expand every class choice per slot, every target, and counts.
    std::vector<std::vector<std::string>> choices{{}};
    for (const auto& slot : tpl.slots) {
      std::vector<std::vector<std::string>> next;
      for (const auto& partial : choices) {
        for (const auto& c : slot.choices) {
          auto extended = partial;
          extended.push_back(c);
          next.push_back(std::move(extended));
        }
      }
      choices = std::move(next);
    }
    for (const auto& target : tpl.targets) {
      for (const auto& classes : choices) {
        if (tpl.shared_count) {
          for (int c : counts) {
            std::vector<std::pair<std::string, int>> items;
            for (const auto& cls : classes) items.emplace_back(cls, c);
            add_goal(found, state, tpl.relation, target, items);
          }
        } else {
          std::vector<std::size_t> idx(classes.size(), 0);
          while (true) {
            std::vector<std::pair<std::string, int>> items;
            for (std::size_t k = 0; k < classes.size(); ++k) items.emplace_back(classes[k], counts[idx[k]]);
            add_goal(found, state, tpl.relation, target, items);
            std::size_t k = 0;
            while (k < idx.size() && ++idx[k] == counts.size()) idx[k++] = 0;
            if (k == idx.size()) break;
          }
        }
      }
    }
  }

  if (found.empty()) {
    throw EmptyGoalSpace("no " + std::string(to_string(family)) + " goal is satisfiable in this scene");
  }
  std::vector<GoalSpec> goals;
  for (const auto& preds : found) goals.push_back(GoalSpec::make(family, preds));
  return GoalSpace::uniform(std::move(goals));
}

int satisfied_count(const WorldState& state, const Predicate& p) {
  auto c = state.layout().find_class(p.cls);
  auto l = state.layout().find_location(p.target);
  if (!c || !l) return 0;
  return state.count_at(*c, *l);
}

bool goal_satisfied(const WorldState& state, const PredicateSet& predicates) {
  return std::all_of(predicates.begin(), predicates.end(),
                     [&](const Predicate& p) { return satisfied_count(state, p) >= p.count; });
}

std::vector<Deficit> remaining(const WorldState& state, const PredicateSet& predicates) {
  std::vector<Deficit> out;
  for (const auto& p : predicates) {
    int d = std::max(0, p.count - satisfied_count(state, p));
    if (d > 0) out.push_back({p, d});
  }
  return out;
}

std::vector<Delegation> candidate_delegations(const GoalSpec& goal, const WorldState& state, std::size_t cap,
                                              double partial_weight) {
  if (!(partial_weight > 0.0 && partial_weight <= 1.0)) throw std::invalid_argument("partial_weight must be in (0, 1]");
  auto open = remaining(state, goal.predicates);
  if (open.empty()) return {Delegation{PredicateSet{}, 1.0}};

  std::vector<Delegation> out;
  std::vector<int> take(open.size(), 0);
  while (true) {
    std::size_t k = 0;
    while (k < take.size() && ++take[k] > open[k].deficit) take[k++] = 0;
    if (k == take.size()) break;
    std::vector<Predicate> preds;
    double w = 1.0;
    for (std::size_t i = 0; i < open.size(); ++i) {
      if (take[i] == 0) continue;
      if (take[i] < open[i].deficit) w *= partial_weight;
      auto p = open[i].predicate;
      p.count = take[i];
      preds.push_back(std::move(p));
    }
    out.push_back({PredicateSet(std::move(preds)), w});
  }
  auto by_share = [](const Delegation& a, const Delegation& b) { return a.share < b.share; };
  if (out.size() > cap) {
    std::stable_sort(out.begin(), out.end(), by_share);
    std::stable_sort(out.begin(), out.end(), [](const Delegation& a, const Delegation& b) { return a.weight > b.weight; });
    out.resize(cap);
  }
  std::sort(out.begin(), out.end(), by_share);
  double total = 0.0;
  for (const auto& d : out) total += d.weight;
  for (auto& d : out) d.weight /= total;
  return out;
}

bool within_remaining(const PredicateSet& share, const WorldState& state, const PredicateSet& predicates) {
  auto open = remaining(state, predicates);
  for (const auto& p : share) {
    auto it = std::find_if(open.begin(), open.end(), [&](const Deficit& d) { return d.predicate.same_slot(p); });
    if (it == open.end() || p.count > it->deficit) return false;
  }
  return true;
}

}  // namespace siftom
