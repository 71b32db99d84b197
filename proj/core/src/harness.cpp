#include "siftom/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <thread>

#include "json.hpp"
#include "siftom/random.hpp"

namespace siftom {

using json = nlohmann::json;

std::string_view to_string(Method m) {
  switch (m) {
    case Method::siftom: return "siftom";
    case Method::speech_only: return "speech_only";
    case Method::vision_only: return "vision_only";
    case Method::oracle: return "oracle";
  }
  return "?";
}

Method method_from_string(std::string_view text) {
  for (auto m : {Method::siftom, Method::speech_only, Method::vision_only, Method::oracle}) {
    if (to_string(m) == text) return m;
  }
  throw ConfigError("method", "unknown method '" + std::string(text) + "'");
}

// --- Scenario JSON ---

namespace {

// Typed access with the JSON path in every error.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  std::string at(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }
  bool has(std::string_view key) const { return j_.contains(key) && !j_.at(std::string(key)).is_null(); }

  const json& raw(std::string_view key) const {
    if (!has(key)) throw ConfigError(at(key), "missing");
    return j_.at(std::string(key));
  }
  Reader object(std::string_view key) const {
    const auto& v = raw(key);
    if (!v.is_object()) throw ConfigError(at(key), "expected an object");
    return Reader(v, at(key));
  }
  std::vector<Reader> array(std::string_view key) const {
    const auto& v = raw(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array");
    std::vector<Reader> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(v[i], at(key) + "[" + std::to_string(i) + "]");
    return out;
  }
  template <class T>
  T get(std::string_view key) const {
    try {
      return raw(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(at(key), "wrong type");
    }
  }
  template <class T>
  T get(std::string_view key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }
  const json& value() const { return j_; }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
};

template <class Fn>
auto wrap(const std::string& where, Fn fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(where, e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where, e.what());
  }
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

ScenarioConfig scenario_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("scenario", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("scenario", "expected an object");
  Reader r(j, "");
  if (auto schema = r.get<std::string>("schema"); schema != kScenarioSchema) {
    throw ConfigError("schema", "expected '" + std::string(kScenarioSchema) + "', got '" + schema + "'");
  }
  ScenarioConfig c;
  c.id = r.get<std::string>("id");

  auto w = r.object("world");
  for (const auto& cr : w.array("classes")) {
    ObjectClass oc;
    oc.name = cr.get<std::string>("name");
    oc.category = wrap(cr.at("category"), [&] { return category_from_string(cr.get<std::string>("category")); });
    oc.aliases = cr.get<std::vector<std::string>>("aliases", {});
    c.scene.classes.push_back(std::move(oc));
  }
  for (const auto& lr : w.array("locations")) {
    Location l;
    l.id = lr.get<std::string>("id");
    l.kind = wrap(lr.at("kind"), [&] { return location_kind_from_string(lr.get<std::string>("kind")); });
    l.openable = lr.get<bool>("openable", false);
    l.open = lr.get<bool>("open", false);
    c.scene.locations.push_back(std::move(l));
  }
  for (const auto& orr : w.array("objects")) {
    c.scene.objects.push_back({orr.get<std::string>("id"), orr.get<std::string>("class"), orr.get<std::string>("at")});
  }
  auto agents = w.object("agents");
  c.scene.human_start = agents.get<std::string>("human");
  c.scene.robot_start = agents.get<std::string>("robot");

  c.family = wrap("task_family", [&] { return task_family_from_string(r.get<std::string>("task_family")); });
  if (r.has("goal_limits")) c.limits.counts = r.object("goal_limits").get<std::vector<int>>("counts");
  for (const auto& g : r.get<std::vector<std::string>>("goals", {})) {
    c.goals.push_back(wrap("goals", [&] { return parse_predicate_set(g); }));
  }
  c.team_goal = r.get<std::string>("team_goal");
  c.spoken = wrap("spoken_delegation", [&] { return parse_predicate_set(r.get<std::string>("spoken_delegation")); });
  c.utterance = split_words(r.get<std::string>("utterance", ""));
  c.history = r.get<std::vector<std::string>>("history", {});
  c.condition = r.get<std::string>("condition", "clean");

  if (r.has("corruption")) {
    auto cr = r.object("corruption");
    c.corruption.kind = wrap(cr.at("kind"), [&] { return corruption_kind_from_string(cr.get<std::string>("kind")); });
    c.corruption.rho = cr.get<double>("rho", 0.0);
    c.corruption.deletion_share = cr.get<double>("deletion_share", 0.5);
    c.corruption.accent = cr.get<std::string>("accent", "");
    c.corruption.words = cr.get<int>("words", 1);
    c.corruption.seed = cr.get<std::uint64_t>("seed", 0);
  }
  c.method = wrap("method", [&] { return method_from_string(r.get<std::string>("method", "siftom")); });
  if (r.has("planner")) {
    auto pr = r.object("planner");
    auto& p = c.fusion.planner;
    p.temperature = pr.get<double>("temperature", p.temperature);
    p.discount = pr.get<double>("discount", p.discount);
    p.max_depth = pr.get<int>("max_depth", p.max_depth);
    p.wait_cost = pr.get<double>("wait_cost", p.wait_cost);
  }
  if (r.has("fusion")) {
    auto fr = r.object("fusion");
    c.fusion.theta = fr.get<double>("theta", c.fusion.theta);
    c.fusion.k_goals = fr.get<std::size_t>("k", c.fusion.k_goals);
    c.fusion.n_subgoals = fr.get<std::size_t>("n", c.fusion.n_subgoals);
    c.fusion.partial_weight = fr.get<double>("partial_weight", c.fusion.partial_weight);
  }
  if (r.has("speech")) c.speech.sharpness = r.object("speech").get<double>("sharpness", c.speech.sharpness);
  c.instruction_fraction = r.get<double>("instruction_fraction", c.instruction_fraction);
  c.horizon = r.get<int>("horizon", c.horizon);
  return c;
}

std::string scenario_to_json(const ScenarioConfig& c) {
  json j;
  j["schema"] = kScenarioSchema;
  j["id"] = c.id;
  json classes = json::array();
  for (const auto& oc : c.scene.classes) {
    json x = {{"name", oc.name}, {"category", to_string(oc.category)}};
    if (!oc.aliases.empty()) x["aliases"] = oc.aliases;
    classes.push_back(std::move(x));
  }
  json locations = json::array();
  for (const auto& l : c.scene.locations) {
    locations.push_back({{"id", l.id}, {"kind", to_string(l.kind)}, {"openable", l.openable}, {"open", l.open}});
  }
  json objects = json::array();
  for (const auto& o : c.scene.objects) objects.push_back({{"id", o.id}, {"class", o.cls}, {"at", o.at}});
  j["world"] = {{"classes", classes},
                {"locations", locations},
                {"objects", objects},
                {"agents", {{"human", c.scene.human_start}, {"robot", c.scene.robot_start}}}};
  j["task_family"] = to_string(c.family);
  j["goal_limits"] = {{"counts", c.limits.counts}};
  if (!c.goals.empty()) {
    json goals = json::array();
    for (const auto& g : c.goals) goals.push_back(render(g));
    j["goals"] = goals;
  }
  j["team_goal"] = c.team_goal;
  j["spoken_delegation"] = render(c.spoken);
  if (!c.utterance.empty()) j["utterance"] = join(c.utterance);
  if (!c.history.empty()) j["history"] = c.history;
  j["condition"] = c.condition;
  j["corruption"] = {{"kind", to_string(c.corruption.kind)},
                     {"rho", c.corruption.rho},
                     {"deletion_share", c.corruption.deletion_share},
                     {"accent", c.corruption.accent},
                     {"words", c.corruption.words},
                     {"seed", c.corruption.seed}};
  j["method"] = to_string(c.method);
  const auto& p = c.fusion.planner;
  j["planner"] = {{"temperature", p.temperature},
                  {"discount", p.discount},
                  {"max_depth", p.max_depth},
                  {"wait_cost", p.wait_cost}};
  j["fusion"] = {{"theta", c.fusion.theta},
                 {"k", c.fusion.k_goals},
                 {"n", c.fusion.n_subgoals},
                 {"partial_weight", c.fusion.partial_weight}};
  j["speech"] = {{"sharpness", c.speech.sharpness}};
  j["instruction_fraction"] = c.instruction_fraction;
  j["horizon"] = c.horizon;
  return j.dump();
}

namespace {

template <class T, class Parse>
std::vector<T> read_lines(std::istream& in, std::string_view what, Parse parse) {
  std::vector<T> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(line));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(what) + " line " + std::to_string(n) + ": " + e.where(), e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<ScenarioConfig> read_scenarios(std::istream& in) {
  return read_lines<ScenarioConfig>(in, "scenarios", [](const std::string& l) { return scenario_from_json(l); });
}

void write_scenarios(std::ostream& out, const std::vector<ScenarioConfig>& configs) {
  for (const auto& c : configs) out << scenario_to_json(c) << '\n';
}

// --- Episodes ---

PreparedScenario prepare(const ScenarioConfig& cfg) {
  if (cfg.horizon < 1) throw ConfigError("horizon", "must be >= 1");
  if (!(cfg.instruction_fraction >= 0.0 && cfg.instruction_fraction <= 1.0)) {
    throw ConfigError("instruction_fraction", "must be in [0, 1]");
  }
  wrap("fusion", [&] { cfg.fusion.validate(); });
  if (!(cfg.speech.sharpness > 0.0)) throw ConfigError("speech.sharpness", "must be > 0");
  wrap("corruption", [&] { cfg.corruption.validate(); });

  auto start = WorldState::from_scene(cfg.scene);
  GoalSpace space;
  if (cfg.goals.empty()) {
    space = wrap("task_family", [&] { return enumerate_goal_space(cfg.family, start, cfg.limits); });
  } else {
    std::vector<GoalSpec> goals;
    for (const auto& g : cfg.goals) goals.push_back(GoalSpec::make(cfg.family, g));
    space = wrap("goals", [&] { return GoalSpace::uniform(std::move(goals)); });
  }
  const GoalSpec* team = space.find(cfg.team_goal);
  if (!team) throw ConfigError("team_goal", "'" + cfg.team_goal + "' is not in the goal space");
  if (goal_satisfied(start, team->predicates)) throw ConfigError("team_goal", "already satisfied at the start");
  if (cfg.spoken.empty()) throw ConfigError("spoken_delegation", "must be non-empty");
  PredicateSet human = subtract(team->predicates, cfg.spoken);
  for (const auto& p : cfg.spoken) {
    if (team->predicates.count_for(p) < p.count) {
      throw ConfigError("spoken_delegation", render(p) + " is not part of the team goal");
    }
  }
  for (const auto& w : cfg.utterance) {
    if (!Lexicon::builtin().contains(w)) throw ConfigError("utterance", "unknown word '" + w + "'");
  }
  return {std::move(start), std::move(space), *team, std::move(human)};
}

double speedup(int l_single, int l_team) {
  if (l_team < 1) throw std::invalid_argument("L_team must be >= 1");
  return static_cast<double>(l_single) / static_cast<double>(l_team) - 1.0;
}

namespace {

// Steps until the human alone satisfies `goal`.
int solo_length(const WorldState& start, const PredicateSet& goal, Planner& planner, int horizon) {
  WorldState s = start;
  int t = 0;
  const Action idle = Action::noop(Agent::robot);
  while (!goal_satisfied(s, goal) && t < horizon) {
    auto a = planner.next_action(s, Agent::human, goal);
    if (!a || a->verb == Verb::noop) return horizon;
    s = step(s, *a, idle);
    ++t;
  }
  return goal_satisfied(s, goal) ? t : horizon;
}

Action human_choice(const WorldState& s, const PredicateSet& human_goal, const PredicateSet& team_goal,
                    Planner& planner) {
  for (const auto* g : {&human_goal, &team_goal}) {
    if (goal_satisfied(s, *g)) continue;
    auto a = planner.next_action(s, Agent::human, *g);
    if (a) return *a;
  }
  return Action::noop(Agent::human);
}

// The robot owes the items of its share on top of whatever is already placed,
// whoever else adds to the same slot; a team slot never needs more than the
// team count.
std::vector<Predicate> owed_goal(const WorldState& s, const PredicateSet& chosen, const std::vector<int>& owed,
                                 const PredicateSet& team) {
  std::vector<Predicate> preds;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (owed[i] <= 0) continue;
    Predicate p = chosen.items()[i];
    const int have = satisfied_count(s, p);
    p.count = have + owed[i];
    if (const int cap = team.count_for(p); cap > 0) p.count = std::min(p.count, std::max(cap, have));
    if (p.count > have) preds.push_back(std::move(p));
  }
  return preds;
}

// Next robot action for the owed slots together, else for the first slot
// that can still be reached on its own.
std::optional<Action> robot_choice(const WorldState& s, const std::vector<Predicate>& owed, Planner& planner) {
  if (owed.empty()) return std::nullopt;
  if (auto a = planner.next_action(s, Agent::robot, PredicateSet(owed))) return a;
  if (owed.size() == 1) return std::nullopt;
  for (const auto& p : owed) {
    if (auto a = planner.next_action(s, Agent::robot, PredicateSet({p}))) return a;
  }
  return std::nullopt;
}

}  // namespace

EpisodeLog run_episode(const ScenarioConfig& cfg) {
  auto prep = prepare(cfg);
  const Layout& layout = prep.start.layout();
  const PredicateSet& goal = prep.team.predicates;
  Planner planner(cfg.fusion.planner);
  const Lexicon& lexicon = Lexicon::builtin();

  EpisodeLog log;
  log.scenario_id = cfg.id;
  log.method = cfg.method;
  log.condition = cfg.condition;
  log.family = cfg.family;
  log.team_goal = prep.team.id;
  log.spoken = render(cfg.spoken);
  log.l_single = solo_length(prep.start, goal, planner, cfg.horizon);

  // Human works alone on its share until the instruction.
  std::vector<Action> before;
  if (!cfg.history.empty()) {
    for (const auto& a : cfg.history) {
      before.push_back(wrap("history", [&] { return parse_action(a, Agent::human, layout); }));
    }
  } else {
    auto plan = planner.make_plan(prep.start, Agent::human, prep.human_share);
    const auto cut = static_cast<std::size_t>(std::floor(cfg.instruction_fraction * static_cast<double>(plan.actions.size())));
    before.assign(plan.actions.begin(), plan.actions.begin() + static_cast<std::ptrdiff_t>(cut));
  }
  if (static_cast<int>(before.size()) >= cfg.horizon) throw ConfigError("history", "longer than the horizon");
  ActionHistory history = wrap("history", [&] { return ActionHistory(prep.start, before); });
  log.instruction_step = static_cast<int>(before.size());
  for (const auto& s : history.states()) log.states.push_back(s.describe());
  for (const auto& a : before) {
    log.human_actions.push_back(render(a, layout));
    log.robot_actions.push_back("noop");
  }

  // Speech channel.
  log.utterance = cfg.utterance.empty() ? instruction_words(cfg.spoken, layout, lexicon) : cfg.utterance;
  auto signal = corrupt(synthesize(log.utterance, lexicon), cfg.corruption);
  for (const auto& seg : signal.segments) log.signal.push_back(render(seg));
  auto transcript = transcribe(signal, lexicon);
  log.transcript = transcript.words;
  log.word_confidences = transcript.word_confidences;
  log.wer = wer(log.utterance, transcript.words);

  // Robot inference.
  PhoneticSubgoalScorer scorer(prep.start.layout_ptr(), lexicon, cfg.speech);
  const WorldState& now = history.current_state();
  PredicateSet chosen;
  switch (cfg.method) {
    case Method::siftom: {
      auto r = siftom(history, signal, prep.space, planner, scorer, cfg.fusion, lexicon);
      chosen = r.chosen;
      log.path = std::string(to_string(r.path));
      if (r.posterior) {
        for (const auto& [k, p] : r.posterior->entries()) log.posterior.emplace_back(render(k), p);
      }
      log.diagnostics = std::move(r.diagnostics);
      break;
    }
    case Method::speech_only: {
      auto best = best_speech_match(transcript, delegation_pool(prep.space, now), scorer);
      if (best) chosen = best->share;
      log.path = "speech";
      break;
    }
    case Method::vision_only: {
      auto post = subgoal_posterior(history, prep.space, planner, cfg.fusion.k_goals, cfg.fusion.n_subgoals,
                                    cfg.fusion.partial_weight);
      if (!post.empty()) chosen = post.argmax();
      for (const auto& [k, p] : post.entries()) log.posterior.emplace_back(render(k), p);
      log.transcript_used = false;
      log.path = "vision";
      break;
    }
    case Method::oracle:
      chosen = cfg.spoken;
      log.transcript_used = false;
      log.path = "oracle";
      break;
  }
  log.chosen = render(chosen);
  log.correct = chosen == cfg.spoken;
  log.helpful = !chosen.empty() && within_remaining(chosen, now, goal);

  // Joint execution.
  std::vector<int> owed;
  for (const auto& p : chosen) owed.push_back(p.count);
  WorldState s = now;
  int t = log.instruction_step;
  while (!goal_satisfied(s, goal) && t < cfg.horizon) {
    const Action ah = human_choice(s, prep.human_share, goal, planner);
    const WorldState after_human = apply_action(s, ah);
    Action ar = Action::noop(Agent::robot);
    if (auto a = robot_choice(s, owed_goal(s, chosen, owed, goal), planner)) ar = *a;
    if (ar.verb != Verb::noop && !is_legal(after_human, ar)) ar = Action::noop(Agent::robot);
    if (ah.verb == Verb::noop && ar.verb == Verb::noop) {
      t = cfg.horizon;  // nothing will change any more
      break;
    }
    s = step(s, ah, ar);
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      owed[i] -= std::max(0, satisfied_count(s, chosen.items()[i]) - satisfied_count(after_human, chosen.items()[i]));
    }
    ++t;
    log.human_actions.push_back(render(ah, layout));
    log.robot_actions.push_back(render(ar, layout));
    log.states.push_back(s.describe());
  }
  log.l_team = goal_satisfied(s, goal) ? t : cfg.horizon;
  log.speedup = speedup(log.l_single, log.l_team);
  return log;
}

std::vector<EpisodeLog> run_episodes(const std::vector<ScenarioConfig>& configs, unsigned threads) {
  std::vector<EpisodeLog> out(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        out[i] = run_episode(configs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(configs.size(), 1))));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

// --- Episode JSON ---

std::string episode_to_json(const EpisodeLog& l) {
  json post = json::array();
  for (const auto& [k, p] : l.posterior) post.push_back({{"share", k}, {"p", p}});
  json diag = json::array();
  for (const auto& d : l.diagnostics) {
    diag.push_back({{"share", render(d.share)}, {"action", d.action_term}, {"speech", d.speech_term}});
  }
  json j = {{"schema", kEpisodeSchema},
            {"scenario", l.scenario_id},
            {"method", to_string(l.method)},
            {"condition", l.condition},
            {"task_family", to_string(l.family)},
            {"team_goal", l.team_goal},
            {"spoken", l.spoken},
            {"instruction_step", l.instruction_step},
            {"utterance", l.utterance},
            {"signal", l.signal},
            {"transcript", l.transcript},
            {"word_confidences", l.word_confidences},
            {"transcript_used", l.transcript_used},
            {"wer", l.wer},
            {"path", l.path},
            {"chosen", l.chosen},
            {"posterior", post},
            {"diagnostics", diag},
            {"human_actions", l.human_actions},
            {"robot_actions", l.robot_actions},
            {"states", l.states},
            {"l_single", l.l_single},
            {"l_team", l.l_team},
            {"speedup", l.speedup},
            {"correct", l.correct},
            {"helpful", l.helpful}};
  return j.dump();
}

EpisodeLog episode_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("episode", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("episode", "expected an object");
  Reader r(j, "");
  if (r.get<std::string>("schema") != kEpisodeSchema) throw ConfigError("schema", "not an episode log");
  EpisodeLog l;
  l.scenario_id = r.get<std::string>("scenario");
  l.method = wrap("method", [&] { return method_from_string(r.get<std::string>("method")); });
  l.condition = r.get<std::string>("condition");
  l.family = wrap("task_family", [&] { return task_family_from_string(r.get<std::string>("task_family")); });
  l.team_goal = r.get<std::string>("team_goal");
  l.spoken = r.get<std::string>("spoken");
  l.instruction_step = r.get<int>("instruction_step");
  l.utterance = r.get<std::vector<std::string>>("utterance");
  l.signal = r.get<std::vector<std::string>>("signal");
  l.transcript = r.get<std::vector<std::string>>("transcript");
  l.word_confidences = r.get<std::vector<double>>("word_confidences");
  l.transcript_used = r.get<bool>("transcript_used");
  l.wer = r.get<double>("wer");
  l.path = r.get<std::string>("path");
  l.chosen = r.get<std::string>("chosen");
  for (const auto& e : r.array("posterior")) l.posterior.emplace_back(e.get<std::string>("share"), e.get<double>("p"));
  for (const auto& e : r.array("diagnostics")) {
    auto share = wrap(e.at("share"), [&] { return parse_predicate_set(e.get<std::string>("share")); });
    l.diagnostics.push_back({std::move(share), e.get<double>("action"), e.get<double>("speech")});
  }
  l.human_actions = r.get<std::vector<std::string>>("human_actions");
  l.robot_actions = r.get<std::vector<std::string>>("robot_actions");
  l.states = r.get<std::vector<std::string>>("states");
  l.l_single = r.get<int>("l_single");
  l.l_team = r.get<int>("l_team");
  l.speedup = r.get<double>("speedup");
  l.correct = r.get<bool>("correct");
  l.helpful = r.get<bool>("helpful");
  return l;
}

std::vector<EpisodeLog> read_episodes(std::istream& in) {
  return read_lines<EpisodeLog>(in, "episodes", [](const std::string& l) { return episode_from_json(l); });
}

void write_episodes(std::ostream& out, const std::vector<EpisodeLog>& logs) {
  for (const auto& l : logs) out << episode_to_json(l) << '\n';
}

// --- Metrics ---

Metrics summarize(const std::vector<const EpisodeLog*>& logs) {
  if (logs.empty()) throw EmptyInput();
  Metrics m;
  m.episodes = logs.size();
  std::size_t correct = 0, wrong = 0, helpful = 0, negative = 0, fast = 0;
  double sp = 0.0, w = 0.0;
  for (const auto* l : logs) {
    if (l->correct) {
      ++correct;
    } else {
      ++wrong;
      if (l->helpful) ++helpful;
    }
    if (l->speedup < 0.0) ++negative;
    if (l->path == "fast") ++fast;
    sp += l->speedup;
    w += l->wer;
  }
  const auto n = static_cast<double>(logs.size());
  m.accuracy = static_cast<double>(correct) / n;
  m.mean_speedup = sp / n;
  m.mean_wer = w / n;
  m.negative_speedup_fraction = static_cast<double>(negative) / n;
  m.helpful_error_fraction = wrong == 0 ? 0.0 : static_cast<double>(helpful) / static_cast<double>(wrong);
  m.fast_path_fraction = static_cast<double>(fast) / n;
  return m;
}

MetricsReport aggregate(const std::vector<EpisodeLog>& logs) {
  if (logs.empty()) throw EmptyInput();
  MetricsReport report;
  std::vector<const EpisodeLog*> all;
  std::map<std::string, std::vector<const EpisodeLog*>> groups;
  for (const auto& l : logs) {
    all.push_back(&l);
    groups[std::string(to_string(l.method)) + "/" + l.condition].push_back(&l);
  }
  report.overall = summarize(all);
  for (const auto& [key, members] : groups) report.breakdown.emplace_back(key, summarize(members));
  return report;
}

void write_report_csv(std::ostream& out, const MetricsReport& report) {
  out << "group,episodes,accuracy,mean_speedup,mean_wer,negative_speedup_fraction,helpful_error_fraction,"
         "fast_path_fraction\n";
  auto row = [&](const std::string& key, const Metrics& m) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", m.episodes, m.accuracy, m.mean_speedup,
                  m.mean_wer, m.negative_speedup_fraction, m.helpful_error_fraction, m.fast_path_fraction);
    out << key << ',' << buf << '\n';
  };
  row("all", report.overall);
  for (const auto& [key, m] : report.breakdown) row(key, m);
}

// --- Benchmark generation ---

namespace {

Location surface(std::string id) { return {std::move(id), LocationKind::surface, false, false}; }
Location closed_container(std::string id) { return {std::move(id), LocationKind::container, true, false}; }
Location floor_of(std::string id) { return {std::move(id), LocationKind::room_floor, false, false}; }

// Three instances of each class, each at a random source location.
void stock(SceneSpec& scene, const std::vector<std::string>& classes, const std::vector<std::string>& sources,
           Rng& rng) {
  for (const auto& c : classes) {
    for (int i = 1; i <= 3; ++i) {
      scene.objects.push_back({c + std::to_string(i), c, sources[rng.below(sources.size())]});
    }
  }
}

SceneSpec family_scene(TaskFamily family, Rng& rng) {
  SceneSpec s;
  const std::vector<ObjectClass> tableware = {{"fork", Category::utensil, {}},
                                              {"plate", Category::dish, {}},
                                              {"waterglass", Category::glass, {}},
                                              {"wineglass", Category::glass, {}}};
  const std::vector<ObjectClass> food = {{"apple", Category::food, {}},
                                         {"cupcake", Category::food, {}},
                                         {"pudding", Category::food, {}},
                                         {"salmon", Category::food, {}}};
  auto names = [](const std::vector<ObjectClass>& cs) {
    std::vector<std::string> out;
    for (const auto& c : cs) out.push_back(c.name);
    return out;
  };
  switch (family) {
    case TaskFamily::set_table:
      s.classes = tableware;
      s.locations = {closed_container("cabinet"), surface("coffeetable"), surface("counter"), surface("kitchentable"),
                     floor_of("livingroom")};
      stock(s, names(tableware), {"cabinet", "counter"}, rng);
      s.human_start = s.robot_start = "livingroom";
      break;
    case TaskFamily::prepare_meal:
      s.classes = food;
      s.locations = {surface("counter"), closed_container("fridge"), floor_of("kitchen"), surface("kitchentable")};
      stock(s, names(food), {"counter", "fridge"}, rng);
      s.human_start = s.robot_start = "kitchen";
      break;
    case TaskFamily::put_groceries:
      s.classes = food;
      s.locations = {surface("counter"), closed_container("fridge"), floor_of("kitchen"), surface("kitchentable")};
      stock(s, names(food), {"counter", "kitchentable"}, rng);
      s.human_start = s.robot_start = "kitchen";
      break;
    case TaskFamily::load_dishwasher:
      s.classes = tableware;
      s.locations = {surface("counter"), closed_container("dishwasher"), floor_of("kitchen"), surface("kitchentable")};
      stock(s, names(tableware), {"counter", "kitchentable"}, rng);
      s.human_start = s.robot_start = "kitchen";
      break;
    case TaskFamily::breakfast:
      throw ConfigError("task_family", "breakfast is only used by the demo scenario");
  }
  return s;
}

std::string fixed(double x, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

}  // namespace

ScenarioConfig demo_scenario() {
  ScenarioConfig c;
  c.id = "demo/cereal";
  c.family = TaskFamily::breakfast;
  c.scene.classes = {{"bowl", Category::dish, {}},   {"cereal", Category::food, {"cereal box"}},
                     {"coffee", Category::food, {}}, {"cup", Category::dish, {}},
                     {"milk", Category::food, {}},   {"tea", Category::food, {}}};
  c.scene.locations = {closed_container("cabinet"), surface("counter"), surface("diningtable"),
                       closed_container("fridge"), floor_of("kitchen")};
  c.scene.objects = {{"bowl1", "bowl", "cabinet"}, {"cereal1", "cereal", "counter"}, {"coffee1", "coffee", "counter"},
                     {"cup1", "cup", "cabinet"},   {"milk1", "milk", "fridge"},       {"tea1", "tea", "counter"}};
  c.scene.human_start = c.scene.robot_start = "kitchen";
  auto breakfast = [](const std::vector<std::string>& items) {
    std::vector<Predicate> ps;
    for (const auto& i : items) ps.push_back({Relation::on, i, "diningtable", 1});
    return PredicateSet(std::move(ps));
  };
  c.goals = {breakfast({"bowl", "cereal", "milk"}), breakfast({"coffee", "cup", "milk"}),
             breakfast({"cup", "milk", "tea"})};
  c.team_goal = render(c.goals[0]);
  c.spoken = breakfast({"cereal"});
  c.utterance = {"can", "you", "pass", "the", "cereal", "box"};
  c.history = {"walk_to(cabinet)", "open(cabinet)",           "grab(bowl1)",
               "walk_to(fridge)",  "open(fridge)",            "grab(milk1)",
               "walk_to(diningtable)", "put(bowl1, diningtable)", "put(milk1, diningtable)"};
  c.condition = "demo";
  c.corruption.kind = CorruptionKind::mispronounce;
  c.corruption.words = 1;
  return c;
}

std::vector<ScenarioConfig> generate_benchmark(const BenchmarkSpec& spec) {
  struct Condition {
    std::string label;
    CorruptionKind kind;
    double rho = 0.0;
  };
  std::vector<Condition> conditions;
  for (const auto& name : spec.conditions) {
    const auto kind = corruption_kind_from_string(name);
    if (kind == CorruptionKind::noise) {
      for (double rho : spec.rhos) conditions.push_back({"noise:" + fixed(rho, 2), kind, rho});
    } else {
      conditions.push_back({name, kind});
    }
  }

  std::vector<ScenarioConfig> out;
  std::uint64_t stream = 0;
  for (auto family : spec.families) {
    for (const auto& cond : conditions) {
      for (int i = 0; i < spec.per_condition; ++i, ++stream) {
        Rng rng(derive_seed(spec.seed, stream));
        ScenarioConfig c;
        c.id = std::string(to_string(family)) + "/" + cond.label + "/" + std::to_string(i);
        c.family = family;
        c.scene = family_scene(family, rng);
        const auto start = WorldState::from_scene(c.scene);
        auto space = enumerate_goal_space(family, start, c.limits);
        const auto& team = space.goals[rng.below(space.goals.size())];
        c.team_goal = team.id;
        // Spoken share drawn from the model's delegation prior, leaving the
        // human some work of its own.
        std::vector<Delegation> shares;
        for (auto& d : candidate_delegations(team, start, std::numeric_limits<std::size_t>::max(), spec.fusion.partial_weight)) {
          if (d.share != team.predicates) shares.push_back(std::move(d));
        }
        double total = 0.0;
        for (const auto& d : shares) total += d.weight;
        double u = rng.uniform() * total;
        std::size_t pick = 0;
        while (pick + 1 < shares.size() && u >= shares[pick].weight) u -= shares[pick++].weight;
        c.spoken = shares[pick].share;
        c.fusion = spec.fusion;
        c.speech = spec.speech;
        c.condition = cond.label;
        c.corruption.kind = cond.kind;
        c.corruption.rho = cond.rho;
        c.corruption.seed = rng.next();
        if (cond.kind == CorruptionKind::accent) {
          const auto& names = AccentMap::builtin_names();
          c.corruption.accent = names[static_cast<std::size_t>(i) % names.size()];
        }
        out.push_back(std::move(c));
      }
    }
  }
  if (spec.include_demo) out.push_back(demo_scenario());
  return out;
}

}  // namespace siftom
