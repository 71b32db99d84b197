// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "siftom/fusion.hpp"
#include "siftom/harness.hpp"
#include "siftom/inference.hpp"
#include "siftom/planner.hpp"
#include "siftom/speech.hpp"
#include "support.hpp"

namespace {

using namespace siftom;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  Rng rng(20240);
  double worst = 0.0;
  int worlds = 0;
  for (; worlds < 60; ++worlds) {
    auto w = testing::random_micro_world(rng);
    PlannerConfig pc;
    pc.temperature = 0.5 + rng.uniform();
    auto post = goal_posterior(w.history, w.space, pc);
    auto oracle = testing::oracle_goal_posterior(w, pc);
    if (post.size() != oracle.size()) return {false, "goal posterior support differs"};
    for (const auto& [id, p] : oracle) worst = std::max(worst, std::abs(post.probability(id) - p));

    FusionConfig fc;
    fc.planner = pc;
    fc.n_subgoals = 100;
    Planner planner(pc);
    testing::TableScorer speech(static_cast<std::uint64_t>(worlds));
    auto fused = integrate(w.history, Transcript{}, w.space, planner, speech, fc);
    auto fused_oracle = testing::oracle_fused(w, pc, &speech);
    if (fused.size() != fused_oracle.size()) return {false, "fused support differs"};
    for (const auto& [share, p] : fused_oracle) worst = std::max(worst, std::abs(fused.probability(share) - p));
  }
  const double secs = seconds_since(t0);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d worlds, max |diff| %.2e, %.2f s", worlds, worst, secs);
  return {worst <= 1e-9 && secs < 10.0, buf};
}

Outcome softmax_correctness() {
  auto p = boltzmann_from_costs(std::vector<double>{2.0, 3.0}, 1.0);
  bool ok = std::abs(p[0] - 0.7311) <= 1e-4 && std::abs(p[1] - 0.2689) <= 1e-4;

  // The same values through the policy: grab has q 3, noop q 4.
  auto s = testing::fridge_world();
  const auto goal = parse_predicate_set("inside(apple, fridge, 1)");
  auto pol = boltzmann_policy(s, Agent::human, goal);
  const double grab = pol.probability(Action::grab(Agent::human, 0));
  const double noop = pol.probability(Action::noop(Agent::human));
  ok = ok && std::abs(grab / (grab + noop) - 0.7311) <= 1e-4 && std::abs(pol.total() - 1.0) <= 1e-9;

  Rng rng(99);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng.below(6);
    std::vector<double> q(n);
    for (auto& v : q) v = static_cast<double>(rng.below(12)) + rng.uniform();
    auto pt = boltzmann_from_costs(q, 0.25 + rng.uniform() * 4.0);
    double total = 0.0;
    for (double v : pt) total += v;
    const double best = *std::min_element(q.begin(), q.end());
    const auto ties = static_cast<double>(std::count(q.begin(), q.end(), best));
    // Cold relative to the gap between the best and the runner-up.
    double gap = INFINITY;
    for (double v : q) {
      if (v > best) gap = std::min(gap, v - best);
    }
    auto cold = boltzmann_from_costs(q, std::isinf(gap) ? 1e-4 : gap / 50.0);
    bool limit = true;
    for (std::size_t k = 0; k < n; ++k) limit = limit && std::abs(cold[k] - (q[k] == best ? 1.0 / ties : 0.0)) <= 1e-9;
    if (std::abs(total - 1.0) > 1e-9 || !limit) ++bad;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "p = %.4f/%.4f, 1000 vectors, %d failures", p[0], p[1], bad);
  return {ok && bad == 0, buf};
}

Outcome planner_optimality() {
  Rng rng(777);
  int checked = 0, reachable = 0, mismatched = 0;
  Planner planner;
  for (; checked < 150; ++checked) {
    auto c = testing::random_planner_case(rng, 6, 4);
    auto want = testing::bfs_cost(c.state, Agent::human, c.goal);
    auto got = planner.optimal_cost(c.state, Agent::human, c.goal);
    if (want) ++reachable;
    if (want.has_value() != got.has_value() || (want && static_cast<double>(*want) != *got)) ++mismatched;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d worlds (%d reachable), %d mismatches", checked, reachable, mismatched);
  return {mismatched == 0 && checked >= 100, buf};
}

// Noise slice of the benchmark, run once per method.
struct NoiseBenchmark {
  std::map<Method, std::vector<EpisodeLog>> logs;
  double seconds = 0.0;
  std::size_t episodes = 0;

  NoiseBenchmark() {
    const auto t0 = Clock::now();
    BenchmarkSpec spec;
    spec.seed = 0;
    spec.per_condition = 20;
    spec.conditions = {"noise"};
    spec.include_demo = false;
    const auto configs = generate_benchmark(spec);
    episodes = configs.size();
    for (auto m : {Method::siftom, Method::speech_only, Method::vision_only}) {
      auto cs = configs;
      for (auto& c : cs) c.method = m;
      logs[m] = run_episodes(cs);
    }
    seconds = seconds_since(t0);
  }

  Metrics at(Method m, const std::string& condition) const {
    std::vector<const EpisodeLog*> sel;
    for (const auto& l : logs.at(m)) {
      if (l.condition == condition) sel.push_back(&l);
    }
    return summarize(sel);
  }
};

const NoiseBenchmark& noise_benchmark() {
  static const NoiseBenchmark b;
  return b;
}

Outcome ranking() {
  const auto& b = noise_benchmark();
  bool ok = b.episodes >= 200 && b.seconds < 300.0;
  std::ostringstream out;
  out << b.episodes << " episodes/method, " << static_cast<int>(b.seconds) << " s;";
  for (const char* cond : {"noise:0.10", "noise:0.20", "noise:0.30"}) {
    const double s = b.at(Method::siftom, cond).accuracy;
    const double sp = b.at(Method::speech_only, cond).accuracy;
    const double v = b.at(Method::vision_only, cond).accuracy;
    ok = ok && s >= sp && s >= v;
    char buf[96];
    std::snprintf(buf, sizeof buf, " %s %.3f/%.3f/%.3f", cond + 6, s, sp, v);
    out << buf;
  }
  const double gap = b.at(Method::siftom, "noise:0.30").accuracy - b.at(Method::speech_only, "noise:0.30").accuracy;
  ok = ok && gap >= 0.10;
  out << " (siftom/speech/vision), gap " << gap;
  return {ok, out.str()};
}

Outcome wer_decoupling() {
  const auto& b = noise_benchmark();
  const auto& s = b.logs.at(Method::siftom);
  const auto& sp = b.logs.at(Method::speech_only);
  bool same = s.size() == sp.size();
  for (std::size_t i = 0; same && i < s.size(); ++i) same = s[i].transcript == sp[i].transcript && s[i].wer == sp[i].wer;
  const auto ms = b.at(Method::siftom, "noise:0.30");
  const auto mp = b.at(Method::speech_only, "noise:0.30");
  char buf[160];
  std::snprintf(buf, sizeof buf, "rho 0.3: transcripts %s, WER %.3f vs %.3f, accuracy %.3f vs %.3f",
                same ? "identical" : "differ", ms.mean_wer, mp.mean_wer, ms.accuracy, mp.accuracy);
  return {same && ms.accuracy - mp.accuracy >= 0.10, buf};
}

Outcome helpful_errors() {
  const auto& b = noise_benchmark();
  const auto ms = b.at(Method::siftom, "noise:0.30");
  const auto mp = b.at(Method::speech_only, "noise:0.30");
  char buf[128];
  std::snprintf(buf, sizeof buf, "rho 0.3 helpful-error fraction %.3f vs %.3f", ms.helpful_error_fraction,
                mp.helpful_error_fraction);
  return {ms.helpful_error_fraction > mp.helpful_error_fraction, buf};
}

Outcome golden_demo() {
  const auto a = run_episode(demo_scenario());
  const auto b = run_episode(demo_scenario());
  const bool same = episode_to_json(a) == episode_to_json(b);
  std::string heard;
  for (const auto& w : a.transcript) heard += (heard.empty() ? "" : " ") + w;
  return {a.path == "slow" && a.chosen == "on(cereal, diningtable, 1)" && same,
          "heard '" + heard + "', path " + a.path + ", chosen " + a.chosen + (same ? ", repeatable" : ", NOT repeatable")};
}

Outcome fast_path_gate() {
  BenchmarkSpec spec;
  spec.per_condition = 20;
  spec.conditions = {"clean"};
  spec.include_demo = false;
  const auto logs = run_episodes(generate_benchmark(spec));
  std::vector<const EpisodeLog*> all;
  bool chosen_ok = true;
  for (const auto& l : logs) {
    all.push_back(&l);
    chosen_ok = chosen_ok && l.chosen == l.spoken;
  }
  const auto m = summarize(all);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu clean episodes, fast %.3f, accuracy %.3f", m.episodes, m.fast_path_fraction,
                m.accuracy);
  return {m.fast_path_fraction >= 0.95 && m.accuracy == 1.0 && chosen_ok, buf};
}

Outcome determinism() {
  BenchmarkSpec spec;
  spec.seed = 11;
  spec.per_condition = 3;
  auto text = [&](unsigned threads) {
    std::ostringstream out;
    write_episodes(out, run_episodes(generate_benchmark(spec), threads));
    return out.str();
  };
  const auto a = text(1);
  const auto b = text(1);
  const auto c = text(2);
  return {a == b && a == c && !a.empty(), std::to_string(a.size()) + " bytes, repeated and threaded runs " +
                                              (a == b && a == c ? "identical" : "differ")};
}

Outcome metric_formulas() {
  auto w = [](const char* r, const char* h) { return wer(split_words(r), split_words(h)); };
  const bool ok = speedup(10, 10) == 0.0 && speedup(30, 20) == 0.5 && w("put three forks", "put three forks") == 0.0 &&
                  w("put three forks", "put tree forks") == 1.0 / 3.0 && w("go", "go go go") == 2.0;
  return {ok, "speedup 0 and 0.5, WER 0, 1/3 and 2.0"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle equivalence", oracle_equivalence}, {"softmax correctness", softmax_correctness},
      {"planner optimality", planner_optimality}, {"method ranking", ranking},
      {"WER/accuracy decoupling", wer_decoupling}, {"helpful errors", helpful_errors},
      {"golden demo", golden_demo},               {"fast-path gate", fast_path_gate},
      {"determinism", determinism},               {"metric formulas", metric_formulas},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
