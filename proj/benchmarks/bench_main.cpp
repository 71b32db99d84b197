#include <benchmark/benchmark.h>

#include "siftom/fusion.hpp"
#include "siftom/harness.hpp"
#include "siftom/inference.hpp"
#include "siftom/planner.hpp"
#include "siftom/speech.hpp"

namespace {

using namespace siftom;

struct DemoFixture {
  ScenarioConfig cfg = demo_scenario();
  PreparedScenario prep = prepare(cfg);
  ActionHistory history{prep.start, actions()};

  std::vector<Action> actions() const {
    std::vector<Action> out;
    for (const auto& a : cfg.history) out.push_back(parse_action(a, Agent::human, prep.start.layout()));
    return out;
  }
};

const DemoFixture& demo() {
  static const DemoFixture d;
  return d;
}

void BM_OptimalCostColdCache(benchmark::State& st) {
  const auto& d = demo();
  for (auto _ : st) {
    Planner planner;
    benchmark::DoNotOptimize(planner.optimal_cost(d.prep.start, Agent::human, d.prep.team.predicates));
  }
}
BENCHMARK(BM_OptimalCostColdCache);

void BM_BoltzmannPolicy(benchmark::State& st) {
  const auto& d = demo();
  Planner planner;
  for (auto _ : st) benchmark::DoNotOptimize(planner.boltzmann_policy(d.prep.start, Agent::human, d.prep.team.predicates));
}
BENCHMARK(BM_BoltzmannPolicy);

void BM_GoalPosterior(benchmark::State& st) {
  const auto& d = demo();
  for (auto _ : st) benchmark::DoNotOptimize(goal_posterior(d.history, d.prep.space, PlannerConfig{}));
}
BENCHMARK(BM_GoalPosterior);

void BM_SubgoalPosterior(benchmark::State& st) {
  const auto& d = demo();
  const auto k = static_cast<std::size_t>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(subgoal_posterior(d.history, d.prep.space, PlannerConfig{}, k, 50));
}
BENCHMARK(BM_SubgoalPosterior)->Arg(1)->Arg(3);

void BM_Transcribe(benchmark::State& st) {
  CorruptionModel m;
  m.kind = CorruptionKind::noise;
  m.rho = 0.3;
  const auto signal = corrupt(synthesize(split_words("can you put three forks on the kitchentable")), m);
  for (auto _ : st) benchmark::DoNotOptimize(transcribe(signal));
}
BENCHMARK(BM_Transcribe);

void BM_SiftomDemo(benchmark::State& st) {
  const auto& d = demo();
  CorruptionModel m;
  m.kind = CorruptionKind::mispronounce;
  const auto signal = corrupt(synthesize(d.cfg.utterance), m);
  for (auto _ : st) benchmark::DoNotOptimize(siftom::siftom(d.history, signal, d.prep.space, Lexicon::builtin(), d.cfg.fusion));
}
BENCHMARK(BM_SiftomDemo);

void BM_DemoEpisode(benchmark::State& st) {
  const auto cfg = demo_scenario();
  for (auto _ : st) benchmark::DoNotOptimize(run_episode(cfg));
}
BENCHMARK(BM_DemoEpisode)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
