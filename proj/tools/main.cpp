#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "siftom/harness.hpp"
#include "siftom/random.hpp"

namespace {

using namespace siftom;

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open for reading");
  return in;
}

// Writes to `path`, or stdout when it is empty or "-".
template <class Fn>
void with_output(const std::string& path, Fn fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(path, "cannot open for writing");
  fn(out);
}

struct RunOverrides {
  std::optional<std::string> method;
  std::optional<double> theta, temperature, rho, sharpness, partial_weight;
  std::optional<std::size_t> k, n;
  std::optional<std::uint64_t> seed;
};

void apply_overrides(const RunOverrides& o, std::vector<ScenarioConfig>& configs) {
  for (std::size_t i = 0; i < configs.size(); ++i) {
    auto& c = configs[i];
    if (o.method) c.method = method_from_string(*o.method);
    if (o.theta) c.fusion.theta = *o.theta;
    if (o.temperature) c.fusion.planner.temperature = *o.temperature;
    if (o.k) c.fusion.k_goals = *o.k;
    if (o.n) c.fusion.n_subgoals = *o.n;
    if (o.sharpness) c.speech.sharpness = *o.sharpness;
    if (o.partial_weight) c.fusion.partial_weight = *o.partial_weight;
    if (o.rho && c.corruption.kind == CorruptionKind::noise) c.corruption.rho = *o.rho;
    if (o.seed) c.corruption.seed = derive_seed(*o.seed, i);
  }
}

void print_demo(const EpisodeLog& log, std::ostream& out) {
  auto join = [](const std::vector<std::string>& words) {
    std::string s;
    for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
    return s;
  };
  out << "scenario:    " << log.scenario_id << "\n"
      << "team goal:   " << log.team_goal << "\n"
      << "spoken:      " << log.spoken << "\n"
      << "history:     ";
  for (int i = 0; i < log.instruction_step; ++i) out << (i ? "; " : "") << log.human_actions[static_cast<std::size_t>(i)];
  out << "\nutterance:   " << join(log.utterance) << "\n"
      << "transcript:  " << join(log.transcript) << "  (wer " << log.wer << ")\n"
      << "path:        " << log.path << "\n";
  if (!log.diagnostics.empty()) {
    out << "candidates:\n";
    for (const auto& d : log.diagnostics) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "  action %.4f  speech %.4f  ", d.action_term, d.speech_term);
      out << buf << render(d.share) << "\n";
    }
    out << "posterior:\n";
    for (const auto& [share, p] : log.posterior) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "  %.4f  ", p);
      out << buf << share << "\n";
    }
  }
  out << "chosen:      " << log.chosen << (log.correct ? "  (correct)" : "  (wrong)") << "\n"
      << "L_single " << log.l_single << ", L_team " << log.l_team << ", speedup " << log.speedup << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech-and-action subgoal inference benchmark"};
  app.require_subcommand(1);

  BenchmarkSpec spec;
  std::string gen_out;
  bool no_demo = false;
  auto* gen = app.add_subcommand("generate", "Emit benchmark scenario configs (JSON lines)");
  gen->add_option("--seed", spec.seed, "Generator seed");
  gen->add_option("--per-condition", spec.per_condition, "Scenarios per family and condition")->check(CLI::NonNegativeNumber);
  gen->add_option("--rhos", spec.rhos, "Noise levels")->delimiter(',');
  gen->add_option("--conditions", spec.conditions, "clean,noise,accent,mispronounce")->delimiter(',');
  gen->add_flag("--no-demo", no_demo, "Leave out the demo scenario");
  gen->add_option("--partial-weight", spec.fusion.partial_weight, "Delegation prior weight of partial slots");
  gen->add_option("--k", spec.fusion.k_goals, "Goals kept for subgoal inference");
  gen->add_option("--n", spec.fusion.n_subgoals, "Subgoal candidates kept");
  gen->add_option("--theta", spec.fusion.theta, "Fast-path threshold");
  gen->add_option("--temperature", spec.fusion.planner.temperature, "Boltzmann temperature");
  gen->add_option("--sharpness", spec.speech.sharpness, "Speech likelihood sharpness");
  gen->add_option("--out", gen_out, "Output file (default stdout)");

  std::string run_config, run_out;
  unsigned threads = 1;
  RunOverrides ov;
  auto* run = app.add_subcommand("run", "Run scenario configs and write episode logs (JSON lines)");
  run->add_option("--config", run_config, "Scenario file from `generate`")->required();
  run->add_option("--method", ov.method, "siftom | speech_only | vision_only | oracle");
  run->add_option("--theta", ov.theta, "Fast-path threshold");
  run->add_option("--temperature", ov.temperature, "Boltzmann temperature");
  run->add_option("--k", ov.k, "Goals kept for subgoal inference");
  run->add_option("--n", ov.n, "Subgoal candidates kept");
  run->add_option("--rho", ov.rho, "Override the noise rate of noise scenarios");
  run->add_option("--sharpness", ov.sharpness, "Speech likelihood sharpness");
  run->add_option("--partial-weight", ov.partial_weight, "Delegation prior weight of partial slots");
  run->add_option("--seed", ov.seed, "Re-seed every corruption from this base seed");
  run->add_option("--threads", threads, "Worker threads");
  run->add_option("--out", run_out, "Output file (default stdout)");

  std::vector<std::string> report_in;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Aggregate episode logs into a CSV table");
  report->add_option("logs", report_in, "Episode log files")->required();
  report->add_option("--out", report_out, "Output file (default stdout)");

  auto* demo = app.add_subcommand("demo", "Run the cereal-box demo and print the fusion diagnostics");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      spec.include_demo = !no_demo;
      auto configs = generate_benchmark(spec);
      with_output(gen_out, [&](std::ostream& o) { write_scenarios(o, configs); });
    } else if (*run) {
      auto in = open_in(run_config);
      auto configs = read_scenarios(in);
      apply_overrides(ov, configs);
      auto logs = run_episodes(configs, threads);
      with_output(run_out, [&](std::ostream& o) { write_episodes(o, logs); });
    } else if (*report) {
      std::vector<EpisodeLog> logs;
      for (const auto& path : report_in) {
        auto in = open_in(path);
        auto part = read_episodes(in);
        logs.insert(logs.end(), part.begin(), part.end());
      }
      auto r = aggregate(logs);
      with_output(report_out, [&](std::ostream& o) { write_report_csv(o, r); });
    } else if (*demo) {
      print_demo(run_episode(demo_scenario()), std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
