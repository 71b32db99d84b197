#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "siftom/fusion.hpp"
#include "siftom/goals.hpp"
#include "siftom/speech.hpp"
#include "siftom/world.hpp"

namespace siftom {

// oracle always picks the spoken delegation; used as an upper bound.
enum class Method : std::uint8_t { siftom, speech_only, vision_only, oracle };
std::string_view to_string(Method m);
Method method_from_string(std::string_view text);

inline constexpr std::string_view kScenarioSchema = "siftom-scenario/1";
inline constexpr std::string_view kEpisodeSchema = "siftom-episode/1";

struct ScenarioConfig {
  std::string id;
  SceneSpec scene;
  TaskFamily family = TaskFamily::set_table;
  GoalLimits limits;
  // Explicit goal space; when empty the family template is enumerated.
  std::vector<PredicateSet> goals;
  std::string team_goal;  // goal id, i.e. rendered predicates
  PredicateSet spoken;    // robot share named in the instruction
  // Spoken words; empty means instruction_words(spoken).
  std::vector<std::string> utterance;
  // Human actions before the instruction; empty means the first
  // instruction_fraction of the human's own plan.
  std::vector<std::string> history;
  std::string condition = "clean";
  CorruptionModel corruption;
  Method method = Method::siftom;
  FusionConfig fusion;
  PhoneticScorerConfig speech;
  double instruction_fraction = 1.0 / 3.0;
  int horizon = 100;
};

// Throws ConfigError naming the faulty field.
ScenarioConfig scenario_from_json(std::string_view text);
std::string scenario_to_json(const ScenarioConfig& cfg);
// One JSON object per line.
std::vector<ScenarioConfig> read_scenarios(std::istream& in);
void write_scenarios(std::ostream& out, const std::vector<ScenarioConfig>& configs);

struct EpisodeLog {
  std::string scenario_id;
  Method method = Method::siftom;
  std::string condition;
  TaskFamily family = TaskFamily::set_table;
  std::string team_goal;
  std::string spoken;
  std::vector<std::string> states;  // describe() per timestep, 0..L_team
  std::vector<std::string> human_actions;
  std::vector<std::string> robot_actions;
  int instruction_step = 0;
  std::vector<std::string> utterance;
  std::vector<std::string> signal;  // rendered phoneme segments
  std::vector<std::string> transcript;
  std::vector<double> word_confidences;
  bool transcript_used = true;
  double wer = 0.0;
  std::string path;  // fast, slow, speech, vision or oracle
  std::string chosen;
  std::vector<std::pair<std::string, double>> posterior;
  std::vector<CandidateTerms> diagnostics;
  int l_single = 0;
  int l_team = 0;
  double speedup = 0.0;
  bool correct = false;
  // Chosen share is non-empty and fits the team goal's remaining work.
  bool helpful = false;
};

// Builds the world and goal space and validates cross references.
struct PreparedScenario {
  WorldState start;
  GoalSpace space;
  GoalSpec team;
  PredicateSet human_share;
};
PreparedScenario prepare(const ScenarioConfig& cfg);

EpisodeLog run_episode(const ScenarioConfig& cfg);

// Runs every config on `threads` workers; output order matches input.
std::vector<EpisodeLog> run_episodes(const std::vector<ScenarioConfig>& configs, unsigned threads = 1);

// L_single / L_team - 1.
double speedup(int l_single, int l_team);

std::string episode_to_json(const EpisodeLog& log);
EpisodeLog episode_from_json(std::string_view text);
std::vector<EpisodeLog> read_episodes(std::istream& in);
void write_episodes(std::ostream& out, const std::vector<EpisodeLog>& logs);

class EmptyInput : public Error {
 public:
  EmptyInput() : Error("no episodes to aggregate") {}
};

struct Metrics {
  std::size_t episodes = 0;
  double accuracy = 0.0;
  double mean_speedup = 0.0;
  double mean_wer = 0.0;
  double negative_speedup_fraction = 0.0;
  // Among incorrect episodes; 0 when there are none.
  double helpful_error_fraction = 0.0;
  double fast_path_fraction = 0.0;
};

struct MetricsReport {
  Metrics overall;
  // Keyed by "method/condition", sorted.
  std::vector<std::pair<std::string, Metrics>> breakdown;
};

// Throws EmptyInput.
Metrics summarize(const std::vector<const EpisodeLog*>& logs);
MetricsReport aggregate(const std::vector<EpisodeLog>& logs);
void write_report_csv(std::ostream& out, const MetricsReport& report);

struct BenchmarkSpec {
  std::uint64_t seed = 0;
  int per_condition = 10;
  std::vector<double> rhos{0.1, 0.2, 0.3};
  std::vector<TaskFamily> families{TaskFamily::set_table, TaskFamily::prepare_meal, TaskFamily::put_groceries,
                                   TaskFamily::load_dishwasher};
  // Condition names to generate, from: clean, noise, accent, mispronounce.
  std::vector<std::string> conditions{"clean", "noise", "accent", "mispronounce"};
  bool include_demo = true;
  // Copied into every scenario. fusion.partial_weight also shapes how the
  // spoken share is drawn.
  FusionConfig fusion = benchmark_fusion();
  PhoneticScorerConfig speech{16.0};

  // Wide K/N so the true share survives truncation, and a prior that favours
  // whole-class requests.
  static FusionConfig benchmark_fusion() {
    FusionConfig f;
    f.k_goals = 100;
    f.n_subgoals = 50;
    f.partial_weight = 0.1;
    return f;
  }
};

// families x (clean, noise per rho, accent, mispronounce) x per_condition,
// then the demo scenario.
std::vector<ScenarioConfig> generate_benchmark(const BenchmarkSpec& spec);

// The kitchen demo: bowl and milk already on the dining table, the request
// for the cereal box mispronounced as "cd box".
ScenarioConfig demo_scenario();

}  // namespace siftom
