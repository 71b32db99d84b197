#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "siftom/goals.hpp"
#include "siftom/inference.hpp"
#include "siftom/planner.hpp"
#include "siftom/posterior.hpp"
#include "siftom/speech.hpp"

namespace siftom {

struct FusionConfig {
  // Fast-path gate; the bar is strict, so 1.0 disables the fast path.
  double theta = 0.95;
  std::size_t k_goals = 3;
  std::size_t n_subgoals = 5;
  // Prior weight of each partially delegated slot; 1 is uniform.
  double partial_weight = 1.0;
  PlannerConfig planner;

  void validate() const;
};

enum class FusionPath : std::uint8_t { fast, slow };
std::string_view to_string(FusionPath p);

struct CandidateTerms {
  PredicateSet share;
  double action_term = 0.0;  // P(g_r | a_h) over the top-N support
  double speech_term = 0.0;  // P(T_s | g_r)
};

struct FusionResult {
  PredicateSet chosen;
  FusionPath path = FusionPath::slow;
  Transcript transcript;
  std::optional<PosteriorTable<PredicateSet>> posterior;  // slow path only
  std::vector<CandidateTerms> diagnostics;
};

// Everything enumerable from `state`: the delegations of every goal in the
// space, deduplicated and sorted.
std::vector<PredicateSet> delegation_pool(const GoalSpace& space, const WorldState& state);

struct SpeechMatch {
  PredicateSet share;
  double likelihood = 0.0;
  bool unique = false;  // no other candidate reaches the same score
};
// Best-scoring candidate of `pool`; ties resolve to the smaller share.
std::optional<SpeechMatch> best_speech_match(const Transcript& transcript, const std::vector<PredicateSet>& pool,
                                             const SubgoalScorer& scorer);

// True when every content word of the transcript names something in the scene.
bool transcript_in_scene(const Transcript& transcript, const Layout& layout, const Lexicon& lexicon);

// Speech-only shortcut. Returns the best match when it is unique, named
// entirely with scene words, and confidence * likelihood > theta.
std::optional<PredicateSet> fast_path(const Transcript& transcript, const GoalSpace& space, const WorldState& state,
                                      const SubgoalScorer& scorer, const FusionConfig& cfg,
                                      const Lexicon& lexicon = Lexicon::builtin());

// P(g_r | a_h, T_s) over the top-N support of the action-only subgoal
// posterior. Falls back to the action-only posterior when every fused score
// is zero, then to uniform. `diagnostics`, if given, receives the terms.
PosteriorTable<PredicateSet> integrate(const ActionHistory& history, const Transcript& transcript,
                                       const GoalSpace& space, Planner& planner, const SubgoalScorer& scorer,
                                       const FusionConfig& cfg, std::vector<CandidateTerms>* diagnostics = nullptr);

// The full algorithm: transcribe, try the fast path, else integrate and take
// the argmax (ties to the smaller share).
FusionResult siftom(const ActionHistory& history, const SpeechSignal& signal, const GoalSpace& space,
                    Planner& planner, const SubgoalScorer& scorer, const FusionConfig& cfg,
                    const Lexicon& lexicon = Lexicon::builtin());
FusionResult siftom(const ActionHistory& history, const SpeechSignal& signal, const GoalSpace& space,
                    const Lexicon& lexicon, const FusionConfig& cfg);

}  // namespace siftom
