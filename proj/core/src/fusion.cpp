#include "siftom/fusion.hpp"

#include <algorithm>

namespace siftom {

void FusionConfig::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("fusion.theta", "must be in [0, 1]");
  if (k_goals < 1) throw ConfigError("fusion.k", "must be >= 1");
  if (n_subgoals < 1) throw ConfigError("fusion.n", "must be >= 1");
  if (!(partial_weight > 0.0 && partial_weight <= 1.0)) throw ConfigError("fusion.partial_weight", "must be in (0, 1]");
  planner.validate();
}

std::string_view to_string(FusionPath p) { return p == FusionPath::fast ? "fast" : "slow"; }

std::vector<PredicateSet> delegation_pool(const GoalSpace& space, const WorldState& state) {
  std::vector<PredicateSet> pool;
  for (const auto& g : space.goals) {
    for (auto& d : candidate_delegations(g, state)) {
      if (!d.share.empty()) pool.push_back(std::move(d.share));
    }
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  return pool;
}

std::optional<SpeechMatch> best_speech_match(const Transcript& transcript, const std::vector<PredicateSet>& pool,
                                             const SubgoalScorer& scorer) {
  std::optional<SpeechMatch> best;
  for (const auto& share : pool) {
    const double l = scorer.likelihood(transcript, share);
    if (!best || l > best->likelihood) {
      best = SpeechMatch{share, l, true};
    } else if (l == best->likelihood) {
      best->unique = false;
    }
  }
  return best;
}

bool transcript_in_scene(const Transcript& transcript, const Layout& layout, const Lexicon& lexicon) {
  const auto vocab = scene_vocabulary(layout, lexicon);
  for (const auto& w : content_words(transcript.words)) {
    if (vocab.find(w) == vocab.end()) return false;
  }
  return true;
}

std::optional<PredicateSet> fast_path(const Transcript& transcript, const GoalSpace& space, const WorldState& state,
                                      const SubgoalScorer& scorer, const FusionConfig& cfg, const Lexicon& lexicon) {
  cfg.validate();
  const double conf = transcript.confidence();
  if (!(conf > cfg.theta)) return std::nullopt;
  auto best = best_speech_match(transcript, delegation_pool(space, state), scorer);
  if (!best || !best->unique) return std::nullopt;
  if (!transcript_in_scene(transcript, state.layout(), lexicon)) return std::nullopt;
  if (!(conf * best->likelihood > cfg.theta)) return std::nullopt;
  return best->share;
}

PosteriorTable<PredicateSet> integrate(const ActionHistory& history, const Transcript& transcript,
                                       const GoalSpace& space, Planner& planner, const SubgoalScorer& scorer,
                                       const FusionConfig& cfg, std::vector<CandidateTerms>* diagnostics) {
  cfg.validate();
  auto action = subgoal_posterior(history, space, planner, cfg.k_goals, cfg.n_subgoals, cfg.partial_weight);
  std::vector<PosteriorTable<PredicateSet>::Entry> fused;
  if (diagnostics) diagnostics->clear();
  for (const auto& [share, p] : action.entries()) {
    const double s = scorer.likelihood(transcript, share);
    fused.emplace_back(share, p * s);
    if (diagnostics) diagnostics->push_back({share, p, s});
  }
  auto post = PosteriorTable<PredicateSet>::from_weights(std::move(fused));
  if (!post.empty()) return post;
  if (!action.empty()) return action;
  return PosteriorTable<PredicateSet>::uniform(delegation_pool(space, history.current_state()));
}

FusionResult siftom(const ActionHistory& history, const SpeechSignal& signal, const GoalSpace& space,
                    Planner& planner, const SubgoalScorer& scorer, const FusionConfig& cfg, const Lexicon& lexicon) {
  FusionResult r;
  r.transcript = transcribe(signal, lexicon);
  if (auto fast = fast_path(r.transcript, space, history.current_state(), scorer, cfg, lexicon)) {
    r.path = FusionPath::fast;
    r.chosen = std::move(*fast);
    return r;
  }
  r.path = FusionPath::slow;
  auto post = integrate(history, r.transcript, space, planner, scorer, cfg, &r.diagnostics);
  if (!post.empty()) r.chosen = post.argmax();
  r.posterior = std::move(post);
  return r;
}

FusionResult siftom(const ActionHistory& history, const SpeechSignal& signal, const GoalSpace& space,
                    const Lexicon& lexicon, const FusionConfig& cfg) {
  Planner planner(cfg.planner);
  PhoneticSubgoalScorer scorer(history.start_state().layout_ptr(), lexicon);
  return siftom(history, signal, space, planner, scorer, cfg, lexicon);
}

}  // namespace siftom
