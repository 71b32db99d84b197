#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "siftom/errors.hpp"
#include "siftom/goals.hpp"
#include "siftom/world.hpp"

namespace siftom {

// ARPAbet phonemes (39 symbols, no stress marks), interned as small ints.
using Phoneme = std::uint8_t;
using Pronunciation = std::vector<Phoneme>;

const std::vector<std::string>& phoneme_alphabet();
std::optional<Phoneme> find_phoneme(std::string_view symbol);
// Parses "K AE T"; throws ConfigError on unknown symbols.
Pronunciation parse_pronunciation(std::string_view text, std::string_view where = "pronunciation");
std::string render(const Pronunciation& p);

class UnknownWord : public Error {
 public:
  explicit UnknownWord(std::string word) : Error("unknown word: " + word), word_(std::move(word)) {}
  const std::string& word() const { return word_; }

 private:
  std::string word_;
};

class EmptyReference : public Error {
 public:
  EmptyReference() : Error("WER needs a non-empty reference") {}
};

class Lexicon {
 public:
  // One entry per line: word, tab, space-separated phonemes. Blank lines and
  // lines starting with '#' are ignored. Throws ConfigError when two words
  // share a pronunciation.
  static Lexicon parse(std::string_view tsv, std::string_view source = "lexicon");
  // The lexicon shipped in data/lexicon.tsv.
  static const Lexicon& builtin();

  bool contains(std::string_view word) const { return entries_.find(word) != entries_.end(); }
  // Throws UnknownWord.
  const std::vector<Pronunciation>& pronunciations(std::string_view word) const;
  const Pronunciation& first(std::string_view word) const { return pronunciations(word).front(); }
  std::vector<std::string> words() const;

  struct Match {
    std::string word;
    int distance = 0;
    std::size_t length = 0;  // phonemes in the matched pronunciation
  };
  // Nearest word by phoneme edit distance; ties go to the smaller word.
  Match nearest(std::span<const Phoneme> segment) const;

 private:
  std::map<std::string, std::vector<Pronunciation>, std::less<>> entries_;
  // Flattened (word, pronunciation) list in word order, for decoding.
  std::vector<std::pair<const std::string*, const Pronunciation*>> flat_;
  void index();
};

// word -> confusable mispronunciation.
class HomophoneTable {
 public:
  static HomophoneTable parse(std::string_view tsv, std::string_view source = "homophones");
  static const HomophoneTable& builtin();
  const Pronunciation* find(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, Pronunciation, std::less<>> entries_;
};

// Total phoneme substitution map; unlisted phonemes map to themselves.
class AccentMap {
 public:
  static AccentMap parse(std::string_view name, std::string_view tsv);
  // german, russian, irish, indonesian. Throws ConfigError for other names.
  static const AccentMap& builtin(std::string_view name);
  static const std::vector<std::string>& builtin_names();

  const std::string& name() const { return name_; }
  Phoneme operator()(Phoneme p) const { return map_[p]; }

 private:
  std::string name_;
  std::vector<Phoneme> map_;
};

// Words plus their pronunciations, one segment per word.
struct Utterance {
  std::vector<std::string> words;
  std::vector<Pronunciation> segments;
};

// Deterministic first-pronunciation rendering. Throws UnknownWord.
Utterance synthesize(const std::vector<std::string>& words, const Lexicon& lexicon = Lexicon::builtin());

enum class CorruptionKind : std::uint8_t { clean, noise, accent, mispronounce };
std::string_view to_string(CorruptionKind k);
CorruptionKind corruption_kind_from_string(std::string_view text);

struct CorruptionModel {
  CorruptionKind kind = CorruptionKind::clean;
  // noise: per-phoneme corruption probability.
  double rho = 0.0;
  // noise: share of corruptions that delete; the rest substitute a uniformly
  // random different phoneme.
  double deletion_share = 0.5;
  // accent: builtin accent name.
  std::string accent;
  // mispronounce: number of content words replaced.
  int words = 1;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const CorruptionModel&, const CorruptionModel&) = default;
};

struct SpeechSignal {
  // Word-boundary segments; corruption may leave some empty.
  std::vector<Pronunciation> segments;
  CorruptionModel provenance;
};

// Deterministic given model.seed.
SpeechSignal corrupt(const Utterance& utterance, const CorruptionModel& model,
                     const HomophoneTable& homophones = HomophoneTable::builtin());

struct Transcript {
  std::vector<std::string> words;
  std::vector<double> word_confidences;

  // Minimum word confidence; 0 for an empty transcript.
  double confidence() const;
  std::string text() const;
};

// Nearest lexicon word per non-empty segment; confidence exp(-d / len).
Transcript transcribe(const SpeechSignal& signal, const Lexicon& lexicon = Lexicon::builtin());

int phoneme_edit_distance(std::span<const Phoneme> a, std::span<const Phoneme> b);
int word_edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);
// Word edit distance / |reference|. Throws EmptyReference.
double wer(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis);
std::vector<std::string> split_words(std::string_view text);

// Function words ignored when matching transcripts to subgoals.
bool is_stopword(std::string_view word);
std::vector<std::string> content_words(const std::vector<std::string>& words);

std::string number_word(int n);
// "forks" for 3 forks when the lexicon knows it, else the singular.
std::string spoken_noun(std::string_view singular, int count, const Lexicon& lexicon);

// Every content-word rendering of a robot share: count word optional for 1,
// aliases for class names, target optional when shared by all predicates.
std::vector<std::vector<std::string>> canonical_utterances(const PredicateSet& share, const Layout& layout,
                                                           const Lexicon& lexicon);
// A spoken request for `share`, e.g. "can you put two forks on the kitchentable".
std::vector<std::string> instruction_words(const PredicateSet& share, const Layout& layout, const Lexicon& lexicon);

// Words that name something in the scene: classes (and plurals), alias
// words, location ids and number words.
std::set<std::string, std::less<>> scene_vocabulary(const Layout& layout, const Lexicon& lexicon);

// P(g_r | T_s) stand-in.
class SubgoalScorer {
 public:
  virtual ~SubgoalScorer() = default;
  virtual double likelihood(const Transcript& transcript, const PredicateSet& share) const = 0;
};

struct PhoneticScorerConfig {
  // score = exp(-sharpness * d / max(len)), so scores lie in
  // [exp(-sharpness), 1]; the floor is reached when no phoneme lines up.
  double sharpness = 1.0;
};

// Caches canonical renderings per share; not safe to share across threads.
class PhoneticSubgoalScorer : public SubgoalScorer {
 public:
  PhoneticSubgoalScorer(std::shared_ptr<const Layout> layout, const Lexicon& lexicon = Lexicon::builtin(),
                        PhoneticScorerConfig cfg = {});
  double likelihood(const Transcript& transcript, const PredicateSet& share) const override;

 private:
  std::shared_ptr<const Layout> layout_;
  const Lexicon* lexicon_;
  PhoneticScorerConfig cfg_;
  mutable std::map<PredicateSet, std::vector<Pronunciation>> cache_;
};

// Endpoint for a real ASR/LLM likelihood backend. No implementation ships.
class ExternalLikelihood {
 public:
  virtual ~ExternalLikelihood() = default;
  virtual double score(const std::string& transcript, const std::string& candidate) = 0;
};

class ExternalSubgoalScorer : public SubgoalScorer {
 public:
  explicit ExternalSubgoalScorer(std::shared_ptr<ExternalLikelihood> endpoint) : endpoint_(std::move(endpoint)) {}
  double likelihood(const Transcript& transcript, const PredicateSet& share) const override;

 private:
  std::shared_ptr<ExternalLikelihood> endpoint_;
};

// Convenience: phonetic score of `share` against `transcript`.
double subgoal_likelihood(const Transcript& transcript, const PredicateSet& share, const Layout& layout,
                          const Lexicon& lexicon = Lexicon::builtin(), PhoneticScorerConfig cfg = {});

}  // namespace siftom
