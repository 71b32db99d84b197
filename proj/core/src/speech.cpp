#include "siftom/speech.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "siftom/random.hpp"
#include "speech_data.hpp"

namespace siftom {

namespace {

const std::vector<std::string> kAlphabet = {
    "AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH", "EH", "ER", "EY",
    "F",  "G",  "HH", "IH", "IY", "JH", "K",  "L",  "M",  "N",  "NG", "OW", "OY",
    "P",  "R",  "S",  "SH", "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH"};

const std::set<std::string, std::less<>> kStopwords = {
    "a",    "all",  "and",  "bring", "can",   "could", "fetch", "get", "give", "go",   "grab",
    "help", "i",    "in",   "inside", "into", "it",    "load",  "me",  "need", "of",   "on",
    "pass", "place", "please", "put", "set",  "some",  "the",   "them", "with", "you"};

const std::vector<std::string> kNumberWords = {"zero", "one", "two", "three", "four", "five",
                                               "six",  "seven", "eight", "nine", "ten"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Calls fn(line_no, key, value) for each "key<TAB>value" data line.
template <class Fn>
void for_each_entry(std::string_view tsv, std::string_view source, Fn fn) {
  int line_no = 0;
  while (!tsv.empty()) {
    auto nl = tsv.find('\n');
    std::string_view line = tsv.substr(0, nl);
    tsv.remove_prefix(nl == std::string_view::npos ? tsv.size() : nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (tab == std::string_view::npos) throw ConfigError(where, "expected key<TAB>value");
    auto key = trim(line.substr(0, tab));
    auto value = trim(line.substr(tab + 1));
    if (key.empty() || value.empty()) throw ConfigError(where, "empty field");
    fn(where, key, value);
  }
}

template <class T>
int edit_distance(std::span<const T> a, std::span<const T> b) {
  std::vector<int> row(b.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::vector<std::string> split_phrase(std::string_view text) { return split_words(text); }

}  // namespace

const std::vector<std::string>& phoneme_alphabet() { return kAlphabet; }

std::optional<Phoneme> find_phoneme(std::string_view symbol) {
  auto it = std::find(kAlphabet.begin(), kAlphabet.end(), symbol);
  if (it == kAlphabet.end()) return std::nullopt;
  return static_cast<Phoneme>(it - kAlphabet.begin());
}

Pronunciation parse_pronunciation(std::string_view text, std::string_view where) {
  Pronunciation out;
  for (const auto& sym : split_words(text)) {
    auto p = find_phoneme(sym);
    if (!p) throw ConfigError(std::string(where), "unknown phoneme '" + sym + "'");
    out.push_back(*p);
  }
  return out;
}

std::string render(const Pronunciation& p) {
  std::string out;
  for (auto ph : p) {
    if (!out.empty()) out += ' ';
    out += kAlphabet.at(ph);
  }
  return out;
}

// --- Lexicon ---

Lexicon Lexicon::parse(std::string_view tsv, std::string_view source) {
  Lexicon lex;
  std::map<Pronunciation, std::string> owner;
  for_each_entry(tsv, source, [&](const std::string& where, std::string_view word, std::string_view phones) {
    auto pron = parse_pronunciation(phones, where);
    auto [it, fresh] = owner.emplace(pron, std::string(word));
    if (!fresh && it->second != word) {
      throw ConfigError(where, "pronunciation of '" + std::string(word) + "' duplicates '" + it->second + "'");
    }
    auto& list = lex.entries_[std::string(word)];
    if (std::find(list.begin(), list.end(), pron) == list.end()) list.push_back(std::move(pron));
  });
  lex.index();
  return lex;
}

void Lexicon::index() {
  flat_.clear();
  for (const auto& [word, prons] : entries_) {
    for (const auto& p : prons) flat_.emplace_back(&word, &p);
  }
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon lex = parse(detail::kLexiconTsv, "data/lexicon.tsv");
  return lex;
}

const std::vector<Pronunciation>& Lexicon::pronunciations(std::string_view word) const {
  auto it = entries_.find(word);
  if (it == entries_.end()) throw UnknownWord(std::string(word));
  return it->second;
}

std::vector<std::string> Lexicon::words() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [w, unused] : entries_) out.push_back(w);
  return out;
}

Lexicon::Match Lexicon::nearest(std::span<const Phoneme> segment) const {
  Match best;
  int best_d = -1;
  for (const auto& [word, pron] : flat_) {
    // |len difference| is a lower bound on the distance.
    const int lb = std::abs(static_cast<int>(pron->size()) - static_cast<int>(segment.size()));
    if (best_d >= 0 && lb >= best_d) continue;
    const int d = phoneme_edit_distance(segment, *pron);
    if (best_d < 0 || d < best_d) {
      best_d = d;
      best = {*word, d, pron->size()};
      if (d == 0) break;
    }
  }
  return best;
}

// --- Homophones and accents ---

HomophoneTable HomophoneTable::parse(std::string_view tsv, std::string_view source) {
  HomophoneTable t;
  for_each_entry(tsv, source, [&](const std::string& where, std::string_view word, std::string_view phones) {
    if (!t.entries_.emplace(std::string(word), parse_pronunciation(phones, where)).second) {
      throw ConfigError(where, "duplicate homophone entry '" + std::string(word) + "'");
    }
  });
  return t;
}

const HomophoneTable& HomophoneTable::builtin() {
  static const HomophoneTable t = parse(detail::kHomophonesTsv, "data/homophones.tsv");
  return t;
}

const Pronunciation* HomophoneTable::find(std::string_view word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

AccentMap AccentMap::parse(std::string_view name, std::string_view tsv) {
  AccentMap m;
  m.name_ = std::string(name);
  m.map_.resize(kAlphabet.size());
  std::iota(m.map_.begin(), m.map_.end(), Phoneme{0});
  std::vector<bool> seen(kAlphabet.size(), false);
  for_each_entry(tsv, "accent_" + std::string(name), [&](const std::string& where, std::string_view from,
                                                          std::string_view to) {
    auto f = parse_pronunciation(from, where);
    auto t = parse_pronunciation(to, where);
    if (f.size() != 1 || t.size() != 1) throw ConfigError(where, "accent maps one phoneme to one phoneme");
    if (seen[f[0]]) throw ConfigError(where, "phoneme mapped twice");
    seen[f[0]] = true;
    m.map_[f[0]] = t[0];
  });
  return m;
}

const std::vector<std::string>& AccentMap::builtin_names() {
  static const std::vector<std::string> names = {"german", "russian", "irish", "indonesian"};
  return names;
}

const AccentMap& AccentMap::builtin(std::string_view name) {
  static const std::vector<AccentMap> maps = {
      parse("german", detail::kAccentGermanTsv), parse("russian", detail::kAccentRussianTsv),
      parse("irish", detail::kAccentIrishTsv), parse("indonesian", detail::kAccentIndonesianTsv)};
  for (const auto& m : maps) {
    if (m.name() == name) return m;
  }
  throw ConfigError("accent", "unknown accent '" + std::string(name) + "'");
}

// --- Synthesis and corruption ---

Utterance synthesize(const std::vector<std::string>& words, const Lexicon& lexicon) {
  Utterance u;
  u.words = words;
  for (const auto& w : words) u.segments.push_back(lexicon.first(w));
  return u;
}

std::string_view to_string(CorruptionKind k) {
  switch (k) {
    case CorruptionKind::clean: return "clean";
    case CorruptionKind::noise: return "noise";
    case CorruptionKind::accent: return "accent";
    case CorruptionKind::mispronounce: return "mispronounce";
  }
  return "?";
}

CorruptionKind corruption_kind_from_string(std::string_view text) {
  for (auto k : {CorruptionKind::clean, CorruptionKind::noise, CorruptionKind::accent, CorruptionKind::mispronounce}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("corruption.kind", "unknown corruption kind '" + std::string(text) + "'");
}

void CorruptionModel::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("corruption.rho", "must be in [0, 1]");
  if (!(deletion_share >= 0.0 && deletion_share <= 1.0)) {
    throw ConfigError("corruption.deletion_share", "must be in [0, 1]");
  }
  if (kind == CorruptionKind::accent) (void)AccentMap::builtin(accent);
  if (kind == CorruptionKind::mispronounce && words < 1) throw ConfigError("corruption.words", "must be >= 1");
}

SpeechSignal corrupt(const Utterance& utterance, const CorruptionModel& model, const HomophoneTable& homophones) {
  model.validate();
  SpeechSignal sig{utterance.segments, model};
  Rng rng(model.seed);
  switch (model.kind) {
    case CorruptionKind::clean:
      break;
    case CorruptionKind::noise: {
      const auto n = kAlphabet.size();
      for (auto& seg : sig.segments) {
        Pronunciation out;
        for (auto ph : seg) {
          if (rng.uniform() >= model.rho) {
            out.push_back(ph);
          } else if (rng.uniform() >= model.deletion_share) {
            auto r = static_cast<Phoneme>(rng.below(n - 1));
            out.push_back(r >= ph ? r + 1 : r);
          }
        }
        seg = std::move(out);
      }
      break;
    }
    case CorruptionKind::accent: {
      const auto& accent = AccentMap::builtin(model.accent);
      for (auto& seg : sig.segments) {
        for (auto& ph : seg) ph = accent(ph);
      }
      break;
    }
    case CorruptionKind::mispronounce: {
      std::vector<std::size_t> eligible;
      for (std::size_t i = 0; i < utterance.words.size(); ++i) {
        if (!is_stopword(utterance.words[i]) && homophones.find(utterance.words[i])) eligible.push_back(i);
      }
      for (int k = 0; k < model.words && !eligible.empty(); ++k) {
        auto pick = rng.below(eligible.size());
        const auto i = eligible[pick];
        sig.segments[i] = *homophones.find(utterance.words[i]);
        eligible.erase(eligible.begin() + static_cast<std::ptrdiff_t>(pick));
      }
      break;
    }
  }
  return sig;
}

// --- Decoding ---

double Transcript::confidence() const {
  if (word_confidences.empty()) return 0.0;
  return *std::min_element(word_confidences.begin(), word_confidences.end());
}

std::string Transcript::text() const {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

Transcript transcribe(const SpeechSignal& signal, const Lexicon& lexicon) {
  Transcript t;
  for (const auto& seg : signal.segments) {
    if (seg.empty()) continue;
    auto m = lexicon.nearest(seg);
    t.words.push_back(m.word);
    t.word_confidences.push_back(std::exp(-static_cast<double>(m.distance) / static_cast<double>(m.length)));
  }
  return t;
}

int phoneme_edit_distance(std::span<const Phoneme> a, std::span<const Phoneme> b) { return edit_distance(a, b); }

int word_edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return edit_distance(std::span<const std::string>(a), std::span<const std::string>(b));
}

double wer(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis) {
  if (reference.empty()) throw EmptyReference();
  return static_cast<double>(word_edit_distance(reference, hypothesis)) / static_cast<double>(reference.size());
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' || text[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < text.size() && !(text[j] == ' ' || text[j] == '\t' || text[j] == '\n' || text[j] == '\r')) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

// --- Subgoal matching ---

bool is_stopword(std::string_view word) { return kStopwords.find(word) != kStopwords.end(); }

std::vector<std::string> content_words(const std::vector<std::string>& words) {
  std::vector<std::string> out;
  for (const auto& w : words) {
    if (!is_stopword(w)) out.push_back(w);
  }
  return out;
}

std::string number_word(int n) {
  if (n < 0 || n >= static_cast<int>(kNumberWords.size())) return std::to_string(n);
  return kNumberWords[static_cast<std::size_t>(n)];
}

std::string spoken_noun(std::string_view singular, int count, const Lexicon& lexicon) {
  std::string s(singular);
  if (count == 1) return s;
  std::string plural = s + (s.ends_with('s') ? "es" : "s");
  return lexicon.contains(plural) ? plural : s;
}

namespace {

// Noun phrases for a class at `count`: the name, then each alias.
std::vector<std::vector<std::string>> noun_phrases(const std::string& cls, int count, const Layout& layout,
                                                   const Lexicon& lexicon) {
  std::vector<std::vector<std::string>> out = {{spoken_noun(cls, count, lexicon)}};
  if (auto ci = layout.find_class(cls)) {
    for (const auto& alias : layout.cls(*ci).aliases) {
      auto words = split_phrase(alias);
      if (words.empty()) continue;
      words.back() = spoken_noun(words.back(), count, lexicon);
      out.push_back(std::move(words));
    }
  }
  return out;
}

bool shared_target(const PredicateSet& share) {
  for (const auto& p : share) {
    if (p.target != share.items().front().target) return false;
  }
  return true;
}

}  // namespace

std::vector<std::vector<std::string>> canonical_utterances(const PredicateSet& share, const Layout& layout,
                                                           const Lexicon& lexicon) {
  if (share.empty()) return {{}};
  const bool shared = shared_target(share);
  std::vector<std::vector<std::string>> partial = {{}};
  for (const auto& p : share) {
    std::vector<std::vector<std::string>> options;
    std::vector<std::vector<std::string>> counts = {{number_word(p.count)}};
    if (p.count == 1) counts.push_back({});
    for (const auto& c : counts) {
      for (const auto& noun : noun_phrases(p.cls, p.count, layout, lexicon)) {
        auto words = c;
        words.insert(words.end(), noun.begin(), noun.end());
        if (!shared) words.push_back(p.target);
        options.push_back(std::move(words));
      }
    }
    std::vector<std::vector<std::string>> next;
    for (const auto& prefix : partial) {
      for (const auto& opt : options) {
        auto words = prefix;
        words.insert(words.end(), opt.begin(), opt.end());
        next.push_back(std::move(words));
      }
    }
    partial = std::move(next);
  }
  std::vector<std::vector<std::string>> out;
  for (auto& words : partial) {
    out.push_back(words);
    if (shared) {
      words.push_back(share.items().front().target);
      out.push_back(std::move(words));
    }
  }
  return out;
}

std::vector<std::string> instruction_words(const PredicateSet& share, const Layout& layout, const Lexicon& lexicon) {
  std::vector<std::string> words = {"can", "you", "put"};
  const bool shared = shared_target(share);
  auto place = [&](const Predicate& p) {
    words.push_back(p.relation == Relation::inside ? "in" : "on");
    words.push_back("the");
    words.push_back(p.target);
  };
  bool first = true;
  for (const auto& p : share) {
    if (!first) words.push_back("and");
    first = false;
    words.push_back(number_word(p.count));
    const auto nouns = noun_phrases(p.cls, p.count, layout, lexicon);
    words.insert(words.end(), nouns.front().begin(), nouns.front().end());
    if (!shared) place(p);
  }
  if (shared && !share.empty()) place(share.items().front());
  return words;
}

std::set<std::string, std::less<>> scene_vocabulary(const Layout& layout, const Lexicon& lexicon) {
  std::set<std::string, std::less<>> vocab;
  for (const auto& c : layout.classes()) {
    vocab.insert(c.name);
    vocab.insert(spoken_noun(c.name, 2, lexicon));
    for (const auto& alias : c.aliases) {
      auto words = split_phrase(alias);
      for (const auto& w : words) vocab.insert(w);
      if (!words.empty()) vocab.insert(spoken_noun(words.back(), 2, lexicon));
    }
  }
  for (const auto& l : layout.locations()) vocab.insert(l.id);
  for (int n = 1; n < static_cast<int>(kNumberWords.size()); ++n) vocab.insert(kNumberWords[static_cast<std::size_t>(n)]);
  return vocab;
}

namespace {

Pronunciation phonemes_of(const std::vector<std::string>& words, const Lexicon& lexicon) {
  Pronunciation out;
  for (const auto& w : words) {
    const auto& p = lexicon.first(w);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

double score_against(const Pronunciation& heard, const std::vector<Pronunciation>& variants, double sharpness) {
  double best = 0.0;
  for (const auto& v : variants) {
    const auto len = std::max(heard.size(), v.size());
    const double d = len == 0 ? 0.0 : static_cast<double>(phoneme_edit_distance(heard, v)) / static_cast<double>(len);
    best = std::max(best, std::exp(-sharpness * d));
    if (best == 1.0) break;
  }
  return best;
}

std::vector<Pronunciation> variant_phonemes(const PredicateSet& share, const Layout& layout, const Lexicon& lexicon) {
  std::vector<Pronunciation> out;
  for (const auto& words : canonical_utterances(share, layout, lexicon)) out.push_back(phonemes_of(words, lexicon));
  return out;
}

}  // namespace

PhoneticSubgoalScorer::PhoneticSubgoalScorer(std::shared_ptr<const Layout> layout, const Lexicon& lexicon,
                                             PhoneticScorerConfig cfg)
    : layout_(std::move(layout)), lexicon_(&lexicon), cfg_(cfg) {
  if (!(cfg_.sharpness > 0.0)) throw ConfigError("speech.sharpness", "must be > 0");
}

double PhoneticSubgoalScorer::likelihood(const Transcript& transcript, const PredicateSet& share) const {
  auto it = cache_.find(share);
  if (it == cache_.end()) it = cache_.emplace(share, variant_phonemes(share, *layout_, *lexicon_)).first;
  return score_against(phonemes_of(content_words(transcript.words), *lexicon_), it->second, cfg_.sharpness);
}

double ExternalSubgoalScorer::likelihood(const Transcript& transcript, const PredicateSet& share) const {
  const double p = endpoint_->score(transcript.text(), render(share));
  if (!(p >= 0.0 && p <= 1.0)) throw Error("external likelihood outside [0, 1]");
  return p;
}

double subgoal_likelihood(const Transcript& transcript, const PredicateSet& share, const Layout& layout,
                          const Lexicon& lexicon, PhoneticScorerConfig cfg) {
  if (!(cfg.sharpness > 0.0)) throw ConfigError("speech.sharpness", "must be > 0");
  return score_against(phonemes_of(content_words(transcript.words), lexicon), variant_phonemes(share, layout, lexicon),
                       cfg.sharpness);
}

}  // namespace siftom
