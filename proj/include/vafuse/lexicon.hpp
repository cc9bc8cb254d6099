#pragma once

#include <array>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vafuse/core.hpp"

namespace vafuse {

// Proportional polarity masses plus the normalized compound score.
// pos + neu + neg = 1 whenever the text produced at least one token.
struct PolarityScores {
  double pos = 0.0;
  double neu = 0.0;
  double neg = 0.0;
  double compound = 0.0;
};

// Every heuristic constant of the rule-based scorer lives here so each rule
// can be tuned or disabled without touching code. Defaults follow the widely
// used reference constants for this family of lexicon scorers.
struct HeuristicsConfig {
  bool enable_negation = true;
  bool enable_boosters = true;
  bool enable_caps_emphasis = true;
  bool enable_punctuation_emphasis = true;
  bool enable_contrastive = true;

  double booster_increment = 0.293;   // magnitude added by an intensifier
  double caps_increment = 0.733;      // extra magnitude for ALL-CAPS emphasis
  double negation_scalar = -0.74;     // multiplier applied by a negator
  double booster_damp_two = 0.95;     // intensifier two words back
  double booster_damp_three = 0.9;    // intensifier three words back
  double exclaim_increment = 0.292;   // per '!', capped
  int max_exclaim = 4;
  double question_increment = 0.18;   // per '?' when 2..3 marks present
  double question_cap = 0.96;         // flat amount for 4+ marks
  double contrastive_before = 0.5;    // weight for clauses before the pivot
  double contrastive_after = 1.5;     // weight for clauses after the pivot
  double alpha_norm = 15.0;           // compound normalization constant

  std::vector<std::string> negators;
  std::vector<std::string> boosters_up;
  std::vector<std::string> boosters_down;
  std::vector<std::string> contrastive_words;

  // Fills the word lists with the built-in English defaults.
  static HeuristicsConfig defaults();
};

// Immutable after construction; scoring different texts concurrently is safe.
class SentimentScorer {
 public:
  SentimentScorer(std::unordered_map<std::string, double> lexicon, HeuristicsConfig config);

  // Lexicon file: `token<TAB>rating` per line, '#' comments, extra tab-
  // separated columns ignored.
  static SentimentScorer from_file(const std::string& lexicon_path, HeuristicsConfig config);

  PolarityScores score(std::string_view text) const;

  // OpenMP kernel over texts; per-text work is independent so results are
  // bit-identical across thread counts.
  std::vector<PolarityScores> score_batch(const std::vector<std::string>& texts,
                                          int threads = 0) const;

  const HeuristicsConfig& config() const { return config_; }
  std::size_t lexicon_size() const { return lexicon_.size(); }

  // Tokenization contract: whitespace split, then leading/trailing
  // punctuation stripped unless the raw token itself is a lexicon entry
  // (preserves emoticons).
  std::vector<std::string> tokenize(std::string_view text) const;

 private:
  std::unordered_map<std::string, double> lexicon_;
  HeuristicsConfig config_;
  std::unordered_map<std::string, double> booster_scalars_;
  std::unordered_map<std::string, bool> negator_set_;
  std::vector<std::string> contrastive_;
};

// Stacking-feature projection in fixed order [compound, pos, neu, neg].
std::array<double, 4> feature_vector(const PolarityScores& scores);

inline constexpr int kLexiconFeatureCount = 4;

}  // namespace vafuse
