#include "vafuse/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

#include "vafuse/threading.hpp"

namespace vafuse {

namespace {

const char* const kDefaultNegators[] = {
    "not",     "no",      "never",  "none",    "nobody",  "nothing", "neither", "nowhere",
    "cannot",  "cant",    "wont",   "without", "hardly",  "scarcely", "barely",  "rarely",
    "seldom",  "aint",    "arent",  "isnt",    "wasnt",   "werent",  "dont",    "doesnt",
    "didnt",   "couldnt", "shouldnt", "wouldnt", "hasnt",  "havent",  "hadnt",   "mustnt",
    "neednt",  "darent",  "oughtnt", "uh-uh",  "uhuh",    "despite", "least"};

const char* const kDefaultBoostersUp[] = {
    "absolutely", "amazingly",  "awfully",     "completely", "considerably", "decidedly",
    "deeply",     "enormously", "entirely",    "especially", "exceptionally", "extremely",
    "fabulously", "fully",      "greatly",     "highly",     "hugely",       "incredibly",
    "intensely",  "majorly",    "more",        "most",       "particularly", "purely",
    "quite",      "really",     "remarkably",  "so",         "substantially", "thoroughly",
    "totally",    "tremendously", "uber",      "unbelievably", "unusually",  "utterly",
    "very"};

const char* const kDefaultBoostersDown[] = {
    "almost",   "barely",     "hardly",  "just",       "kind-of", "kinda",   "kindof",
    "less",     "little",     "marginally", "occasionally", "partly", "scarcely", "slightly",
    "somewhat", "sort-of",    "sorta",   "sortof"};

bool has_letters(std::string_view token) {
  return std::any_of(token.begin(), token.end(),
                     [](unsigned char c) { return std::isalpha(c) != 0; });
}

bool is_all_caps(std::string_view token) {
  if (!has_letters(token)) return false;
  return std::none_of(token.begin(), token.end(),
                      [](unsigned char c) { return std::islower(c) != 0; });
}

std::string to_lower(std::string_view token) {
  std::string out(token);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_strip_punct(unsigned char c) {
  return std::ispunct(c) != 0 && c != '@' && c != '#';
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

HeuristicsConfig HeuristicsConfig::defaults() {
  HeuristicsConfig cfg;
  for (const char* w : kDefaultNegators) cfg.negators.emplace_back(w);
  for (const char* w : kDefaultBoostersUp) cfg.boosters_up.emplace_back(w);
  for (const char* w : kDefaultBoostersDown) cfg.boosters_down.emplace_back(w);
  cfg.contrastive_words = {"but"};
  return cfg;
}

SentimentScorer::SentimentScorer(std::unordered_map<std::string, double> lexicon,
                                 HeuristicsConfig config)
    : lexicon_(std::move(lexicon)), config_(std::move(config)) {
  if (lexicon_.empty()) throw DataError("sentiment scorer: empty lexicon");
  for (const auto& w : config_.boosters_up) booster_scalars_[to_lower(w)] = config_.booster_increment;
  for (const auto& w : config_.boosters_down) {
    booster_scalars_[to_lower(w)] = -config_.booster_increment;
  }
  for (const auto& w : config_.negators) negator_set_[to_lower(w)] = true;
  for (const auto& w : config_.contrastive_words) contrastive_.push_back(to_lower(w));
}

SentimentScorer SentimentScorer::from_file(const std::string& lexicon_path,
                                           HeuristicsConfig config) {
  std::ifstream in(lexicon_path, std::ios::binary);
  if (!in) throw DataError("cannot open lexicon '" + lexicon_path + "'");
  std::unordered_map<std::string, double> lexicon;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(lexicon_path + ":" + std::to_string(lineno) + ": expected token<TAB>rating");
    }
    const std::string token = to_lower(std::string_view(line).substr(0, tab));
    if (token.empty()) {
      throw DataError(lexicon_path + ":" + std::to_string(lineno) + ": empty token");
    }
    std::size_t end = line.find('\t', tab + 1);
    if (end == std::string::npos) end = line.size();
    double rating = 0.0;
    const char* begin = line.data() + tab + 1;
    auto [ptr, ec] = std::from_chars(begin, line.data() + end, rating);
    if (ec != std::errc{} || ptr != line.data() + end || !std::isfinite(rating)) {
      throw DataError(lexicon_path + ":" + std::to_string(lineno) + ": bad rating");
    }
    lexicon[token] = rating;
  }
  return SentimentScorer(std::move(lexicon), std::move(config));
}

std::vector<std::string> SentimentScorer::tokenize(std::string_view text) const {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])) != 0) ++i;
    std::size_t start = i;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])) == 0) ++i;
    if (i == start) break;
    std::string_view raw = text.substr(start, i - start);
    if (lexicon_.count(to_lower(raw)) > 0) {
      tokens.emplace_back(raw);  // emoticons and exact lexicon hits stay intact
      continue;
    }
    std::size_t lo = 0;
    std::size_t hi = raw.size();
    while (lo < hi && is_strip_punct(static_cast<unsigned char>(raw[lo]))) ++lo;
    while (hi > lo && is_strip_punct(static_cast<unsigned char>(raw[hi - 1]))) --hi;
    if (hi > lo) {
      tokens.emplace_back(raw.substr(lo, hi - lo));
    } else {
      tokens.emplace_back(raw);
    }
  }
  return tokens;
}

PolarityScores SentimentScorer::score(std::string_view text) const {
  const std::vector<std::string> tokens = tokenize(text);
  if (tokens.empty()) return PolarityScores{};

  std::vector<std::string> lowered(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) lowered[i] = to_lower(tokens[i]);

  // Mixed-case emphasis only applies when the text is not uniformly cased.
  std::size_t caps_count = 0;
  std::size_t lettered = 0;
  for (const auto& tok : tokens) {
    if (!has_letters(tok)) continue;
    ++lettered;
    if (is_all_caps(tok)) ++caps_count;
  }
  const bool caps_differential =
      config_.enable_caps_emphasis && caps_count > 0 && caps_count < lettered;

  std::vector<double> sentiments(tokens.size(), 0.0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto hit = lexicon_.find(lowered[i]);
    if (hit == lexicon_.end()) continue;
    if (booster_scalars_.count(lowered[i]) > 0) continue;  // intensifiers carry no own valence
    double valence = hit->second;

    if (caps_differential && is_all_caps(tokens[i])) {
      valence += sign(valence) * config_.caps_increment;
    }

    const double damp[3] = {1.0, config_.booster_damp_two, config_.booster_damp_three};
    for (int back = 1; back <= 3; ++back) {
      if (i < static_cast<std::size_t>(back)) break;
      const std::size_t j = i - static_cast<std::size_t>(back);
      if (lexicon_.count(lowered[j]) > 0 && booster_scalars_.count(lowered[j]) == 0) continue;
      if (config_.enable_boosters) {
        auto booster = booster_scalars_.find(lowered[j]);
        if (booster != booster_scalars_.end()) {
          double scalar = booster->second * damp[back - 1];
          if (valence < 0.0) scalar = -scalar;
          if (caps_differential && is_all_caps(tokens[j])) {
            scalar += sign(scalar) * config_.caps_increment;
          }
          valence += scalar;
        }
      }
      if (config_.enable_negation) {
        const bool negator = negator_set_.count(lowered[j]) > 0 ||
                             lowered[j].find("n't") != std::string::npos;
        if (negator) {
          // "at least" / "very least" are not negations.
          const bool least_exempt =
              lowered[j] == "least" && j > 0 && (lowered[j - 1] == "at" || lowered[j - 1] == "very");
          if (!least_exempt) valence *= config_.negation_scalar;
        }
      }
    }
    sentiments[i] = valence;
  }

  if (config_.enable_contrastive) {
    for (const auto& pivot : contrastive_) {
      auto it = std::find(lowered.begin(), lowered.end(), pivot);
      if (it == lowered.end()) continue;
      const std::size_t pivot_idx = static_cast<std::size_t>(it - lowered.begin());
      for (std::size_t i = 0; i < sentiments.size(); ++i) {
        if (i < pivot_idx) sentiments[i] *= config_.contrastive_before;
        if (i > pivot_idx) sentiments[i] *= config_.contrastive_after;
      }
      break;
    }
  }

  double punct_amplifier = 0.0;
  if (config_.enable_punctuation_emphasis) {
    int exclaims = 0;
    int questions = 0;
    for (char c : text) {
      if (c == '!') ++exclaims;
      if (c == '?') ++questions;
    }
    punct_amplifier += std::min(exclaims, config_.max_exclaim) * config_.exclaim_increment;
    if (questions > 1) {
      punct_amplifier +=
          questions <= 3 ? questions * config_.question_increment : config_.question_cap;
    }
  }

  double sum = 0.0;
  for (double v : sentiments) sum += v;
  if (sum > 0.0) {
    sum += punct_amplifier;
  } else if (sum < 0.0) {
    sum -= punct_amplifier;
  }

  PolarityScores scores;
  const double norm = sum / std::sqrt(sum * sum + config_.alpha_norm);
  scores.compound = std::clamp(norm, -1.0, 1.0);

  double pos_sum = 0.0;
  double neg_sum = 0.0;
  double neu_count = 0.0;
  for (double v : sentiments) {
    if (v > 0.0) pos_sum += v + 1.0;  // +1 keeps neutral token mass comparable
    if (v < 0.0) neg_sum += v - 1.0;
    if (v == 0.0) neu_count += 1.0;
  }
  if (pos_sum > std::fabs(neg_sum)) {
    pos_sum += punct_amplifier;
  } else if (pos_sum < std::fabs(neg_sum)) {
    neg_sum -= punct_amplifier;
  }
  const double total = pos_sum + std::fabs(neg_sum) + neu_count;
  if (total > 0.0) {
    scores.pos = std::fabs(pos_sum / total);
    scores.neg = std::fabs(neg_sum / total);
    scores.neu = std::fabs(neu_count / total);
  }
  return scores;
}

std::vector<PolarityScores> SentimentScorer::score_batch(const std::vector<std::string>& texts,
                                                         int threads) const {
  std::vector<PolarityScores> out(texts.size());
  const int nthreads = resolve_threads(threads);
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(texts.size()); ++i) {
    out[i] = score(texts[i]);
  }
  return out;
}

std::array<double, 4> feature_vector(const PolarityScores& scores) {
  return {scores.compound, scores.pos, scores.neu, scores.neg};
}

}  // namespace vafuse
