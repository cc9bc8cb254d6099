#include "vafuse/config.hpp"

#include <fstream>

namespace vafuse {

using nlohmann::json;

HybridConfig RunConfig::hybrid_config() const {
  HybridConfig cfg;
  cfg.num_bins = num_bins;
  cfg.alpha = alpha;
  cfg.pred_weight = pred_weight;
  cfg.range = range;
  return cfg;
}

CleaningConfig RunConfig::cleaning_config() const {
  CleaningConfig cfg;
  cfg.clustering.min_cluster_size = min_cluster_size;
  cfg.clustering.min_samples = min_samples;
  cfg.max_examples_per_prompt = max_examples_per_prompt;
  if (critics.size() != 3) {
    throw ConfigError("cleaning needs exactly 3 critic profiles, got " +
                      std::to_string(critics.size()));
  }
  cfg.critics = {critics[0], critics[1], critics[2]};
  cfg.range = range;
  cfg.threads = threads;
  return cfg;
}

RmseMode RunConfig::rmse_mode_enum() const {
  if (rmse_mode == "overall") return RmseMode::kOverall;
  if (rmse_mode == "per_dimension") return RmseMode::kPerDimensionAverage;
  throw ConfigError("unknown rmse_mode '" + rmse_mode + "' (overall|per_dimension)");
}

namespace {

json heuristics_to_json(const HeuristicsConfig& h) {
  json obj;
  obj["enable_negation"] = h.enable_negation;
  obj["enable_boosters"] = h.enable_boosters;
  obj["enable_caps_emphasis"] = h.enable_caps_emphasis;
  obj["enable_punctuation_emphasis"] = h.enable_punctuation_emphasis;
  obj["enable_contrastive"] = h.enable_contrastive;
  obj["booster_increment"] = h.booster_increment;
  obj["caps_increment"] = h.caps_increment;
  obj["negation_scalar"] = h.negation_scalar;
  obj["booster_damp_two"] = h.booster_damp_two;
  obj["booster_damp_three"] = h.booster_damp_three;
  obj["exclaim_increment"] = h.exclaim_increment;
  obj["max_exclaim"] = h.max_exclaim;
  obj["question_increment"] = h.question_increment;
  obj["question_cap"] = h.question_cap;
  obj["contrastive_before"] = h.contrastive_before;
  obj["contrastive_after"] = h.contrastive_after;
  obj["alpha_norm"] = h.alpha_norm;
  obj["negators"] = h.negators;
  obj["boosters_up"] = h.boosters_up;
  obj["boosters_down"] = h.boosters_down;
  obj["contrastive_words"] = h.contrastive_words;
  return obj;
}

HeuristicsConfig heuristics_from_json(const json& obj) {
  HeuristicsConfig h = HeuristicsConfig::defaults();
  h.enable_negation = obj.value("enable_negation", h.enable_negation);
  h.enable_boosters = obj.value("enable_boosters", h.enable_boosters);
  h.enable_caps_emphasis = obj.value("enable_caps_emphasis", h.enable_caps_emphasis);
  h.enable_punctuation_emphasis =
      obj.value("enable_punctuation_emphasis", h.enable_punctuation_emphasis);
  h.enable_contrastive = obj.value("enable_contrastive", h.enable_contrastive);
  h.booster_increment = obj.value("booster_increment", h.booster_increment);
  h.caps_increment = obj.value("caps_increment", h.caps_increment);
  h.negation_scalar = obj.value("negation_scalar", h.negation_scalar);
  h.booster_damp_two = obj.value("booster_damp_two", h.booster_damp_two);
  h.booster_damp_three = obj.value("booster_damp_three", h.booster_damp_three);
  h.exclaim_increment = obj.value("exclaim_increment", h.exclaim_increment);
  h.max_exclaim = obj.value("max_exclaim", h.max_exclaim);
  h.question_increment = obj.value("question_increment", h.question_increment);
  h.question_cap = obj.value("question_cap", h.question_cap);
  h.contrastive_before = obj.value("contrastive_before", h.contrastive_before);
  h.contrastive_after = obj.value("contrastive_after", h.contrastive_after);
  h.alpha_norm = obj.value("alpha_norm", h.alpha_norm);
  if (obj.contains("negators")) h.negators = obj["negators"].get<std::vector<std::string>>();
  if (obj.contains("boosters_up")) {
    h.boosters_up = obj["boosters_up"].get<std::vector<std::string>>();
  }
  if (obj.contains("boosters_down")) {
    h.boosters_down = obj["boosters_down"].get<std::vector<std::string>>();
  }
  if (obj.contains("contrastive_words")) {
    h.contrastive_words = obj["contrastive_words"].get<std::vector<std::string>>();
  }
  return h;
}

json profile_to_json(const ProviderProfile& p) {
  json obj;
  obj["name"] = p.name;
  obj["base_url"] = p.base_url;
  obj["model"] = p.model;
  obj["dialect"] = p.dialect;
  obj["credential_env"] = p.credential_env;
  obj["timeout_s"] = p.timeout_s;
  obj["max_retries"] = p.max_retries;
  obj["max_tokens"] = p.max_tokens;
  obj["batch_limit"] = p.batch_limit;
  obj["temperature"] = p.temperature;
  return obj;
}

ProviderProfile profile_from_json(const json& obj) {
  ProviderProfile p;
  if (!obj.contains("name") || !obj["name"].is_string()) {
    throw ConfigError("gateway profile needs a string 'name'");
  }
  p.name = obj["name"].get<std::string>();
  p.base_url = obj.value("base_url", "");
  p.model = obj.value("model", "");
  p.dialect = obj.value("dialect", p.dialect);
  p.credential_env = obj.value("credential_env", "");
  p.timeout_s = obj.value("timeout_s", p.timeout_s);
  p.max_retries = obj.value("max_retries", p.max_retries);
  p.max_tokens = obj.value("max_tokens", p.max_tokens);
  p.batch_limit = obj.value("batch_limit", p.batch_limit);
  p.temperature = obj.value("temperature", p.temperature);
  return p;
}

}  // namespace

RunConfig run_config_from_json(const json& obj) {
  RunConfig cfg;
  if (obj.contains("range")) {
    cfg.range = ValueRange(obj["range"].value("lo", 1.0), obj["range"].value("hi", 9.0));
  }
  cfg.num_bins = obj.value("num_bins", cfg.num_bins);
  cfg.alpha = obj.value("alpha", cfg.alpha);
  cfg.pred_weight = obj.value("pred_weight", cfg.pred_weight);
  cfg.fold_count = obj.value("fold_count", cfg.fold_count);
  if (obj.contains("lambda_grid")) cfg.lambda_grid = obj["lambda_grid"].get<std::vector<double>>();
  cfg.weight_step = obj.value("weight_step", cfg.weight_step);
  cfg.rmse_mode = obj.value("rmse_mode", cfg.rmse_mode);
  cfg.lexicon_path = obj.value("lexicon_path", cfg.lexicon_path);
  if (obj.contains("heuristics")) cfg.heuristics = heuristics_from_json(obj["heuristics"]);
  cfg.gateway_mode = obj.value("gateway_mode", cfg.gateway_mode);
  cfg.fixtures_dir = obj.value("fixtures_dir", cfg.fixtures_dir);
  if (obj.contains("profiles")) {
    cfg.profiles.clear();
    for (const auto& p : obj["profiles"]) cfg.profiles.push_back(profile_from_json(p));
  }
  cfg.selection_mode = obj.value("selection_mode", cfg.selection_mode);
  cfg.selection_k = obj.value("selection_k", cfg.selection_k);
  cfg.embed_profile = obj.value("embed_profile", cfg.embed_profile);
  cfg.predictor_profile = obj.value("predictor_profile", cfg.predictor_profile);
  cfg.embedding_store = obj.value("embedding_store", cfg.embedding_store);
  cfg.min_cluster_size = obj.value("min_cluster_size", cfg.min_cluster_size);
  cfg.min_samples = obj.value("min_samples", cfg.min_samples);
  cfg.max_examples_per_prompt = obj.value("max_examples_per_prompt", cfg.max_examples_per_prompt);
  if (obj.contains("critics")) cfg.critics = obj["critics"].get<std::vector<std::string>>();
  cfg.seed = obj.value("seed", cfg.seed);
  cfg.threads = obj.value("threads", cfg.threads);
  return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
  json obj;
  obj["range"] = {{"lo", cfg.range.lo}, {"hi", cfg.range.hi}};
  obj["num_bins"] = cfg.num_bins;
  obj["alpha"] = cfg.alpha;
  obj["pred_weight"] = cfg.pred_weight;
  obj["fold_count"] = cfg.fold_count;
  obj["lambda_grid"] = cfg.lambda_grid;
  obj["weight_step"] = cfg.weight_step;
  obj["rmse_mode"] = cfg.rmse_mode;
  obj["lexicon_path"] = cfg.lexicon_path;
  obj["heuristics"] = heuristics_to_json(cfg.heuristics);
  obj["gateway_mode"] = cfg.gateway_mode;
  obj["fixtures_dir"] = cfg.fixtures_dir;
  json profiles = json::array();
  for (const auto& p : cfg.profiles) profiles.push_back(profile_to_json(p));
  obj["profiles"] = profiles;
  obj["selection_mode"] = cfg.selection_mode;
  obj["selection_k"] = cfg.selection_k;
  obj["embed_profile"] = cfg.embed_profile;
  obj["predictor_profile"] = cfg.predictor_profile;
  obj["embedding_store"] = cfg.embedding_store;
  obj["min_cluster_size"] = cfg.min_cluster_size;
  obj["min_samples"] = cfg.min_samples;
  obj["max_examples_per_prompt"] = cfg.max_examples_per_prompt;
  obj["critics"] = cfg.critics;
  obj["seed"] = cfg.seed;
  obj["threads"] = cfg.threads;
  return obj;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json obj;
  try {
    in >> obj;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return run_config_from_json(obj);
}

void write_resolved_config(const std::string& output_path, const RunConfig& config) {
  const std::string path = output_path + ".config.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << run_config_to_json(config).dump(2) << '\n';
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace vafuse
