#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vafuse/cleaning.hpp"
#include "vafuse/core.hpp"
#include "vafuse/ensemble.hpp"
#include "vafuse/gateway.hpp"
#include "vafuse/hybrid.hpp"
#include "vafuse/lexicon.hpp"

namespace vafuse {

// Everything a run needs, serializable so each command can persist the
// resolved configuration next to its outputs.
struct RunConfig {
  ValueRange range;

  // hybrid decoding
  int num_bins = 31;
  double alpha = 0.5;
  double pred_weight = 0.5;

  // ensemble
  int fold_count = 5;
  std::vector<double> lambda_grid{1e-3, 1e-2, 1e-1, 1.0, 10.0};
  double weight_step = 0.1;
  std::string rmse_mode = "overall";  // overall | per_dimension

  // lexicon
  std::string lexicon_path;
  HeuristicsConfig heuristics = HeuristicsConfig::defaults();

  // gateway
  std::string gateway_mode = "replay";
  std::string fixtures_dir = "fixtures";
  std::vector<ProviderProfile> profiles;

  // in-context selection / prediction
  std::string selection_mode = "zero_shot";
  int selection_k = 0;
  std::string embed_profile = "embedder";
  std::string predictor_profile = "gemini";
  std::string embedding_store;

  // cleaning
  int min_cluster_size = 5;
  int min_samples = 0;  // 0 = min_cluster_size
  int max_examples_per_prompt = 40;
  std::vector<std::string> critics{"gemini", "claude", "gpt5.2"};

  std::uint64_t seed = 17;
  int threads = 0;

  HybridConfig hybrid_config() const;
  CleaningConfig cleaning_config() const;
  RmseMode rmse_mode_enum() const;
  GatewayMode gateway_mode_enum() const { return parse_gateway_mode(gateway_mode); }
};

RunConfig run_config_from_json(const nlohmann::json& obj);
nlohmann::json run_config_to_json(const RunConfig& config);

RunConfig load_run_config(const std::string& path);

// Written alongside every command's primary output as `<output>.config.json`.
void write_resolved_config(const std::string& output_path, const RunConfig& config);

}  // namespace vafuse
