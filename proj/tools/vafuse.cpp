#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vafuse/cleaning.hpp"
#include "vafuse/config.hpp"
#include "vafuse/core.hpp"
#include "vafuse/ensemble.hpp"
#include "vafuse/gateway.hpp"
#include "vafuse/hybrid.hpp"
#include "vafuse/icl.hpp"
#include "vafuse/lexicon.hpp"
#include "vafuse/metrics.hpp"

namespace {

using nlohmann::json;
using namespace vafuse;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitTransport = 4;

ValueRange parse_range(const std::string& spec) {
  const std::size_t sep = spec.find(':');
  if (sep == std::string::npos) {
    throw ConfigError("range must be '<lo>:<hi>', got '" + spec + "'");
  }
  try {
    return ValueRange(std::stod(spec.substr(0, sep)), std::stod(spec.substr(sep + 1)));
  } catch (const std::invalid_argument&) {
    throw ConfigError("range must be numeric, got '" + spec + "'");
  }
}

std::vector<double> parse_double_list(const std::string& spec) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    std::size_t end = spec.find(',', start);
    if (end == std::string::npos) end = spec.size();
    const std::string field = spec.substr(start, end - start);
    if (!field.empty()) {
      try {
        out.push_back(std::stod(field));
      } catch (const std::invalid_argument&) {
        throw ConfigError("expected a number, got '" + field + "'");
      }
    }
    start = end + 1;
  }
  if (out.empty()) throw ConfigError("empty number list '" + spec + "'");
  return out;
}

std::vector<std::string> parse_string_list(const std::string& spec) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    std::size_t end = spec.find(',', start);
    if (end == std::string::npos) end = spec.size();
    if (end > start) out.push_back(spec.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

// Global flags shared by every subcommand; explicit flags override the file.
struct Shared {
  std::string config_path;
  std::optional<std::string> range_spec;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (range_spec) cfg.range = parse_range(*range_spec);
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    return cfg;
  }
};

Gateway make_gateway(const RunConfig& cfg) {
  return Gateway(cfg.profiles, cfg.gateway_mode_enum(), cfg.fixtures_dir);
}

std::string trim_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s = buf;
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.push_back('0');
  return s;
}

int run_decode(const Shared& shared, const std::string& input, const std::string& output,
               std::optional<int> bins, std::optional<double> alpha, std::optional<double> weight,
               const std::string& model_id) {
  RunConfig cfg = shared.resolve();
  if (bins) cfg.num_bins = *bins;
  if (alpha) cfg.alpha = *alpha;
  if (weight) cfg.pred_weight = *weight;
  const auto outputs = load_base_outputs(input);
  const PredictionSet preds = decode_batch(outputs, cfg.hybrid_config(), model_id, cfg.threads);
  save_predictions(output, preds,
                   {"hybrid: num_bins=" + std::to_string(cfg.num_bins) +
                    " alpha=" + trim_float(cfg.alpha) + " w=" + trim_float(cfg.pred_weight)});
  write_resolved_config(output, cfg);
  std::cout << "wrote " << output << " (" << preds.size() << " instances)\n";
  return 0;
}

int run_eval(const Shared& shared, const std::string& preds_path, const std::string& gold_path,
             const std::string& output, const std::string& csv_path) {
  const RunConfig cfg = shared.resolve();
  const auto instances = load_instances(gold_path);
  const PredictionSet preds = load_predictions(preds_path);
  const AlignedTable table = align(instances, {preds});
  if (table.skipped_without_gold > 0) {
    std::cerr << "warning: " << table.skipped_without_gold
              << " instance(s) without gold excluded from evaluation\n";
  }
  const EvalReport report = evaluate(table.columns[0], table.gold);
  write_report_json(output, report);
  if (!csv_path.empty()) write_report_csv(csv_path, report);
  write_resolved_config(output, cfg);
  std::cout << report_to_json(report) << '\n';
  return 0;
}

json stack_report_json(const StackResult& result) {
  json obj;
  obj["method"] = "stack";
  obj["lambda_v"] = result.lambda_v;
  obj["lambda_a"] = result.lambda_a;
  obj["columns"] = result.column_names;
  std::vector<double> wv(result.model_v.weights.data(),
                         result.model_v.weights.data() + result.model_v.weights.size());
  std::vector<double> wa(result.model_a.weights.data(),
                         result.model_a.weights.data() + result.model_a.weights.size());
  obj["weights_v"] = wv;
  obj["weights_a"] = wa;
  obj["report"] = json::parse(report_to_json(result.report));
  if (result.full_fit_report) {
    obj["full_fit_report"] = json::parse(report_to_json(*result.full_fit_report));
    obj["full_fit_note"] = "trained and evaluated on the same rows; optimistic, not comparable";
  }
  return obj;
}

int run_ensemble(const Shared& shared, const std::string& method,
                 const std::vector<std::string>& pred_paths, const std::string& gold_path,
                 const std::string& weights_spec, const std::string& oof_dir,
                 std::optional<int> folds, bool folds_from_file_layout, bool with_lexicon,
                 const std::string& lexicon_path, std::optional<double> fixed_lambda,
                 bool full_fit, const std::string& output, const std::string& report_path) {
  RunConfig cfg = shared.resolve();
  if (folds) cfg.fold_count = *folds;
  if (!lexicon_path.empty()) cfg.lexicon_path = lexicon_path;

  if (method == "avg" || method == "weighted") {
    if (pred_paths.empty()) throw ConfigError("ensemble: give at least one --preds file");
    std::vector<PredictionSet> sets;
    for (const auto& path : pred_paths) sets.push_back(load_predictions(path));
    const AlignedPredictions aligned = align_predictions(sets);

    PredictionSet fused;
    std::vector<std::string> header;
    if (method == "avg") {
      fused = average(aligned);
      header.push_back("method: avg");
    } else {
      EnsembleWeights weights;
      if (!weights_spec.empty()) {
        weights.values = parse_double_list(weights_spec);
      } else {
        if (gold_path.empty()) {
          throw ConfigError("ensemble weighted: give --weights or --gold for grid search");
        }
        const auto instances = load_instances(gold_path);
        weights = grid_search_weights(align(instances, sets), cfg.weight_step,
                                      cfg.rmse_mode_enum());
      }
      fused = weighted_average(aligned, weights);
      std::string spec;
      for (std::size_t i = 0; i < weights.values.size(); ++i) {
        spec += (i > 0 ? "," : "") + trim_float(weights.values[i]);
      }
      header.push_back("method: weighted w=[" + spec + "]");
    }
    save_predictions(output, fused, header);
    write_resolved_config(output, cfg);
    if (!report_path.empty()) {
      if (gold_path.empty()) throw ConfigError("ensemble: --report needs --gold");
      const auto instances = load_instances(gold_path);
      const AlignedTable table = align(instances, {fused});
      write_report_json(report_path, evaluate(table.columns[0], table.gold));
    }
    std::cout << "wrote " << output << " (" << fused.size() << " instances)\n";
    return 0;
  }

  if (method == "stack") {
    if (oof_dir.empty() || gold_path.empty()) {
      throw ConfigError("ensemble stack: needs --oof-dir and --gold");
    }
    const auto instances = load_instances(gold_path);
    const auto models = discover_oof_models(oof_dir, cfg.fold_count);

    FoldAssignment fold_assignment;
    if (folds_from_file_layout) {
      fold_assignment = folds_from_files(models.front());
    } else {
      std::vector<std::string> ids;
      for (const auto& rec : instances) {
        if (rec.gold) ids.push_back(rec.id);
      }
      fold_assignment = assign_folds(ids, cfg.fold_count, cfg.seed);
    }

    std::optional<FeatureBlock> features;
    if (with_lexicon) {
      if (cfg.lexicon_path.empty()) throw ConfigError("ensemble stack: --with-lexicon needs a lexicon path");
      const SentimentScorer scorer =
          SentimentScorer::from_file(cfg.lexicon_path, cfg.heuristics);
      features = lexicon_features(instances, scorer, cfg.threads);
    }

    const OofDesign design = build_oof_design(models, features, instances, fold_assignment);
    StackOptions opts;
    opts.lambda_search.grid = cfg.lambda_grid;
    opts.fixed_lambda = fixed_lambda;
    opts.range = cfg.range;
    opts.include_full_fit = full_fit;
    const StackResult result = stack_oof(design, fold_assignment, opts);

    save_predictions(output, result.fused,
                     {"method: stack lambda_v=" + trim_float(result.lambda_v) +
                      " lambda_a=" + trim_float(result.lambda_a)});
    write_resolved_config(output, cfg);
    if (!report_path.empty()) {
      std::ofstream out(report_path, std::ios::binary);
      if (!out) throw DataError("cannot open '" + report_path + "' for writing");
      out << stack_report_json(result).dump(2) << '\n';
    }
    std::cout << "wrote " << output << " (" << result.fused.size()
              << " instances, lambda_v=" << trim_float(result.lambda_v)
              << ", lambda_a=" << trim_float(result.lambda_a) << ")\n";
    return 0;
  }
  throw ConfigError("unknown ensemble method '" + method + "' (avg|weighted|stack)");
}

int run_sweep(const Shared& shared, const std::string& manifest_path, const std::string& gold_path,
              const std::string& weights_spec, const std::string& output, std::size_t top_n) {
  const RunConfig cfg = shared.resolve();
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest '" + manifest_path + "'");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw DataError("manifest '" + manifest_path + "': " + e.what());
  }
  if (!manifest.is_array() || manifest.empty()) {
    throw DataError("manifest must be a non-empty array of {num_bins, alpha, file}");
  }
  const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
  std::vector<SweepEntry> entries;
  for (const auto& item : manifest) {
    SweepEntry entry;
    entry.num_bins = item.at("num_bins").get<int>();
    entry.alpha = item.at("alpha").get<double>();
    std::filesystem::path file = item.at("file").get<std::string>();
    if (file.is_relative()) file = base / file;
    entry.outputs = load_base_outputs(file.string());
    entries.push_back(std::move(entry));
  }
  const std::vector<double> weights =
      weights_spec.empty() ? std::vector<double>{0.3, 0.4, 0.5} : parse_double_list(weights_spec);
  const auto instances = load_instances(gold_path);
  const auto rows = sweep_hybrid(entries, weights, instances, cfg.range, cfg.threads);
  write_sweep_csv(output, rows, top_n);
  write_resolved_config(output, cfg);
  std::cout << "wrote " << output << " (" << (top_n == 0 ? rows.size() : std::min(top_n, rows.size()))
            << " of " << rows.size() << " rows)\n";
  return 0;
}

int run_clean(const Shared& shared, const std::string& input, const std::string& output,
              const std::string& audit_path, std::optional<int> min_cluster_size,
              std::optional<int> min_samples, std::optional<int> max_per_prompt,
              const std::string& critics_spec, const std::string& mode,
              const std::string& fixtures_dir) {
  RunConfig cfg = shared.resolve();
  if (min_cluster_size) cfg.min_cluster_size = *min_cluster_size;
  if (min_samples) cfg.min_samples = *min_samples;
  if (max_per_prompt) cfg.max_examples_per_prompt = *max_per_prompt;
  if (!critics_spec.empty()) cfg.critics = parse_string_list(critics_spec);
  if (!mode.empty()) cfg.gateway_mode = mode;
  if (!fixtures_dir.empty()) cfg.fixtures_dir = fixtures_dir;

  const auto instances = load_instances(input);
  Gateway gateway = make_gateway(cfg);
  const CleanResult result = clean_dataset(instances, cfg.cleaning_config(), gateway);
  save_instances(output, result.kept);
  write_audit_log(audit_path, result);
  write_resolved_config(output, cfg);
  std::cout << "kept " << result.kept.size() << " of " << instances.size() << " instances ("
            << result.removed_ids.size() << " removed, "
            << result.clustering.cluster_count << " clusters)\n";
  return 0;
}

int run_select(const Shared& shared, const std::string& pool_path, const std::string& queries_path,
               const std::string& output, const std::string& policy_mode, std::optional<int> k,
               const std::string& store_path, const std::string& save_store,
               const std::string& embed_profile, const std::string& mode,
               const std::string& fixtures_dir) {
  RunConfig cfg = shared.resolve();
  if (!policy_mode.empty()) cfg.selection_mode = policy_mode;
  if (k) cfg.selection_k = *k;
  if (!embed_profile.empty()) cfg.embed_profile = embed_profile;
  if (!mode.empty()) cfg.gateway_mode = mode;
  if (!fixtures_dir.empty()) cfg.fixtures_dir = fixtures_dir;
  if (!store_path.empty()) cfg.embedding_store = store_path;

  const auto pool = load_instances(pool_path);
  const auto queries = load_instances(queries_path);
  const SelectionPolicy policy = make_policy(cfg.selection_mode, cfg.selection_k, cfg.seed);

  EmbeddingStore store;
  const bool needs_embeddings = policy.mode == SelectionPolicy::Mode::kSimilarK;
  if (needs_embeddings) {
    if (!cfg.embedding_store.empty() && std::filesystem::exists(cfg.embedding_store)) {
      store = EmbeddingStore::load(cfg.embedding_store);
    }
    std::vector<InstanceRecord> all = pool;
    all.insert(all.end(), queries.begin(), queries.end());
    bool missing = false;
    for (const auto& rec : all) {
      if (store.find(rec.id) == nullptr) missing = true;
    }
    if (missing) {
      Gateway gateway = make_gateway(cfg);
      store.ensure(all, gateway, cfg.embed_profile);
    }
    if (!save_store.empty()) store.save(save_store);
  }

  std::ofstream out(output, std::ios::binary);
  if (!out) throw DataError("cannot open '" + output + "' for writing");
  for (const auto& query : queries) {
    const auto picks =
        select_examples(query, pool, policy, needs_embeddings ? &store : nullptr, cfg.threads);
    json obj;
    obj["ID"] = query.id;
    json examples = json::array();
    for (std::size_t idx : picks) examples.push_back(pool[idx].id);
    obj["Examples"] = examples;
    out << obj.dump() << '\n';
  }
  if (!out) throw DataError("write failed for '" + output + "'");
  write_resolved_config(output, cfg);
  std::cout << "wrote " << output << " (" << queries.size() << " queries, policy "
            << policy_mode_name(policy.mode) << ")\n";
  return 0;
}

int run_predict(const Shared& shared, const std::string& queries_path, const std::string& pool_path,
                const std::string& output, const std::string& policy_mode, std::optional<int> k,
                const std::string& profile, const std::string& store_path, const std::string& mode,
                const std::string& fixtures_dir, const std::string& model_id) {
  RunConfig cfg = shared.resolve();
  if (!policy_mode.empty()) cfg.selection_mode = policy_mode;
  if (k) cfg.selection_k = *k;
  if (!profile.empty()) cfg.predictor_profile = profile;
  if (!mode.empty()) cfg.gateway_mode = mode;
  if (!fixtures_dir.empty()) cfg.fixtures_dir = fixtures_dir;
  if (!store_path.empty()) cfg.embedding_store = store_path;

  const auto queries = load_instances(queries_path);
  std::vector<InstanceRecord> pool;
  if (!pool_path.empty()) pool = load_instances(pool_path);
  const SelectionPolicy policy = make_policy(cfg.selection_mode, cfg.selection_k, cfg.seed);

  Gateway gateway = make_gateway(cfg);
  EmbeddingStore store;
  if (policy.mode == SelectionPolicy::Mode::kSimilarK) {
    if (!cfg.embedding_store.empty() && std::filesystem::exists(cfg.embedding_store)) {
      store = EmbeddingStore::load(cfg.embedding_store);
    }
    std::vector<InstanceRecord> all = pool;
    all.insert(all.end(), queries.begin(), queries.end());
    store.ensure(all, gateway, cfg.embed_profile);
  }

  PredictionSet preds(model_id.empty() ? cfg.predictor_profile : model_id);
  for (const auto& query : queries) {
    const auto picks = select_examples(
        query, pool, policy,
        policy.mode == SelectionPolicy::Mode::kSimilarK ? &store : nullptr, cfg.threads);
    std::vector<InstanceRecord> examples;
    examples.reserve(picks.size());
    for (std::size_t idx : picks) examples.push_back(pool[idx]);
    const std::string prompt = render_task_prompt(query, examples, cfg.range);
    const std::string reply = gateway.chat(cfg.predictor_profile, {{"user", prompt}});
    preds.add(query.id, parse_va_response(reply, cfg.range));
  }
  save_predictions(output, preds, {"predictor: " + cfg.predictor_profile +
                                   " policy: " + policy_mode_name(policy.mode) +
                                   " k: " + std::to_string(policy.k)});
  write_resolved_config(output, cfg);
  std::cout << "wrote " << output << " (" << preds.size() << " predictions)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vafuse: prediction fusion toolkit for valence-arousal sentiment regression"};
  app.require_subcommand(1);

  Shared shared;
  app.add_option("--config", shared.config_path, "JSON run configuration file");
  app.add_option("--range", shared.range_spec, "value range as <lo>:<hi> (default 1:9)");
  app.add_option("--seed", shared.seed, "root seed for fold hashing and sampling");
  app.add_option("--threads", shared.threads, "worker threads (0 = all)");

  int exit_code = 0;
  auto guard = [&exit_code](auto&& fn) {
    try {
      exit_code = fn();
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      exit_code = kExitConfig;
    } catch (const DataError& e) {
      std::cerr << "data error: " << e.what() << '\n';
      exit_code = kExitData;
    } catch (const TransportError& e) {
      std::cerr << "transport error: " << e.what() << '\n';
      exit_code = kExitTransport;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      exit_code = 1;
    }
  };

  // decode
  auto* decode = app.add_subcommand("decode", "hybrid-decode a base-model output file");
  decode->fallthrough();
  std::string decode_input, decode_output, decode_model_id = "hybrid";
  std::optional<int> decode_bins;
  std::optional<double> decode_alpha, decode_weight;
  decode->add_option("--input", decode_input, "base output JSONL")->required();
  decode->add_option("--output", decode_output, "prediction file to write")->required();
  decode->add_option("--bins", decode_bins, "number of discretization bins");
  decode->add_option("--alpha", decode_alpha, "classification loss weight (echoed)");
  decode->add_option("--weight", decode_weight, "regression share w in [0,1]");
  decode->add_option("--model-id", decode_model_id, "ModelID for the output");
  decode->callback([&] {
    guard([&] {
      return run_decode(shared, decode_input, decode_output, decode_bins, decode_alpha,
                        decode_weight, decode_model_id);
    });
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against gold labels");
  eval_cmd->fallthrough();
  std::string eval_preds, eval_gold, eval_output, eval_csv;
  eval_cmd->add_option("--preds", eval_preds, "prediction JSONL")->required();
  eval_cmd->add_option("--gold", eval_gold, "gold instance JSONL")->required();
  eval_cmd->add_option("--output", eval_output, "report JSON to write")->required();
  eval_cmd->add_option("--csv", eval_csv, "also write the report as a CSV row");
  eval_cmd->callback([&] {
    guard([&] { return run_eval(shared, eval_preds, eval_gold, eval_output, eval_csv); });
  });

  // ensemble
  auto* ens = app.add_subcommand("ensemble", "fuse prediction files (avg | weighted | stack)");
  ens->fallthrough();
  std::string ens_method, ens_gold, ens_weights, ens_oof_dir, ens_output, ens_report, ens_lexicon;
  std::vector<std::string> ens_preds;
  std::optional<int> ens_folds;
  std::optional<double> ens_fixed_lambda;
  bool ens_folds_from_files = false, ens_with_lexicon = false, ens_full_fit = false;
  ens->add_option("--method", ens_method, "avg | weighted | stack")->required();
  ens->add_option("--preds", ens_preds, "prediction files (repeatable; avg/weighted)");
  ens->add_option("--gold", ens_gold, "gold instance JSONL");
  ens->add_option("--weights", ens_weights, "comma-separated simplex weights");
  ens->add_option("--oof-dir", ens_oof_dir, "directory of <model>.fold<i>.preds files");
  ens->add_option("--folds", ens_folds, "fold count (default 5)");
  ens->add_flag("--folds-from-files", ens_folds_from_files,
                "derive fold membership from the fold-file partition");
  ens->add_flag("--with-lexicon", ens_with_lexicon, "append lexicon features to the stack");
  ens->add_option("--lexicon", ens_lexicon, "lexicon file (token<TAB>rating)");
  ens->add_option("--fixed-lambda", ens_fixed_lambda, "skip lambda search");
  ens->add_flag("--full-fit", ens_full_fit,
                "also report the optimistic full-fit variant (not comparable)");
  ens->add_option("--output", ens_output, "fused prediction file")->required();
  ens->add_option("--report", ens_report, "metrics report JSON");
  ens->callback([&] {
    guard([&] {
      return run_ensemble(shared, ens_method, ens_preds, ens_gold, ens_weights, ens_oof_dir,
                          ens_folds, ens_folds_from_files, ens_with_lexicon, ens_lexicon,
                          ens_fixed_lambda, ens_full_fit, ens_output, ens_report);
    });
  });

  // sweep
  auto* sweep = app.add_subcommand("sweep", "rank hybrid configurations by RMSE");
  sweep->fallthrough();
  std::string sweep_manifest, sweep_gold, sweep_weights, sweep_output;
  std::size_t sweep_top = 0;
  sweep->add_option("--manifest", sweep_manifest,
                    "JSON array of {num_bins, alpha, file} entries")->required();
  sweep->add_option("--gold", sweep_gold, "gold instance JSONL")->required();
  sweep->add_option("--weights", sweep_weights, "decode weights (default 0.3,0.4,0.5)");
  sweep->add_option("--output", sweep_output, "ranked CSV table")->required();
  sweep->add_option("--top", sweep_top, "emit only the best N rows");
  sweep->callback([&] {
    guard([&] {
      return run_sweep(shared, sweep_manifest, sweep_gold, sweep_weights, sweep_output, sweep_top);
    });
  });

  // clean
  auto* clean = app.add_subcommand("clean", "remove unanimously flagged training instances");
  clean->fallthrough();
  std::string clean_input, clean_output, clean_audit, clean_critics, clean_mode, clean_fixtures;
  std::optional<int> clean_mcs, clean_ms, clean_chunk;
  clean->add_option("--input", clean_input, "training instances with gold VA")->required();
  clean->add_option("--output", clean_output, "kept instances")->required();
  clean->add_option("--audit", clean_audit, "audit log JSONL")->required();
  clean->add_option("--min-cluster-size", clean_mcs, "clustering minimum cluster size");
  clean->add_option("--min-samples", clean_ms, "core-distance neighbor count (0 = mcs)");
  clean->add_option("--max-per-prompt", clean_chunk, "examples per critique prompt");
  clean->add_option("--critics", clean_critics, "three critic profile names, comma-separated");
  clean->add_option("--mode", clean_mode, "gateway mode: replay | record | live");
  clean->add_option("--fixtures", clean_fixtures, "fixtures directory");
  clean->callback([&] {
    guard([&] {
      return run_clean(shared, clean_input, clean_output, clean_audit, clean_mcs, clean_ms,
                       clean_chunk, clean_critics, clean_mode, clean_fixtures);
    });
  });

  // select
  auto* select = app.add_subcommand("select", "choose in-context examples per query");
  select->fallthrough();
  std::string sel_pool, sel_queries, sel_output, sel_policy, sel_store, sel_save_store,
      sel_embed_profile, sel_mode, sel_fixtures;
  std::optional<int> sel_k;
  select->add_option("--pool", sel_pool, "labeled example pool")->required();
  select->add_option("--queries", sel_queries, "query instances")->required();
  select->add_option("--output", sel_output, "selections JSONL")->required();
  select->add_option("--policy", sel_policy, "zero_shot | random_k | similar_k");
  select->add_option("--k", sel_k, "examples per query");
  select->add_option("--store", sel_store, "embedding store to read");
  select->add_option("--save-store", sel_save_store, "write the (possibly extended) store here");
  select->add_option("--embed-profile", sel_embed_profile, "gateway profile for embeddings");
  select->add_option("--mode", sel_mode, "gateway mode: replay | record | live");
  select->add_option("--fixtures", sel_fixtures, "fixtures directory");
  select->callback([&] {
    guard([&] {
      return run_select(shared, sel_pool, sel_queries, sel_output, sel_policy, sel_k, sel_store,
                        sel_save_store, sel_embed_profile, sel_mode, sel_fixtures);
    });
  });

  // predict
  auto* predict = app.add_subcommand("predict", "prompt the predictor profile per query");
  predict->fallthrough();
  std::string pred_queries, pred_pool, pred_output, pred_policy, pred_profile, pred_store,
      pred_mode, pred_fixtures, pred_model_id;
  std::optional<int> pred_k;
  predict->add_option("--queries", pred_queries, "query instances")->required();
  predict->add_option("--pool", pred_pool, "labeled example pool (for few-shot policies)");
  predict->add_option("--output", pred_output, "prediction file to write")->required();
  predict->add_option("--policy", pred_policy, "zero_shot | random_k | similar_k");
  predict->add_option("--k", pred_k, "examples per query");
  predict->add_option("--profile", pred_profile, "predictor gateway profile");
  predict->add_option("--store", pred_store, "embedding store to read");
  predict->add_option("--mode", pred_mode, "gateway mode: replay | record | live");
  predict->add_option("--fixtures", pred_fixtures, "fixtures directory");
  predict->add_option("--model-id", pred_model_id, "ModelID for the output");
  predict->callback([&] {
    guard([&] {
      return run_predict(shared, pred_queries, pred_pool, pred_output, pred_policy, pred_k,
                         pred_profile, pred_store, pred_mode, pred_fixtures, pred_model_id);
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  return exit_code;
}
