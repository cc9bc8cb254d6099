#include "vafuse/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "vafuse/lexicon.hpp"
#include "vafuse/threading.hpp"
#include "vafuse/rng.hpp"

namespace vafuse {

namespace fs = std::filesystem;

void EnsembleWeights::validate() const {
  if (values.empty()) throw ConfigError("ensemble weights: empty");
  double sum = 0.0;
  for (double w : values) {
    if (!(w >= 0.0)) throw ConfigError("ensemble weights: negative weight " + std::to_string(w));
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw ConfigError("ensemble weights: sum " + std::to_string(sum) + " != 1");
  }
}

EnsembleWeights EnsembleWeights::uniform(std::size_t k) {
  EnsembleWeights w;
  w.values.assign(k, 1.0 / static_cast<double>(k));
  return w;
}

PredictionSet weighted_average(const AlignedPredictions& preds, const EnsembleWeights& weights,
                               const std::string& model_id) {
  if (preds.models() == 0) throw DataError("weighted_average: no models");
  if (weights.values.size() != preds.models()) {
    throw ConfigError("weighted_average: " + std::to_string(weights.values.size()) +
                      " weights for " + std::to_string(preds.models()) + " models");
  }
  weights.validate();
  PredictionSet fused(model_id);
  for (std::size_t row = 0; row < preds.rows(); ++row) {
    VAPair va{0.0, 0.0};
    for (std::size_t m = 0; m < preds.models(); ++m) {
      va.valence += weights.values[m] * preds.columns[m][row].valence;
      va.arousal += weights.values[m] * preds.columns[m][row].arousal;
    }
    fused.add(preds.ids[row], va);
  }
  return fused;
}

PredictionSet average(const AlignedPredictions& preds, const std::string& model_id) {
  if (preds.models() == 0) throw DataError("average: no models");
  return weighted_average(preds, EnsembleWeights::uniform(preds.models()), model_id);
}

namespace {

double fused_rmse(const AlignedTable& table, std::span<const double> weights, RmseMode mode) {
  const std::size_t n = table.rows();
  double sse_v = 0.0;
  double sse_a = 0.0;
  for (std::size_t row = 0; row < n; ++row) {
    double v = 0.0;
    double a = 0.0;
    for (std::size_t m = 0; m < weights.size(); ++m) {
      v += weights[m] * table.columns[m][row].valence;
      a += weights[m] * table.columns[m][row].arousal;
    }
    const double ev = v - table.gold[row].valence;
    const double ea = a - table.gold[row].arousal;
    sse_v += ev * ev;
    sse_a += ea * ea;
  }
  const double dn = static_cast<double>(n);
  if (mode == RmseMode::kOverall) return std::sqrt((sse_v + sse_a) / (2.0 * dn));
  return 0.5 * (std::sqrt(sse_v / dn) + std::sqrt(sse_a / dn));
}

void enumerate_simplex(int slots, int remaining, std::vector<int>& current,
                       std::vector<std::vector<int>>& out) {
  if (slots == 1) {
    current.push_back(remaining);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int take = 0; take <= remaining; ++take) {
    current.push_back(take);
    enumerate_simplex(slots - 1, remaining - take, current, out);
    current.pop_back();
  }
}

double distance_to_uniform(std::span<const double> w) {
  const double u = 1.0 / static_cast<double>(w.size());
  double d = 0.0;
  for (double v : w) d += (v - u) * (v - u);
  return d;
}

}  // namespace

EnsembleWeights grid_search_weights(const AlignedTable& table, double step, RmseMode mode) {
  if (table.models() < 2) throw ConfigError("grid search: need at least 2 models");
  if (table.rows() == 0) throw DataError("grid search: empty gold set");
  const double steps_real = 1.0 / step;
  const int steps = static_cast<int>(std::lround(steps_real));
  if (step <= 0.0 || std::fabs(steps_real - steps) > 1e-9) {
    throw ConfigError("grid search: step must evenly divide 1, got " + std::to_string(step));
  }

  std::vector<std::vector<int>> grid;
  std::vector<int> scratch;
  enumerate_simplex(static_cast<int>(table.models()), steps, scratch, grid);

  double best_rmse = std::numeric_limits<double>::infinity();
  std::vector<double> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& point : grid) {
    std::vector<double> w(point.size());
    for (std::size_t i = 0; i < point.size(); ++i) {
      w[i] = static_cast<double>(point[i]) / static_cast<double>(steps);
    }
    const double rmse = fused_rmse(table, w, mode);
    const double tie_band = std::max(1e-12, 1e-9 * best_rmse);
    if (rmse < best_rmse - tie_band) {
      best_rmse = rmse;
      best = w;
      best_dist = distance_to_uniform(w);
    } else if (rmse <= best_rmse + tie_band) {
      // Tie: prefer the point closest to uniform, then lexicographic order.
      const double dist = distance_to_uniform(w);
      if (rmse < best_rmse) best_rmse = rmse;
      if (dist + 1e-15 < best_dist ||
          (std::fabs(dist - best_dist) <= 1e-15 &&
           std::lexicographical_compare(w.begin(), w.end(), best.begin(), best.end()))) {
        best = w;
        best_dist = dist;
      }
    }
  }
  EnsembleWeights weights;
  weights.values = best;
  return weights;
}

Eigen::VectorXd RidgeModel::original_coefficients() const {
  Eigen::VectorXd coeffs(weights.size());
  for (Eigen::Index j = 0; j < weights.size(); ++j) coeffs[j] = weights[j] / feature_scale[j];
  return coeffs;
}

double RidgeModel::original_intercept() const {
  double b = intercept;
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    b -= weights[j] * feature_mean[j] / feature_scale[j];
  }
  return b;
}

RidgeModel fit_ridge(const DesignMatrix& data, double lambda, const ValueRange& range,
                     bool clamp_output) {
  const Eigen::Index n = data.X.rows();
  const Eigen::Index d = data.X.cols();
  if (n < 1 || d < 1) throw DataError("fit_ridge: empty design matrix");
  if (data.y.size() != n) throw DataError("fit_ridge: target length mismatch");
  if (lambda < 0.0) throw ConfigError("fit_ridge: lambda must be >= 0");

  RidgeModel model;
  model.lambda = lambda;
  model.range = range;
  model.clamp_output = clamp_output;
  model.feature_mean = data.X.colwise().mean();
  model.feature_scale.resize(d);
  Eigen::MatrixXd z = data.X.rowwise() - model.feature_mean.transpose();
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = z.col(j).squaredNorm() / static_cast<double>(n);
    model.feature_scale[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
    z.col(j) /= model.feature_scale[j];
  }
  model.intercept = data.y.mean();
  const Eigen::VectorXd yc = data.y.array() - model.intercept;

  Eigen::MatrixXd normal = (z.transpose() * z) / static_cast<double>(n);
  normal.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = z.transpose() * yc / static_cast<double>(n);

  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normal);
    qr.setThreshold(1e-10);
    if (qr.rank() < d) {
      throw DataError(
          "fit_ridge: singular normal equations at lambda=0 (collinear columns); raise lambda");
    }
    model.weights = qr.solve(rhs);
  } else {
    model.weights = normal.ldlt().solve(rhs);
  }
  return model;
}

double predict_ridge(const RidgeModel& model, std::span<const double> row) {
  if (static_cast<Eigen::Index>(row.size()) != model.weights.size()) {
    throw DataError("predict_ridge: row has " + std::to_string(row.size()) + " features, model " +
                    std::to_string(model.weights.size()));
  }
  double acc = model.intercept;
  for (Eigen::Index j = 0; j < model.weights.size(); ++j) {
    acc += model.weights[j] * (row[j] - model.feature_mean[j]) / model.feature_scale[j];
  }
  return model.clamp_output ? model.range.clamp(acc) : acc;
}

namespace {

DesignMatrix take_rows(const DesignMatrix& data, const std::vector<Eigen::Index>& rows) {
  DesignMatrix out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), data.X.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.X.row(static_cast<Eigen::Index>(i)) = data.X.row(rows[i]);
    out.y[static_cast<Eigen::Index>(i)] = data.y[rows[i]];
  }
  return out;
}

}  // namespace

double select_lambda(const DesignMatrix& data, const LambdaSearch& search) {
  if (search.grid.empty()) throw ConfigError("lambda search: empty grid");
  const Eigen::Index n = data.X.rows();
  if (n < 2) throw DataError("lambda search: need at least 2 rows");
  const int folds = std::min<int>(search.folds, static_cast<int>(n));
  if (folds < 2) throw ConfigError("lambda search: need at least 2 folds");

  const ValueRange unbounded(-1e300, 1e300);
  double best_lambda = search.grid.front();
  double best_mse = std::numeric_limits<double>::infinity();
  for (double lambda : search.grid) {
    if (lambda <= 0.0) throw ConfigError("lambda search: grid values must be positive");
    double sse = 0.0;
    for (int f = 0; f < folds; ++f) {
      std::vector<Eigen::Index> train;
      std::vector<Eigen::Index> test;
      for (Eigen::Index i = 0; i < n; ++i) {
        (static_cast<int>(i % folds) == f ? test : train).push_back(i);
      }
      const RidgeModel model = fit_ridge(take_rows(data, train), lambda, unbounded, false);
      for (Eigen::Index i : test) {
        std::vector<double> row(data.X.cols());
        for (Eigen::Index j = 0; j < data.X.cols(); ++j) row[j] = data.X(i, j);
        const double err = predict_ridge(model, row) - data.y[i];
        sse += err * err;
      }
    }
    const double mse = sse / static_cast<double>(n);
    // Ties favor the larger penalty.
    if (mse < best_mse - 1e-15) {
      best_mse = mse;
      best_lambda = lambda;
    } else if (mse <= best_mse + 1e-15 && lambda > best_lambda) {
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

int FoldAssignment::of(const std::string& id) const {
  auto it = fold_of.find(id);
  if (it == fold_of.end()) throw DataError("no fold assigned for id '" + id + "'");
  return it->second;
}

FoldAssignment assign_folds(const std::vector<std::string>& ids, int fold_count,
                            std::uint64_t seed) {
  if (fold_count < 2) throw ConfigError("fold assignment: need at least 2 folds");
  if (static_cast<std::size_t>(fold_count) > ids.size()) {
    throw ConfigError("fold assignment: more folds than instances");
  }
  FoldAssignment folds;
  folds.fold_count = fold_count;
  std::vector<std::size_t> sizes(fold_count, 0);
  for (const auto& id : ids) {
    const int f = static_cast<int>(stable_hash64(seed, id) % static_cast<std::uint64_t>(fold_count));
    if (!folds.fold_of.emplace(id, f).second) {
      throw DataError("fold assignment: duplicate id '" + id + "'");
    }
    ++sizes[static_cast<std::size_t>(f)];
  }
  for (int f = 0; f < fold_count; ++f) {
    if (sizes[static_cast<std::size_t>(f)] == 0) {
      throw DataError("fold assignment: fold " + std::to_string(f) +
                      " is empty; lower the fold count or change the seed");
    }
  }
  return folds;
}

namespace {

std::string fold_file_name(const std::string& model_id, int fold) {
  return model_id + ".fold" + std::to_string(fold) + ".preds";
}

void check_attestation(const PredictionFile& file, const std::string& path, int fold) {
  const std::string expected = "trained-without-fold: " + std::to_string(fold);
  for (const auto& comment : file.header_comments) {
    if (comment == expected) return;
  }
  throw DataError("fold file '" + path + "' lacks attestation header '# " + expected + "'");
}

}  // namespace

OofModelFiles load_oof_model(const std::string& dir, const std::string& model_id, int fold_count) {
  OofModelFiles model;
  model.model_id = model_id;
  for (int f = 0; f < fold_count; ++f) {
    const std::string path = (fs::path(dir) / fold_file_name(model_id, f)).string();
    if (!fs::exists(path)) {
      throw DataError("missing fold file '" + path + "' for model '" + model_id + "'");
    }
    PredictionFile file = load_prediction_file(path);
    check_attestation(file, path, f);
    if (file.predictions.model_id() != model_id) {
      throw DataError("fold file '" + path + "' carries ModelID '" +
                      file.predictions.model_id() + "', expected '" + model_id + "'");
    }
    model.per_fold.push_back(std::move(file.predictions));
  }
  return model;
}

std::vector<OofModelFiles> discover_oof_models(const std::string& dir, int fold_count) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: '" + dir + "'");
  std::set<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    const std::size_t mark = name.find(".fold");
    if (mark == std::string::npos || name.size() < 7 || !name.ends_with(".preds")) continue;
    names.insert(name.substr(0, mark));
  }
  if (names.empty()) throw DataError("no '<model>.fold<i>.preds' files under '" + dir + "'");
  std::vector<OofModelFiles> models;
  for (const auto& model_id : names) models.push_back(load_oof_model(dir, model_id, fold_count));
  return models;
}

FoldAssignment folds_from_files(const OofModelFiles& model) {
  FoldAssignment folds;
  folds.fold_count = static_cast<int>(model.per_fold.size());
  for (int f = 0; f < folds.fold_count; ++f) {
    for (const auto& [id, va] : model.per_fold[static_cast<std::size_t>(f)].entries()) {
      (void)va;
      if (!folds.fold_of.emplace(id, f).second) {
        throw DataError("instance '" + id + "' present in multiple fold files of model '" +
                        model.model_id + "'");
      }
    }
  }
  return folds;
}

FeatureBlock lexicon_features(const std::vector<InstanceRecord>& instances,
                              const SentimentScorer& scorer, int threads) {
  FeatureBlock block;
  block.names = {"compound", "pos", "neu", "neg"};
  std::vector<std::string> texts;
  texts.reserve(instances.size());
  for (const auto& rec : instances) texts.push_back(rec.text);
  const std::vector<PolarityScores> scores = scorer.score_batch(texts, threads);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto fv = feature_vector(scores[i]);
    block.rows[instances[i].id] = std::vector<double>(fv.begin(), fv.end());
  }
  return block;
}

OofDesign build_oof_design(const std::vector<OofModelFiles>& models,
                           const std::optional<FeatureBlock>& features,
                           const std::vector<InstanceRecord>& instances,
                           const FoldAssignment& folds) {
  if (models.empty()) throw DataError("build_oof_design: no models");
  OofDesign design;
  for (const auto& rec : instances) {
    if (!rec.gold) continue;
    design.ids.push_back(rec.id);
    design.gold.push_back(*rec.gold);
  }
  if (design.ids.empty()) throw DataError("build_oof_design: no gold-bearing instances");

  const std::size_t k = models.size();
  const std::size_t f = features ? features->names.size() : 0;
  const std::size_t n = design.ids.size();
  for (const auto& model : models) design.column_names.push_back(model.model_id);
  if (features) {
    for (const auto& name : features->names) design.column_names.push_back(name);
  }

  design.valence.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k + f));
  design.arousal.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k + f));
  design.valence.y.resize(static_cast<Eigen::Index>(n));
  design.arousal.y.resize(static_cast<Eigen::Index>(n));

  for (std::size_t row = 0; row < n; ++row) {
    const std::string& id = design.ids[row];
    const int fold = folds.of(id);
    for (std::size_t m = 0; m < k; ++m) {
      if (fold >= static_cast<int>(models[m].per_fold.size())) {
        throw DataError("model '" + models[m].model_id + "' has no fold " + std::to_string(fold));
      }
      const VAPair* va = models[m].per_fold[static_cast<std::size_t>(fold)].find(id);
      if (va == nullptr) {
        throw DataError("fold " + std::to_string(fold) + " of model '" + models[m].model_id +
                        "' omits id '" + id + "'");
      }
      design.valence.X(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(m)) = va->valence;
      design.arousal.X(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(m)) = va->arousal;
    }
    if (features) {
      auto it = features->rows.find(id);
      if (it == features->rows.end() || it->second.size() != f) {
        throw DataError("missing features for id '" + id + "'");
      }
      for (std::size_t j = 0; j < f; ++j) {
        design.valence.X(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(k + j)) =
            it->second[j];
        design.arousal.X(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(k + j)) =
            it->second[j];
      }
    }
    design.valence.y[static_cast<Eigen::Index>(row)] = design.gold[row].valence;
    design.arousal.y[static_cast<Eigen::Index>(row)] = design.gold[row].arousal;
  }
  return design;
}

namespace {

std::vector<double> matrix_row(const Eigen::MatrixXd& x, Eigen::Index i) {
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(i, j);
  return row;
}

// Second-level out-of-fold predictions: for each fold, fit on the remaining
// rows and predict the held-out rows.
Eigen::VectorXd nested_oof_predictions(const DesignMatrix& data, double lambda,
                                       const std::vector<int>& row_folds, int fold_count,
                                       const ValueRange& range) {
  const Eigen::Index n = data.X.rows();
  Eigen::VectorXd preds(n);
  for (int f = 0; f < fold_count; ++f) {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> test;
    for (Eigen::Index i = 0; i < n; ++i) {
      (row_folds[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    }
    if (test.empty()) continue;
    if (train.empty()) throw DataError("stack_oof: fold " + std::to_string(f) + " covers all rows");
    const RidgeModel model = fit_ridge(take_rows(data, train), lambda, range, true);
    for (Eigen::Index i : test) preds[i] = predict_ridge(model, matrix_row(data.X, i));
  }
  return preds;
}

}  // namespace

StackResult stack_oof(const OofDesign& design, const FoldAssignment& folds,
                      const StackOptions& opts) {
  StackResult result;
  result.column_names = design.column_names;
  result.lambda_v = opts.fixed_lambda ? *opts.fixed_lambda
                                      : select_lambda(design.valence, opts.lambda_search);
  result.lambda_a = opts.fixed_lambda ? *opts.fixed_lambda
                                      : select_lambda(design.arousal, opts.lambda_search);
  result.model_v = fit_ridge(design.valence, result.lambda_v, opts.range, true);
  result.model_a = fit_ridge(design.arousal, result.lambda_a, opts.range, true);

  std::vector<int> row_folds(design.ids.size());
  for (std::size_t i = 0; i < design.ids.size(); ++i) row_folds[i] = folds.of(design.ids[i]);

  const Eigen::VectorXd oof_v = nested_oof_predictions(design.valence, result.lambda_v, row_folds,
                                                       folds.fold_count, opts.range);
  const Eigen::VectorXd oof_a = nested_oof_predictions(design.arousal, result.lambda_a, row_folds,
                                                       folds.fold_count, opts.range);

  result.fused.set_model_id("stack");
  std::vector<VAPair> fused_rows(design.ids.size());
  for (std::size_t i = 0; i < design.ids.size(); ++i) {
    const VAPair va{oof_v[static_cast<Eigen::Index>(i)], oof_a[static_cast<Eigen::Index>(i)]};
    fused_rows[i] = va;
    result.fused.add(design.ids[i], va);
  }
  result.report = evaluate(fused_rows, design.gold);

  if (opts.include_full_fit) {
    std::vector<VAPair> in_sample(design.ids.size());
    for (std::size_t i = 0; i < design.ids.size(); ++i) {
      in_sample[i].valence =
          predict_ridge(result.model_v, matrix_row(design.valence.X, static_cast<Eigen::Index>(i)));
      in_sample[i].arousal =
          predict_ridge(result.model_a, matrix_row(design.arousal.X, static_cast<Eigen::Index>(i)));
    }
    result.full_fit_report = evaluate(in_sample, design.gold);
  }
  return result;
}

std::vector<SweepRow> sweep_hybrid(const std::vector<SweepEntry>& entries,
                                   const std::vector<double>& weights,
                                   const std::vector<InstanceRecord>& gold_instances,
                                   const ValueRange& range, int threads) {
  if (entries.empty()) throw ConfigError("sweep: no (num_bins, alpha) entries");
  if (weights.empty()) throw ConfigError("sweep: no decode weights");

  std::vector<VAPair> gold;
  std::vector<std::string> gold_ids;
  for (const auto& rec : gold_instances) {
    if (!rec.gold) continue;
    gold.push_back(*rec.gold);
    gold_ids.push_back(rec.id);
  }
  if (gold.size() < 2) throw DataError("sweep: need at least 2 gold instances");

  struct Task {
    const SweepEntry* entry;
    double w;
  };
  std::vector<Task> tasks;
  for (const auto& entry : entries) {
    for (double w : weights) tasks.push_back({&entry, w});
  }

  std::vector<SweepRow> rows(tasks.size());
  std::vector<std::string> errors(tasks.size());
  const int nthreads = resolve_threads(threads);
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
  for (std::int64_t t = 0; t < static_cast<std::int64_t>(tasks.size()); ++t) {
    try {
      const SweepEntry& entry = *tasks[t].entry;
      HybridConfig cfg;
      cfg.num_bins = entry.num_bins;
      cfg.alpha = entry.alpha;
      cfg.pred_weight = tasks[t].w;
      cfg.range = range;
      const PredictionSet decoded = decode_batch(entry.outputs, cfg, "sweep", 1);
      std::vector<VAPair> preds;
      preds.reserve(gold_ids.size());
      for (const auto& id : gold_ids) {
        const VAPair* va = decoded.find(id);
        if (va == nullptr) throw DataError("sweep: entry lacks prediction for id '" + id + "'");
        preds.push_back(*va);
      }
      const EvalReport report = evaluate(preds, gold);
      rows[t] = SweepRow{entry.num_bins, entry.alpha, tasks[t].w,
                         report.rmse, report.rho_mean, report.rho_a};
    } catch (const std::exception& e) {
      errors[t] = e.what();
    }
  }
  for (const auto& err : errors) {
    if (!err.empty()) throw DataError(err);
  }

  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.rmse_avg != b.rmse_avg) return a.rmse_avg < b.rmse_avg;
    if (a.num_bins != b.num_bins) return a.num_bins < b.num_bins;
    if (a.alpha != b.alpha) return a.alpha < b.alpha;
    return a.w < b.w;
  });
  return rows;
}

namespace {

std::string trim_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s = buf;
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.push_back('0');
  return s;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                     std::size_t top_n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << "num_bins,alpha,w,RMSE_avg,rho_mean,rho_a\n";
  const std::size_t limit = top_n == 0 ? rows.size() : std::min(top_n, rows.size());
  for (std::size_t i = 0; i < limit; ++i) {
    const SweepRow& row = rows[i];
    out << row.num_bins << ',' << trim_float(row.alpha) << ',' << trim_float(row.w) << ','
        << fixed4(row.rmse_avg) << ',' << (row.rho_mean ? fixed4(*row.rho_mean) : "NA") << ','
        << (row.rho_a ? fixed4(*row.rho_a) : "NA") << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace vafuse
