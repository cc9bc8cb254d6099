#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vafuse/core.hpp"
#include "vafuse/hybrid.hpp"
#include "vafuse/metrics.hpp"

namespace vafuse {

// Simplex-constrained combination weights for weighted averaging.
struct EnsembleWeights {
  std::vector<double> values;

  // Throws ConfigError unless every weight is >= 0 and they sum to 1 (1e-9).
  void validate() const;
  static EnsembleWeights uniform(std::size_t k);
};

enum class RmseMode {
  kOverall,              // pooled over both dimensions (default)
  kPerDimensionAverage,  // mean of RMSE_v and RMSE_a
};

// Per-instance, per-dimension arithmetic mean. Exactly equals
// weighted_average with uniform weights.
PredictionSet average(const AlignedPredictions& preds, const std::string& model_id = "avg");

PredictionSet weighted_average(const AlignedPredictions& preds, const EnsembleWeights& weights,
                               const std::string& model_id = "weighted");

// Exhaustive search over the simplex grid with the given step, minimizing
// RMSE against the table's gold column. Ties go to the grid point closest to
// uniform, then lexicographically smallest.
EnsembleWeights grid_search_weights(const AlignedTable& table, double step = 0.1,
                                    RmseMode mode = RmseMode::kOverall);

struct DesignMatrix {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

// Ridge fit in standardized feature space; the intercept is the target mean
// and is never penalized. Predictions are clamped to `range` when
// `clamp_output` is set.
struct RidgeModel {
  Eigen::VectorXd weights;  // standardized space
  double intercept = 0.0;
  double lambda = 0.0;
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;
  ValueRange range;
  bool clamp_output = true;

  // Coefficients mapped back to the original (unstandardized) units.
  Eigen::VectorXd original_coefficients() const;
  double original_intercept() const;
};

// Minimizes (1/n)||y - (Xw + b*1)||^2 + lambda*||w||^2. Throws DataError when
// lambda is 0 and the standardized normal equations are singular.
RidgeModel fit_ridge(const DesignMatrix& data, double lambda, const ValueRange& range,
                     bool clamp_output = true);

double predict_ridge(const RidgeModel& model, std::span<const double> row);

// Inner cross-validation over a lambda grid; deterministic row-index folds.
struct LambdaSearch {
  std::vector<double> grid{1e-3, 1e-2, 1e-1, 1.0, 10.0};
  int folds = 5;
};
double select_lambda(const DesignMatrix& data, const LambdaSearch& search);

// Seeded fold assignment by stable hash of the instance id, so membership
// depends only on (seed, id). Throws if a fold ends up empty.
struct FoldAssignment {
  std::unordered_map<std::string, int> fold_of;
  int fold_count = 0;

  int of(const std::string& id) const;
};
FoldAssignment assign_folds(const std::vector<std::string>& ids, int fold_count,
                            std::uint64_t seed);

// One base model's fold prediction files: per_fold[i] holds the predictions
// written by the run that never saw fold i's labels (attested in the file
// header as `trained-without-fold: i`).
struct OofModelFiles {
  std::string model_id;
  std::vector<PredictionSet> per_fold;
};

// Reads `<model>.fold<i>.preds` for i in 0..fold_count-1, validating the
// attestation header and model id.
OofModelFiles load_oof_model(const std::string& dir, const std::string& model_id, int fold_count);
std::vector<OofModelFiles> discover_oof_models(const std::string& dir, int fold_count);

// Fold assignment recovered from files laid out as a partition (each fold
// file carries exactly its own fold's instances). An id present in several
// fold files, or in none, is an error.
FoldAssignment folds_from_files(const OofModelFiles& model);

// Optional per-instance auxiliary features, aligned later by id.
struct FeatureBlock {
  std::vector<std::string> names;
  std::unordered_map<std::string, std::vector<double>> rows;
};
FeatureBlock lexicon_features(const std::vector<InstanceRecord>& instances,
                              const class SentimentScorer& scorer, int threads = 0);

// Per-dimension design matrices where row j takes each base prediction from
// the fold file excluding j's fold. Feature columns are appended after the
// base-model columns.
struct OofDesign {
  std::vector<std::string> ids;  // gold-bearing instances, gold order
  std::vector<VAPair> gold;
  std::vector<std::string> column_names;
  DesignMatrix valence;
  DesignMatrix arousal;
};
OofDesign build_oof_design(const std::vector<OofModelFiles>& models,
                           const std::optional<FeatureBlock>& features,
                           const std::vector<InstanceRecord>& instances,
                           const FoldAssignment& folds);

struct StackOptions {
  LambdaSearch lambda_search;
  std::optional<double> fixed_lambda;
  ValueRange range;
  // The full-fit variant trains and evaluates on the same rows; it is
  // optimistic and not comparable to the out-of-fold report.
  bool include_full_fit = false;
};

struct StackResult {
  RidgeModel model_v;
  RidgeModel model_a;
  double lambda_v = 0.0;
  double lambda_a = 0.0;
  std::vector<std::string> column_names;
  PredictionSet fused;  // out-of-fold stacker predictions
  EvalReport report;    // metrics of `fused`
  std::optional<EvalReport> full_fit_report;
};

// Fits the stacker on the OOF design. Reported metrics come from
// second-level out-of-fold predictions (the stacker applied to folds it was
// not fitted on); the returned models are fitted on all rows.
StackResult stack_oof(const OofDesign& design, const FoldAssignment& folds,
                      const StackOptions& opts);

// Hybrid decoding sweep: one entry per trained (num_bins, alpha) output set,
// crossed with the decode weights. Rows sorted ascending by RMSE, ties by
// (num_bins, alpha, w).
struct SweepEntry {
  int num_bins = 0;
  double alpha = 0.0;
  std::vector<BaseOutput> outputs;
};
struct SweepRow {
  int num_bins = 0;
  double alpha = 0.0;
  double w = 0.0;
  double rmse_avg = 0.0;
  std::optional<double> rho_mean;
  std::optional<double> rho_a;
};
std::vector<SweepRow> sweep_hybrid(const std::vector<SweepEntry>& entries,
                                   const std::vector<double>& weights,
                                   const std::vector<InstanceRecord>& gold_instances,
                                   const ValueRange& range, int threads = 0);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                     std::size_t top_n = 0);

}  // namespace vafuse
