#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vafuse/core.hpp"

namespace vafuse {

// Uniform discretization of a ValueRange. Centers are bin midpoints, so
// expected-value decoding of a uniform distribution returns the range middle.
struct BinGrid {
  std::vector<double> edges;    // count + 1, strictly increasing, lo..hi
  std::vector<double> centers;  // count midpoints

  int count() const { return static_cast<int>(centers.size()); }
};

struct HybridConfig {
  int num_bins = 31;
  double alpha = 0.5;        // classification loss weight
  double pred_weight = 0.5;  // w: share of the regression head in the blend
  ValueRange range;
};

BinGrid make_bins(const ValueRange& range, int num_bins);

// Numerically stabilized by max subtraction. Throws on non-finite logits.
std::vector<double> softmax(std::span<const double> logits);

// Sum of p_i * center_i.
double expected_value(std::span<const double> p, const BinGrid& grid);

// Index of the half-open bin [edge_i, edge_i+1); a value exactly on an
// interior edge goes to the higher bin and the top edge is closed. Values
// outside the range are clamped when `clamp` is set, otherwise rejected.
int assign_bin(double y, const BinGrid& grid, bool clamp = true);

// w * y_reg + (1 - w) * expected_value(p), clamped to the range.
double hybrid_combine(double y_reg, std::span<const double> p, const BinGrid& grid, double w,
                      const ValueRange& range);

// (y_reg - y_true)^2 + alpha * cross-entropy of the true bin. A zero
// probability at the true bin saturates instead of returning infinity.
struct HybridLoss {
  double value = 0.0;
  bool saturated = false;
};
inline constexpr double kLogLossSaturation = 745.0;  // ~ -log(DBL_MIN)

HybridLoss hybrid_loss(double y_reg, std::span<const double> p, double y_true,
                       const HybridConfig& cfg, const BinGrid& grid);

// Per-instance base-model outputs as ingested from file: each dimension may
// carry a raw regression value, a logit vector, or both.
struct DimOutput {
  std::optional<double> reg;
  std::vector<double> logits;
};

struct BaseOutput {
  std::string id;
  DimOutput valence;
  DimOutput arousal;
};

// JSONL with fields ID, Valence, Arousal where each dimension object has
// optional "reg" (number) and "logits" (array). '#' lines are comments.
std::vector<BaseOutput> load_base_outputs(const std::string& path);
void save_base_outputs(const std::string& path, const std::vector<BaseOutput>& outputs);

// Decodes one instance under the config. Requires the parts implied by w:
// w=1 needs reg only, w=0 needs logits only, anything between needs both.
VAPair decode_instance(const BaseOutput& out, const HybridConfig& cfg, const BinGrid& grid);

// OpenMP kernel over instances; bit-identical across thread counts because
// every instance is independent.
PredictionSet decode_batch(const std::vector<BaseOutput>& outputs, const HybridConfig& cfg,
                           const std::string& model_id, int threads = 0);

}  // namespace vafuse
