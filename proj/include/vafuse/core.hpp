#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vafuse/errors.hpp"

namespace vafuse {

// Closed value range shared by both sentiment dimensions. The task scale is
// 1..9 but Track-B style data may use another range, so it stays configurable.
struct ValueRange {
  double lo = 1.0;
  double hi = 9.0;

  ValueRange() = default;
  ValueRange(double lo_, double hi_);

  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
  double clamp(double v) const {
    if (v < lo) return lo;
    if (v > hi) return hi;
    return v;
  }
};

struct VAPair {
  double valence = 0.0;
  double arousal = 0.0;

  bool finite() const;
  double dim(int d) const { return d == 0 ? valence : arousal; }
};

struct InstanceRecord {
  std::string id;
  std::string text;
  std::string aspect;
  std::optional<VAPair> gold;
};

// One model's predictions, keyed by instance id, preserving insertion order
// so that serialization is stable.
class PredictionSet {
 public:
  PredictionSet() = default;
  explicit PredictionSet(std::string model_id) : model_id_(std::move(model_id)) {}

  const std::string& model_id() const { return model_id_; }
  void set_model_id(std::string id) { model_id_ = std::move(id); }

  // Throws DataError on duplicate id.
  void add(const std::string& id, const VAPair& va);
  const VAPair* find(const std::string& id) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<std::pair<std::string, VAPair>>& entries() const { return entries_; }

 private:
  std::string model_id_;
  std::vector<std::pair<std::string, VAPair>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Gold-bearing instances crossed with per-model prediction columns.
// Row order is gold order; column order is input order.
struct AlignedTable {
  std::vector<std::string> ids;
  std::vector<VAPair> gold;
  std::vector<std::string> model_ids;
  std::vector<std::vector<VAPair>> columns;  // [model][row]
  std::size_t skipped_without_gold = 0;

  std::size_t rows() const { return ids.size(); }
  std::size_t models() const { return model_ids.size(); }
};

// Prediction columns aligned by id without requiring gold labels (used when
// fusing test-phase files). Row order follows the first set.
struct AlignedPredictions {
  std::vector<std::string> ids;
  std::vector<std::string> model_ids;
  std::vector<std::vector<VAPair>> columns;  // [model][row]

  std::size_t rows() const { return ids.size(); }
  std::size_t models() const { return model_ids.size(); }
};

// "v#a" interchange form. Parsing keeps full precision and never clamps;
// formatting fixes two decimal places.
VAPair parse_va_string(std::string_view s);
std::string format_va_string(const VAPair& va);

// Line-delimited JSON instance files. Fields: ID, Text, Aspect, and either
// VA ("v#a") or Valence/Arousal numbers; gold is optional. Lines starting
// with '#' are skipped.
std::vector<InstanceRecord> load_instances(const std::string& path);
void save_instances(const std::string& path, const std::vector<InstanceRecord>& records);

// Prediction files: one JSON object per line with ID, ModelID, VA. A file
// holds exactly one model. '#' lines are comments; `header_comments` entries
// are written verbatim (without the leading '#') at the top of the file.
struct PredictionFile {
  PredictionSet predictions;
  std::vector<std::string> header_comments;
};
PredictionFile load_prediction_file(const std::string& path);
PredictionSet load_predictions(const std::string& path);
void save_predictions(const std::string& path, const PredictionSet& preds,
                      const std::vector<std::string>& header_comments = {});

AlignedTable align(const std::vector<InstanceRecord>& instances,
                   const std::vector<PredictionSet>& preds);
AlignedPredictions align_predictions(const std::vector<PredictionSet>& preds);

void write_aligned_csv(const std::string& path, const AlignedTable& table);

}  // namespace vafuse
