#include "vafuse/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vafuse/threading.hpp"

namespace vafuse {

using nlohmann::json;

BinGrid make_bins(const ValueRange& range, int num_bins) {
  if (num_bins < 2) {
    throw ConfigError("make_bins: need at least 2 bins, got " + std::to_string(num_bins));
  }
  BinGrid grid;
  grid.edges.resize(num_bins + 1);
  grid.centers.resize(num_bins);
  const double width = range.width() / num_bins;
  for (int i = 0; i <= num_bins; ++i) grid.edges[i] = range.lo + width * i;
  grid.edges[num_bins] = range.hi;  // exact top edge despite fp drift
  for (int i = 0; i < num_bins; ++i) grid.centers[i] = 0.5 * (grid.edges[i] + grid.edges[i + 1]);
  return grid;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw DataError("softmax: empty logit vector");
  double max_logit = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) throw DataError("softmax: non-finite logit");
    max_logit = std::max(max_logit, v);
  }
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - max_logit);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double expected_value(std::span<const double> p, const BinGrid& grid) {
  if (static_cast<int>(p.size()) != grid.count()) {
    throw DataError("expected_value: distribution has " + std::to_string(p.size()) +
                    " bins but grid has " + std::to_string(grid.count()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += p[i] * grid.centers[i];
  return acc;
}

int assign_bin(double y, const BinGrid& grid, bool clamp) {
  const int b = grid.count();
  const double lo = grid.edges.front();
  const double hi = grid.edges.back();
  if (y < lo || y > hi) {
    if (!clamp) {
      throw DataError("assign_bin: value " + std::to_string(y) + " outside [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    y = std::clamp(y, lo, hi);
  }
  const double width = (hi - lo) / b;
  int idx = static_cast<int>(std::floor((y - lo) / width));
  idx = std::clamp(idx, 0, b - 1);
  // Settle fp disagreement against the stored edges: exact interior edges
  // belong to the higher bin, the top edge to the last bin.
  while (idx < b - 1 && y >= grid.edges[idx + 1]) ++idx;
  while (idx > 0 && y < grid.edges[idx]) --idx;
  return idx;
}

double hybrid_combine(double y_reg, std::span<const double> p, const BinGrid& grid, double w,
                      const ValueRange& range) {
  if (w < 0.0 || w > 1.0) {
    throw ConfigError("hybrid_combine: weight must lie in [0, 1], got " + std::to_string(w));
  }
  const double y_cls = expected_value(p, grid);
  return range.clamp(w * y_reg + (1.0 - w) * y_cls);
}

HybridLoss hybrid_loss(double y_reg, std::span<const double> p, double y_true,
                       const HybridConfig& cfg, const BinGrid& grid) {
  if (cfg.alpha < 0.0) throw ConfigError("hybrid_loss: alpha must be >= 0");
  if (!cfg.range.contains(y_true)) {
    throw DataError("hybrid_loss: target " + std::to_string(y_true) + " outside range");
  }
  const double err = y_reg - y_true;
  HybridLoss loss;
  loss.value = err * err;
  if (cfg.alpha > 0.0) {
    const double p_true = p[static_cast<std::size_t>(assign_bin(y_true, grid))];
    if (p_true <= 0.0) {
      loss.saturated = true;
      loss.value += cfg.alpha * kLogLossSaturation;
    } else {
      loss.value += cfg.alpha * -std::log(p_true);
    }
  }
  return loss;
}

namespace {

DimOutput parse_dim(const json& obj, const char* key, const std::string& path,
                    std::size_t lineno) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_object()) {
    throw DataError(path + ":" + std::to_string(lineno) + ": missing object field '" + key + "'");
  }
  DimOutput dim;
  if (it->contains("reg")) {
    if (!(*it)["reg"].is_number()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": '" + key + ".reg' must be a number");
    }
    dim.reg = (*it)["reg"].get<double>();
  }
  if (it->contains("logits")) {
    const auto& arr = (*it)["logits"];
    if (!arr.is_array() || arr.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": '" + key +
                      ".logits' must be a non-empty array");
    }
    for (const auto& v : arr) {
      if (!v.is_number()) {
        throw DataError(path + ":" + std::to_string(lineno) + ": non-numeric logit");
      }
      dim.logits.push_back(v.get<double>());
    }
  }
  if (!dim.reg && dim.logits.empty()) {
    throw DataError(path + ":" + std::to_string(lineno) + ": '" + std::string(key) +
                    "' carries neither reg nor logits");
  }
  return dim;
}

}  // namespace

std::vector<BaseOutput> load_base_outputs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  std::vector<BaseOutput> outputs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
    }
    BaseOutput out;
    if (!obj.contains("ID") || !obj["ID"].is_string()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": missing string field 'ID'");
    }
    out.id = obj["ID"].get<std::string>();
    out.valence = parse_dim(obj, "Valence", path, lineno);
    out.arousal = parse_dim(obj, "Arousal", path, lineno);
    outputs.push_back(std::move(out));
  }
  return outputs;
}

void save_base_outputs(const std::string& path, const std::vector<BaseOutput>& outputs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  auto dim_json = [](const DimOutput& dim) {
    json obj = json::object();
    if (dim.reg) obj["reg"] = *dim.reg;
    if (!dim.logits.empty()) obj["logits"] = dim.logits;
    return obj;
  };
  for (const auto& rec : outputs) {
    json obj;
    obj["ID"] = rec.id;
    obj["Valence"] = dim_json(rec.valence);
    obj["Arousal"] = dim_json(rec.arousal);
    out << obj.dump() << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

namespace {

double decode_dim(const DimOutput& dim, const HybridConfig& cfg, const BinGrid& grid,
                  const std::string& id) {
  const double w = cfg.pred_weight;
  const bool needs_reg = w > 0.0;
  const bool needs_cls = w < 1.0;
  if (needs_reg && !dim.reg) {
    throw DataError("instance '" + id + "': regression value required for w=" + std::to_string(w));
  }
  if (needs_cls && dim.logits.empty()) {
    throw DataError("instance '" + id + "': logits required for w=" + std::to_string(w));
  }
  if (needs_cls && static_cast<int>(dim.logits.size()) != grid.count()) {
    throw DataError("instance '" + id + "': " + std::to_string(dim.logits.size()) +
                    " logits but grid has " + std::to_string(grid.count()) + " bins");
  }
  if (!needs_cls) return cfg.range.clamp(*dim.reg);
  const std::vector<double> p = softmax(dim.logits);
  const double y_reg = needs_reg ? *dim.reg : 0.0;
  return hybrid_combine(y_reg, p, grid, w, cfg.range);
}

}  // namespace

VAPair decode_instance(const BaseOutput& out, const HybridConfig& cfg, const BinGrid& grid) {
  VAPair va;
  va.valence = decode_dim(out.valence, cfg, grid, out.id);
  va.arousal = decode_dim(out.arousal, cfg, grid, out.id);
  return va;
}

PredictionSet decode_batch(const std::vector<BaseOutput>& outputs, const HybridConfig& cfg,
                           const std::string& model_id, int threads) {
  const BinGrid grid = make_bins(cfg.range, cfg.num_bins);
  std::vector<VAPair> decoded(outputs.size());
  std::vector<std::string> errors(outputs.size());
  const int nthreads = resolve_threads(threads);
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(outputs.size()); ++i) {
    try {
      decoded[i] = decode_instance(outputs[i], cfg, grid);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& err : errors) {
    if (!err.empty()) throw DataError(err);
  }
  PredictionSet preds(model_id);
  for (std::size_t i = 0; i < outputs.size(); ++i) preds.add(outputs[i].id, decoded[i]);
  return preds;
}

}  // namespace vafuse
