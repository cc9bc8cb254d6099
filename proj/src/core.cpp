#include "vafuse/core.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace vafuse {

using nlohmann::json;

ValueRange::ValueRange(double lo_, double hi_) : lo(lo_), hi(hi_) {
  if (!(lo < hi)) {
    throw ConfigError("value range requires lo < hi, got [" + std::to_string(lo_) + ", " +
                      std::to_string(hi_) + "]");
  }
}

bool VAPair::finite() const { return std::isfinite(valence) && std::isfinite(arousal); }

void PredictionSet::add(const std::string& id, const VAPair& va) {
  if (index_.count(id) > 0) {
    throw DataError("duplicate prediction id '" + id + "' for model '" + model_id_ + "'");
  }
  index_.emplace(id, entries_.size());
  entries_.emplace_back(id, va);
}

const VAPair* PredictionSet::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return nullptr;
  return &entries_[it->second].second;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_number(std::string_view field, std::string_view whole) {
  field = trim(field);
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || field.empty()) {
    throw DataError("non-numeric VA field '" + std::string(field) + "' in '" + std::string(whole) +
                    "'");
  }
  if (!std::isfinite(value)) {
    throw DataError("non-finite VA value in '" + std::string(whole) + "'");
  }
  return value;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return in;
}

json parse_line(const std::string& line, const std::string& path, std::size_t lineno) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError(path + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
  }
  if (!obj.is_object()) {
    throw DataError(path + ":" + std::to_string(lineno) + ": expected a JSON object");
  }
  return obj;
}

std::string require_string(const json& obj, const char* key, const std::string& path,
                           std::size_t lineno) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw DataError(path + ":" + std::to_string(lineno) + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

// Iterates non-comment lines of a JSONL file. Blank lines are skipped.
template <typename Fn>
void for_each_record(const std::string& path, std::ifstream& in, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    fn(parse_line(std::string(body), path, lineno), lineno);
  }
}

}  // namespace

VAPair parse_va_string(std::string_view s) {
  const std::string_view whole = trim(s);
  const std::size_t sep = whole.find('#');
  if (sep == std::string_view::npos || whole.find('#', sep + 1) != std::string_view::npos) {
    throw DataError("malformed VA string '" + std::string(s) + "': expected '<number>#<number>'");
  }
  VAPair va;
  va.valence = parse_number(whole.substr(0, sep), whole);
  va.arousal = parse_number(whole.substr(sep + 1), whole);
  return va;
}

std::string format_va_string(const VAPair& va) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f#%.2f", va.valence, va.arousal);
  return buf;
}

std::vector<InstanceRecord> load_instances(const std::string& path) {
  std::ifstream in = open_for_read(path);
  std::vector<InstanceRecord> records;
  std::unordered_set<std::string> seen;
  for_each_record(path, in, [&](const json& obj, std::size_t lineno) {
    InstanceRecord rec;
    rec.id = require_string(obj, "ID", path, lineno);
    rec.text = require_string(obj, "Text", path, lineno);
    rec.aspect = require_string(obj, "Aspect", path, lineno);
    if (rec.text.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": empty Text for id '" + rec.id +
                      "'");
    }
    if (!seen.insert(rec.id).second) {
      throw DataError(path + ":" + std::to_string(lineno) + ": duplicate id '" + rec.id + "'");
    }
    const bool has_va = obj.contains("VA");
    const bool has_split = obj.contains("Valence") || obj.contains("Arousal");
    if (has_va && has_split) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": give either VA or Valence/Arousal, not both");
    }
    if (has_va) {
      if (!obj["VA"].is_string()) {
        throw DataError(path + ":" + std::to_string(lineno) + ": VA must be a string");
      }
      rec.gold = parse_va_string(obj["VA"].get<std::string>());
    } else if (has_split) {
      if (!obj.contains("Valence") || !obj.contains("Arousal") ||
          !obj["Valence"].is_number() || !obj["Arousal"].is_number()) {
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": Valence and Arousal must both be numbers");
      }
      VAPair gold{obj["Valence"].get<double>(), obj["Arousal"].get<double>()};
      if (!gold.finite()) {
        throw DataError(path + ":" + std::to_string(lineno) + ": non-finite gold value");
      }
      rec.gold = gold;
    }
    records.push_back(std::move(rec));
  });
  return records;
}

void save_instances(const std::string& path, const std::vector<InstanceRecord>& records) {
  std::ofstream out = open_for_write(path);
  for (const auto& rec : records) {
    json obj;
    obj["ID"] = rec.id;
    obj["Text"] = rec.text;
    obj["Aspect"] = rec.aspect;
    if (rec.gold) obj["VA"] = format_va_string(*rec.gold);
    out << obj.dump() << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

PredictionFile load_prediction_file(const std::string& path) {
  std::ifstream in = open_for_read(path);
  PredictionFile file;
  std::string line;
  std::size_t lineno = 0;
  bool model_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '#') {
      file.header_comments.emplace_back(trim(body.substr(1)));
      continue;
    }
    const json obj = parse_line(std::string(body), path, lineno);
    const std::string id = require_string(obj, "ID", path, lineno);
    const std::string model = require_string(obj, "ModelID", path, lineno);
    if (!model_seen) {
      file.predictions.set_model_id(model);
      model_seen = true;
    } else if (model != file.predictions.model_id()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": mixed ModelID '" + model +
                      "' vs '" + file.predictions.model_id() + "'");
    }
    const std::string va = require_string(obj, "VA", path, lineno);
    try {
      file.predictions.add(id, parse_va_string(va));
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (file.predictions.empty()) throw DataError("no predictions in '" + path + "'");
  return file;
}

PredictionSet load_predictions(const std::string& path) {
  return load_prediction_file(path).predictions;
}

void save_predictions(const std::string& path, const PredictionSet& preds,
                      const std::vector<std::string>& header_comments) {
  std::ofstream out = open_for_write(path);
  for (const auto& comment : header_comments) out << "# " << comment << '\n';
  for (const auto& [id, va] : preds.entries()) {
    json obj;
    obj["ID"] = id;
    obj["ModelID"] = preds.model_id();
    obj["VA"] = format_va_string(va);
    out << obj.dump() << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

AlignedTable align(const std::vector<InstanceRecord>& instances,
                   const std::vector<PredictionSet>& preds) {
  if (preds.empty()) throw DataError("align: no models given");
  AlignedTable table;
  for (const auto& rec : instances) {
    if (!rec.gold) {
      ++table.skipped_without_gold;
      continue;
    }
    table.ids.push_back(rec.id);
    table.gold.push_back(*rec.gold);
  }
  for (const auto& set : preds) {
    table.model_ids.push_back(set.model_id());
    std::vector<VAPair> column;
    column.reserve(table.ids.size());
    for (const auto& id : table.ids) {
      const VAPair* va = set.find(id);
      if (va == nullptr) {
        throw DataError("model '" + set.model_id() + "' has no prediction for id '" + id + "'");
      }
      column.push_back(*va);
    }
    table.columns.push_back(std::move(column));
  }
  return table;
}

AlignedPredictions align_predictions(const std::vector<PredictionSet>& preds) {
  if (preds.empty()) throw DataError("align: no models given");
  AlignedPredictions out;
  for (const auto& [id, va] : preds.front().entries()) {
    (void)va;
    out.ids.push_back(id);
  }
  for (const auto& set : preds) {
    out.model_ids.push_back(set.model_id());
    std::vector<VAPair> column;
    column.reserve(out.ids.size());
    for (const auto& id : out.ids) {
      const VAPair* va = set.find(id);
      if (va == nullptr) {
        throw DataError("model '" + set.model_id() + "' has no prediction for id '" + id + "'");
      }
      column.push_back(*va);
    }
    if (set.size() != out.ids.size()) {
      throw DataError("model '" + set.model_id() + "' covers ids outside the first model's set");
    }
    out.columns.push_back(std::move(column));
  }
  return out;
}

namespace {

// Minimal CSV quoting: wrap fields containing separators or quotes.
std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

void write_aligned_csv(const std::string& path, const AlignedTable& table) {
  std::ofstream out = open_for_write(path);
  out << "ID,gold_valence,gold_arousal";
  for (const auto& model : table.model_ids) {
    out << ',' << csv_field(model + "_valence") << ',' << csv_field(model + "_arousal");
  }
  out << '\n';
  for (std::size_t row = 0; row < table.rows(); ++row) {
    out << csv_field(table.ids[row]) << ',' << fixed4(table.gold[row].valence) << ','
        << fixed4(table.gold[row].arousal);
    for (std::size_t m = 0; m < table.models(); ++m) {
      out << ',' << fixed4(table.columns[m][row].valence) << ','
          << fixed4(table.columns[m][row].arousal);
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace vafuse
