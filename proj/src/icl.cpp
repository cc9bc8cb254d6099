#include "vafuse/icl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <regex>

#include <nlohmann/json.hpp>

#include "vafuse/rng.hpp"
#include "vafuse/threading.hpp"

namespace vafuse {

using nlohmann::json;

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DataError("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw DataError("cosine_similarity: empty vectors");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) throw DataError("cosine_similarity: zero-norm vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void SelectionPolicy::validate() const {
  if (k < 0) throw ConfigError("selection policy: k must be >= 0");
  if ((mode == Mode::kZeroShot) != (k == 0)) {
    throw ConfigError("selection policy: k == 0 exactly for zero_shot");
  }
}

SelectionPolicy make_policy(const std::string& mode_name, int k, std::uint64_t seed) {
  SelectionPolicy policy;
  if (mode_name == "zero_shot") {
    policy.mode = SelectionPolicy::Mode::kZeroShot;
  } else if (mode_name == "random_k") {
    policy.mode = SelectionPolicy::Mode::kRandomK;
  } else if (mode_name == "similar_k") {
    policy.mode = SelectionPolicy::Mode::kSimilarK;
  } else {
    throw ConfigError("unknown selection mode '" + mode_name +
                      "' (zero_shot|random_k|similar_k)");
  }
  policy.k = k;
  policy.seed = seed;
  policy.validate();
  return policy;
}

std::string policy_mode_name(SelectionPolicy::Mode mode) {
  switch (mode) {
    case SelectionPolicy::Mode::kZeroShot: return "zero_shot";
    case SelectionPolicy::Mode::kRandomK: return "random_k";
    case SelectionPolicy::Mode::kSimilarK: return "similar_k";
  }
  return "zero_shot";
}

void EmbeddingStore::put(const std::string& id, std::vector<double> vector,
                         const std::string& text) {
  if (vector.empty()) throw DataError("embedding store: empty vector for id '" + id + "'");
  for (double v : vector) {
    if (!std::isfinite(v)) throw DataError("embedding store: non-finite component for '" + id + "'");
  }
  if (dimension_ == 0) {
    dimension_ = vector.size();
  } else if (vector.size() != dimension_) {
    throw DataError("embedding store: id '" + id + "' has dimension " +
                    std::to_string(vector.size()) + ", store has " + std::to_string(dimension_));
  }
  auto it = index_.find(id);
  if (it != index_.end()) {
    vectors_[it->second] = std::move(vector);
    texts_[it->second] = text;
    return;
  }
  index_.emplace(id, ids_.size());
  ids_.push_back(id);
  vectors_.push_back(std::move(vector));
  texts_.push_back(text);
}

const std::vector<double>* EmbeddingStore::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return nullptr;
  return &vectors_[it->second];
}

namespace {

constexpr char kStoreMagic[8] = {'V', 'A', 'F', 'E', 'M', 'B', '1', '\n'};

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void read_raw(std::ifstream& in, T& value, const std::string& path) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw DataError("truncated embedding store '" + path + "'");
}

}  // namespace

void EmbeddingStore::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.write(kStoreMagic, sizeof(kStoreMagic));
  write_raw(out, static_cast<std::uint64_t>(ids_.size()));
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    write_raw(out, static_cast<std::uint32_t>(ids_[i].size()));
    out.write(ids_[i].data(), static_cast<std::streamsize>(ids_[i].size()));
    write_raw(out, static_cast<std::uint32_t>(vectors_[i].size()));
    out.write(reinterpret_cast<const char*>(vectors_[i].data()),
              static_cast<std::streamsize>(vectors_[i].size() * sizeof(double)));
  }
  if (!out) throw DataError("write failed for '" + path + "'");

  std::ofstream sidecar(path + ".texts.jsonl", std::ios::binary);
  if (!sidecar) throw DataError("cannot open text sidecar for '" + path + "'");
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    json obj;
    obj["ID"] = ids_[i];
    obj["Text"] = texts_[i];
    sidecar << obj.dump() << '\n';
  }
}

EmbeddingStore EmbeddingStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding store '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kStoreMagic)) {
    throw DataError("'" + path + "' is not an embedding store");
  }
  std::uint64_t count = 0;
  read_raw(in, count, path);

  std::unordered_map<std::string, std::string> texts;
  std::ifstream sidecar(path + ".texts.jsonl", std::ios::binary);
  if (sidecar) {
    std::string line;
    while (std::getline(sidecar, line)) {
      if (line.empty()) continue;
      const json obj = json::parse(line, nullptr, false);
      if (obj.is_discarded() || !obj.contains("ID")) continue;
      texts[obj["ID"].get<std::string>()] = obj.value("Text", "");
    }
  }

  EmbeddingStore store;
  for (std::uint64_t r = 0; r < count; ++r) {
    std::uint32_t id_len = 0;
    read_raw(in, id_len, path);
    std::string id(id_len, '\0');
    in.read(id.data(), id_len);
    if (!in) throw DataError("truncated embedding store '" + path + "'");
    std::uint32_t dim = 0;
    read_raw(in, dim, path);
    std::vector<double> vec(dim);
    in.read(reinterpret_cast<char*>(vec.data()),
            static_cast<std::streamsize>(dim * sizeof(double)));
    if (!in) throw DataError("truncated embedding store '" + path + "'");
    auto it = texts.find(id);
    store.put(id, std::move(vec), it == texts.end() ? "" : it->second);
  }
  return store;
}

void EmbeddingStore::ensure(const std::vector<InstanceRecord>& records, Gateway& gateway,
                            const std::string& profile) {
  std::vector<const InstanceRecord*> missing;
  for (const auto& rec : records) {
    if (find(rec.id) == nullptr) missing.push_back(&rec);
  }
  if (missing.empty()) return;
  std::vector<std::string> texts;
  texts.reserve(missing.size());
  for (const auto* rec : missing) texts.push_back(rec->text);
  const std::vector<std::vector<double>> vectors = gateway.embed(profile, texts);
  for (std::size_t i = 0; i < missing.size(); ++i) {
    put(missing[i]->id, vectors[i], missing[i]->text);
  }
}

namespace icl_detail {

std::vector<double> similarity_row(std::span<const double> query,
                                   const std::vector<const std::vector<double>*>& pool,
                                   int threads) {
  std::vector<double> sims(pool.size());
  std::vector<std::string> errors(pool.size());
  const int nthreads = resolve_threads(threads);
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(pool.size()); ++i) {
    try {
      sims[i] = cosine_similarity(query, *pool[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& err : errors) {
    if (!err.empty()) throw DataError(err);
  }
  return sims;
}

}  // namespace icl_detail

std::vector<std::size_t> select_examples(const InstanceRecord& query,
                                         const std::vector<InstanceRecord>& pool,
                                         const SelectionPolicy& policy,
                                         const EmbeddingStore* embeddings, int threads) {
  policy.validate();
  if (policy.mode == SelectionPolicy::Mode::kZeroShot) return {};

  std::vector<std::size_t> candidates;
  candidates.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].id != query.id) candidates.push_back(i);
  }
  if (candidates.size() < static_cast<std::size_t>(policy.k)) {
    throw DataError("select_examples: pool has " + std::to_string(candidates.size()) +
                    " usable items, need k=" + std::to_string(policy.k));
  }

  if (policy.mode == SelectionPolicy::Mode::kRandomK) {
    // Per-query stream keyed by (seed, query id): reproducible, and distinct
    // queries draw distinct samples.
    const auto picks = sample_without_replacement(
        candidates.size(), static_cast<std::size_t>(policy.k),
        stable_hash64(policy.seed, query.id));
    std::vector<std::size_t> out;
    out.reserve(picks.size());
    for (std::size_t p : picks) out.push_back(candidates[p]);
    return out;
  }

  // similar_k
  if (embeddings == nullptr) throw DataError("select_examples: similar_k needs embeddings");
  const std::vector<double>* query_vec = embeddings->find(query.id);
  if (query_vec == nullptr) {
    throw DataError("select_examples: no embedding for query '" + query.id + "'");
  }
  std::vector<const std::vector<double>*> pool_vecs(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const std::vector<double>* vec = embeddings->find(pool[candidates[i]].id);
    if (vec == nullptr) {
      throw DataError("select_examples: no embedding for pool id '" + pool[candidates[i]].id +
                      "'");
    }
    pool_vecs[i] = vec;
  }
  const std::vector<double> sims = icl_detail::similarity_row(*query_vec, pool_vecs, threads);

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&sims](std::size_t a, std::size_t b) {
    return sims[a] > sims[b];  // ties keep pool order via stability
  });
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(policy.k));
  for (int i = 0; i < policy.k; ++i) out.push_back(candidates[order[static_cast<std::size_t>(i)]]);
  return out;
}

namespace {

std::string scale_number(double v) {
  if (v == std::floor(v) && std::fabs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string render_task_prompt(const InstanceRecord& query,
                               const std::vector<InstanceRecord>& examples,
                               const ValueRange& range) {
  const std::string lo = scale_number(range.lo);
  const std::string hi = scale_number(range.hi);
  std::string prompt;
  prompt += "You are an expert in dimensional aspect-based sentiment analysis.\n";
  prompt += "Rate the sentiment expressed toward the given aspect of the sentence.\n";
  prompt += "\n";
  prompt += "DEFINITIONS:\n";
  prompt += "- Valence: " + lo + "=very negative to " + hi + "=very positive\n";
  prompt += "- Arousal: " + lo + "=very calm to " + hi + "=very intense\n";
  if (!examples.empty()) {
    prompt += "\n";
    prompt += "EXAMPLES:\n";
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const InstanceRecord& ex = examples[i];
      if (!ex.gold) throw DataError("render_task_prompt: example '" + ex.id + "' has no gold VA");
      prompt += "Example " + std::to_string(i) + ": Text: \"" + ex.text + "\" | Aspect: \"" +
                ex.aspect + "\" | VA: " + format_va_string(*ex.gold) + "\n";
    }
  }
  prompt += "\n";
  prompt += "NOW RATE:\n";
  prompt += "Text: \"" + query.text + "\"\n";
  prompt += "Aspect: \"" + query.aspect + "\"\n";
  prompt += "\n";
  prompt += "Return ONLY valid JSON with NO extra text:\n";
  prompt += "{\"valence\": <number>, \"arousal\": <number>}";
  return prompt;
}

VAPair parse_va_response(const std::string& text, const ValueRange& range) {
  auto check_range = [&](const VAPair& va) {
    if (!va.finite() || !range.contains(va.valence) || !range.contains(va.arousal)) {
      throw DataError("VA response out of range [" + scale_number(range.lo) + ", " +
                      scale_number(range.hi) + "]; raw payload: " + text);
    }
    return va;
  };

  // JSON object route first.
  std::size_t from = 0;
  while (true) {
    const std::size_t open = text.find('{', from);
    if (open == std::string::npos) break;
    int depth = 0;
    bool in_string = false;
    std::size_t close = std::string::npos;
    for (std::size_t i = open; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (c == '\\') {
          ++i;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}') {
        if (--depth == 0) {
          close = i;
          break;
        }
      }
    }
    if (close == std::string::npos) break;
    const json obj = json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (obj.is_object() && obj.contains("valence") && obj.contains("arousal") &&
        obj["valence"].is_number() && obj["arousal"].is_number()) {
      return check_range({obj["valence"].get<double>(), obj["arousal"].get<double>()});
    }
    from = open + 1;
  }

  // "v#a" pattern fallback.
  static const std::regex kVaPattern(R"(([-+]?\d+(?:\.\d+)?)#([-+]?\d+(?:\.\d+)?))");
  std::smatch match;
  if (std::regex_search(text, match, kVaPattern)) {
    return check_range({std::stod(match[1].str()), std::stod(match[2].str())});
  }
  throw DataError("no VA pair found in response; raw payload: " + text);
}

}  // namespace vafuse
