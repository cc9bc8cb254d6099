#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vafuse/core.hpp"
#include "vafuse/gateway.hpp"

namespace vafuse {

// dot(a,b) / (|a||b|). Throws on dimension mismatch or a zero-norm vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct SelectionPolicy {
  enum class Mode { kZeroShot, kRandomK, kSimilarK };
  Mode mode = Mode::kZeroShot;
  int k = 0;
  std::uint64_t seed = 0;

  void validate() const;  // k == 0 iff zero-shot
};
SelectionPolicy make_policy(const std::string& mode_name, int k, std::uint64_t seed);
std::string policy_mode_name(SelectionPolicy::Mode mode);

// Persistent id -> vector map with a JSONL text sidecar. Binary layout:
// magic, record count, then (id length, id, dimension, doubles) per record.
class EmbeddingStore {
 public:
  void put(const std::string& id, std::vector<double> vector, const std::string& text);
  const std::vector<double>* find(const std::string& id) const;
  std::size_t size() const { return ids_.size(); }
  std::size_t dimension() const { return dimension_; }

  static EmbeddingStore load(const std::string& path);
  void save(const std::string& path) const;

  // Fetches vectors for records missing from the store via the gateway's
  // embed endpoint (profile must support it), in input order.
  void ensure(const std::vector<InstanceRecord>& records, Gateway& gateway,
              const std::string& profile);

 private:
  std::vector<std::string> ids_;  // insertion order, for stable serialization
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<double>> vectors_;
  std::vector<std::string> texts_;
  std::size_t dimension_ = 0;
};

// Pool indices chosen for the query under the policy. The query is never
// selected as its own example; similar-k output is ordered by descending
// similarity with ties in pool order.
std::vector<std::size_t> select_examples(const InstanceRecord& query,
                                         const std::vector<InstanceRecord>& pool,
                                         const SelectionPolicy& policy,
                                         const EmbeddingStore* embeddings, int threads = 0);

// Deterministic prediction prompt: scale definitions, the examples as
// (text, aspect, "v#a") triples, then the query with a JSON reply format.
std::string render_task_prompt(const InstanceRecord& query,
                               const std::vector<InstanceRecord>& examples,
                               const ValueRange& range);

// Reads a VA pair from a model reply: first a JSON object with numeric
// valence/arousal fields, then a "v#a" pattern fallback. Values outside the
// range are rejected with the raw payload in the message.
VAPair parse_va_response(const std::string& text, const ValueRange& range);

namespace icl_detail {

// OpenMP kernel: cosine similarity of one query against every pool vector.
std::vector<double> similarity_row(std::span<const double> query,
                                   const std::vector<const std::vector<double>*>& pool,
                                   int threads);

}  // namespace icl_detail

}  // namespace vafuse
