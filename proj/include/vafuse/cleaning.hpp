#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "vafuse/core.hpp"
#include "vafuse/gateway.hpp"
#include "vafuse/hdbscan.hpp"

namespace vafuse {

// One critic's answer for one prompt: cluster-local indices it flagged as
// mislabeled, deduplicated and bounds-checked.
struct CritiqueVerdict {
  std::string critic_id;
  std::vector<int> spurious_indices;
  std::string reasoning;
};

struct CritiqueExample {
  std::string text;
  std::string aspect;
  VAPair va;
};

// Clusters training instances by their gold VA coordinates.
ClusteringResult cluster_va(const std::vector<InstanceRecord>& instances,
                            const HdbscanParams& params, int threads = 0);

// Fills the cluster-critique template, numbering examples from `start_index`
// in cluster order. The scale wording follows the configured range.
std::string render_critique_prompt(const std::vector<CritiqueExample>& cluster,
                                   const ValueRange& range = ValueRange{},
                                   int start_index = 0);

// Extracts the first well-formed JSON object carrying "spurious_indices",
// tolerating surrounding prose and code fences. Indices outside
// [min_index, min_index + cluster_size) are dropped and reported via
// `warnings`. Throws DataError when nothing parsable is found.
CritiqueVerdict parse_critique_response(const std::string& text, const std::string& critic_id,
                                        int cluster_size, int min_index = 0,
                                        std::vector<std::string>* warnings = nullptr);

// Set intersection of exactly three verdicts.
std::vector<int> unanimous_vote(const std::vector<CritiqueVerdict>& verdicts);

struct CleaningConfig {
  HdbscanParams clustering;
  int max_examples_per_prompt = 40;
  std::array<std::string, 3> critics{"gemini", "claude", "gpt5.2"};
  ValueRange range;
  int threads = 0;
};

// Audit record for one prompt (one cluster chunk).
struct ClusterAudit {
  int cluster = 0;
  int chunk = 0;
  int index_offset = 0;
  std::vector<std::string> member_ids;  // chunk order; local index = offset + position
  std::vector<CritiqueVerdict> verdicts;
  std::vector<std::string> removed_ids;
  std::vector<std::string> warnings;
  bool skipped = false;
  std::string skip_reason;
};

struct CleanResult {
  std::vector<InstanceRecord> kept;  // input order preserved
  std::vector<std::string> removed_ids;
  ClusteringResult clustering;
  std::vector<ClusterAudit> audits;
};

// The removal protocol: cluster, critique each cluster with the three
// configured critics, remove only unanimously flagged instances. Noise
// points are never critiqued. Gateway or parse failures skip the affected
// chunk and keep its instances (fail-open), recorded in the audit.
CleanResult clean_dataset(const std::vector<InstanceRecord>& instances,
                          const CleaningConfig& config, Gateway& gateway);

// Line-delimited audit log; byte-stable across identical runs.
void write_audit_log(const std::string& path, const CleanResult& result);

}  // namespace vafuse
