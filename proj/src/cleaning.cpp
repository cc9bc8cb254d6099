#include "vafuse/cleaning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace vafuse {

using nlohmann::json;

namespace {

// Scale endpoints are rendered without decimals when integral (the usual
// 1..9 task scale), otherwise with two decimals.
std::string scale_number(double v) {
  if (v == std::floor(v) && std::fabs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

ClusteringResult cluster_va(const std::vector<InstanceRecord>& instances,
                            const HdbscanParams& params, int threads) {
  std::vector<Point2> points;
  points.reserve(instances.size());
  for (const auto& rec : instances) {
    if (!rec.gold) {
      throw DataError("cluster_va: instance '" + rec.id + "' has no gold VA label");
    }
    points.push_back({rec.gold->valence, rec.gold->arousal});
  }
  return hdbscan_cluster(points, params, threads);
}

std::string render_critique_prompt(const std::vector<CritiqueExample>& cluster,
                                   const ValueRange& range, int start_index) {
  if (cluster.empty()) throw DataError("render_critique_prompt: empty cluster");
  std::string examples_text;
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    const CritiqueExample& ex = cluster[i];
    examples_text += "Example " + std::to_string(start_index + static_cast<int>(i)) +
                     ": Text: \"" + ex.text + "\" | Aspect: \"" + ex.aspect +
                     "\" | VA: " + format_va_string(ex.va);
    if (i + 1 < cluster.size()) examples_text += '\n';
  }

  const std::string lo = scale_number(range.lo);
  const std::string hi = scale_number(range.hi);
  std::string prompt;
  prompt += "You are an expert in sentiment analysis.\n";
  prompt += "Below is a cluster of aspect-sentiment examples grouped by similar\n";
  prompt += "Valence-Arousal (VA) values.\n";
  prompt += "\n";
  prompt += "DEFINITIONS:\n";
  prompt += "- Valence: " + lo + "=very negative to " + hi + "=very positive\n";
  prompt += "- Arousal: " + lo + "=very calm to " + hi + "=very intense\n";
  prompt += "\n";
  prompt += "CLUSTER EXAMPLES:\n";
  prompt += examples_text + "\n";
  prompt += "\n";
  prompt += "TASK: Identify which examples (if any) have spurious/incorrect VA labels\n";
  prompt += "that don't match the text sentiment. An example is spurious if:\n";
  prompt += "1. The VA values don't match the sentiment expressed in the text\n";
  prompt += "2. The aspect sentiment is clearly different from the labeled values\n";
  prompt += "3. The label seems inconsistent with similar examples in this cluster\n";
  prompt += "\n";
  prompt += "Return ONLY valid JSON with NO extra text:\n";
  prompt += "{\n";
  prompt += "  \"spurious_indices\": [0, 5, 12],\n";
  prompt += "  \"reasoning\": \"Example 0: Text is very negative but valence is too high.\n";
  prompt += "  Example 5: ...\"\n";
  prompt += "}\n";
  prompt += "\n";
  prompt += "If no examples are spurious, return:\n";
  prompt += "{\"spurious_indices\": [], \"reasoning\": \"All labels appear correct\"}";
  return prompt;
}

namespace {

// First balanced, string-aware JSON object slice starting at or after `from`.
std::optional<std::string> next_object_slice(const std::string& text, std::size_t from,
                                             std::size_t* next_from) {
  const std::size_t open = text.find('{', from);
  if (open == std::string::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
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
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      --depth;
      if (depth == 0) {
        *next_from = open + 1;
        return text.substr(open, i - open + 1);
      }
    }
  }
  *next_from = open + 1;
  return std::nullopt;
}

}  // namespace

CritiqueVerdict parse_critique_response(const std::string& text, const std::string& critic_id,
                                        int cluster_size, int min_index,
                                        std::vector<std::string>* warnings) {
  std::size_t from = 0;
  while (true) {
    std::size_t next_from = 0;
    const auto slice = next_object_slice(text, from, &next_from);
    if (!slice) break;
    from = next_from;
    json obj = json::parse(*slice, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) continue;
    auto it = obj.find("spurious_indices");
    if (it == obj.end() || !it->is_array()) continue;

    CritiqueVerdict verdict;
    verdict.critic_id = critic_id;
    if (obj.contains("reasoning") && obj["reasoning"].is_string()) {
      verdict.reasoning = obj["reasoning"].get<std::string>();
    }
    std::set<int> indices;
    for (const auto& v : *it) {
      if (!v.is_number_integer()) {
        throw DataError("critic '" + critic_id + "': non-integer spurious index");
      }
      const int idx = v.get<int>();
      if (idx < min_index || idx >= min_index + cluster_size) {
        if (warnings != nullptr) {
          warnings->push_back("critic '" + critic_id + "': index " + std::to_string(idx) +
                              " outside [" + std::to_string(min_index) + ", " +
                              std::to_string(min_index + cluster_size) + "), dropped");
        }
        continue;
      }
      indices.insert(idx);
    }
    verdict.spurious_indices.assign(indices.begin(), indices.end());
    return verdict;
  }
  throw DataError("critic '" + critic_id + "': no JSON object with 'spurious_indices' in response");
}

std::vector<int> unanimous_vote(const std::vector<CritiqueVerdict>& verdicts) {
  if (verdicts.size() != 3) {
    throw ConfigError("unanimous_vote: need exactly 3 verdicts, got " +
                      std::to_string(verdicts.size()));
  }
  std::set<int> agreed(verdicts[0].spurious_indices.begin(), verdicts[0].spurious_indices.end());
  for (std::size_t v = 1; v < verdicts.size(); ++v) {
    std::set<int> keep;
    for (int idx : verdicts[v].spurious_indices) {
      if (agreed.count(idx) > 0) keep.insert(idx);
    }
    agreed = std::move(keep);
  }
  return {agreed.begin(), agreed.end()};
}

CleanResult clean_dataset(const std::vector<InstanceRecord>& instances,
                          const CleaningConfig& config, Gateway& gateway) {
  if (config.max_examples_per_prompt < 1) {
    throw ConfigError("clean: max_examples_per_prompt must be >= 1");
  }
  CleanResult result;
  result.clustering = cluster_va(instances, config.clustering, config.threads);

  // Cluster members in input order; noise (-1) stays out of critique.
  std::vector<std::vector<std::size_t>> members(
      static_cast<std::size_t>(result.clustering.cluster_count));
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const int label = result.clustering.labels[i];
    if (label >= 0) members[static_cast<std::size_t>(label)].push_back(i);
  }

  std::set<std::string> removed;
  for (int cluster = 0; cluster < result.clustering.cluster_count; ++cluster) {
    const auto& member_rows = members[static_cast<std::size_t>(cluster)];
    const int chunk_size = config.max_examples_per_prompt;
    const int chunk_count =
        static_cast<int>((member_rows.size() + static_cast<std::size_t>(chunk_size) - 1) /
                         static_cast<std::size_t>(chunk_size));
    for (int chunk = 0; chunk < chunk_count; ++chunk) {
      const std::size_t begin = static_cast<std::size_t>(chunk) * static_cast<std::size_t>(chunk_size);
      const std::size_t end = std::min(member_rows.size(),
                                       begin + static_cast<std::size_t>(chunk_size));
      ClusterAudit audit;
      audit.cluster = cluster;
      audit.chunk = chunk;
      audit.index_offset = static_cast<int>(begin);

      std::vector<CritiqueExample> examples;
      for (std::size_t i = begin; i < end; ++i) {
        const InstanceRecord& rec = instances[member_rows[i]];
        audit.member_ids.push_back(rec.id);
        examples.push_back({rec.text, rec.aspect, *rec.gold});
      }
      const std::string prompt =
          render_critique_prompt(examples, config.range, audit.index_offset);

      bool failed = false;
      for (const auto& critic : config.critics) {
        try {
          const std::string reply = gateway.chat(critic, {{"user", prompt}});
          audit.verdicts.push_back(parse_critique_response(
              reply, critic, static_cast<int>(examples.size()), audit.index_offset,
              &audit.warnings));
        } catch (const TransportError& e) {
          audit.skipped = true;
          audit.skip_reason = std::string("transport: ") + e.what();
          failed = true;
          break;
        } catch (const DataError& e) {
          audit.skipped = true;
          audit.skip_reason = std::string("parse: ") + e.what();
          failed = true;
          break;
        }
      }
      if (!failed) {
        for (int idx : unanimous_vote(audit.verdicts)) {
          const std::size_t pos = static_cast<std::size_t>(idx - audit.index_offset);
          audit.removed_ids.push_back(audit.member_ids[pos]);
        }
        for (const auto& id : audit.removed_ids) removed.insert(id);
      }
      result.audits.push_back(std::move(audit));
    }
  }

  for (const auto& rec : instances) {
    if (removed.count(rec.id) > 0) {
      result.removed_ids.push_back(rec.id);
    } else {
      result.kept.push_back(rec);
    }
  }
  return result;
}

void write_audit_log(const std::string& path, const CleanResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  json summary;
  summary["clusters"] = result.clustering.cluster_count;
  summary["instances"] = result.clustering.labels.size();
  summary["removed"] = result.removed_ids;
  out << summary.dump() << '\n';
  for (const auto& audit : result.audits) {
    json obj;
    obj["cluster"] = audit.cluster;
    obj["chunk"] = audit.chunk;
    json member_list = json::array();
    for (std::size_t i = 0; i < audit.member_ids.size(); ++i) {
      member_list.push_back({{"index", audit.index_offset + static_cast<int>(i)},
                             {"id", audit.member_ids[i]}});
    }
    obj["members"] = member_list;
    json verdicts = json::array();
    for (const auto& verdict : audit.verdicts) {
      verdicts.push_back({{"critic", verdict.critic_id},
                          {"spurious_indices", verdict.spurious_indices},
                          {"reasoning", verdict.reasoning}});
    }
    obj["verdicts"] = verdicts;
    obj["removed"] = audit.removed_ids;
    obj["warnings"] = audit.warnings;
    if (audit.skipped) obj["skipped"] = audit.skip_reason;
    out << obj.dump() << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace vafuse
