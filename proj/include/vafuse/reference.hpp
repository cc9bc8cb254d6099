#pragma once

#include <span>
#include <vector>

#include "vafuse/core.hpp"
#include "vafuse/hdbscan.hpp"
#include "vafuse/hybrid.hpp"
#include "vafuse/lexicon.hpp"

// Plain serial counterparts of the OpenMP kernels. They back the
// parallel-vs-serial equality tests and the benchmark baselines; keep them
// free of pragmas and tuning.
namespace vafuse::ref {

PredictionSet decode_batch(const std::vector<BaseOutput>& outputs, const HybridConfig& cfg,
                           const std::string& model_id);

std::vector<PolarityScores> score_batch(const SentimentScorer& scorer,
                                        const std::vector<std::string>& texts);

std::vector<double> core_distances(std::span<const Point2> points, int k);

std::vector<hdbscan_detail::MstEdge> mutual_reachability_mst(std::span<const Point2> points,
                                                             std::span<const double> core);

std::vector<double> similarity_row(std::span<const double> query,
                                   const std::vector<const std::vector<double>*>& pool);

}  // namespace vafuse::ref
