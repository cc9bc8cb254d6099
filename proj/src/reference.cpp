#include "vafuse/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vafuse/icl.hpp"

namespace vafuse::ref {

PredictionSet decode_batch(const std::vector<BaseOutput>& outputs, const HybridConfig& cfg,
                           const std::string& model_id) {
  const BinGrid grid = make_bins(cfg.range, cfg.num_bins);
  PredictionSet preds(model_id);
  for (const auto& out : outputs) preds.add(out.id, decode_instance(out, cfg, grid));
  return preds;
}

std::vector<PolarityScores> score_batch(const SentimentScorer& scorer,
                                        const std::vector<std::string>& texts) {
  std::vector<PolarityScores> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(scorer.score(text));
  return out;
}

namespace {

double euclidean(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

std::vector<double> core_distances(std::span<const Point2> points, int k) {
  const std::size_t n = points.size();
  std::vector<double> core(n, 0.0);
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) dist[j] = euclidean(points[i], points[j]);
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
    core[i] = dist[static_cast<std::size_t>(k - 1)];
  }
  return core;
}

std::vector<hdbscan_detail::MstEdge> mutual_reachability_mst(std::span<const Point2> points,
                                                             std::span<const double> core) {
  const int n = static_cast<int>(points.size());
  std::vector<hdbscan_detail::MstEdge> edges;
  if (n < 2) return edges;
  edges.reserve(static_cast<std::size_t>(n - 1));
  std::vector<char> in_tree(static_cast<std::size_t>(n), 0);
  std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<int> from(static_cast<std::size_t>(n), 0);
  in_tree[0] = 1;
  int last = 0;
  for (int step = 1; step < n; ++step) {
    for (int j = 0; j < n; ++j) {
      if (in_tree[static_cast<std::size_t>(j)]) continue;
      const double d = euclidean(points[static_cast<std::size_t>(last)],
                                 points[static_cast<std::size_t>(j)]);
      const double w = std::max({core[static_cast<std::size_t>(last)],
                                 core[static_cast<std::size_t>(j)], d});
      if (w < best[static_cast<std::size_t>(j)]) {
        best[static_cast<std::size_t>(j)] = w;
        from[static_cast<std::size_t>(j)] = last;
      }
    }
    int next = -1;
    for (int j = 0; j < n; ++j) {
      if (in_tree[static_cast<std::size_t>(j)]) continue;
      if (next == -1 || best[static_cast<std::size_t>(j)] < best[static_cast<std::size_t>(next)]) {
        next = j;
      }
    }
    in_tree[static_cast<std::size_t>(next)] = 1;
    edges.push_back({from[static_cast<std::size_t>(next)], next,
                     best[static_cast<std::size_t>(next)]});
    last = next;
  }
  return edges;
}

std::vector<double> similarity_row(std::span<const double> query,
                                   const std::vector<const std::vector<double>*>& pool) {
  std::vector<double> sims(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) sims[i] = cosine_similarity(query, *pool[i]);
  return sims;
}

}  // namespace vafuse::ref
