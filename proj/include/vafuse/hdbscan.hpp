#pragma once

#include <span>
#include <vector>

#include "vafuse/errors.hpp"

namespace vafuse {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct HdbscanParams {
  int min_cluster_size = 5;
  int min_samples = 0;  // 0 means "same as min_cluster_size"
};

// Per-point cluster label (-1 = noise), labels contiguous from 0.
struct ClusteringResult {
  std::vector<int> labels;
  int cluster_count = 0;
};

// Density-based hierarchical clustering: core distances -> mutual
// reachability -> minimum spanning tree -> condensed cluster tree ->
// excess-of-mass selection. Deterministic given input order and parameters;
// fewer points than the density threshold yields all noise.
ClusteringResult hdbscan_cluster(std::span<const Point2> points, const HdbscanParams& params,
                                 int threads = 0);

namespace hdbscan_detail {

struct MstEdge {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

// Distance to the k-th nearest neighbor, counting the point itself.
// OpenMP kernel; independent per point.
std::vector<double> core_distances(std::span<const Point2> points, int k, int threads);

// Prim's algorithm over the complete mutual-reachability graph. The
// relaxation loop is the OpenMP kernel; the argmin scan is serial, with ties
// broken toward the smaller index so results are thread-count independent.
std::vector<MstEdge> mutual_reachability_mst(std::span<const Point2> points,
                                             std::span<const double> core, int threads);

}  // namespace hdbscan_detail

}  // namespace vafuse
