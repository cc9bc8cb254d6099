#include "vafuse/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vafuse/threading.hpp"

namespace vafuse {

namespace hdbscan_detail {

namespace {

double euclidean(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

std::vector<double> core_distances(std::span<const Point2> points, int k, int threads) {
  const int n = static_cast<int>(points.size());
  std::vector<double> core(static_cast<std::size_t>(n), 0.0);
  const int nthreads = resolve_threads(threads);
#pragma omp parallel num_threads(nthreads)
  {
    std::vector<double> dist(static_cast<std::size_t>(n));
#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) dist[static_cast<std::size_t>(j)] = euclidean(points[i], points[j]);
      std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
      core[static_cast<std::size_t>(i)] = dist[static_cast<std::size_t>(k - 1)];
    }
  }
  return core;
}

std::vector<MstEdge> mutual_reachability_mst(std::span<const Point2> points,
                                             std::span<const double> core, int threads) {
  const int n = static_cast<int>(points.size());
  std::vector<MstEdge> edges;
  if (n < 2) return edges;
  edges.reserve(static_cast<std::size_t>(n - 1));

  std::vector<char> in_tree(static_cast<std::size_t>(n), 0);
  std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<int> from(static_cast<std::size_t>(n), 0);
  in_tree[0] = 1;
  const int nthreads = resolve_threads(threads);

  int last = 0;
  for (int step = 1; step < n; ++step) {
#pragma omp parallel for schedule(static) num_threads(nthreads)
    for (int j = 0; j < n; ++j) {
      if (in_tree[static_cast<std::size_t>(j)]) continue;
      const double d = euclidean(points[last], points[j]);
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

}  // namespace hdbscan_detail

namespace {

using hdbscan_detail::MstEdge;

struct DendroNode {
  int left = -1;   // node id (point if < n, internal otherwise)
  int right = -1;
  double dist = 0.0;
  int size = 0;
};

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
};

struct CondensedCluster {
  int parent = -1;
  double birth_lambda = 0.0;
  double stability = 0.0;
  std::vector<int> child_clusters;
};

constexpr double kMinSplitDistance = 1e-300;

double to_lambda(double dist) { return 1.0 / std::max(dist, kMinSplitDistance); }

// Leaves of a dendrogram subtree, in deterministic traversal order.
void collect_points(int node, int n, const std::vector<DendroNode>& nodes,
                    std::vector<int>& out) {
  std::vector<int> stack{node};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    if (cur < n) {
      out.push_back(cur);
      continue;
    }
    const DendroNode& dn = nodes[static_cast<std::size_t>(cur - n)];
    stack.push_back(dn.right);
    stack.push_back(dn.left);
  }
}

}  // namespace

ClusteringResult hdbscan_cluster(std::span<const Point2> points, const HdbscanParams& params,
                                 int threads) {
  const int n = static_cast<int>(points.size());
  if (n == 0) throw DataError("hdbscan: no points");
  if (params.min_cluster_size < 2) throw ConfigError("hdbscan: min_cluster_size must be >= 2");
  const int min_samples =
      params.min_samples > 0 ? params.min_samples : params.min_cluster_size;

  ClusteringResult result;
  result.labels.assign(static_cast<std::size_t>(n), -1);
  if (n < params.min_cluster_size || n < min_samples) return result;  // below density threshold

  const std::vector<double> core = hdbscan_detail::core_distances(points, min_samples, threads);
  std::vector<MstEdge> edges = hdbscan_detail::mutual_reachability_mst(points, core, threads);
  std::sort(edges.begin(), edges.end(), [](const MstEdge& a, const MstEdge& b) {
    if (a.weight != b.weight) return a.weight < b.weight;
    const int a_lo = std::min(a.a, a.b), a_hi = std::max(a.a, a.b);
    const int b_lo = std::min(b.a, b.b), b_hi = std::max(b.a, b.b);
    if (a_lo != b_lo) return a_lo < b_lo;
    return a_hi < b_hi;
  });

  // Single-linkage dendrogram: internal node i+n merges at edges' ascending
  // weights; comp_node tracks the current node id of each component root.
  std::vector<DendroNode> nodes(static_cast<std::size_t>(n - 1));
  UnionFind uf(n);
  std::vector<int> comp_node(static_cast<std::size_t>(n));
  std::iota(comp_node.begin(), comp_node.end(), 0);
  auto node_size = [&](int id) {
    return id < n ? 1 : nodes[static_cast<std::size_t>(id - n)].size;
  };
  for (std::size_t step = 0; step < edges.size(); ++step) {
    const int ra = uf.find(edges[step].a);
    const int rb = uf.find(edges[step].b);
    DendroNode merged;
    merged.left = comp_node[static_cast<std::size_t>(ra)];
    merged.right = comp_node[static_cast<std::size_t>(rb)];
    merged.dist = edges[step].weight;
    merged.size = node_size(merged.left) + node_size(merged.right);
    nodes[step] = merged;
    uf.parent[static_cast<std::size_t>(ra)] = rb;
    comp_node[static_cast<std::size_t>(uf.find(rb))] = n + static_cast<int>(step);
  }

  // Condense: walk top-down; a split is real only when both sides reach
  // min_cluster_size, otherwise the small side's points fall out.
  std::vector<CondensedCluster> clusters(1);
  std::vector<std::pair<int, double>> point_exit(static_cast<std::size_t>(n), {-1, 0.0});
  std::vector<std::pair<int, int>> queue{{n + (n - 2), 0}};  // (dendro node, condensed id)
  std::vector<int> scratch;
  while (!queue.empty()) {
    const auto [dendro_id, cid] = queue.back();
    queue.pop_back();
    const DendroNode& dn = nodes[static_cast<std::size_t>(dendro_id - n)];
    const double lambda = to_lambda(dn.dist);
    const int size_left = node_size(dn.left);
    const int size_right = node_size(dn.right);
    auto drop_points = [&](int subtree) {
      scratch.clear();
      collect_points(subtree, n, nodes, scratch);
      for (int p : scratch) {
        point_exit[static_cast<std::size_t>(p)] = {cid, lambda};
        clusters[static_cast<std::size_t>(cid)].stability +=
            lambda - clusters[static_cast<std::size_t>(cid)].birth_lambda;
      }
    };
    auto spawn_child = [&](int subtree, int subtree_size) {
      const int child_id = static_cast<int>(clusters.size());
      CondensedCluster child;
      child.parent = cid;
      child.birth_lambda = lambda;
      clusters.push_back(child);
      clusters[static_cast<std::size_t>(cid)].child_clusters.push_back(child_id);
      clusters[static_cast<std::size_t>(cid)].stability +=
          (lambda - clusters[static_cast<std::size_t>(cid)].birth_lambda) * subtree_size;
      queue.emplace_back(subtree, child_id);
    };
    const bool left_big = size_left >= params.min_cluster_size;
    const bool right_big = size_right >= params.min_cluster_size;
    if (left_big && right_big) {
      spawn_child(dn.left, size_left);
      spawn_child(dn.right, size_right);
    } else if (left_big) {
      drop_points(dn.right);
      queue.emplace_back(dn.left, cid);
    } else if (right_big) {
      drop_points(dn.left);
      queue.emplace_back(dn.right, cid);
    } else {
      drop_points(dn.left);
      drop_points(dn.right);
    }
  }

  // Excess-of-mass selection; the root is never selectable so a single
  // cluster covering everything collapses to noise.
  const int num_clusters = static_cast<int>(clusters.size());
  std::vector<char> selected(static_cast<std::size_t>(num_clusters), 0);
  std::vector<double> subtree_stability(static_cast<std::size_t>(num_clusters), 0.0);
  for (int c = num_clusters - 1; c >= 1; --c) {
    const CondensedCluster& cluster = clusters[static_cast<std::size_t>(c)];
    double child_sum = 0.0;
    for (int child : cluster.child_clusters) {
      child_sum += subtree_stability[static_cast<std::size_t>(child)];
    }
    if (cluster.child_clusters.empty() || cluster.stability >= child_sum) {
      selected[static_cast<std::size_t>(c)] = 1;
      subtree_stability[static_cast<std::size_t>(c)] = std::max(cluster.stability, child_sum);
      // Deselect descendants.
      std::vector<int> stack(cluster.child_clusters);
      while (!stack.empty()) {
        const int d = stack.back();
        stack.pop_back();
        selected[static_cast<std::size_t>(d)] = 0;
        for (int g : clusters[static_cast<std::size_t>(d)].child_clusters) stack.push_back(g);
      }
    } else {
      subtree_stability[static_cast<std::size_t>(c)] = child_sum;
    }
  }

  std::vector<int> label_of(static_cast<std::size_t>(num_clusters), -1);
  int next_label = 0;
  for (int c = 1; c < num_clusters; ++c) {
    if (selected[static_cast<std::size_t>(c)]) label_of[static_cast<std::size_t>(c)] = next_label++;
  }
  for (int p = 0; p < n; ++p) {
    int c = point_exit[static_cast<std::size_t>(p)].first;
    while (c >= 0 && !selected[static_cast<std::size_t>(c)]) {
      c = clusters[static_cast<std::size_t>(c)].parent;
    }
    result.labels[static_cast<std::size_t>(p)] = c >= 0 ? label_of[static_cast<std::size_t>(c)] : -1;
  }
  result.cluster_count = next_label;
  return result;
}

}  // namespace vafuse
