#include <map>
#include <set>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "vafuse/hdbscan.hpp"
#include "vafuse/reference.hpp"

#include "../support/test_util.hpp"

using namespace vafuse;
using nlohmann::json;

namespace {

struct Fixture {
  std::vector<Point2> points;
  std::vector<int> expected;
  HdbscanParams params;
};

Fixture load_fixture(const std::string& name) {
  const json obj = json::parse(vafuse::test::read_file(vafuse::test::data_dir() + "/" + name));
  Fixture fx;
  fx.params.min_cluster_size = obj.at("min_cluster_size").get<int>();
  fx.params.min_samples = obj.at("min_samples").get<int>();
  for (const auto& p : obj.at("points")) fx.points.push_back({p[0].get<double>(), p[1].get<double>()});
  fx.expected = obj.at("labels").get<std::vector<int>>();
  return fx;
}

// Labels agree up to a bijective relabeling; noise must map to noise.
void check_permutation_equal(const std::vector<int>& mine, const std::vector<int>& expected) {
  REQUIRE(mine.size() == expected.size());
  std::map<int, int> forward;
  std::map<int, int> backward;
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (expected[i] == -1 || mine[i] == -1) {
      CHECK(expected[i] == mine[i]);
      continue;
    }
    auto f = forward.find(mine[i]);
    if (f == forward.end()) {
      forward[mine[i]] = expected[i];
    } else {
      CHECK(f->second == expected[i]);
    }
    auto b = backward.find(expected[i]);
    if (b == backward.end()) {
      backward[expected[i]] = mine[i];
    } else {
      CHECK(b->second == mine[i]);
    }
  }
}

}  // namespace

TEST_CASE("two tight blobs become exactly two clusters with no noise") {
  const Fixture fx = load_fixture("hdbscan_two_blobs.json");
  const ClusteringResult result = hdbscan_cluster(fx.points, fx.params);
  CHECK(result.cluster_count == 2);
  for (int label : result.labels) CHECK(label >= 0);
  check_permutation_equal(result.labels, fx.expected);
}

TEST_CASE("mixed-density fixture matches the reference labeling") {
  const Fixture fx = load_fixture("hdbscan_mixed.json");
  const ClusteringResult result = hdbscan_cluster(fx.points, fx.params);
  const std::set<int> expected_clusters(fx.expected.begin(), fx.expected.end());
  const int expected_count =
      static_cast<int>(expected_clusters.size()) - (expected_clusters.count(-1) ? 1 : 0);
  CHECK(result.cluster_count == expected_count);
  check_permutation_equal(result.labels, fx.expected);
}

TEST_CASE("labels are contiguous from zero") {
  const Fixture fx = load_fixture("hdbscan_mixed.json");
  const ClusteringResult result = hdbscan_cluster(fx.points, fx.params);
  std::set<int> seen;
  for (int label : result.labels) {
    if (label >= 0) seen.insert(label);
  }
  REQUIRE(static_cast<int>(seen.size()) == result.cluster_count);
  int expected = 0;
  for (int label : seen) CHECK(label == expected++);
}

TEST_CASE("too few points for the density threshold are all noise") {
  std::vector<Point2> three{{1, 1}, {5, 5}, {9, 9}};
  HdbscanParams params;
  params.min_cluster_size = 5;
  const ClusteringResult result = hdbscan_cluster(three, params);
  CHECK(result.cluster_count == 0);
  for (int label : result.labels) CHECK(label == -1);

  CHECK_THROWS_AS(hdbscan_cluster(std::vector<Point2>{}, params), DataError);
  HdbscanParams bad;
  bad.min_cluster_size = 1;
  CHECK_THROWS_AS(hdbscan_cluster(three, bad), ConfigError);
}

TEST_CASE("clustering is deterministic and thread-count independent") {
  const Fixture fx = load_fixture("hdbscan_mixed.json");
  const ClusteringResult a = hdbscan_cluster(fx.points, fx.params, 1);
  const ClusteringResult b = hdbscan_cluster(fx.points, fx.params, 4);
  const ClusteringResult c = hdbscan_cluster(fx.points, fx.params, 4);
  CHECK(a.labels == b.labels);
  CHECK(b.labels == c.labels);
}

TEST_CASE("exact duplicate points do not break the pipeline") {
  std::vector<Point2> points;
  for (int i = 0; i < 12; ++i) points.push_back({2.0 + 0.01 * i, 2.0});
  for (int i = 0; i < 12; ++i) points.push_back({2.0 + 0.01 * i, 2.0});  // duplicated blob
  for (int i = 0; i < 10; ++i) points.push_back({8.0, 8.0 + 0.02 * i});
  HdbscanParams params;
  params.min_cluster_size = 5;
  const ClusteringResult first = hdbscan_cluster(points, params);
  const ClusteringResult second = hdbscan_cluster(points, params);
  CHECK(first.labels == second.labels);
  CHECK(first.cluster_count >= 1);
}

TEST_CASE("parallel stage kernels match the serial reference") {
  const Fixture fx = load_fixture("hdbscan_mixed.json");
  const auto core_ref = ref::core_distances(fx.points, fx.params.min_samples);
  const auto core_omp = hdbscan_detail::core_distances(fx.points, fx.params.min_samples, 4);
  REQUIRE(core_ref.size() == core_omp.size());
  for (std::size_t i = 0; i < core_ref.size(); ++i) CHECK(core_ref[i] == core_omp[i]);

  const auto mst_ref = ref::mutual_reachability_mst(fx.points, core_ref);
  const auto mst_omp = hdbscan_detail::mutual_reachability_mst(fx.points, core_omp, 4);
  REQUIRE(mst_ref.size() == mst_omp.size());
  for (std::size_t i = 0; i < mst_ref.size(); ++i) {
    CHECK(mst_ref[i].a == mst_omp[i].a);
    CHECK(mst_ref[i].b == mst_omp[i].b);
    CHECK(mst_ref[i].weight == mst_omp[i].weight);
  }
}
