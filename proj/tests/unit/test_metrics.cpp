#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "vafuse/metrics.hpp"

#include "../support/test_util.hpp"

using namespace vafuse;

namespace {

// Prediction set whose per-dimension RMSEs are forced exactly: errors of
// magnitude r alternate sign so the mean error is 0 and the RMS is r.
std::pair<std::vector<VAPair>, std::vector<VAPair>> forced_rmse(double rmse_v, double rmse_a,
                                                                std::size_t n) {
  std::vector<VAPair> gold(n);
  std::vector<VAPair> preds(n);
  for (std::size_t i = 0; i < n; ++i) {
    gold[i] = {4.0 + 0.37 * static_cast<double>(i % 7), 3.5 + 0.29 * static_cast<double>(i % 5)};
    const double sv = (i % 2 == 0) ? 1.0 : -1.0;
    const double sa = (i % 4 < 2) ? 1.0 : -1.0;
    preds[i] = {gold[i].valence + sv * rmse_v, gold[i].arousal + sa * rmse_a};
  }
  return {preds, gold};
}

}  // namespace

TEST_CASE("perfect predictions produce zero error and unit correlation") {
  std::vector<VAPair> gold{{1, 2}, {5, 4}, {9, 6}, {3, 8}};
  const EvalReport report = evaluate(gold, gold);
  CHECK(report.mse == 0.0);
  CHECK(report.rmse == 0.0);
  CHECK(report.rmse_v == 0.0);
  CHECK(report.rmse_a == 0.0);
  REQUIRE(report.rho_v.has_value());
  REQUIRE(report.rho_a.has_value());
  CHECK(*report.rho_v == doctest::Approx(1.0));
  CHECK(*report.rho_a == doctest::Approx(1.0));
  CHECK(*report.rho_mean == doctest::Approx(1.0));
}

TEST_CASE("pooled MSE matches the published table arithmetic") {
  // Regression-only row: RMSE_v 0.7201, RMSE_a 0.8423 -> MSE 0.6140, RMSE 0.7836.
  {
    const auto [preds, gold] = forced_rmse(0.7201, 0.8423, 40);
    const EvalReport report = evaluate(preds, gold);
    CHECK(report.rmse_v == doctest::Approx(0.7201).epsilon(1e-9));
    CHECK(report.rmse_a == doctest::Approx(0.8423).epsilon(1e-9));
    CHECK(std::fabs(report.mse - 0.6140) < 5e-4);
    CHECK(std::fabs(report.rmse - 0.7836) < 5e-4);
  }
  // Average row: RMSE_v 0.6692, RMSE_a 0.7320 -> RMSE 0.7013.
  {
    const auto [preds, gold] = forced_rmse(0.6692, 0.7320, 40);
    const EvalReport report = evaluate(preds, gold);
    CHECK(std::fabs(report.rmse - 0.7013) < 1e-3);
  }
}

TEST_CASE("report identities hold on arbitrary data") {
  vafuse::test::GaussianSource rng(7);
  std::vector<VAPair> gold(64);
  std::vector<VAPair> preds(64);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    gold[i] = {5.0 + rng.next(), 5.0 + rng.next()};
    preds[i] = {gold[i].valence + 0.5 * rng.next(), gold[i].arousal + 0.8 * rng.next()};
  }
  const EvalReport report = evaluate(preds, gold);
  CHECK(report.rmse == doctest::Approx(std::sqrt(report.mse)).epsilon(1e-15));
  CHECK(report.mse ==
        doctest::Approx((report.rmse_v * report.rmse_v + report.rmse_a * report.rmse_a) / 2.0)
            .epsilon(1e-12));

  // Permutation invariance.
  std::vector<std::size_t> order(gold.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = (i * 17 + 5) % order.size();
  std::vector<VAPair> gold_p(gold.size());
  std::vector<VAPair> preds_p(gold.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    gold_p[i] = gold[order[i]];
    preds_p[i] = preds[order[i]];
  }
  const EvalReport shuffled = evaluate(preds_p, gold_p);
  CHECK(shuffled.mse == doctest::Approx(report.mse).epsilon(1e-12));
  CHECK(*shuffled.rho_v == doctest::Approx(*report.rho_v).epsilon(1e-12));
}

TEST_CASE("pearson closed forms and error paths") {
  const std::vector<double> x{1, 2, 3};
  const std::vector<double> y_affine{3, 5, 7};
  CHECK(pearson(x, y_affine) == doctest::Approx(1.0));

  const std::vector<double> y_neg{-1, -2, -3};
  CHECK(pearson(x, y_neg) == doctest::Approx(-1.0));

  const std::vector<double> y_mixed{1, 3, 2};
  CHECK(pearson(x, y_mixed) == doctest::Approx(0.5));

  const std::vector<double> constant{4, 4, 4};
  CHECK_THROWS_AS(pearson(x, constant), DataError);
  const std::vector<double> shorter{1, 2};
  CHECK_THROWS_AS(pearson(x, shorter), DataError);
  const std::vector<double> one{1};
  CHECK_THROWS_AS(pearson(one, one), DataError);
}

TEST_CASE("pearson is affine-equivariant in sign") {
  vafuse::test::GaussianSource rng(11);
  std::vector<double> x(32), y(32);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.next();
    y[i] = 0.3 * x[i] + rng.next();
  }
  const double base = pearson(x, y);
  for (double a : {2.5, -1.75, 0.01, -0.001}) {
    std::vector<double> ax(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) ax[i] = a * x[i] + 4.2;
    const double signed_rho = pearson(ax, y);
    CHECK(signed_rho == doctest::Approx((a > 0 ? 1.0 : -1.0) * base).epsilon(1e-9));
  }
}

TEST_CASE("zero gold variance leaves correlations absent, never zero") {
  std::vector<VAPair> gold{{5, 1}, {5, 2}, {5, 3}};
  std::vector<VAPair> preds{{4, 1.1}, {5, 2.2}, {6, 2.9}};
  const EvalReport report = evaluate(preds, gold);
  CHECK_FALSE(report.rho_v.has_value());  // gold valence constant
  CHECK(report.rho_a.has_value());
  CHECK_FALSE(report.rho_mean.has_value());
}

TEST_CASE("evaluate rejects degenerate inputs") {
  std::vector<VAPair> one{{1, 1}};
  CHECK_THROWS_AS(evaluate(one, one), DataError);
  std::vector<VAPair> two{{1, 1}, {2, 2}};
  std::vector<VAPair> three{{1, 1}, {2, 2}, {3, 3}};
  CHECK_THROWS_AS(evaluate(two, three), DataError);
}

TEST_CASE("report serialization carries absent correlations as null") {
  std::vector<VAPair> gold{{5, 1}, {5, 2}};
  std::vector<VAPair> preds{{4, 1.1}, {6, 2.2}};
  const EvalReport report = evaluate(preds, gold);
  const std::string text = report_to_json(report);
  CHECK(text.find("\"rho_v\": null") != std::string::npos);

  vafuse::test::TempDir dir("metrics");
  write_report_csv(dir.file("row.csv"), report);
  const std::string csv = vafuse::test::read_file(dir.file("row.csv"));
  CHECK(csv.find("MSE,RMSE,RMSE_v,RMSE_a,rho_v,rho_a,rho_mean\n") == 0);
  CHECK(csv.find("NA") != std::string::npos);
}
