#include <cmath>

#include <doctest.h>

#include "vafuse/hybrid.hpp"

#include "../support/test_util.hpp"

using namespace vafuse;

TEST_CASE("make_bins lays a uniform grid with midpoint centers") {
  const ValueRange range(1.0, 9.0);
  const BinGrid grid = make_bins(range, 31);
  CHECK(grid.count() == 31);
  const double width = 8.0 / 31.0;
  CHECK(grid.edges.front() == 1.0);
  CHECK(grid.edges.back() == 9.0);
  CHECK(grid.centers.front() == doctest::Approx(1.0 + width / 2.0).epsilon(1e-12));
  CHECK(grid.centers.front() == doctest::Approx(1.129032).epsilon(1e-6));
  for (int i = 0; i + 1 < grid.count(); ++i) {
    CHECK(grid.centers[i + 1] - grid.centers[i] == doctest::Approx(width).epsilon(1e-9));
  }

  const BinGrid two = make_bins(range, 2);
  CHECK(two.centers[0] == doctest::Approx(3.0));
  CHECK(two.centers[1] == doctest::Approx(7.0));

  CHECK_THROWS_AS(make_bins(range, 1), ConfigError);
  CHECK_THROWS_AS(make_bins(range, 0), ConfigError);
}

TEST_CASE("softmax is stable and matches closed forms") {
  const std::vector<double> flat{0, 0, 0};
  for (double p : softmax(flat)) CHECK(p == doctest::Approx(1.0 / 3.0));

  const std::vector<double> huge{1000, 0};
  const auto ph = softmax(huge);
  CHECK(ph[0] == doctest::Approx(1.0));
  CHECK(ph[1] == doctest::Approx(0.0));
  CHECK(std::isfinite(ph[0]));

  const std::vector<double> pair{1, 2};
  const auto pp = softmax(pair);
  const double e = std::exp(1.0);
  CHECK(pp[0] == doctest::Approx(1.0 / (1.0 + e)).epsilon(1e-12));
  CHECK(pp[1] == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));

  const std::vector<double> bad{1.0, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(softmax(bad), DataError);
  CHECK_THROWS_AS(softmax(std::vector<double>{}), DataError);
}

TEST_CASE("expected_value decodes distributions over centers") {
  const BinGrid grid = make_bins(ValueRange(1, 9), 2);
  const std::vector<double> p{0.25, 0.75};
  CHECK(expected_value(p, grid) == doctest::Approx(6.0));  // 0.25*3 + 0.75*7

  const BinGrid grid9 = make_bins(ValueRange(1, 9), 9);
  std::vector<double> onehot(9, 0.0);
  onehot[4] = 1.0;
  CHECK(expected_value(onehot, grid9) == grid9.centers[4]);

  std::vector<double> uniform(9, 1.0 / 9.0);
  CHECK(expected_value(uniform, grid9) == doctest::Approx(5.0).epsilon(1e-12));

  CHECK_THROWS_AS(expected_value(p, grid9), DataError);
}

TEST_CASE("expected_value is linear in p and affine in centers") {
  vafuse::test::GaussianSource rng(3);
  const BinGrid grid = make_bins(ValueRange(1, 9), 13);
  std::vector<double> p(13), q(13);
  double sp = 0, sq = 0;
  for (int i = 0; i < 13; ++i) {
    p[i] = std::fabs(rng.next());
    q[i] = std::fabs(rng.next());
    sp += p[i];
    sq += q[i];
  }
  for (int i = 0; i < 13; ++i) {
    p[i] /= sp;
    q[i] /= sq;
  }
  std::vector<double> mix(13);
  for (int i = 0; i < 13; ++i) mix[i] = 0.3 * p[i] + 0.7 * q[i];
  CHECK(expected_value(mix, grid) ==
        doctest::Approx(0.3 * expected_value(p, grid) + 0.7 * expected_value(q, grid))
            .epsilon(1e-12));

  // Affine map of the range maps centers affinely: decode scales accordingly.
  const double a = 2.0, b = -3.0;
  const BinGrid scaled = make_bins(ValueRange(a * 1 + b, a * 9 + b), 13);
  CHECK(expected_value(p, scaled) ==
        doctest::Approx(a * expected_value(p, grid) + b).epsilon(1e-9));
}

TEST_CASE("assign_bin covers the range with the stated tie-breaks") {
  for (int b : {2, 7, 31}) {
    const BinGrid grid = make_bins(ValueRange(1, 9), b);
    CHECK(assign_bin(1.0, grid) == 0);
    CHECK(assign_bin(9.0, grid) == b - 1);  // top edge closed
    // Interior edges belong to the higher bin.
    for (int k = 1; k < b; ++k) CHECK(assign_bin(grid.edges[k], grid) == k);
    // Centers land in their own bin.
    for (int i = 0; i < b; ++i) CHECK(assign_bin(grid.centers[i], grid) == i);
  }
  const BinGrid grid = make_bins(ValueRange(1, 9), 4);
  CHECK(assign_bin(0.0, grid, true) == 0);      // clamped
  CHECK(assign_bin(100.0, grid, true) == 3);
  CHECK_THROWS_AS(assign_bin(0.0, grid, false), DataError);
}

TEST_CASE("hybrid_combine blends and clamps") {
  const ValueRange range(1, 9);
  const BinGrid grid = make_bins(range, 2);
  const std::vector<double> to6{0.25, 0.75};  // decodes to 6

  CHECK(hybrid_combine(4.0, to6, grid, 0.5, range) == doctest::Approx(5.0));
  CHECK(hybrid_combine(4.0, to6, grid, 1.0, range) == doctest::Approx(4.0));

  const std::vector<double> to7{0.0, 1.0};
  CHECK(hybrid_combine(2.0, to7, grid, 0.3, range) == doctest::Approx(0.3 * 2 + 0.7 * 7));

  CHECK(hybrid_combine(100.0, to6, grid, 1.0, range) == 9.0);  // clamped
  CHECK_THROWS_AS(hybrid_combine(4.0, to6, grid, 1.5, range), ConfigError);
  CHECK_THROWS_AS(hybrid_combine(4.0, to6, grid, -0.1, range), ConfigError);
}

TEST_CASE("hybrid_loss composes squared error and cross-entropy") {
  HybridConfig cfg;
  cfg.num_bins = 4;
  cfg.range = ValueRange(1, 9);
  const BinGrid grid = make_bins(cfg.range, 4);

  // Perfect regression and a one-hot on the true bin: zero for any alpha.
  std::vector<double> onehot(4, 0.0);
  onehot[assign_bin(4.0, grid)] = 1.0;
  for (double alpha : {0.2, 0.5, 1.0}) {
    cfg.alpha = alpha;
    const HybridLoss loss = hybrid_loss(4.0, onehot, 4.0, cfg, grid);
    CHECK(loss.value == doctest::Approx(0.0));
    CHECK_FALSE(loss.saturated);
  }

  cfg.alpha = 0.0;
  CHECK(hybrid_loss(5.0, onehot, 4.0, cfg, grid).value == doctest::Approx(1.0));

  cfg.alpha = 1.0;
  std::vector<double> half(4, 0.0);
  half[assign_bin(4.0, grid)] = 0.5;
  half[0] = 0.5;
  CHECK(hybrid_loss(5.0, half, 4.0, cfg, grid).value ==
        doctest::Approx(1.0 + std::log(2.0)).epsilon(1e-12));

  std::vector<double> zero_at_true(4, 0.0);
  zero_at_true[0] = 1.0;
  const HybridLoss saturated = hybrid_loss(5.0, zero_at_true, 8.9, cfg, grid);
  CHECK(saturated.saturated);
  CHECK(saturated.value >= kLogLossSaturation);

  CHECK_THROWS_AS(hybrid_loss(5.0, half, 99.0, cfg, grid), DataError);
}

TEST_CASE("hybrid loss is zero only at the exact optimum") {
  HybridConfig cfg;
  cfg.num_bins = 4;
  cfg.alpha = 0.7;
  cfg.range = ValueRange(1, 9);
  const BinGrid grid = make_bins(cfg.range, 4);
  std::vector<double> onehot(4, 0.0);
  onehot[assign_bin(4.0, grid)] = 1.0;
  CHECK(hybrid_loss(4.0, onehot, 4.0, cfg, grid).value == 0.0);
  CHECK(hybrid_loss(4.001, onehot, 4.0, cfg, grid).value > 0.0);
  std::vector<double> nearly(4, 1e-8);
  nearly[assign_bin(4.0, grid)] = 1.0 - 3e-8;
  CHECK(hybrid_loss(4.0, nearly, 4.0, cfg, grid).value > 0.0);
}

TEST_CASE("Jensen bound: hybrid MSE never exceeds the blended MSEs") {
  vafuse::test::GaussianSource rng(41);
  const ValueRange range(1, 9);
  const BinGrid grid = make_bins(range, 11);
  const std::size_t n = 1200;

  std::vector<double> gold(n), reg(n), cls(n);
  std::vector<std::vector<double>> probs(n);
  for (std::size_t i = 0; i < n; ++i) {
    gold[i] = range.clamp(5.0 + 1.5 * rng.next());
    reg[i] = range.clamp(gold[i] + 0.8 * rng.next());
    std::vector<double> logits(11);
    for (auto& v : logits) v = rng.next();
    logits[static_cast<std::size_t>(assign_bin(gold[i], grid))] += 2.0;
    probs[i] = softmax(logits);
    cls[i] = expected_value(probs[i], grid);
  }

  auto mse_of = [&](auto&& fn) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double err = fn(i) - gold[i];
      acc += err * err;
    }
    return acc / static_cast<double>(n);
  };
  const double mse_reg = mse_of([&](std::size_t i) { return reg[i]; });
  const double mse_cls = mse_of([&](std::size_t i) { return cls[i]; });
  for (int step = 0; step <= 10; ++step) {
    const double w = step / 10.0;
    const double mse_hybrid = mse_of(
        [&](std::size_t i) { return hybrid_combine(reg[i], probs[i], grid, w, range); });
    CHECK(mse_hybrid <= w * mse_reg + (1.0 - w) * mse_cls + 1e-12);
  }
}

TEST_CASE("base output files round-trip and validate") {
  vafuse::test::TempDir dir("base");
  std::vector<BaseOutput> outputs(2);
  outputs[0].id = "a";
  outputs[0].valence = {4.2, {0.1, 0.9, 0.3}};
  outputs[0].arousal = {6.0, {1.0, -1.0, 0.0}};
  outputs[1].id = "b";
  outputs[1].valence = {std::nullopt, {0.0, 0.0, 5.0}};
  outputs[1].arousal = {3.3, {}};

  const std::string path = dir.file("base.jsonl");
  save_base_outputs(path, outputs);
  const auto loaded = load_base_outputs(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].valence.reg == doctest::Approx(4.2));
  CHECK(loaded[0].valence.logits.size() == 3);
  CHECK_FALSE(loaded[1].valence.reg.has_value());
  CHECK(loaded[1].arousal.logits.empty());

  vafuse::test::write_file(dir.file("bad.jsonl"), R"({"ID":"a","Valence":{}})" "\n");
  CHECK_THROWS_AS(load_base_outputs(dir.file("bad.jsonl")), DataError);
}

TEST_CASE("decode_instance demands the parts the weight requires") {
  HybridConfig cfg;
  cfg.num_bins = 3;
  cfg.range = ValueRange(1, 9);
  const BinGrid grid = make_bins(cfg.range, 3);

  BaseOutput reg_only;
  reg_only.id = "r";
  reg_only.valence = {4.0, {}};
  reg_only.arousal = {6.0, {}};
  cfg.pred_weight = 1.0;
  const VAPair direct = decode_instance(reg_only, cfg, grid);
  CHECK(direct.valence == doctest::Approx(4.0));
  cfg.pred_weight = 0.5;
  CHECK_THROWS_AS(decode_instance(reg_only, cfg, grid), DataError);

  BaseOutput logits_only;
  logits_only.id = "l";
  logits_only.valence = {std::nullopt, {0.0, 5.0, 0.0}};
  logits_only.arousal = {std::nullopt, {5.0, 0.0, 0.0}};
  cfg.pred_weight = 0.0;
  const VAPair decoded = decode_instance(logits_only, cfg, grid);
  CHECK(decoded.valence > 4.0);
  cfg.pred_weight = 0.3;
  CHECK_THROWS_AS(decode_instance(logits_only, cfg, grid), DataError);

  BaseOutput wrong_width;
  wrong_width.id = "w";
  wrong_width.valence = {4.0, {0.0, 1.0}};
  wrong_width.arousal = {4.0, {0.0, 1.0, 0.0}};
  cfg.pred_weight = 0.5;
  CHECK_THROWS_AS(decode_instance(wrong_width, cfg, grid), DataError);
}
