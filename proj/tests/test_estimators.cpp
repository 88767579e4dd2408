#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "codsa/estimators.hpp"

using namespace codsa;

namespace {

/// Linearly separable two-class toy in 2-D.
void separable_toy(Dataset& train, Dataset& val, std::uint64_t seed) {
  Rng rng(seed);
  auto fill = [&](Dataset& data, std::size_t per_class) {
    data.features = Matrix(2 * per_class, 2);
    data.target_kind = TargetKind::binary;
    data.num_regions = 2;
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
      const int y = i < per_class ? 0 : 1;
      data.features(i, 0) = rng.normal() * 0.4 + (y == 0 ? -2.0 : 2.0);
      data.features(i, 1) = rng.normal() * 0.4;
      data.target.push_back(y);
      data.region.push_back(y + 1);
      data.provenance.push_back(Provenance::real);
    }
  };
  fill(train, 100);
  fill(val, 40);
}

Dataset regression_toy(std::size_t n, double noise, std::uint64_t seed) {
  Dataset data;
  data.features = Matrix(n, 3);
  data.target_kind = TargetKind::continuous;
  data.num_regions = 1;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    double x0 = rng.uniform(-1, 1), x1 = rng.uniform(-1, 1), x2 = rng.uniform(-1, 1);
    data.features(i, 0) = x0;
    data.features(i, 1) = x1;
    data.features(i, 2) = x2;
    data.target.push_back(std::sin(3 * x0) + x1 * x1 - 0.5 * x2 + noise * rng.normal());
    data.region.push_back(1);
    data.provenance.push_back(Provenance::real);
  }
  return data;
}

}  // namespace

TEST_CASE("classifier: separable toy reaches validation CE < 0.1 within 200 epochs") {
  Dataset train, val;
  separable_toy(train, val, 31);
  MlpTrainConfig cfg;
  cfg.hidden = {16, 16};
  cfg.epochs_max = 200;
  cfg.patience = 200;
  cfg.lr = 5e-3;
  auto model = train_classifier(train, val, cfg, 1);
  CHECK(model.best_val_ce < 0.1);
  auto probs = predict_proba(model, val.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < val.n(); ++i)
    correct += (probs[i] > 0.5) == (val.target[i] > 0.5);
  CHECK(static_cast<double>(correct) / static_cast<double>(val.n()) > 0.95);
}

TEST_CASE("classifier: patience 0 returns the first-epoch snapshot") {
  Dataset train, val;
  separable_toy(train, val, 32);
  MlpTrainConfig quick;
  quick.hidden = {8};
  quick.epochs_max = 50;
  quick.patience = 0;
  auto stopped = train_classifier(train, val, quick, 2);
  CHECK(stopped.best_epoch == 1);

  MlpTrainConfig one_epoch = quick;
  one_epoch.epochs_max = 1;
  one_epoch.patience = 1000;
  auto single = train_classifier(train, val, one_epoch, 2);
  for (std::size_t l = 0; l < single.params.weights.size(); ++l)
    CHECK(stopped.params.weights[l] == single.params.weights[l]);
}

TEST_CASE("classifier: early stopping keeps the best-on-validation snapshot") {
  Dataset train, val;
  separable_toy(train, val, 33);
  MlpTrainConfig cfg;
  cfg.hidden = {8};
  cfg.epochs_max = 60;
  cfg.patience = 15;
  auto model = train_classifier(train, val, cfg, 3);
  REQUIRE(model.best_epoch >= 1);
  // Re-running with epochs_max = best_epoch reproduces the same snapshot
  MlpTrainConfig replay = cfg;
  replay.epochs_max = model.best_epoch;
  replay.patience = 100000;
  auto again = train_classifier(train, val, replay, 3);
  for (std::size_t l = 0; l < model.params.weights.size(); ++l)
    CHECK(model.params.weights[l] == again.params.weights[l]);
  CHECK(again.best_val_ce == model.best_val_ce);
}

TEST_CASE("classifier: single-class data yields a degenerate constant predictor") {
  Dataset train, val;
  separable_toy(train, val, 34);
  for (auto& y : train.target) y = 1.0;
  auto model = train_classifier(train, val, {.hidden = {8}, .epochs_max = 10}, 4);
  CHECK(model.degenerate);
  auto probs = predict_proba(model, val.features);
  for (double p : probs) CHECK(p == Catch::Approx(probs[0]));
  CHECK(probs[0] > 0.99);  // rate ~ 1 clipped
}

TEST_CASE("predict_proba: constant-zero net gives 0.5 everywhere") {
  Dataset train, val;
  separable_toy(train, val, 35);
  ClassifierModel model;
  model.scaler = Standardizer::fit(train.features);
  model.params = MlpParams::init({{2, 4, 1}, OutputHead::sigmoid}, 5);
  for (auto& w : model.params.weights) w.fill(0.0);
  auto probs = predict_proba(model, train.features);
  for (double p : probs) CHECK(p == 0.5);
}

TEST_CASE("predict_proba: raising the final bias raises every probability") {
  Dataset train, val;
  separable_toy(train, val, 36);
  ClassifierModel model;
  model.scaler = Standardizer::fit(train.features);
  for (int trial = 0; trial < 5; ++trial) {
    model.params = MlpParams::init({{2, 6, 1}, OutputHead::sigmoid},
                                   static_cast<std::uint64_t>(100 + trial));
    auto before = predict_proba(model, train.features);
    model.params.biases.back()[0] += 0.7;
    auto after = predict_proba(model, train.features);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(after[i] > before[i]);
  }
}

TEST_CASE("predict_proba: row-wise map is order invariant") {
  Dataset train, val;
  separable_toy(train, val, 37);
  ClassifierModel model;
  model.scaler = Standardizer::fit(train.features);
  model.params = MlpParams::init({{2, 6, 1}, OutputHead::sigmoid}, 6);
  auto probs = predict_proba(model, train.features);
  // reversed row order
  Matrix reversed(train.n(), 2);
  for (std::size_t i = 0; i < train.n(); ++i)
    std::copy(train.features.row(train.n() - 1 - i),
              train.features.row(train.n() - 1 - i) + 2, reversed.row(i));
  auto rev_probs = predict_proba(model, reversed);
  for (std::size_t i = 0; i < probs.size(); ++i)
    CHECK(probs[i] == rev_probs[probs.size() - 1 - i]);
}

TEST_CASE("mean-loss weighting: duplicating every row leaves the loss unchanged") {
  Dataset train, val;
  separable_toy(train, val, 38);
  ClassifierModel model;
  model.scaler = Standardizer::fit(train.features);
  model.params = MlpParams::init({{2, 8, 1}, OutputHead::sigmoid}, 7);

  auto probs = predict_proba(model, train.features);
  Matrix p1(probs.size(), 1);
  for (std::size_t i = 0; i < probs.size(); ++i) p1(i, 0) = probs[i];
  std::vector<int> labels(train.n());
  for (std::size_t i = 0; i < train.n(); ++i) labels[i] = static_cast<int>(train.target[i]);
  const double once = loss_logistic(p1, labels).value;

  Matrix p2(2 * probs.size(), 1);
  std::vector<int> labels2(2 * train.n());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    p2(i, 0) = probs[i];
    p2(i + probs.size(), 0) = probs[i];
    labels2[i] = labels[i];
    labels2[i + probs.size()] = labels[i];
  }
  const double twice = loss_logistic(p2, labels2).value;
  CHECK(once == Catch::Approx(twice).margin(1e-15));
}

TEST_CASE("forest: constant target predicts the constant") {
  auto data = regression_toy(50, 0.0, 39);
  for (auto& y : data.target) y = 3.25;
  auto model = train_forest(data, {.n_trees = 10}, 8);
  auto preds = forest_predict(model, data.features);
  for (double p : preds) CHECK(p == Catch::Approx(3.25));
}

TEST_CASE("forest: single tree without bootstrap matches the brute-force split oracle") {
  Rng rng(40);
  for (int table = 0; table < 20; ++table) {
    Dataset data;
    data.features = Matrix(5, 3);
    data.target_kind = TargetKind::continuous;
    data.num_regions = 1;
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 3; ++j) data.features(i, j) = rng.normal();
      data.target.push_back(rng.normal());
      data.region.push_back(1);
      data.provenance.push_back(Provenance::real);
    }

    // brute force: direct SSE at every (feature, midpoint) via mean deviations
    int best_f = -1;
    double best_thr = 0.0, best_sse = 1e300;
    for (int f = 0; f < 3; ++f) {
      std::vector<double> vals;
      for (std::size_t i = 0; i < 5; ++i) vals.push_back(data.features(i, static_cast<std::size_t>(f)));
      std::sort(vals.begin(), vals.end());
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        if (vals[i] == vals[i + 1]) continue;
        const double thr = 0.5 * (vals[i] + vals[i + 1]);
        std::vector<double> left, right;
        for (std::size_t r = 0; r < 5; ++r)
          (data.features(r, static_cast<std::size_t>(f)) <= thr ? left : right)
              .push_back(data.target[r]);
        auto sse = [](const std::vector<double>& ys) {
          double mean = 0.0;
          for (double y : ys) mean += y;
          mean /= static_cast<double>(ys.size());
          double s = 0.0;
          for (double y : ys) s += (y - mean) * (y - mean);
          return s;
        };
        const double total = sse(left) + sse(right);
        if (total < best_sse - 1e-12) {
          best_sse = total;
          best_f = f;
          best_thr = thr;
        }
      }
    }

    auto model = train_forest(data, {.n_trees = 1, .bootstrap = false}, 9);
    const auto& root = model.trees[0].nodes[0];
    REQUIRE(root.feature >= 0);
    CHECK(root.feature == best_f);
    CHECK(root.threshold == Catch::Approx(best_thr).margin(1e-12));
  }
}

TEST_CASE("forest: deep forest interpolates noiseless data") {
  auto data = regression_toy(300, 0.0, 41);
  auto model = train_forest(data, {.n_trees = 50}, 10);
  auto preds = forest_predict(model, data.features);
  double ss = 0.0, mean = 0.0;
  for (double y : data.target) mean += y;
  mean /= static_cast<double>(data.n());
  double var = 0.0;
  for (double y : data.target) var += (y - mean) * (y - mean);
  const double sd = std::sqrt(var / static_cast<double>(data.n()));
  for (std::size_t i = 0; i < data.n(); ++i)
    ss += (preds[i] - data.target[i]) * (preds[i] - data.target[i]);
  const double rmse = std::sqrt(ss / static_cast<double>(data.n()));
  CHECK(rmse <= 0.1 * sd);
}

TEST_CASE("forest_predict: hand-built two-tree model averages the leaves") {
  ForestModel model;
  Tree t1, t2;
  TreeNode leaf1;
  leaf1.feature = -1;
  leaf1.leaf_value = 2.0;
  t1.nodes.push_back(leaf1);
  TreeNode leaf2 = leaf1;
  leaf2.leaf_value = 4.0;
  t2.nodes.push_back(leaf2);
  model.trees = {t1, t2};
  Matrix rows(3, 2);
  auto preds = forest_predict(model, rows);
  for (double p : preds) CHECK(p == Catch::Approx(3.0));

  // single-leaf trees -> constant output; permuting tree order changes nothing
  model.trees = {t2, t1};
  auto preds2 = forest_predict(model, rows);
  for (std::size_t i = 0; i < preds.size(); ++i) CHECK(preds[i] == preds2[i]);
}

TEST_CASE("forest predictions stay within the training target range") {
  auto data = regression_toy(200, 0.5, 42);
  auto model = train_forest(data, {.n_trees = 20}, 11);
  Rng rng(43);
  Matrix wild(100, 3);
  for (double& v : wild.storage()) v = rng.normal() * 10.0;  // far outside training
  auto preds = forest_predict(model, wild);
  for (double p : preds) {
    CHECK(p >= model.target_min - 1e-12);
    CHECK(p <= model.target_max + 1e-12);
  }
}

TEST_CASE("forest training is deterministic and order independent per seed") {
  auto data = regression_toy(120, 0.3, 44);
  auto a = train_forest(data, {.n_trees = 8}, 12);
  auto b = train_forest(data, {.n_trees = 8}, 12);
  Matrix probe = data.features;
  auto pa = forest_predict(a, probe);
  auto pb = forest_predict(b, probe);
  CHECK(pa == pb);
}

TEST_CASE("forest: empty data is an error") {
  Dataset data;
  data.target_kind = TargetKind::continuous;
  data.num_regions = 1;
  CHECK_THROWS_AS(train_forest(data, {}, 13), std::invalid_argument);
}

TEST_CASE("mlp regressor: fits a smooth function and early-stops sanely") {
  auto train = regression_toy(400, 0.05, 45);
  auto val = regression_toy(100, 0.05, 46);
  MlpTrainConfig cfg;
  cfg.hidden = {32, 32};
  cfg.epochs_max = 300;
  cfg.patience = 30;
  cfg.lr = 3e-3;
  auto model = train_mlp_regressor(train, val, cfg, 14);
  CHECK(model.best_val_rmse < 0.25);
  auto preds = predict_regression(model, val.features);
  double ss = 0.0;
  for (std::size_t i = 0; i < val.n(); ++i)
    ss += (preds[i] - val.target[i]) * (preds[i] - val.target[i]);
  CHECK(std::sqrt(ss / static_cast<double>(val.n())) < 0.3);
}
