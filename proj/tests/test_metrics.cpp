#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "codsa/metrics.hpp"

using namespace codsa;

TEST_CASE("cross entropy: perfect predictions give zero everywhere") {
  std::vector<double> probs = {1.0, 0.0, 1.0, 0.0};
  std::vector<double> labels = {1.0, 0.0, 1.0, 0.0};
  std::vector<int> regions = {1, 1, 2, 2};
  auto m = cross_entropy_by_region(probs, labels, regions, 2);
  CHECK(m.region(1) == Catch::Approx(0.0).margin(1e-6));
  CHECK(m.region(2) == Catch::Approx(0.0).margin(1e-6));
  CHECK(*m.overall == Catch::Approx(0.0).margin(1e-6));
}

TEST_CASE("cross entropy: all probabilities 0.5 give ln 2") {
  std::vector<double> probs(10, 0.5);
  std::vector<double> labels = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  std::vector<int> regions = {1, 1, 1, 1, 1, 2, 2, 2, 2, 2};
  auto m = cross_entropy_by_region(probs, labels, regions, 2);
  CHECK(m.region(1) == Catch::Approx(std::log(2.0)));
  CHECK(m.region(2) == Catch::Approx(std::log(2.0)));
  CHECK(*m.overall == Catch::Approx(std::log(2.0)));
}

TEST_CASE("cross entropy: overall is the unweighted mean of region means") {
  // region 1: one row with p=0.5 (ln 2); region 2: three rows with p=0.9, y=1.
  std::vector<double> probs = {0.5, 0.9, 0.9, 0.9};
  std::vector<double> labels = {1, 1, 1, 1};
  std::vector<int> regions = {1, 2, 2, 2};
  auto m = cross_entropy_by_region(probs, labels, regions, 2);
  const double r1 = std::log(2.0);
  const double r2 = -std::log(0.9);
  CHECK(*m.overall == Catch::Approx(0.5 * (r1 + r2)));
}

TEST_CASE("cross entropy: absent region carries a missing marker") {
  std::vector<double> probs = {0.5};
  std::vector<double> labels = {1};
  std::vector<int> regions = {1};
  auto m = cross_entropy_by_region(probs, labels, regions, 2);
  CHECK(m.per_region[0].has_value());
  CHECK_FALSE(m.per_region[1].has_value());
  CHECK(*m.overall == Catch::Approx(std::log(2.0)));
}

TEST_CASE("rmse: zero residuals give zero") {
  std::vector<double> preds = {1.0, 2.0, 3.0};
  std::vector<int> regions = {1, 2, 1};
  auto m = rmse_by_region(preds, preds, regions, 2);
  CHECK(m.region(1) == 0.0);
  CHECK(m.region(2) == 0.0);
  CHECK(*m.overall == 0.0);
}

TEST_CASE("rmse: residuals (3,4) give sqrt(12.5)") {
  std::vector<double> preds = {3.0, 4.0};
  std::vector<double> targets = {0.0, 0.0};
  std::vector<int> regions = {1, 1};
  auto m = rmse_by_region(preds, targets, regions, 1);
  CHECK(m.region(1) == Catch::Approx(std::sqrt(12.5)));
  CHECK(*m.overall == Catch::Approx(3.53553).margin(1e-5));
}

TEST_CASE("rmse: overall pools the balanced set") {
  std::vector<double> preds = {1.0, 0.0, 0.0, 0.0};
  std::vector<double> targets = {0.0, 0.0, 2.0, 0.0};
  std::vector<int> regions = {1, 1, 2, 2};
  auto m = rmse_by_region(preds, targets, regions, 2);
  CHECK(m.region(1) == Catch::Approx(std::sqrt(0.5)));
  CHECK(m.region(2) == Catch::Approx(std::sqrt(2.0)));
  // pooled: sqrt((1+4)/4); equals sqrt(mean of per-region MSEs) under balance
  CHECK(*m.overall == Catch::Approx(std::sqrt(5.0 / 4.0)));
  const double via_regions = std::sqrt(0.5 * (0.5 + 2.0));
  CHECK(*m.overall == Catch::Approx(via_regions));
}

TEST_CASE("cohen kappa: perfect agreement gives 1") {
  std::vector<int> a = {0, 1, 2, 1, 0};
  auto k = cohen_kappa(a, a);
  REQUIRE(k.has_value());
  CHECK(*k == Catch::Approx(1.0));
}

TEST_CASE("cohen kappa: chance-level agreement gives 0") {
  // Marginals half/half, observed agreement = 0.5 = p_e.
  std::vector<int> pred = {0, 0, 1, 1};
  std::vector<int> truth = {0, 1, 0, 1};
  auto k = cohen_kappa(pred, truth);
  REQUIRE(k.has_value());
  CHECK(*k == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("cohen kappa: confusion [[40,10],[20,30]] gives 0.4") {
  std::vector<int> pred, truth;
  auto add = [&](int t, int p, int count) {
    for (int i = 0; i < count; ++i) {
      truth.push_back(t);
      pred.push_back(p);
    }
  };
  add(0, 0, 40);
  add(0, 1, 10);
  add(1, 0, 20);
  add(1, 1, 30);
  auto k = cohen_kappa(pred, truth);
  REQUIRE(k.has_value());
  // p_o = 0.7; marginals: pred (0.6,0.4), true (0.5,0.5) -> p_e = 0.5
  CHECK(*k == Catch::Approx(0.4));
}

TEST_CASE("cohen kappa: degenerate marginals have no value") {
  std::vector<int> pred = {0, 0, 0};
  std::vector<int> truth = {0, 0, 0};
  CHECK_FALSE(cohen_kappa(pred, truth).has_value());
}

TEST_CASE("kappa stays within [-1, 1] on random confusions") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> pred(50), truth(50);
    for (int i = 0; i < 50; ++i) {
      pred[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_index(3));
      truth[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_index(3));
    }
    auto k = cohen_kappa(pred, truth);
    if (!k) continue;
    CHECK(*k >= -1.0);
    CHECK(*k <= 1.0);
  }
}

TEST_CASE("aggregate_replicates") {
  SECTION("single value has zero standard error") {
    auto r = aggregate_replicates({2.5});
    CHECK(r.mean == 2.5);
    CHECK(r.se == 0.0);
  }
  SECTION("values (1,3) give mean 2 and SE 1") {
    auto r = aggregate_replicates({1.0, 3.0});
    CHECK(r.mean == Catch::Approx(2.0));
    CHECK(r.se == Catch::Approx(1.0));
  }
  SECTION("permutation invariance") {
    auto a = aggregate_replicates({0.3, 1.7, -2.4, 0.9});
    auto b = aggregate_replicates({1.7, 0.9, 0.3, -2.4});
    CHECK(a.mean == Catch::Approx(b.mean));
    CHECK(a.se == Catch::Approx(b.se));
  }
  SECTION("empty input is an error") {
    CHECK_THROWS_AS(aggregate_replicates({}), std::invalid_argument);
  }
}
