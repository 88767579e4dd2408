#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "codsa/tuner.hpp"

using namespace codsa;

namespace {

GeneratorConfig tiny_gen_cfg() {
  GeneratorConfig cfg;
  cfg.autoencoder.hidden = {16};
  cfg.autoencoder.latent_dim = 3;
  cfg.autoencoder.epochs = 40;
  cfg.autoencoder.lr = 3e-3;
  cfg.score.hidden = {32, 32};
  cfg.score.time_embed_dim = 8;
  cfg.score.epochs = 40;
  cfg.score.lr = 2e-3;
  cfg.diffusion_steps = 40;
  cfg.beta_max = 0.12;
  return cfg;
}

EstimatorConfig forest_cfg(int trees = 10) {
  EstimatorConfig cfg;
  cfg.kind = EstimatorConfig::Kind::forest;
  cfg.forest.n_trees = trees;
  return cfg;
}

ReplicateData make_replicate(std::uint64_t seed) {
  RegressSimConfig dcfg;
  dcfg.n1 = 120;
  dcfg.n2 = 280;
  dcfg.sigma = 0.2;
  dcfg.seed = seed;
  ReplicateData rep;
  rep.carve = carve_balanced_eval(gen_regression(dcfg), 20, 30, derive_seed(seed, "carve"));
  rep.seed = seed;
  return rep;
}

TuneEntry spiked_entry(std::size_t seed_index, double val, double test, long m = 100,
                       double r = 0.5, double alpha1 = 0.5) {
  TuneEntry e;
  e.seed_index = seed_index;
  e.point.r = r;
  e.point.alpha1 = alpha1;
  e.point.m_over_n = 0.5;
  e.m = m;
  e.val_metric = val;
  e.test_metric = test;
  e.test_per_region = {test, test};
  return e;
}

}  // namespace

TEST_CASE("default grid: 1800 combinations plus the baseline point") {
  auto grid = default_grid(Task::classification);
  CHECK(grid.r_values.size() == 10);
  CHECK(grid.alpha1_values.size() == 9);
  CHECK(grid.m_over_n_values.size() == 20);
  CHECK(grid.r_values.back() == Catch::Approx(1.0));  // r ends at 1.0 inclusive
  for (double a : grid.alpha1_values) {
    CHECK(a > 0.0);
    CHECK(a < 1.0);
  }
  auto points = enumerate_points(grid, Method::codsa);
  CHECK(points.size() == 1801);
  CHECK(points.front().is_baseline);

  auto baseline_only = enumerate_points(grid, Method::baseline);
  CHECK(baseline_only.size() == 1);
}

TEST_CASE("coarse grid halves each axis") {
  auto grid = coarse_grid(Task::regression);
  CHECK(grid.r_values.size() == 5);
  CHECK(grid.alpha1_values.size() == 5);
  CHECK(grid.m_over_n_values.size() == 10);
  CHECK(grid.r_values.back() == Catch::Approx(1.0));
}

TEST_CASE("grid validation rejects out-of-range values") {
  GridSpec g;
  g.r_values = {0.5};
  g.alpha1_values = {0.5};
  g.m_over_n_values = {0.5};
  CHECK_NOTHROW(g.validate());
  g.r_values = {1.5};
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g.r_values = {};
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("selection: single-point grid returns that point") {
  TuneResult result;
  result.entries = {spiked_entry(0, 0.7, 0.8)};
  finalize_selection(result, 1, 1, 0.5);
  CHECK(result.best_per_seed == std::vector<std::size_t>{0});
  CHECK(result.test_summary.mean == Catch::Approx(0.8));
  CHECK(result.test_summary.se == 0.0);
}

TEST_CASE("selection: a spiked lowest validation metric is always picked") {
  TuneResult result;
  for (std::size_t s = 0; s < 3; ++s) {
    result.entries.push_back(spiked_entry(s, 0.9, 0.9));
    result.entries.push_back(spiked_entry(s, s == 1 ? 0.05 : 0.5, 0.42));
    result.entries.push_back(spiked_entry(s, 0.7, 0.7));
  }
  finalize_selection(result, 3, 3, 0.5);
  for (std::size_t s = 0; s < 3; ++s)
    CHECK(result.best_per_seed[s] == s * 3 + 1);
  CHECK(result.entries[result.best_per_seed[1]].val_metric == 0.05);
}

TEST_CASE("selection: ties break on smaller m, then smaller r, then alpha1 near q1") {
  TuneResult result;
  result.entries = {
      spiked_entry(0, 0.5, 0.1, 200, 0.5, 0.5),
      spiked_entry(0, 0.5, 0.2, 100, 0.9, 0.5),  // smaller m wins
      spiked_entry(0, 0.5, 0.3, 100, 0.3, 0.9),  // same m, smaller r wins
      spiked_entry(0, 0.5, 0.4, 100, 0.3, 0.6),  // same m and r, closer to 0.5 wins
  };
  finalize_selection(result, 4, 1, 0.5);
  CHECK(result.best_per_seed[0] == 3);
}

TEST_CASE("selection: NaN validation metrics sort last") {
  TuneResult result;
  result.entries = {spiked_entry(0, std::numeric_limits<double>::quiet_NaN(), 0.0),
                    spiked_entry(0, 1.4, 1.4)};
  finalize_selection(result, 2, 1, 0.5);
  CHECK(result.best_per_seed[0] == 1);
}

TEST_CASE("selection: SE equals sample sd over sqrt(R)") {
  TuneResult result;
  result.entries = {spiked_entry(0, 0.1, 1.0), spiked_entry(1, 0.1, 3.0)};
  finalize_selection(result, 1, 2, 0.5);
  CHECK(result.test_summary.mean == Catch::Approx(2.0));
  CHECK(result.test_summary.se == Catch::Approx(1.0));
}

TEST_CASE("tune: caching is invisible (tables equal direct run_codsa calls)") {
  auto rep = make_replicate(77);
  TuneConfig cfg;
  cfg.method = Method::codsa;
  cfg.grid.r_values = {0.5};
  cfg.grid.alpha1_values = {0.6};
  cfg.grid.m_over_n_values = {0.25, 0.5};
  cfg.grid.include_baseline_point = true;
  cfg.gen = tiny_gen_cfg();
  cfg.est = forest_cfg();
  cfg.workers = 2;

  auto result = tune({rep}, cfg);
  REQUIRE(result.entries.size() == 3);

  for (const auto& entry : result.entries) {
    LambdaConfig lambda;
    lambda.alpha = entry.point.is_baseline
                       ? region_stats(rep.carve.train).proportions
                       : std::vector<double>{entry.point.alpha1, 1.0 - entry.point.alpha1};
    lambda.m = entry.m;
    lambda.r = entry.point.is_baseline ? 0.0 : entry.point.r;
    auto direct = run_codsa(rep.carve.train, rep.carve.validation, lambda,
                            tiny_gen_cfg(), forest_cfg(), std::nullopt, rep.seed);
    CHECK(entry.val_metric == direct.val_metric);
    auto direct_test = evaluate_predictor(direct.predictor, rep.carve.test);
    CHECK(entry.test_metric == *direct_test.overall);
  }
}

TEST_CASE("tune: worker count does not change the tables") {
  auto rep0 = make_replicate(81);
  auto rep1 = make_replicate(82);
  TuneConfig cfg;
  cfg.method = Method::smote;
  cfg.grid.r_values = {0.0};
  cfg.grid.alpha1_values = {0.5, 0.9};
  cfg.grid.m_over_n_values = {0.25, 0.5};
  cfg.gen = tiny_gen_cfg();
  cfg.est = forest_cfg();

  cfg.workers = 1;
  auto serial = tune({rep0, rep1}, cfg);
  cfg.workers = 4;
  auto parallel = tune({rep0, rep1}, cfg);
  REQUIRE(serial.entries.size() == parallel.entries.size());
  for (std::size_t i = 0; i < serial.entries.size(); ++i) {
    CHECK(serial.entries[i].val_metric == parallel.entries[i].val_metric);
    CHECK(serial.entries[i].test_metric == parallel.entries[i].test_metric);
  }
  CHECK(serial.best_per_seed == parallel.best_per_seed);
}

TEST_CASE("tune: crossfit method builds fold ensembles per lambda") {
  auto rep = make_replicate(83);
  TuneConfig cfg;
  cfg.method = Method::codsa_crossfit;
  cfg.grid.r_values = {0.8};  // recorded only; folds fix the effective ratio
  cfg.grid.alpha1_values = {0.7};
  cfg.grid.m_over_n_values = {0.25};
  cfg.grid.include_baseline_point = false;
  cfg.gen = tiny_gen_cfg();
  cfg.est = forest_cfg(4);
  cfg.crossfit_folds = 3;
  cfg.workers = 2;
  auto result = tune({rep}, cfg);
  REQUIRE(result.entries.size() == 1);
  CHECK(std::isfinite(result.entries[0].val_metric));
  CHECK(std::isfinite(result.entries[0].test_metric));
}

TEST_CASE("marginal sweep: per-value best-of-others selection") {
  TuneResult tuned;
  // seed 0: m/n 0.5 rows with val 0.3/0.4; m/n 1.0 rows with val 0.2/0.6
  auto add = [&](std::size_t s, double mn, double val, double test) {
    TuneEntry e = spiked_entry(s, val, test);
    e.point.m_over_n = mn;
    tuned.entries.push_back(e);
  };
  add(0, 0.5, 0.3, 10.0);
  add(0, 0.5, 0.4, 11.0);
  add(0, 1.0, 0.2, 20.0);
  add(0, 1.0, 0.6, 21.0);
  add(1, 0.5, 0.4, 12.0);
  add(1, 1.0, 0.1, 22.0);

  auto rows = marginal_sweep(tuned, SweepParam::m_over_n, {0.5, 1.0}, 2);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].value == 0.5);
  CHECK(rows[0].per_seed_test == std::vector<double>{10.0, 12.0});
  CHECK(rows[1].per_seed_test == std::vector<double>{20.0, 22.0});

  // single-value sweep degenerates to the plain per-seed argmin
  auto single = marginal_sweep(tuned, SweepParam::m_over_n, {1.0}, 2);
  REQUIRE(single.size() == 1);
  CHECK(single[0].per_seed_test == std::vector<double>{20.0, 22.0});

  // structural count: one row per grid value present
  CHECK(rows.size() == 2);
}

TEST_CASE("tune: empty replicate list is rejected") {
  TuneConfig cfg;
  cfg.grid.r_values = {0.5};
  cfg.grid.alpha1_values = {0.5};
  cfg.grid.m_over_n_values = {0.5};
  CHECK_THROWS_AS(tune({}, cfg), std::invalid_argument);
}
