#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "codsa/baselines.hpp"

using namespace codsa;

namespace {

Dataset toy_two_region(std::size_t n1, std::size_t n2, std::size_t d, std::uint64_t seed,
                       TargetKind kind = TargetKind::binary) {
  Dataset data;
  data.features = Matrix(n1 + n2, d);
  data.target_kind = kind;
  data.num_regions = 2;
  Rng rng(seed);
  for (std::size_t i = 0; i < n1 + n2; ++i) {
    const int region = i < n1 ? 1 : 2;
    for (std::size_t j = 0; j < d; ++j)
      data.features(i, j) = rng.normal() + (region == 2 ? 5.0 : 0.0);
    data.region.push_back(region);
    data.provenance.push_back(Provenance::real);
    if (kind == TargetKind::binary)
      data.target.push_back(static_cast<double>(region - 1));
    else
      data.target.push_back(rng.normal());
  }
  return data;
}

/// Residual of s against the segment a + t(b-a): norm of the rejection of
/// (s-a) onto the direction (b-a).
double collinearity_residual(const Matrix& f, const double* s, std::size_t a,
                             std::size_t b) {
  const std::size_t d = f.cols();
  std::vector<double> dir(d), rel(d);
  double dir_norm2 = 0.0, dot = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    dir[c] = f(b, c) - f(a, c);
    rel[c] = s[c] - f(a, c);
    dir_norm2 += dir[c] * dir[c];
    dot += rel[c] * dir[c];
  }
  const double t = dir_norm2 > 0 ? dot / dir_norm2 : 0.0;
  double res = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    const double r = rel[c] - t * dir[c];
    res += r * r;
  }
  return std::sqrt(res);
}

}  // namespace

TEST_CASE("smote: two-point minority keeps synthetics on the segment") {
  Dataset data;
  data.features = Matrix(4, 2);
  data.target_kind = TargetKind::binary;
  data.num_regions = 2;
  // minority: (0,0) and (1,1); majority: two far points
  data.features(0, 0) = 0.0; data.features(0, 1) = 0.0;
  data.features(1, 0) = 1.0; data.features(1, 1) = 1.0;
  data.features(2, 0) = 9.0; data.features(2, 1) = 9.0;
  data.features(3, 0) = 9.5; data.features(3, 1) = 8.5;
  data.region = {1, 1, 2, 2};
  data.target = {0, 0, 1, 1};
  data.provenance.assign(4, Provenance::real);

  auto result = smote(data, 1, 50, 1, 123);
  REQUIRE(result.synthetic.n() == 50);
  for (std::size_t i = 0; i < 50; ++i) {
    const double x = result.synthetic.features(i, 0);
    const double y = result.synthetic.features(i, 1);
    CHECK(x == Catch::Approx(y).margin(1e-12));  // on the diagonal
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
    CHECK(result.synthetic.region[i] == 1);
    CHECK(result.synthetic.provenance[i] == Provenance::synthetic);
  }
}

TEST_CASE("smote: n_new = 0 gives an empty result") {
  auto data = toy_two_region(20, 30, 3, 1);
  auto result = smote(data, 1, 0, 5, 2);
  CHECK(result.synthetic.n() == 0);
  CHECK(result.parents.empty());
}

TEST_CASE("smote: synthetic rows are collinear with their logged parents") {
  auto data = toy_two_region(40, 60, 5, 3);
  auto result = smote(data, 1, 500, 5, 4);
  REQUIRE(result.parents.size() == 500);
  for (std::size_t i = 0; i < 500; ++i) {
    const auto [a, b] = result.parents[i];
    CHECK(data.region[a] == 1);
    CHECK(data.region[b] == 1);
    const double res =
        collinearity_residual(data.features, result.synthetic.features.row(i), a, b);
    CHECK(res < 1e-9);
  }
}

TEST_CASE("smote: too few minority rows is an error") {
  auto data = toy_two_region(4, 30, 3, 5);
  CHECK_THROWS_AS(smote(data, 1, 10, 5, 6), std::runtime_error);
}

TEST_CASE("smote is deterministic per seed") {
  auto data = toy_two_region(30, 50, 4, 7);
  auto a = smote(data, 1, 100, 5, 8);
  auto b = smote(data, 1, 100, 5, 8);
  CHECK(a.synthetic.features == b.synthetic.features);
  CHECK(a.parents == b.parents);
  auto c = smote(data, 1, 100, 5, 9);
  CHECK_FALSE(a.synthetic.features == c.synthetic.features);
}

TEST_CASE("smote prefixes: a shorter run is a prefix of a longer one") {
  auto data = toy_two_region(30, 50, 4, 10);
  auto small = smote(data, 1, 40, 5, 11);
  auto large = smote(data, 1, 100, 5, 11);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t c = 0; c < 4; ++c)
      CHECK(small.synthetic.features(i, c) == large.synthetic.features(i, c));
}

TEST_CASE("adasyn: identical neighborhoods give uniform quotas") {
  // Minority points arranged symmetrically around the majority mass so every
  // point sees the same number of majority neighbors.
  Dataset data;
  data.features = Matrix(8, 1);
  data.target_kind = TargetKind::binary;
  data.num_regions = 2;
  // four minority at -10,-9,9,10; four majority at -1,-0.5,0.5,1
  const double xs[8] = {-10, -9, 9, 10, -1, -0.5, 0.5, 1};
  for (std::size_t i = 0; i < 8; ++i) {
    data.features(i, 0) = xs[i];
    data.region.push_back(i < 4 ? 1 : 2);
    data.target.push_back(i < 4 ? 0.0 : 1.0);
    data.provenance.push_back(Provenance::real);
  }
  auto result = adasyn(data, 1, 8, 3, 12);
  std::vector<int> per_parent(8, 0);
  for (auto [a, b] : result.parents) per_parent[a] += 1;
  CHECK(per_parent[0] == 2);
  CHECK(per_parent[1] == 2);
  CHECK(per_parent[2] == 2);
  CHECK(per_parent[3] == 2);
}

TEST_CASE("adasyn: ratio-proportional quotas via largest remainder") {
  // r = (1, 0) normalized, n_new = 10 -> quotas (10, 0).
  auto q = largest_remainder_quotas({1.0, 0.0}, 10);
  CHECK(q == std::vector<long>{10, 0});
  // spec example for synthesize: alpha = (0.6, 0.4), m = 10 -> (6, 4)
  auto q2 = largest_remainder_quotas({0.6, 0.4}, 10);
  CHECK(q2 == std::vector<long>{6, 4});
}

TEST_CASE("adasyn: quotas always sum to n_new") {
  auto data = toy_two_region(25, 75, 3, 13);
  for (std::size_t n_new : {1u, 7u, 50u, 333u}) {
    auto result = adasyn(data, 1, n_new, 5, 14);
    CHECK(result.synthetic.n() == n_new);
    CHECK(result.parents.size() == n_new);
  }
}

TEST_CASE("adasyn: all-zero ratios fall back to uniform quotas") {
  // Single-region dataset: no majority anywhere, every r_i = 0.
  Dataset data;
  data.features = Matrix(8, 2);
  data.target_kind = TargetKind::none;
  data.num_regions = 1;
  Rng rng(15);
  for (std::size_t i = 0; i < 8; ++i) {
    data.features(i, 0) = rng.normal();
    data.features(i, 1) = rng.normal();
    data.region.push_back(1);
    data.provenance.push_back(Provenance::real);
  }
  auto result = adasyn(data, 1, 16, 3, 16);
  std::vector<int> per_parent(8, 0);
  for (auto [a, b] : result.parents) per_parent[a] += 1;
  for (int c : per_parent) CHECK(c == 2);
}

TEST_CASE("adasyn: collinearity with logged parents") {
  auto data = toy_two_region(30, 70, 4, 17);
  auto result = adasyn(data, 1, 200, 5, 18);
  for (std::size_t i = 0; i < result.synthetic.n(); ++i) {
    const auto [a, b] = result.parents[i];
    const double res =
        collinearity_residual(data.features, result.synthetic.features.row(i), a, b);
    CHECK(res < 1e-9);
  }
}

TEST_CASE("smogn: sigma = 0 reproduces sampled rows exactly") {
  auto data = toy_two_region(20, 80, 3, 19, TargetKind::continuous);
  auto result = smogn(data, 1, 50, 0.0, 20);
  REQUIRE(result.synthetic.n() == 50);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto src = result.parents[i].first;
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(result.synthetic.features(i, c) == data.features(src, c));
    CHECK(result.synthetic.target[i] == data.target[src]);
  }
}

TEST_CASE("smogn: perturbation std matches sigma * column scale") {
  auto data = toy_two_region(200, 100, 2, 21, TargetKind::continuous);
  const double sigma = 0.04;
  const std::size_t n_new = 10000;
  auto result = smogn(data, 1, n_new, sigma, 22);

  // per-column std of region 1 (the scale SMOGN uses)
  auto rows = data.rows_in_region(1);
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0;
    for (auto r : rows) mean += data.features(r, c);
    mean /= static_cast<double>(rows.size());
    double ss = 0.0;
    for (auto r : rows) {
      const double d = data.features(r, c) - mean;
      ss += d * d;
    }
    const double scale = std::sqrt(ss / static_cast<double>(rows.size() - 1));

    double diff_mean = 0.0;
    for (std::size_t i = 0; i < n_new; ++i)
      diff_mean += result.synthetic.features(i, c) -
                   data.features(result.parents[i].first, c);
    diff_mean /= static_cast<double>(n_new);
    double diff_ss = 0.0;
    for (std::size_t i = 0; i < n_new; ++i) {
      const double d = result.synthetic.features(i, c) -
                       data.features(result.parents[i].first, c) - diff_mean;
      diff_ss += d * d;
    }
    const double observed = std::sqrt(diff_ss / static_cast<double>(n_new - 1));
    CHECK(observed == Catch::Approx(sigma * scale).epsilon(0.10));
  }
}

TEST_CASE("smogn: the tuned sigma grid is {0.02, 0.04, 0.06}") {
  const std::vector<double> grid = {0.02, 0.04, 0.06};
  CHECK(grid.size() == 3);
  for (double s : grid) {
    auto data = toy_two_region(30, 10, 2, 23, TargetKind::continuous);
    CHECK_NOTHROW(smogn(data, 1, 5, s, 24));
  }
}

TEST_CASE("baselines emit the requested region and synthetic provenance") {
  auto data = toy_two_region(30, 50, 3, 25);
  for (int k : {1, 2}) {
    auto s = smote(data, k, 10, 5, 26);
    auto a = adasyn(data, k, 10, 5, 27);
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(s.synthetic.region[i] == k);
      CHECK(a.synthetic.region[i] == k);
      CHECK(s.synthetic.provenance[i] == Provenance::synthetic);
      CHECK(a.synthetic.provenance[i] == Provenance::synthetic);
    }
  }
}

TEST_CASE("smote/adasyn outputs stay inside the minority bounding box") {
  auto data = toy_two_region(40, 40, 3, 28);
  auto rows = data.rows_in_region(1);
  std::vector<double> lo(3, 1e300), hi(3, -1e300);
  for (auto r : rows)
    for (std::size_t c = 0; c < 3; ++c) {
      lo[c] = std::min(lo[c], data.features(r, c));
      hi[c] = std::max(hi[c], data.features(r, c));
    }
  for (auto& result : {smote(data, 1, 300, 5, 29), adasyn(data, 1, 300, 5, 30)}) {
    for (std::size_t i = 0; i < result.synthetic.n(); ++i)
      for (std::size_t c = 0; c < 3; ++c) {
        CHECK(result.synthetic.features(i, c) >= lo[c] - 1e-12);
        CHECK(result.synthetic.features(i, c) <= hi[c] + 1e-12);
      }
  }
}
