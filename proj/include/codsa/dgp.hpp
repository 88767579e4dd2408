#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "codsa/dataset.hpp"
#include "codsa/rng.hpp"

namespace codsa {

struct ClassifSimConfig {
  std::size_t n1 = 1400;  // minority class count, C1 = {Y=0}
  std::size_t n2 = 3800;  // majority class count, C2 = {Y=1}
  std::uint64_t seed = 0;
};

struct RegressSimConfig {
  std::size_t n1 = 1400;  // undersampled region C1
  std::size_t n2 = 3800;  // oversampled region C2
  double sigma = 0.2;     // observation noise level
  std::uint64_t seed = 0;
};

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> v(count);
  if (count == 1) {
    v[0] = lo;
    return v;
  }
  for (std::size_t i = 0; i < count; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return v;
}

/// The five decision weights: linearly spaced on [-1, 1].
inline std::vector<double> classification_weights() { return linspace(-1.0, 1.0, 5); }

/// s(x) = sin^2(2π a/(1+|a|)) - cos^2(3π b/(1+|b|)) with a = x[0:5]·w,
/// b = x[5:10]·w. Bounded in [-1, 1].
inline double decision_score(const double* x, const std::vector<double>& w) {
  if (w.size() != 5) throw std::invalid_argument("decision_score: w must have 5 entries");
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    a += x[i] * w[i];
    b += x[5 + i] * w[i];
  }
  const double sa = std::sin(2.0 * std::numbers::pi * a / (1.0 + std::abs(a)));
  const double cb = std::cos(3.0 * std::numbers::pi * b / (1.0 + std::abs(b)));
  return sa * sa - cb * cb;
}

inline double decision_score(const std::vector<double>& x, const std::vector<double>& w) {
  if (x.size() != 10) throw std::invalid_argument("decision_score: x must have 10 entries");
  return decision_score(x.data(), w);
}

/// The ten nonlinear features built from the three latent draws.
inline std::array<double, 10> classification_features(double u1, double u2, double u3) {
  return {u1 * u2, u1 * u3,      u2 * u3, u1 * u1, u2 * u2,
          u3 * u3, u1 * u2 * u3, u1 * u1 * u1, u2 * u2 * u2, u3 * u3 * u3};
}

/// Linear-interpolation empirical quantile on a sorted vector.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  if (sorted.size() == 1) return sorted[0];
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct ClassifSimDetail {
  Dataset data;
  double tau = 0.0;
  double delta = 0.0;
};

namespace detail {

inline void draw_classification_latents(Rng& rng, double& u1, double& u2, double& u3) {
  u1 = rng.uniform() < 0.5 ? rng.normal(-2.0, 1.0) : rng.normal(2.0, 1.0);
  u2 = rng.uniform() < 0.5 ? rng.uniform(0.0, 1.0) : rng.uniform(2.0, 3.0);
  u3 = rng.exponential() - 1.0;
}

}  // namespace detail

/// Mixture-of-normals imbalanced classification data. Thresholds tau_lo/tau_hi
/// are the q(n1/2n) and q(1-n1/2n) empirical quantiles of s over a candidate
/// pool drawn up front (before quota truncation); rows are then accepted in
/// draw order until each class holds exactly its quota. Region index is the
/// class label: C1 = {Y=0}, C2 = {Y=1}.
inline ClassifSimDetail gen_classification_detailed(const ClassifSimConfig& cfg) {
  if (cfg.n1 < 1 || cfg.n2 < 1)
    throw std::invalid_argument("gen_classification: class counts must be >= 1");
  const std::size_t n = cfg.n1 + cfg.n2;
  const auto w = classification_weights();
  Rng rng(derive_seed(cfg.seed, "dgp-classification"));

  const std::size_t pool_size = n + n / 2 + 64;
  std::vector<std::array<double, 10>> pool(pool_size);
  std::vector<double> scores(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) {
    double u1, u2, u3;
    detail::draw_classification_latents(rng, u1, u2, u3);
    pool[i] = classification_features(u1, u2, u3);
    scores[i] = decision_score(pool[i].data(), w);
  }

  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const double p_lo = static_cast<double>(cfg.n1) / (2.0 * static_cast<double>(n));
  const double tau_lo = quantile_sorted(sorted, p_lo);
  const double tau_hi = quantile_sorted(sorted, 1.0 - p_lo);
  const double tau = 0.5 * (tau_lo + tau_hi);
  const double delta = 0.5 * (tau_hi - tau_lo);
  if (!(delta > 0.0))
    throw std::runtime_error("gen_classification: degenerate score distribution");

  ClassifSimDetail out;
  out.tau = tau;
  out.delta = delta;
  Dataset& data = out.data;
  data.features = Matrix(n, 10);
  data.target_kind = TargetKind::binary;
  data.num_regions = 2;
  std::size_t accepted = 0;
  std::array<std::size_t, 2> quota = {cfg.n1, cfg.n2};

  auto try_accept = [&](const std::array<double, 10>& x, double s) {
    const int y = std::abs(s - tau) < delta ? 1 : 0;
    if (quota[static_cast<std::size_t>(y)] == 0) return;
    quota[static_cast<std::size_t>(y)] -= 1;
    std::copy(x.begin(), x.end(), data.features.row(accepted));
    data.target.push_back(static_cast<double>(y));
    data.region.push_back(y + 1);
    data.provenance.push_back(Provenance::real);
    ++accepted;
  };

  for (std::size_t i = 0; i < pool_size && accepted < n; ++i)
    try_accept(pool[i], scores[i]);

  // Thresholds stay frozen while topping up any unfilled quota.
  std::size_t guard = 0;
  while (accepted < n) {
    if (++guard > 4096 * n)
      throw std::runtime_error("gen_classification: could not fill class quotas");
    double u1, u2, u3;
    detail::draw_classification_latents(rng, u1, u2, u3);
    const auto x = classification_features(u1, u2, u3);
    try_accept(x, decision_score(x.data(), w));
  }
  data.validate();
  return out;
}

inline Dataset gen_classification(const ClassifSimConfig& cfg) {
  return gen_classification_detailed(cfg).data;
}

/// Unquota'd pool from the same latent process, labelled by its own pool
/// quantiles at the given minority fraction. Used as the independent source
/// sample for transfer pretraining.
inline Dataset gen_classification_source(std::size_t count, double minority_fraction,
                                         std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("gen_classification_source: empty source");
  const auto w = classification_weights();
  Rng rng(derive_seed(seed, "dgp-classification-source"));
  Dataset data;
  data.features = Matrix(count, 10);
  data.target_kind = TargetKind::binary;
  data.num_regions = 2;
  std::vector<double> scores(count);
  for (std::size_t i = 0; i < count; ++i) {
    double u1, u2, u3;
    detail::draw_classification_latents(rng, u1, u2, u3);
    const auto x = classification_features(u1, u2, u3);
    std::copy(x.begin(), x.end(), data.features.row(i));
    scores[i] = decision_score(x.data(), w);
  }
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const double p_lo = 0.5 * minority_fraction;
  const double tau_lo = quantile_sorted(sorted, p_lo);
  const double tau_hi = quantile_sorted(sorted, 1.0 - p_lo);
  const double tau = 0.5 * (tau_lo + tau_hi);
  const double delta = 0.5 * (tau_hi - tau_lo);
  for (std::size_t i = 0; i < count; ++i) {
    const int y = std::abs(scores[i] - tau) < delta ? 1 : 0;
    data.target.push_back(static_cast<double>(y));
    data.region.push_back(y + 1);
    data.provenance.push_back(Provenance::real);
  }
  data.validate();
  return data;
}

inline const std::array<double, 5> kRegressionBeta = {3.0, 2.0, -1.0, 0.5, 1.0};

inline std::array<double, 5> regression_features(double u1, double u2) {
  const double ind = u1 > 0.5 ? 1.0 : 0.0;
  return {u1, ind * u1 + u2, ind * u2 + std::log(1.0 + std::abs(u2)),
          std::abs(u2), u1 - u2};
}

/// Region-dependent regression function: 2(x·β)^2 ± x·β.
inline double regression_mean(const std::array<double, 5>& x, int region) {
  double xb = 0.0;
  for (std::size_t j = 0; j < 5; ++j) xb += x[j] * kRegressionBeta[j];
  return region == 1 ? 2.0 * xb * xb + xb : 2.0 * xb * xb - xb;
}

/// Regime-switching regression data: u1 ~ U(0,0.5) on C1 (undersampled) and
/// U(0.5,1) on C2, u2 = u1^2 + N(0,1), y = f(x) + N(0, sigma^2).
inline Dataset gen_regression(const RegressSimConfig& cfg) {
  if (cfg.sigma < 0.0) throw std::invalid_argument("gen_regression: sigma must be >= 0");
  Rng rng(derive_seed(cfg.seed, "dgp-regression"));
  Dataset data;
  data.target_kind = TargetKind::continuous;
  data.num_regions = 2;
  data.features = Matrix(cfg.n1 + cfg.n2, 5);
  data.target.reserve(cfg.n1 + cfg.n2);
  std::size_t row = 0;
  auto emit = [&](std::size_t count, int region) {
    for (std::size_t i = 0; i < count; ++i) {
      const double u1 = region == 1 ? rng.uniform(0.0, 0.5) : rng.uniform(0.5, 1.0);
      const double u2 = u1 * u1 + rng.normal();
      const auto x = regression_features(u1, u2);
      std::copy(x.begin(), x.end(), data.features.row(row));
      data.target.push_back(regression_mean(x, region) + cfg.sigma * rng.normal());
      data.region.push_back(region);
      data.provenance.push_back(Provenance::real);
      ++row;
    }
  };
  emit(cfg.n1, 1);
  emit(cfg.n2, 2);
  data.validate();
  return data;
}

/// Source sample for regression transfer pretraining: same structural
/// transformations with u1 ~ U(0,1), regions assigned by the 0.5 boundary.
inline Dataset gen_regression_source(std::size_t count, double sigma, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "dgp-regression-source"));
  Dataset data;
  data.features = Matrix(count, 5);
  data.target_kind = TargetKind::continuous;
  data.num_regions = 2;
  for (std::size_t i = 0; i < count; ++i) {
    const double u1 = rng.uniform();
    const int region = u1 < 0.5 ? 1 : 2;
    const double u2 = u1 * u1 + rng.normal();
    const auto x = regression_features(u1, u2);
    std::copy(x.begin(), x.end(), data.features.row(i));
    data.target.push_back(regression_mean(x, region) + sigma * rng.normal());
    data.region.push_back(region);
    data.provenance.push_back(Provenance::real);
  }
  data.validate();
  return data;
}

struct EvalCarve {
  Dataset train;
  Dataset validation;
  Dataset test;
};

/// Samples balanced validation/test sets (exact per-region counts, without
/// replacement); the remaining rows keep the imbalanced training pool.
inline EvalCarve carve_balanced_eval(const Dataset& data, std::size_t val_per_region,
                                     std::size_t test_per_region, std::uint64_t seed) {
  std::vector<std::size_t> val_idx, test_idx, train_idx;
  for (int k = 1; k <= data.num_regions; ++k) {
    auto rows = data.rows_in_region(k);
    if (rows.size() < val_per_region + test_per_region)
      throw std::runtime_error("carve_balanced_eval: region " + std::to_string(k) +
                               " has only " + std::to_string(rows.size()) + " rows");
    Rng rng(derive_seed(seed, "carve", static_cast<std::uint64_t>(k)));
    auto order = shuffled_indices(rows.size(), rng);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::size_t src = rows[order[i]];
      if (i < val_per_region) val_idx.push_back(src);
      else if (i < val_per_region + test_per_region) test_idx.push_back(src);
      else train_idx.push_back(src);
    }
  }
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return {data.select(train_idx), data.select(val_idx), data.select(test_idx)};
}

}  // namespace codsa
