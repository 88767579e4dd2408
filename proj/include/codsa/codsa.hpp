#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "codsa/dataset.hpp"
#include "codsa/estimators.hpp"
#include "codsa/generator.hpp"
#include "codsa/metrics.hpp"
#include "codsa/wasserstein.hpp"

namespace codsa {

/// The tuning triple lambda = (alpha, m, r).
struct LambdaConfig {
  std::vector<double> alpha;  // K-simplex allocation
  long m = 0;                 // synthetic sample count
  double r = 0.0;             // split ratio

  void validate(int num_regions) const {
    if (static_cast<int>(alpha.size()) != num_regions)
      throw std::invalid_argument("LambdaConfig: allocation length != K");
    double sum = 0.0;
    for (double a : alpha) {
      if (a < 0.0) throw std::invalid_argument("LambdaConfig: alpha_k must be >= 0");
      sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("LambdaConfig: alpha must sum to 1");
    if (m < 0) throw std::invalid_argument("LambdaConfig: m must be >= 0");
    if (r < 0.0 || r > 1.0) throw std::invalid_argument("LambdaConfig: r must be in [0,1]");
  }
};

struct IndexReport {
  double domain_index = std::numeric_limits<double>::quiet_NaN();      // D
  double generation_index = std::numeric_limits<double>::quiet_NaN();  // G
  std::vector<double> alpha_tilde;
  std::vector<double> tau_hat;  // NaN marks an unavailable region
};

/// Infeasible synthetic budget; carries the smallest workable m.
struct FeasibilityError : std::runtime_error {
  long min_m;
  FeasibilityError(const std::string& msg, long bound)
      : std::runtime_error(msg), min_m(bound) {}
};

/// Reserved-sample size n_r = n - floor(r n).
inline long reserved_count(long n, double r) {
  return n - static_cast<long>(std::floor(r * static_cast<double>(n)));
}

namespace detail {

inline void check_simplex(const std::vector<double>& v, const char* name) {
  double sum = 0.0;
  for (double x : v) {
    if (x < 0.0) throw std::invalid_argument(std::string(name) + " has negative entries");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(name) + " must sum to 1");
}

inline std::vector<double> optimal_alpha_at(const std::vector<double>& q,
                                            const std::vector<double>& p, long n_r,
                                            long m) {
  std::vector<double> alpha(q.size());
  for (std::size_t k = 0; k < q.size(); ++k)
    alpha[k] = q[k] + static_cast<double>(n_r) / static_cast<double>(m) * (q[k] - p[k]);
  return alpha;
}

inline bool alpha_in_unit_box(const std::vector<double>& alpha) {
  for (double a : alpha)
    if (a < 0.0 || a > 1.0) return false;
  return true;
}

}  // namespace detail

/// Smallest integer m for which the zero-D allocation lies in [0,1]^K.
/// Unbounded when some region with q_k >= p_k has q_k = 1, or one with
/// q_k < p_k has q_k = 0.
inline long min_feasible_m(const std::vector<double>& q, const std::vector<double>& p,
                           long n, double r) {
  if (q.size() != p.size()) throw std::invalid_argument("min_feasible_m: K mismatch");
  detail::check_simplex(q, "q");
  detail::check_simplex(p, "p");
  const long n_r = reserved_count(n, r);
  double bound = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double shift = q[k] - p[k];
    if (shift == 0.0) continue;
    const double denom = (shift >= 0.0 ? 1.0 : 0.0) - q[k];
    if (std::abs(denom) < 1e-15)
      throw std::runtime_error("min_feasible_m: unbounded at region " +
                               std::to_string(k + 1));
    bound = std::max(bound, static_cast<double>(n_r) * shift / denom);
  }
  auto feasible = [&](long m) {
    if (m <= 0) {
      if (n_r == 0) return true;  // no reserved mass to rebalance
      for (std::size_t k = 0; k < q.size(); ++k)
        if (std::abs(q[k] - p[k]) > 1e-12) return false;
      return true;
    }
    return detail::alpha_in_unit_box(detail::optimal_alpha_at(q, p, n_r, m));
  };
  long m = std::max<long>(0, static_cast<long>(std::ceil(bound - 1e-9)));
  while (m > 0 && feasible(m - 1)) --m;
  while (!feasible(m)) ++m;
  return m;
}

/// The allocation zeroing the domain adaptation index:
/// alpha^o_k = q_k + (n_r / m)(q_k - p_k), with n_r the realized reserved
/// count (equal to the paper's n(1-r) whenever r n is integral).
inline std::vector<double> allocate_optimal(const std::vector<double>& q,
                                            const std::vector<double>& p, long n, long m,
                                            double r) {
  if (q.size() != p.size()) throw std::invalid_argument("allocate_optimal: K mismatch");
  detail::check_simplex(q, "q");
  detail::check_simplex(p, "p");
  const long n_r = reserved_count(n, r);
  if (m == 0) {
    for (std::size_t k = 0; k < q.size(); ++k)
      if (std::abs(q[k] - p[k]) > 1e-12)
        throw FeasibilityError("allocate_optimal: m = 0 cannot rebalance p != q",
                               min_feasible_m(q, p, n, r));
    return q;
  }
  auto alpha = detail::optimal_alpha_at(q, p, n_r, m);
  if (!detail::alpha_in_unit_box(alpha)) {
    const long bound = min_feasible_m(q, p, n, r);
    throw FeasibilityError("allocate_optimal: m = " + std::to_string(m) +
                               " infeasible, need m >= " + std::to_string(bound),
                           bound);
  }
  return alpha;
}

/// D = sum_k |alpha~_k - q_k| with alpha~_k = (alpha_k m + p_k n_r)/(m + n_r).
inline double domain_index(const std::vector<double>& alpha, long m,
                           const std::vector<double>& p, long n, double r,
                           const std::vector<double>& q,
                           std::vector<double>* alpha_tilde_out = nullptr) {
  if (alpha.size() != p.size() || alpha.size() != q.size())
    throw std::invalid_argument("domain_index: K mismatch");
  const long n_r = reserved_count(n, r);
  const double denom = static_cast<double>(m) + static_cast<double>(n_r);
  if (denom <= 0.0)
    throw std::invalid_argument("domain_index: undefined for m + n_r = 0");
  double d = 0.0;
  if (alpha_tilde_out) alpha_tilde_out->assign(alpha.size(), 0.0);
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    const double tilde =
        (alpha[k] * static_cast<double>(m) + p[k] * static_cast<double>(n_r)) / denom;
    if (alpha_tilde_out) (*alpha_tilde_out)[k] = tilde;
    d += std::abs(tilde - q[k]);
  }
  return d;
}

/// G = m/(m + n_r) * sum_k alpha_k tau_k. Zero synthetic mass gives G = 0
/// regardless of tau.
inline double generation_index(const std::vector<double>& alpha, long m, long n_r,
                               const std::vector<double>& tau) {
  if (alpha.size() != tau.size())
    throw std::invalid_argument("generation_index: K mismatch");
  if (m == 0) return 0.0;
  double weighted = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (tau[k] < 0.0) throw std::invalid_argument("generation_index: tau_k must be >= 0");
    weighted += alpha[k] * tau[k];
  }
  return static_cast<double>(m) / (static_cast<double>(m) + static_cast<double>(n_r)) *
         weighted;
}

/// Per-region sliced-W1 between real holdout rows and freshly synthesized
/// rows: a diagnostic stand-in for the unobservable generator error tau_k.
/// Regions absent from the holdout get a NaN marker.
inline std::vector<double> estimate_tau(const GeneratorModel& gen, const Dataset& holdout,
                                        std::size_t per_region_count,
                                        int n_projections, std::uint64_t seed) {
  std::vector<double> tau(static_cast<std::size_t>(gen.num_regions),
                          std::numeric_limits<double>::quiet_NaN());
  if (per_region_count == 0) return tau;
  const Matrix holdout_rows = joint_rows(holdout);
  for (int k = 1; k <= gen.num_regions; ++k) {
    auto idx = holdout.rows_in_region(k);
    if (idx.empty()) continue;
    Matrix real(idx.size(), holdout_rows.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
      std::copy(holdout_rows.row(idx[i]), holdout_rows.row(idx[i]) + holdout_rows.cols(),
                real.row(i));
    std::vector<double> alpha(static_cast<std::size_t>(gen.num_regions), 0.0);
    alpha[static_cast<std::size_t>(k - 1)] = 1.0;
    const Dataset synth =
        synthesize(gen, alpha, static_cast<long>(per_region_count),
                   derive_seed(seed, "tau", static_cast<std::uint64_t>(k)));
    tau[static_cast<std::size_t>(k - 1)] =
        sliced_w1(real, joint_rows(synth), n_projections,
                  derive_seed(seed, "tau-proj", static_cast<std::uint64_t>(k)));
  }
  return tau;
}

// ---------------------------------------------------------------------------
// Algorithm-level pipeline.
// ---------------------------------------------------------------------------

struct EstimatorConfig {
  enum class Kind { mlp_classifier, forest, mlp_regressor };
  Kind kind = Kind::mlp_classifier;
  MlpTrainConfig mlp;
  ForestConfig forest;
};

/// Fitted downstream model; ensembles (cross-fitting) hold several members
/// and average probabilities/predictions.
struct Predictor {
  std::vector<ClassifierModel> classifiers;
  std::vector<ForestModel> forests;
  std::vector<MlpRegressorModel> regressors;

  bool is_classifier() const { return !classifiers.empty(); }

  std::vector<double> predict(const Matrix& rows) const {
    std::vector<double> out(rows.rows(), 0.0);
    std::size_t members = 0;
    auto accumulate = [&](const std::vector<double>& preds) {
      for (std::size_t i = 0; i < preds.size(); ++i) out[i] += preds[i];
      ++members;
    };
    for (const auto& c : classifiers) accumulate(predict_proba(c, rows));
    for (const auto& f : forests) accumulate(forest_predict(f, rows));
    for (const auto& r : regressors) accumulate(predict_regression(r, rows));
    if (members == 0) throw std::logic_error("Predictor: no fitted members");
    for (double& v : out) v /= static_cast<double>(members);
    return out;
  }
};

/// Balanced-Q metric of a predictor on an evaluation set: overall
/// cross-entropy for classifiers, pooled RMSE for regression models.
inline RegionBreakdown evaluate_predictor(const Predictor& model, const Dataset& eval) {
  auto preds = model.predict(eval.features);
  if (model.is_classifier())
    return cross_entropy_by_region(preds, eval.target, eval.region, eval.num_regions);
  return rmse_by_region(preds, eval.target, eval.region, eval.num_regions);
}

namespace detail {

inline Predictor fit_estimator(const Dataset& train, const Dataset& val,
                               const EstimatorConfig& cfg, std::uint64_t seed) {
  Predictor out;
  switch (cfg.kind) {
    case EstimatorConfig::Kind::mlp_classifier:
      out.classifiers.push_back(train_classifier(train, val, cfg.mlp, seed));
      break;
    case EstimatorConfig::Kind::forest:
      out.forests.push_back(train_forest(train, cfg.forest, seed));
      break;
    case EstimatorConfig::Kind::mlp_regressor:
      out.regressors.push_back(train_mlp_regressor(train, val, cfg.mlp, seed));
      break;
  }
  return out;
}

inline std::uint64_t encode_ratio(double r) {
  return static_cast<std::uint64_t>(std::llround(r * 1e9));
}

}  // namespace detail

struct RunResult {
  Predictor predictor;
  IndexReport indices;
  double val_metric = std::numeric_limits<double>::quiet_NaN();
  std::size_t generator_rows = 0;  // |Z_g|
  std::size_t reserved_rows = 0;   // |Z_r|
  long realized_m = 0;
};

struct RunOptions {
  std::vector<double> q;                // evaluation weights; empty = balanced
  std::size_t tau_samples = 0;          // per-region draws for tau_hat (0 = skip)
  int tau_projections = 64;
};

/// Algorithm steps 1-5 on a training pool: stratified split at r, generator
/// fit on Z_g (or reuse of a pretrained autoencoder), m synthetic rows under
/// alpha, mixing, and estimator training on the augmented sample. The
/// generator is never consulted when m = 0.
inline RunResult run_codsa(const Dataset& train, const Dataset& val,
                           const LambdaConfig& lambda, const GeneratorConfig& gen_cfg,
                           const EstimatorConfig& est_cfg,
                           const std::optional<AutoencoderModel>& transfer,
                           std::uint64_t seed, const RunOptions& options = {}) {
  lambda.validate(train.num_regions);
  std::vector<double> q = options.q;
  if (q.empty())
    q.assign(static_cast<std::size_t>(train.num_regions),
             1.0 / static_cast<double>(train.num_regions));

  auto split = stratified_split(train, lambda.r, derive_seed(seed, "split"));
  if (lambda.m > 0 && split.generator_part.n() == 0)
    throw std::invalid_argument("run_codsa: m > 0 with an empty generator split");

  RunResult result;
  result.generator_rows = split.generator_part.n();
  result.reserved_rows = split.reserved_part.n();
  result.realized_m = lambda.m;

  Dataset synth = Dataset::empty_like(train);
  std::optional<GeneratorModel> generator;
  if (lambda.m > 0) {
    generator = train_generator(
        split.generator_part, gen_cfg, transfer,
        derive_seed(seed, "generator", detail::encode_ratio(lambda.r)));
    synth = synthesize(*generator, lambda.alpha, lambda.m,
                       derive_seed(seed, "synthesis", detail::encode_ratio(lambda.r)));
  }
  const Dataset augmented = mix(split.reserved_part, synth);
  result.predictor =
      detail::fit_estimator(augmented, val, est_cfg, derive_seed(seed, "estimator"));

  auto val_metrics = evaluate_predictor(result.predictor, val);
  result.val_metric = val_metrics.overall.value_or(
      std::numeric_limits<double>::quiet_NaN());

  const auto p = region_stats(train).proportions;
  result.indices.tau_hat.assign(static_cast<std::size_t>(train.num_regions),
                                std::numeric_limits<double>::quiet_NaN());
  result.indices.domain_index =
      domain_index(lambda.alpha, lambda.m, p, static_cast<long>(train.n()), lambda.r, q,
                   &result.indices.alpha_tilde);
  if (lambda.m == 0) {
    result.indices.generation_index = 0.0;
  } else if (generator && options.tau_samples > 0 && split.reserved_part.n() > 0) {
    result.indices.tau_hat = estimate_tau(
        *generator, split.reserved_part, options.tau_samples, options.tau_projections,
        derive_seed(seed, "tau-root", detail::encode_ratio(lambda.r)));
    bool complete = true;
    for (double t : result.indices.tau_hat)
      if (!std::isfinite(t)) complete = false;
    if (complete)
      result.indices.generation_index =
          generation_index(lambda.alpha, lambda.m,
                           static_cast<long>(result.reserved_rows),
                           result.indices.tau_hat);
  }
  return result;
}

struct CrossFitResult {
  Predictor predictor;  // K fold estimators, mean-aggregated
  double val_metric = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::size_t> fold_sizes;
};

/// Appendix-style cross-fitting: the real data is dealt into K folds per
/// region; each fold's estimator trains on that fold plus synthetics from a
/// generator fitted on the other K-1 folds (so the effective split ratio is
/// (K-1)/K and lambda.r is ignored). Classification members average
/// probabilities.
inline CrossFitResult cross_fit_codsa(const Dataset& train, const Dataset& val,
                                      const LambdaConfig& lambda, int k_folds,
                                      const GeneratorConfig& gen_cfg,
                                      const EstimatorConfig& est_cfg,
                                      const std::optional<AutoencoderModel>& transfer,
                                      std::uint64_t seed) {
  if (k_folds < 2) throw std::invalid_argument("cross_fit_codsa: need K >= 2 folds");
  lambda.validate(train.num_regions);

  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k_folds));
  for (int k = 1; k <= train.num_regions; ++k) {
    auto rows = train.rows_in_region(k);
    Rng rng(derive_seed(seed, "fold", static_cast<std::uint64_t>(k)));
    auto order = shuffled_indices(rows.size(), rng);
    for (std::size_t i = 0; i < rows.size(); ++i)
      folds[i % static_cast<std::size_t>(k_folds)].push_back(rows[order[i]]);
  }
  CrossFitResult result;
  for (auto& fold : folds) {
    std::sort(fold.begin(), fold.end());
    result.fold_sizes.push_back(fold.size());
    if (fold.empty())
      throw std::runtime_error("cross_fit_codsa: a fold came out empty");
  }

  for (int f = 0; f < k_folds; ++f) {
    std::vector<std::size_t> rest;
    for (int g = 0; g < k_folds; ++g)
      if (g != f)
        rest.insert(rest.end(), folds[static_cast<std::size_t>(g)].begin(),
                    folds[static_cast<std::size_t>(g)].end());
    std::sort(rest.begin(), rest.end());
    const Dataset gen_data = train.select(rest);
    const Dataset est_data = train.select(folds[static_cast<std::size_t>(f)]);

    Dataset synth = Dataset::empty_like(train);
    if (lambda.m > 0) {
      auto generator =
          train_generator(gen_data, gen_cfg, transfer,
                          derive_seed(seed, "cf-generator", static_cast<std::uint64_t>(f)));
      synth = synthesize(generator, lambda.alpha, lambda.m,
                         derive_seed(seed, "cf-synthesis", static_cast<std::uint64_t>(f)));
    }
    const Dataset augmented = mix(est_data, synth);
    auto member = detail::fit_estimator(
        augmented, val, est_cfg, derive_seed(seed, "cf-estimator", static_cast<std::uint64_t>(f)));
    result.predictor.classifiers.insert(result.predictor.classifiers.end(),
                                        member.classifiers.begin(),
                                        member.classifiers.end());
    result.predictor.forests.insert(result.predictor.forests.end(),
                                    member.forests.begin(), member.forests.end());
    result.predictor.regressors.insert(result.predictor.regressors.end(),
                                       member.regressors.begin(),
                                       member.regressors.end());
  }
  auto val_metrics = evaluate_predictor(result.predictor, val);
  result.val_metric =
      val_metrics.overall.value_or(std::numeric_limits<double>::quiet_NaN());
  return result;
}

}  // namespace codsa
