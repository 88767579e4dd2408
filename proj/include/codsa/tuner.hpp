#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "codsa/baselines.hpp"
#include "codsa/codsa.hpp"
#include "codsa/dgp.hpp"
#include "codsa/parallel.hpp"

namespace codsa {

enum class Task { classification, regression };
enum class Method { baseline, smote, adasyn, smogn, codsa, codsa_transfer, codsa_crossfit };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::baseline: return "baseline";
    case Method::smote: return "smote";
    case Method::adasyn: return "adasyn";
    case Method::smogn: return "smogn";
    case Method::codsa: return "codsa";
    case Method::codsa_transfer: return "codsa-transfer";
    case Method::codsa_crossfit: return "codsa-crossfit";
  }
  throw std::logic_error("unknown method");
}

inline Method method_from_name(const std::string& name) {
  for (Method m : {Method::baseline, Method::smote, Method::adasyn, Method::smogn,
                   Method::codsa, Method::codsa_transfer, Method::codsa_crossfit})
    if (method_name(m) == name) return m;
  throw std::invalid_argument("unknown method: " + name);
}

/// The hyperparameter grid over lambda = (alpha1, m/n, r) plus the SMOGN
/// perturbation sizes. Binary-region tasks only expose alpha1.
struct GridSpec {
  std::vector<double> r_values;
  std::vector<double> alpha1_values;
  std::vector<double> m_over_n_values;
  std::vector<double> smogn_sigmas = {0.02, 0.04, 0.06};
  bool include_baseline_point = true;  // the m = 0 reference

  void validate() const {
    auto in = [](const std::vector<double>& v, double lo, double hi) {
      for (double x : v)
        if (x < lo || x > hi) return false;
      return true;
    };
    if (r_values.empty() || alpha1_values.empty() || m_over_n_values.empty())
      throw std::invalid_argument("GridSpec: empty grid");
    if (!in(r_values, 0.0, 1.0)) throw std::invalid_argument("GridSpec: r outside [0,1]");
    if (!in(alpha1_values, 0.0, 1.0))
      throw std::invalid_argument("GridSpec: alpha1 outside [0,1]");
    if (!in(m_over_n_values, 0.0, 1e6) ||
        *std::min_element(m_over_n_values.begin(), m_over_n_values.end()) < 0.0)
      throw std::invalid_argument("GridSpec: m/n must be >= 0");
  }
};

/// The full grid: r in {0.1..1.0}, alpha1 in {0.1..0.9}, m/n in {0.1..2.0},
/// 1800 combinations plus the m = 0 baseline point.
inline GridSpec default_grid(Task) {
  GridSpec g;
  for (int i = 1; i <= 10; ++i) g.r_values.push_back(i / 10.0);
  for (int i = 1; i <= 9; ++i) g.alpha1_values.push_back(i / 10.0);
  for (int i = 1; i <= 20; ++i) g.m_over_n_values.push_back(i / 10.0);
  return g;
}

/// Budget guard for CI-scale runs: every other value of the full grid.
inline GridSpec coarse_grid(Task task) {
  GridSpec full = default_grid(task);
  GridSpec g;
  for (std::size_t i = 1; i < full.r_values.size(); i += 2)
    g.r_values.push_back(full.r_values[i]);
  for (std::size_t i = 0; i < full.alpha1_values.size(); i += 2)
    g.alpha1_values.push_back(full.alpha1_values[i]);
  for (std::size_t i = 1; i < full.m_over_n_values.size(); i += 2)
    g.m_over_n_values.push_back(full.m_over_n_values[i]);
  return g;
}

/// One grid point. Baseline rows carry m = 0; non-CoDSA methods pin r = 0
/// (no generator split); sigma is NaN outside SMOGN.
struct LambdaPoint {
  double r = 0.0;
  double alpha1 = 0.5;
  double m_over_n = 0.0;
  double sigma = std::numeric_limits<double>::quiet_NaN();
  bool is_baseline = false;
};

inline std::vector<LambdaPoint> enumerate_points(const GridSpec& grid, Method method) {
  grid.validate();
  std::vector<LambdaPoint> points;
  auto baseline_point = [] {
    LambdaPoint p;
    p.is_baseline = true;
    return p;
  };
  switch (method) {
    case Method::baseline:
      points.push_back(baseline_point());
      return points;
    case Method::smote:
    case Method::adasyn:
      if (grid.include_baseline_point) points.push_back(baseline_point());
      for (double a : grid.alpha1_values)
        for (double mn : grid.m_over_n_values) {
          LambdaPoint p;
          p.alpha1 = a;
          p.m_over_n = mn;
          points.push_back(p);
        }
      return points;
    case Method::smogn:
      if (grid.include_baseline_point) points.push_back(baseline_point());
      for (double a : grid.alpha1_values)
        for (double mn : grid.m_over_n_values)
          for (double s : grid.smogn_sigmas) {
            LambdaPoint p;
            p.alpha1 = a;
            p.m_over_n = mn;
            p.sigma = s;
            points.push_back(p);
          }
      return points;
    case Method::codsa:
    case Method::codsa_transfer:
      if (grid.include_baseline_point) points.push_back(baseline_point());
      for (double r : grid.r_values)
        for (double a : grid.alpha1_values)
          for (double mn : grid.m_over_n_values) {
            LambdaPoint p;
            p.r = r;
            p.alpha1 = a;
            p.m_over_n = mn;
            points.push_back(p);
          }
      return points;
    case Method::codsa_crossfit:
      if (grid.include_baseline_point) points.push_back(baseline_point());
      for (double a : grid.alpha1_values)
        for (double mn : grid.m_over_n_values) {
          LambdaPoint p;
          p.alpha1 = a;
          p.m_over_n = mn;
          points.push_back(p);
        }
      return points;
  }
  throw std::logic_error("unknown method");
}

struct ReplicateData {
  EvalCarve carve;
  std::optional<AutoencoderModel> transfer;
  std::uint64_t seed = 0;
};

struct TuneConfig {
  Method method = Method::baseline;
  GridSpec grid;
  GeneratorConfig gen;
  EstimatorConfig est;
  std::size_t smote_k_neighbors = 5;
  int crossfit_folds = 5;
  RunOptions run_options;
  int workers = 1;
};

struct TuneEntry {
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  LambdaPoint point;
  long m = 0;
  double val_metric = std::numeric_limits<double>::quiet_NaN();
  double test_metric = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> test_per_region;
  IndexReport indices;
};

struct TuneResult {
  std::vector<TuneEntry> entries;          // seed-major, grid-minor order
  std::vector<std::size_t> best_per_seed;  // index into entries
  MeanSe test_summary;                     // test metric at the per-seed best
  std::vector<MeanSe> region_test_summary;
};

namespace detail {

/// Validation-metric argmin with the documented tie-breaking: smaller m,
/// then smaller r, then alpha1 closest to q1. NaN metrics sort last.
inline bool better_entry(const TuneEntry& a, const TuneEntry& b, double q1) {
  const double va = std::isnan(a.val_metric) ? std::numeric_limits<double>::infinity()
                                             : a.val_metric;
  const double vb = std::isnan(b.val_metric) ? std::numeric_limits<double>::infinity()
                                             : b.val_metric;
  if (va != vb) return va < vb;
  if (a.m != b.m) return a.m < b.m;
  if (a.point.r != b.point.r) return a.point.r < b.point.r;
  return std::abs(a.point.alpha1 - q1) < std::abs(b.point.alpha1 - q1);
}

inline std::vector<double> alpha_from_alpha1(double alpha1, int num_regions) {
  if (num_regions != 2)
    throw std::invalid_argument("alpha1 grids require exactly two regions");
  return {alpha1, 1.0 - alpha1};
}

/// Per-replicate evaluation engine. Holds the generator / synthetic-sample
/// caches for one seed; all caches key on quantities the evaluated lambda
/// does not influence, so cached results equal direct run_codsa calls.
class SeedEvaluator {
 public:
  SeedEvaluator(const ReplicateData& rep, const TuneConfig& cfg)
      : rep_(rep), cfg_(cfg) {
    const auto stats = region_stats(rep_.carve.train);
    p_ = stats.proportions;
    n_ = static_cast<long>(rep_.carve.train.n());
    q_ = cfg_.run_options.q;
    if (q_.empty())
      q_.assign(p_.size(), 1.0 / static_cast<double>(p_.size()));
  }

  /// Pre-builds the generator cache for one r value (phase A of the pool).
  void prepare_generator(double r) {
    if (cfg_.method == Method::codsa_crossfit) {
      prepare_crossfit();
      return;
    }
    get_generator_cache(r);
  }

  std::vector<double> distinct_r(const std::vector<LambdaPoint>& points) const {
    std::vector<double> rs;
    for (const auto& pt : points) {
      if (pt.is_baseline || max_m_for(pt) == 0) continue;
      if (std::find(rs.begin(), rs.end(), pt.r) == rs.end()) rs.push_back(pt.r);
    }
    return rs;
  }

  TuneEntry evaluate(const LambdaPoint& pt) {
    TuneEntry entry;
    entry.seed = rep_.seed;
    entry.point = pt;
    entry.m = pt.is_baseline ? 0 : std::lround(pt.m_over_n * static_cast<double>(n_));

    Predictor predictor = fit_point(pt, entry);
    auto val_metrics = evaluate_predictor(predictor, rep_.carve.validation);
    auto test_metrics = evaluate_predictor(predictor, rep_.carve.test);
    entry.val_metric = val_metrics.overall.value_or(
        std::numeric_limits<double>::quiet_NaN());
    entry.test_metric = test_metrics.overall.value_or(
        std::numeric_limits<double>::quiet_NaN());
    for (const auto& region_value : test_metrics.per_region)
      entry.test_per_region.push_back(
          region_value.value_or(std::numeric_limits<double>::quiet_NaN()));
    return entry;
  }

 private:
  struct GeneratorCache {
    GeneratorModel generator;
    Dataset reserved;
    std::size_t n_g = 0;
    std::vector<Dataset> region_rows;  // per region, max-quota prefix pool
    std::vector<double> tau_hat;
  };

  struct CrossfitCache {
    std::vector<Dataset> fold_data;                 // estimation folds
    std::vector<GeneratorModel> fold_generators;    // trained on the complement
    std::vector<std::vector<Dataset>> fold_region_rows;
  };

  long max_m_for(const LambdaPoint& pt) const {
    return pt.is_baseline ? 0 : std::lround(pt.m_over_n * static_cast<double>(n_));
  }

  long max_region_quota() const {
    // Upper bound on any region quota in the grid: the largest total m.
    double max_m = 0.0;
    for (double mn : cfg_.grid.m_over_n_values) max_m = std::max(max_m, mn);
    return std::lround(max_m * static_cast<double>(n_)) + 1;
  }

  const GeneratorCache& get_generator_cache(double r) {
    const auto key = static_cast<std::uint64_t>(std::llround(r * 1e9));
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = generators_.find(key);
      if (it != generators_.end()) return *it->second;
    }
    auto cache = std::make_unique<GeneratorCache>();
    auto split = stratified_split(rep_.carve.train, r, derive_seed(rep_.seed, "split"));
    if (split.generator_part.n() == 0)
      throw std::invalid_argument("tuner: empty generator split at r = " +
                                  std::to_string(r));
    cache->reserved = std::move(split.reserved_part);
    cache->n_g = split.generator_part.n();
    std::optional<AutoencoderModel> transfer;
    if (cfg_.method == Method::codsa_transfer) {
      if (!rep_.transfer)
        throw std::invalid_argument("tuner: transfer method without a pretrained autoencoder");
      transfer = rep_.transfer;
    }
    cache->generator = train_generator(split.generator_part, cfg_.gen, transfer,
                                       derive_seed(rep_.seed, "generator", key));
    const auto synth_seed = derive_seed(rep_.seed, "synthesis", key);
    const int K = rep_.carve.train.num_regions;
    cache->region_rows.resize(static_cast<std::size_t>(K));
    for (int k = 1; k <= K; ++k)
      cache->region_rows[static_cast<std::size_t>(k - 1)] =
          synthesize_region(cache->generator, k, max_region_quota(), synth_seed);
    if (cfg_.run_options.tau_samples > 0 && cache->reserved.n() > 0)
      cache->tau_hat = estimate_tau(cache->generator, cache->reserved,
                                    cfg_.run_options.tau_samples,
                                    cfg_.run_options.tau_projections,
                                    derive_seed(rep_.seed, "tau-root", key));
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = generators_.try_emplace(key, std::move(cache));
    return *it->second;
  }

  void prepare_crossfit() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (crossfit_) return;
    }
    auto cache = std::make_unique<CrossfitCache>();
    const Dataset& train = rep_.carve.train;
    const int folds = cfg_.crossfit_folds;
    std::vector<std::vector<std::size_t>> fold_idx(static_cast<std::size_t>(folds));
    for (int k = 1; k <= train.num_regions; ++k) {
      auto rows = train.rows_in_region(k);
      Rng rng(derive_seed(rep_.seed, "fold", static_cast<std::uint64_t>(k)));
      auto order = shuffled_indices(rows.size(), rng);
      for (std::size_t i = 0; i < rows.size(); ++i)
        fold_idx[i % static_cast<std::size_t>(folds)].push_back(rows[order[i]]);
    }
    for (int f = 0; f < folds; ++f) {
      auto& fold = fold_idx[static_cast<std::size_t>(f)];
      std::sort(fold.begin(), fold.end());
      std::vector<std::size_t> rest;
      for (int g = 0; g < folds; ++g)
        if (g != f)
          rest.insert(rest.end(), fold_idx[static_cast<std::size_t>(g)].begin(),
                      fold_idx[static_cast<std::size_t>(g)].end());
      std::sort(rest.begin(), rest.end());
      cache->fold_data.push_back(train.select(fold));
      cache->fold_generators.push_back(
          train_generator(train.select(rest), cfg_.gen, rep_.transfer,
                          derive_seed(rep_.seed, "cf-generator",
                                      static_cast<std::uint64_t>(f))));
      std::vector<Dataset> region_rows;
      const auto synth_seed =
          derive_seed(rep_.seed, "cf-synthesis", static_cast<std::uint64_t>(f));
      for (int k = 1; k <= train.num_regions; ++k)
        region_rows.push_back(synthesize_region(cache->fold_generators.back(), k,
                                                max_region_quota(), synth_seed));
      cache->fold_region_rows.push_back(std::move(region_rows));
    }
    std::lock_guard<std::mutex> lock(mutex_);
    if (!crossfit_) crossfit_ = std::move(cache);
  }

  static Dataset slice_quotas(const std::vector<Dataset>& region_rows,
                              const std::vector<long>& quotas) {
    Dataset out = Dataset::empty_like(region_rows.front());
    for (std::size_t k = 0; k < region_rows.size(); ++k) {
      const auto take = static_cast<std::size_t>(quotas[k]);
      if (take == 0) continue;
      if (take > region_rows[k].n())
        throw std::logic_error("tuner: synthetic cache shorter than a quota");
      std::vector<std::size_t> idx(take);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      out = mix(out, region_rows[k].select(idx));
    }
    return out;
  }

  Predictor fit_point(const LambdaPoint& pt, TuneEntry& entry) {
    const Dataset& train = rep_.carve.train;
    const Dataset& val = rep_.carve.validation;
    const long m = entry.m;
    const int K = train.num_regions;

    if (pt.is_baseline || m == 0) {
      entry.indices.domain_index = domain_index(p_, 0, p_, n_, 0.0, q_);
      entry.indices.generation_index = 0.0;
      entry.indices.tau_hat.assign(p_.size(), std::numeric_limits<double>::quiet_NaN());
      return fit_estimator(train, val, cfg_.est, derive_seed(rep_.seed, "estimator"));
    }

    const auto alpha = alpha_from_alpha1(pt.alpha1, K);
    const auto quotas = largest_remainder_quotas(alpha, m);

    if (cfg_.method == Method::smote || cfg_.method == Method::adasyn ||
        cfg_.method == Method::smogn) {
      Dataset synth = Dataset::empty_like(train);
      for (int k = 1; k <= K; ++k) {
        const long quota = quotas[static_cast<std::size_t>(k - 1)];
        if (quota == 0) continue;
        OversampleResult part;
        const auto region_seed =
            derive_seed(rep_.seed, "oversample", static_cast<std::uint64_t>(k));
        if (cfg_.method == Method::smote)
          part = smote(train, k, static_cast<std::size_t>(quota),
                       cfg_.smote_k_neighbors, region_seed);
        else if (cfg_.method == Method::adasyn)
          part = adasyn(train, k, static_cast<std::size_t>(quota),
                        cfg_.smote_k_neighbors, region_seed);
        else
          part = smogn(train, k, static_cast<std::size_t>(quota), pt.sigma, region_seed);
        synth = mix(synth, part.synthetic);
      }
      const Dataset augmented = mix(train, synth);
      entry.indices.domain_index = domain_index(alpha, m, p_, n_, 0.0, q_,
                                                &entry.indices.alpha_tilde);
      entry.indices.generation_index = std::numeric_limits<double>::quiet_NaN();
      return fit_estimator(augmented, val, cfg_.est,
                           derive_seed(rep_.seed, "estimator"));
    }

    if (cfg_.method == Method::codsa_crossfit) {
      prepare_crossfit();
      Predictor ensemble;
      for (std::size_t f = 0; f < crossfit_->fold_data.size(); ++f) {
        const Dataset synth = slice_quotas(crossfit_->fold_region_rows[f], quotas);
        const Dataset augmented = mix(crossfit_->fold_data[f], synth);
        auto member = fit_estimator(augmented, val, cfg_.est,
                                    derive_seed(rep_.seed, "cf-estimator", f));
        ensemble.classifiers.insert(ensemble.classifiers.end(),
                                    member.classifiers.begin(),
                                    member.classifiers.end());
        ensemble.forests.insert(ensemble.forests.end(), member.forests.begin(),
                                member.forests.end());
        ensemble.regressors.insert(ensemble.regressors.end(),
                                   member.regressors.begin(), member.regressors.end());
      }
      const double r_eff = 1.0 - 1.0 / static_cast<double>(cfg_.crossfit_folds);
      entry.indices.domain_index =
          domain_index(alpha, m, p_, n_, r_eff, q_, &entry.indices.alpha_tilde);
      return ensemble;
    }

    const auto& cache = get_generator_cache(pt.r);
    const Dataset synth = slice_quotas(cache.region_rows, quotas);
    const Dataset augmented = mix(cache.reserved, synth);
    entry.indices.domain_index =
        domain_index(alpha, m, p_, n_, pt.r, q_, &entry.indices.alpha_tilde);
    entry.indices.tau_hat = cache.tau_hat.empty()
                                ? std::vector<double>(p_.size(),
                                                      std::numeric_limits<double>::quiet_NaN())
                                : cache.tau_hat;
    bool tau_complete = !cache.tau_hat.empty();
    for (double t : entry.indices.tau_hat)
      if (!std::isfinite(t)) tau_complete = false;
    if (tau_complete)
      entry.indices.generation_index = generation_index(
          alpha, m, static_cast<long>(cache.reserved.n()), entry.indices.tau_hat);
    return fit_estimator(augmented, val, cfg_.est, derive_seed(rep_.seed, "estimator"));
  }

  const ReplicateData& rep_;
  const TuneConfig& cfg_;
  std::vector<double> p_, q_;
  long n_ = 0;
  std::mutex mutex_;
  std::map<std::uint64_t, std::unique_ptr<GeneratorCache>> generators_;
  std::unique_ptr<CrossfitCache> crossfit_;
};

}  // namespace detail

/// Per-seed argmin over the recorded validation metrics plus the summary
/// aggregation. Entries must be seed-major with `n_points` per seed.
inline void finalize_selection(TuneResult& result, std::size_t n_points,
                               std::size_t n_seeds, double q1) {
  result.best_per_seed.clear();
  result.region_test_summary.clear();
  std::vector<double> test_at_best;
  std::vector<std::vector<double>> region_at_best;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    std::size_t best = s * n_points;
    for (std::size_t pi = 1; pi < n_points; ++pi) {
      const std::size_t j = s * n_points + pi;
      if (detail::better_entry(result.entries[j], result.entries[best], q1)) best = j;
    }
    result.best_per_seed.push_back(best);
    test_at_best.push_back(result.entries[best].test_metric);
    region_at_best.push_back(result.entries[best].test_per_region);
  }
  result.test_summary = aggregate_replicates(test_at_best);
  if (!region_at_best.empty() && !region_at_best.front().empty()) {
    const std::size_t K = region_at_best.front().size();
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<double> vals;
      for (const auto& regions : region_at_best) vals.push_back(regions[k]);
      result.region_test_summary.push_back(aggregate_replicates(vals));
    }
  }
}

/// Grid search over lambda for one method across replicate seeds. Phase A
/// builds the per-(seed, r) generator caches on the worker pool; phase B
/// evaluates every (lambda, seed) job. Outputs are keyed by job index and
/// all randomness flows through content-derived streams, so worker count
/// never changes the tables.
inline TuneResult tune(const std::vector<ReplicateData>& replicates,
                       const TuneConfig& cfg) {
  if (replicates.empty()) throw std::invalid_argument("tune: no replicates");
  const auto points = enumerate_points(cfg.grid, cfg.method);
  if (points.empty()) throw std::invalid_argument("tune: empty grid");

  std::vector<std::unique_ptr<detail::SeedEvaluator>> evaluators;
  evaluators.reserve(replicates.size());
  for (const auto& rep : replicates)
    evaluators.push_back(std::make_unique<detail::SeedEvaluator>(rep, cfg));

  // Phase A: generator caches per (seed, r).
  if (cfg.method == Method::codsa || cfg.method == Method::codsa_transfer) {
    std::vector<std::pair<std::size_t, double>> jobs;
    for (std::size_t s = 0; s < replicates.size(); ++s)
      for (double r : evaluators[s]->distinct_r(points)) jobs.emplace_back(s, r);
    parallel_for(jobs.size(), cfg.workers, [&](std::size_t j) {
      evaluators[jobs[j].first]->prepare_generator(jobs[j].second);
    });
  } else if (cfg.method == Method::codsa_crossfit) {
    bool any_m = false;
    for (const auto& pt : points)
      if (!pt.is_baseline && pt.m_over_n > 0) any_m = true;
    if (any_m)
      parallel_for(replicates.size(), cfg.workers,
                   [&](std::size_t s) { evaluators[s]->prepare_generator(0.0); });
  }

  // Phase B: all (lambda, seed) evaluations.
  TuneResult result;
  result.entries.resize(points.size() * replicates.size());
  parallel_for(result.entries.size(), cfg.workers, [&](std::size_t j) {
    const std::size_t s = j / points.size();
    const std::size_t pi = j % points.size();
    TuneEntry entry = evaluators[s]->evaluate(points[pi]);
    entry.seed_index = s;
    result.entries[j] = std::move(entry);
  });

  const double q1 = cfg.run_options.q.empty() ? 0.5 : cfg.run_options.q[0];
  finalize_selection(result, points.size(), replicates.size(), q1);
  return result;
}

/// Marginal sweep over one hyperparameter: for each grid value, the other
/// two are optimized on validation within each seed, and the chosen test
/// metric is aggregated across seeds.
struct SweepRow {
  double value = 0.0;
  MeanSe test;
  std::vector<double> per_seed_test;
};

enum class SweepParam { m_over_n, alpha1, r };

inline std::string sweep_param_name(SweepParam p) {
  switch (p) {
    case SweepParam::m_over_n: return "m_over_n";
    case SweepParam::alpha1: return "alpha1";
    case SweepParam::r: return "r";
  }
  throw std::logic_error("unknown sweep param");
}

inline std::vector<SweepRow> marginal_sweep(const TuneResult& tuned, SweepParam param,
                                            const std::vector<double>& values,
                                            std::size_t n_seeds, double q1 = 0.5) {
  std::vector<SweepRow> rows;
  for (double value : values) {
    SweepRow row;
    row.value = value;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const TuneEntry* best = nullptr;
      for (const auto& entry : tuned.entries) {
        if (entry.seed_index != s || entry.point.is_baseline) continue;
        const double have = param == SweepParam::m_over_n ? entry.point.m_over_n
                            : param == SweepParam::alpha1 ? entry.point.alpha1
                                                          : entry.point.r;
        if (std::abs(have - value) > 1e-12) continue;
        if (!best || detail::better_entry(entry, *best, q1)) best = &entry;
      }
      if (best) row.per_seed_test.push_back(best->test_metric);
    }
    if (!row.per_seed_test.empty()) {
      row.test = aggregate_replicates(row.per_seed_test);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace codsa
