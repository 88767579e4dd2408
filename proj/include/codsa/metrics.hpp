#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "codsa/nn.hpp"

namespace codsa {

/// Per-region metric values plus the balanced-Q "overall". A region missing
/// from the evaluation set carries no value.
struct RegionBreakdown {
  std::vector<std::optional<double>> per_region;  // index k-1
  std::optional<double> overall;

  double region(int k) const {
    const auto& v = per_region.at(static_cast<std::size_t>(k - 1));
    if (!v) throw std::runtime_error("metric missing for region " + std::to_string(k));
    return *v;
  }
};

/// Mean logistic loss per region; overall is the unweighted mean of the
/// region means, i.e. evaluation under balanced Q.
inline RegionBreakdown cross_entropy_by_region(const std::vector<double>& probs,
                                               const std::vector<double>& labels,
                                               const std::vector<int>& regions,
                                               int num_regions) {
  if (probs.size() != labels.size() || probs.size() != regions.size())
    throw std::invalid_argument("cross_entropy_by_region: length mismatch");
  std::vector<double> sums(static_cast<std::size_t>(num_regions), 0.0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_regions), 0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = clip_prob(probs[i]);
    const double y = labels[i];
    const double ce = -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    sums[static_cast<std::size_t>(regions[i] - 1)] += ce;
    counts[static_cast<std::size_t>(regions[i] - 1)] += 1;
  }
  RegionBreakdown out;
  out.per_region.resize(static_cast<std::size_t>(num_regions));
  double total = 0.0;
  int present = 0;
  for (std::size_t k = 0; k < sums.size(); ++k) {
    if (counts[k] == 0) continue;
    out.per_region[k] = sums[k] / static_cast<double>(counts[k]);
    total += *out.per_region[k];
    ++present;
  }
  if (present > 0) out.overall = total / static_cast<double>(present);
  return out;
}

/// Root mean squared error per region; overall is the RMSE over the pooled
/// evaluation set (equal to the region-weighted form when regions balance).
inline RegionBreakdown rmse_by_region(const std::vector<double>& preds,
                                      const std::vector<double>& targets,
                                      const std::vector<int>& regions,
                                      int num_regions) {
  if (preds.size() != targets.size() || preds.size() != regions.size())
    throw std::invalid_argument("rmse_by_region: length mismatch");
  std::vector<double> sums(static_cast<std::size_t>(num_regions), 0.0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_regions), 0);
  double pooled = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double r = preds[i] - targets[i];
    sums[static_cast<std::size_t>(regions[i] - 1)] += r * r;
    counts[static_cast<std::size_t>(regions[i] - 1)] += 1;
    pooled += r * r;
  }
  RegionBreakdown out;
  out.per_region.resize(static_cast<std::size_t>(num_regions));
  for (std::size_t k = 0; k < sums.size(); ++k)
    if (counts[k] > 0)
      out.per_region[k] = std::sqrt(sums[k] / static_cast<double>(counts[k]));
  if (!preds.empty())
    out.overall = std::sqrt(pooled / static_cast<double>(preds.size()));
  return out;
}

/// Cohen's kappa: (p_o - p_e) / (1 - p_e) with chance agreement from the
/// marginal products. Degenerate marginals (p_e = 1) have no defined value.
inline std::optional<double> cohen_kappa(const std::vector<int>& pred_classes,
                                         const std::vector<int>& true_classes) {
  if (pred_classes.size() != true_classes.size())
    throw std::invalid_argument("cohen_kappa: length mismatch");
  if (pred_classes.empty()) throw std::invalid_argument("cohen_kappa: empty input");
  int max_class = 0;
  for (std::size_t i = 0; i < pred_classes.size(); ++i) {
    max_class = std::max({max_class, pred_classes[i], true_classes[i]});
    if (pred_classes[i] < 0 || true_classes[i] < 0)
      throw std::invalid_argument("cohen_kappa: classes must be non-negative");
  }
  const std::size_t num_classes = static_cast<std::size_t>(max_class) + 1;
  const double n = static_cast<double>(pred_classes.size());
  std::vector<double> pred_marginal(num_classes, 0.0), true_marginal(num_classes, 0.0);
  double agree = 0.0;
  for (std::size_t i = 0; i < pred_classes.size(); ++i) {
    pred_marginal[static_cast<std::size_t>(pred_classes[i])] += 1.0;
    true_marginal[static_cast<std::size_t>(true_classes[i])] += 1.0;
    if (pred_classes[i] == true_classes[i]) agree += 1.0;
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c)
    p_e += (pred_marginal[c] / n) * (true_marginal[c] / n);
  if (std::abs(1.0 - p_e) < 1e-15) return std::nullopt;
  return (p_o - p_e) / (1.0 - p_e);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

/// Mean and standard error (sample sd / sqrt(R)) across replicate values.
inline MeanSe aggregate_replicates(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("aggregate_replicates: empty input");
  MeanSe out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() == 1) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  out.se = sd / std::sqrt(static_cast<double>(values.size()));
  return out;
}

}  // namespace codsa
