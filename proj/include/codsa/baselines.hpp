#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "codsa/dataset.hpp"
#include "codsa/rng.hpp"

namespace codsa {

/// Synthetic rows from a classical oversampler, with the source rows that
/// produced each synthetic one (original dataset indices) kept for testing.
struct OversampleResult {
  Dataset synthetic;
  std::vector<std::pair<std::size_t, std::size_t>> parents;  // (a, b) per row
};

namespace detail {

inline double sq_distance(const Matrix& f, std::size_t i, std::size_t j) {
  const double* a = f.row(i);
  const double* b = f.row(j);
  double d = 0.0;
  for (std::size_t c = 0; c < f.cols(); ++c) {
    const double diff = a[c] - b[c];
    d += diff * diff;
  }
  return d;
}

/// Indices of the k nearest rows to `query` among `candidates` (self
/// excluded), exact brute force; distance ties broken by row index.
inline std::vector<std::size_t> k_nearest(const Dataset& data, std::size_t query,
                                          const std::vector<std::size_t>& candidates,
                                          std::size_t k) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(candidates.size());
  for (std::size_t c : candidates) {
    if (c == query) continue;
    dist.emplace_back(sq_distance(data.features, query, c), c);
  }
  const std::size_t take = std::min(k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(take),
                    dist.end());
  std::vector<std::size_t> out(take);
  for (std::size_t i = 0; i < take; ++i) out[i] = dist[i].second;
  return out;
}

inline Dataset make_synth_shell(const Dataset& src, std::size_t n_new) {
  Dataset synth;
  synth.features = Matrix(n_new, src.dim());
  synth.target_kind = src.target_kind;
  synth.num_regions = src.num_regions;
  synth.region.reserve(n_new);
  synth.provenance.assign(n_new, Provenance::synthetic);
  return synth;
}

inline void interpolate_row(const Dataset& data, std::size_t a, std::size_t b,
                            double lam, Dataset& synth, std::size_t row, int region) {
  for (std::size_t c = 0; c < data.dim(); ++c)
    synth.features(row, c) =
        data.features(a, c) + lam * (data.features(b, c) - data.features(a, c));
  if (data.target_kind == TargetKind::binary)
    synth.target.push_back(data.target[a]);
  else if (data.target_kind == TargetKind::continuous)
    synth.target.push_back(data.target[a] + lam * (data.target[b] - data.target[a]));
  synth.region.push_back(region);
}

}  // namespace detail

/// SMOTE within region k: each synthetic row is a + lam (b - a) with a drawn
/// uniformly from the region, b one of its k_neighbors nearest same-region
/// rows, lam ~ U(0,1).
inline OversampleResult smote(const Dataset& data, int region_k, std::size_t n_new,
                              std::size_t k_neighbors = 5, std::uint64_t seed = 0) {
  auto rows = data.rows_in_region(region_k);
  if (n_new > 0 && rows.size() <= k_neighbors)
    throw std::runtime_error("smote: region " + std::to_string(region_k) + " has " +
                             std::to_string(rows.size()) + " rows, needs > " +
                             std::to_string(k_neighbors));
  OversampleResult out;
  out.synthetic = detail::make_synth_shell(data, n_new);
  if (n_new == 0) return out;

  std::vector<std::vector<std::size_t>> neighbors(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    neighbors[i] = detail::k_nearest(data, rows[i], rows, k_neighbors);

  Rng rng(derive_seed(seed, "smote", static_cast<std::uint64_t>(region_k)));
  for (std::size_t s = 0; s < n_new; ++s) {
    const std::size_t ai = rng.uniform_index(rows.size());
    const std::size_t a = rows[ai];
    const std::size_t b = neighbors[ai][rng.uniform_index(neighbors[ai].size())];
    const double lam = rng.uniform();
    detail::interpolate_row(data, a, b, lam, out.synthetic, s, region_k);
    out.parents.emplace_back(a, b);
  }
  return out;
}

/// ADASYN within region k: per-point quotas proportional to the local
/// non-region ratio r_i = (#other-region rows among the k nearest)/k,
/// normalized by largest remainder; interpolation as in SMOTE. When every
/// r_i is zero the quotas fall back to uniform.
inline OversampleResult adasyn(const Dataset& data, int region_k, std::size_t n_new,
                               std::size_t k_neighbors = 5, std::uint64_t seed = 0) {
  auto rows = data.rows_in_region(region_k);
  if (n_new > 0 && rows.size() <= k_neighbors)
    throw std::runtime_error("adasyn: region " + std::to_string(region_k) + " has " +
                             std::to_string(rows.size()) + " rows, needs > " +
                             std::to_string(k_neighbors));
  OversampleResult out;
  out.synthetic = detail::make_synth_shell(data, n_new);
  if (n_new == 0) return out;

  std::vector<std::size_t> all(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) all[i] = i;
  std::vector<double> ratio(rows.size(), 0.0);
  double ratio_sum = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto nn = detail::k_nearest(data, rows[i], all, k_neighbors);
    std::size_t other = 0;
    for (std::size_t j : nn)
      if (data.region[j] != region_k) ++other;
    ratio[i] = static_cast<double>(other) / static_cast<double>(k_neighbors);
    ratio_sum += ratio[i];
  }
  if (ratio_sum <= 0.0) ratio.assign(rows.size(), 1.0);  // uniform fallback
  auto quotas = largest_remainder_quotas(ratio, static_cast<long>(n_new));

  std::vector<std::vector<std::size_t>> neighbors(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    neighbors[i] = detail::k_nearest(data, rows[i], rows, k_neighbors);

  Rng rng(derive_seed(seed, "adasyn", static_cast<std::uint64_t>(region_k)));
  std::size_t s = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (long q = 0; q < quotas[i]; ++q) {
      const std::size_t a = rows[i];
      const std::size_t b = neighbors[i][rng.uniform_index(neighbors[i].size())];
      const double lam = rng.uniform();
      detail::interpolate_row(data, a, b, lam, out.synthetic, s, region_k);
      out.parents.emplace_back(a, b);
      ++s;
    }
  }
  return out;
}

/// SMOGN (reduced form): Gaussian-perturbed replicas of region-k rows.
/// scale is the per-column sample standard deviation of the region, applied
/// to features and target alike; source rows drawn uniformly with replacement.
inline OversampleResult smogn(const Dataset& data, int region_k, std::size_t n_new,
                              double perturb_sigma, std::uint64_t seed = 0) {
  if (perturb_sigma < 0.0) throw std::invalid_argument("smogn: sigma must be >= 0");
  auto rows = data.rows_in_region(region_k);
  if (rows.empty() && n_new > 0)
    throw std::runtime_error("smogn: region " + std::to_string(region_k) + " is empty");
  OversampleResult out;
  out.synthetic = detail::make_synth_shell(data, n_new);
  if (n_new == 0) return out;

  const std::size_t d = data.dim();
  const bool has_y = data.target_kind != TargetKind::none;
  std::vector<double> scale(d + (has_y ? 1 : 0), 0.0);
  {
    std::vector<double> mean(scale.size(), 0.0);
    for (std::size_t r : rows) {
      for (std::size_t c = 0; c < d; ++c) mean[c] += data.features(r, c);
      if (has_y) mean[d] += data.target[r];
    }
    for (double& m : mean) m /= static_cast<double>(rows.size());
    if (rows.size() > 1) {
      for (std::size_t r : rows) {
        for (std::size_t c = 0; c < d; ++c) {
          const double diff = data.features(r, c) - mean[c];
          scale[c] += diff * diff;
        }
        if (has_y) {
          const double diff = data.target[r] - mean[d];
          scale[d] += diff * diff;
        }
      }
      for (double& s : scale) s = std::sqrt(s / static_cast<double>(rows.size() - 1));
    }
  }

  Rng rng(derive_seed(seed, "smogn", static_cast<std::uint64_t>(region_k)));
  for (std::size_t s = 0; s < n_new; ++s) {
    const std::size_t src = rows[rng.uniform_index(rows.size())];
    for (std::size_t c = 0; c < d; ++c)
      out.synthetic.features(s, c) =
          data.features(src, c) + perturb_sigma * rng.normal() * scale[c];
    if (has_y) {
      double y = data.target[src];
      if (data.target_kind == TargetKind::continuous)
        y += perturb_sigma * rng.normal() * scale[d];
      out.synthetic.target.push_back(y);
    }
    out.synthetic.region.push_back(region_k);
    out.parents.emplace_back(src, src);
  }
  return out;
}

}  // namespace codsa
