#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "codsa/matrix.hpp"
#include "codsa/rng.hpp"

namespace codsa {

/// Exact Wasserstein-1 between two 1-D empirical measures: the area between
/// their empirical CDFs. For equal sample sizes this is the mean absolute
/// difference of the sorted samples.
inline double w1_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("w1_1d: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double step_a = 1.0 / static_cast<double>(a.size());
  const double step_b = 1.0 / static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double fa = 0.0, fb = 0.0;
  double prev = std::min(a[0], b[0]);
  double total = 0.0;
  while (ia < a.size() || ib < b.size()) {
    double x;
    if (ib >= b.size() || (ia < a.size() && a[ia] <= b[ib])) {
      x = a[ia];
    } else {
      x = b[ib];
    }
    total += std::abs(fa - fb) * (x - prev);
    prev = x;
    while (ia < a.size() && a[ia] == x) {
      fa += step_a;
      ++ia;
    }
    while (ib < b.size() && b[ib] == x) {
      fb += step_b;
      ++ib;
    }
  }
  return total;
}

/// Sliced W1 proxy: the average over random unit projections of the exact
/// 1-D W1 between the projected samples.
inline double sliced_w1(const Matrix& a, const Matrix& b, int n_projections,
                        std::uint64_t seed) {
  if (a.cols() != b.cols()) throw std::invalid_argument("sliced_w1: dim mismatch");
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("sliced_w1: empty sample");
  if (n_projections < 1) throw std::invalid_argument("sliced_w1: need projections");
  Rng rng(derive_seed(seed, "sliced-w1"));
  const std::size_t d = a.cols();
  std::vector<double> dir(d);
  std::vector<double> pa(a.rows()), pb(b.rows());
  double total = 0.0;
  for (int p = 0; p < n_projections; ++p) {
    double norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dir[j] = rng.normal();
      norm += dir[j] * dir[j];
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      dir[0] = 1.0;
      norm = 1.0;
    }
    for (std::size_t j = 0; j < d; ++j) dir[j] /= norm;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += a(i, j) * dir[j];
      pa[i] = s;
    }
    for (std::size_t i = 0; i < b.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += b(i, j) * dir[j];
      pb[i] = s;
    }
    total += w1_1d(pa, pb);
  }
  return total / static_cast<double>(n_projections);
}

}  // namespace codsa
