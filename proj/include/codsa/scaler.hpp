#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "codsa/matrix.hpp"

namespace codsa {

/// Per-column z-scoring fitted on one sample and applied elsewhere.
/// Near-constant columns keep scale 1 so the transform stays invertible.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& data) {
    Standardizer s;
    s.mean.assign(data.cols(), 0.0);
    s.scale.assign(data.cols(), 1.0);
    if (data.rows() == 0) return s;
    for (std::size_t i = 0; i < data.rows(); ++i)
      for (std::size_t j = 0; j < data.cols(); ++j) s.mean[j] += data(i, j);
    for (double& m : s.mean) m /= static_cast<double>(data.rows());
    std::vector<double> ss(data.cols(), 0.0);
    for (std::size_t i = 0; i < data.rows(); ++i)
      for (std::size_t j = 0; j < data.cols(); ++j) {
        const double d = data(i, j) - s.mean[j];
        ss[j] += d * d;
      }
    for (std::size_t j = 0; j < data.cols(); ++j) {
      const double sd = std::sqrt(ss[j] / static_cast<double>(data.rows()));
      s.scale[j] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }

  std::size_t dim() const { return mean.size(); }

  Matrix transform(const Matrix& data) const {
    if (data.cols() != dim()) throw std::invalid_argument("Standardizer: dim mismatch");
    Matrix out = data;
    for (std::size_t i = 0; i < out.rows(); ++i)
      for (std::size_t j = 0; j < out.cols(); ++j)
        out(i, j) = (out(i, j) - mean[j]) / scale[j];
    return out;
  }

  Matrix inverse(const Matrix& data) const {
    if (data.cols() != dim()) throw std::invalid_argument("Standardizer: dim mismatch");
    Matrix out = data;
    for (std::size_t i = 0; i < out.rows(); ++i)
      for (std::size_t j = 0; j < out.cols(); ++j)
        out(i, j) = out(i, j) * scale[j] + mean[j];
    return out;
  }
};

}  // namespace codsa
