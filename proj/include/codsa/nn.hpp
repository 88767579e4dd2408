#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "codsa/matrix.hpp"
#include "codsa/rng.hpp"

namespace codsa {

enum class OutputHead { identity, sigmoid, softmax };

inline std::string head_name(OutputHead head) {
  switch (head) {
    case OutputHead::identity: return "identity";
    case OutputHead::sigmoid: return "sigmoid";
    case OutputHead::softmax: return "softmax";
  }
  throw std::logic_error("unknown head");
}

inline OutputHead head_from_name(const std::string& name) {
  if (name == "identity") return OutputHead::identity;
  if (name == "sigmoid") return OutputHead::sigmoid;
  if (name == "softmax") return OutputHead::softmax;
  throw std::invalid_argument("unknown output head: " + name);
}

/// Probabilities fed into log-losses are clipped to this margin so that
/// confidently wrong predictions keep the loss finite.
inline constexpr double kProbClip = 1e-7;

inline double clip_prob(double p) {
  return std::clamp(p, kProbClip, 1.0 - kProbClip);
}

/// Architecture of a fully connected ReLU network: sizes of every layer
/// (input first, output last) plus the output head.
struct MlpSpec {
  std::vector<int> layer_sizes;
  OutputHead head = OutputHead::identity;

  void validate() const {
    if (layer_sizes.size() < 2)
      throw std::invalid_argument("MlpSpec needs at least input and output sizes");
    for (int s : layer_sizes)
      if (s < 1) throw std::invalid_argument("MlpSpec: layer sizes must be >= 1");
  }

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return layer_sizes.size() - 1; }
};

/// Weights A_i (out×in) and biases b_i for every affine layer.
struct MlpParams {
  MlpSpec spec;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  /// He-uniform weights (bound sqrt(6/fan_in)) and zero biases.
  static MlpParams init(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    MlpParams p;
    p.spec = spec;
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
      const std::size_t fan_in = static_cast<std::size_t>(spec.layer_sizes[l]);
      const std::size_t fan_out = static_cast<std::size_t>(spec.layer_sizes[l + 1]);
      Matrix w(fan_out, fan_in);
      Rng rng(derive_seed(seed, "init", l));
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (double& v : w.storage()) v = rng.uniform(-bound, bound);
      p.weights.push_back(std::move(w));
      p.biases.emplace_back(fan_out, 0.0);
    }
    return p;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
  }

  bool all_finite() const {
    for (const auto& w : weights)
      if (!w.all_finite()) return false;
    for (const auto& b : biases)
      for (double v : b)
        if (!std::isfinite(v)) return false;
    return true;
  }
};

/// Gradients shaped like MlpParams.
struct MlpGrads {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  static MlpGrads zeros_like(const MlpParams& p) {
    MlpGrads g;
    for (const auto& w : p.weights) g.weights.emplace_back(w.rows(), w.cols());
    for (const auto& b : p.biases) g.biases.emplace_back(b.size(), 0.0);
    return g;
  }

  bool all_finite() const {
    for (const auto& w : weights)
      if (!w.all_finite()) return false;
    for (const auto& b : biases)
      for (double v : b)
        if (!std::isfinite(v)) return false;
    return true;
  }
};

/// Per-layer inputs kept from a forward pass; required by mlp_backward.
struct ForwardCache {
  std::vector<Matrix> layer_inputs;  // layer_inputs[l] feeds affine layer l
  Matrix logits;                     // last affine output, before the head
  Matrix output;                     // after the head

  bool empty() const { return layer_inputs.empty(); }
};

namespace detail {

inline void affine_forward(const Matrix& input, const Matrix& w,
                           const std::vector<double>& b, Matrix& out) {
  matmul_nt(input, w, out);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double* row = out.row(i);
    for (std::size_t j = 0; j < out.cols(); ++j) row[j] += b[j];
  }
}

inline void relu_inplace(Matrix& m) {
  for (double& v : m.storage()) v = v > 0.0 ? v : 0.0;
}

inline void apply_head(OutputHead head, const Matrix& logits, Matrix& out) {
  out = logits;
  switch (head) {
    case OutputHead::identity:
      break;
    case OutputHead::sigmoid:
      for (double& v : out.storage()) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case OutputHead::softmax:
      for (std::size_t i = 0; i < out.rows(); ++i) {
        double* row = out.row(i);
        double mx = row[0];
        for (std::size_t j = 1; j < out.cols(); ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < out.cols(); ++j) {
          row[j] = std::exp(row[j] - mx);
          sum += row[j];
        }
        for (std::size_t j = 0; j < out.cols(); ++j) row[j] /= sum;
      }
      break;
  }
}

}  // namespace detail

inline void check_input_dim(const MlpParams& params, const Matrix& batch) {
  if (static_cast<int>(batch.cols()) != params.spec.input_dim())
    throw std::invalid_argument(
        "mlp_forward: batch has " + std::to_string(batch.cols()) +
        " columns, spec expects " + std::to_string(params.spec.input_dim()));
}

/// Forward pass keeping the per-layer inputs needed for backprop.
inline ForwardCache mlp_forward_cached(const MlpParams& params,
                                       const Matrix& batch) {
  check_input_dim(params, batch);
  ForwardCache cache;
  cache.layer_inputs.reserve(params.spec.num_layers());
  Matrix current = batch;
  const std::size_t n_layers = params.spec.num_layers();
  for (std::size_t l = 0; l < n_layers; ++l) {
    cache.layer_inputs.push_back(current);
    Matrix z;
    detail::affine_forward(cache.layer_inputs.back(), params.weights[l],
                           params.biases[l], z);
    if (l + 1 < n_layers) {
      detail::relu_inplace(z);
      current = std::move(z);
    } else {
      cache.logits = std::move(z);
    }
  }
  detail::apply_head(params.spec.head, cache.logits, cache.output);
  return cache;
}

inline Matrix mlp_forward(const MlpParams& params, const Matrix& batch) {
  return mlp_forward_cached(params, batch).output;
}

/// Whether the upstream gradient is taken w.r.t. the head output or the
/// pre-head logits (the fused form used by the log-loss trainers).
enum class GradKind { wrt_output, wrt_logits };

/// Exact gradients of the scalar mean loss w.r.t. all weights and biases.
/// `upstream` must match cache.output (or cache.logits for wrt_logits).
/// When `input_grad` is given it receives dLoss/dInput.
inline MlpGrads mlp_backward(const MlpParams& params, const ForwardCache& cache,
                             const Matrix& upstream,
                             GradKind kind = GradKind::wrt_output,
                             Matrix* input_grad = nullptr) {
  if (cache.empty())
    throw std::logic_error("mlp_backward: forward cache is missing");
  const std::size_t n_layers = params.spec.num_layers();
  MlpGrads grads = MlpGrads::zeros_like(params);

  Matrix delta;
  if (kind == GradKind::wrt_logits) {
    delta = upstream;
  } else {
    switch (params.spec.head) {
      case OutputHead::identity:
        delta = upstream;
        break;
      case OutputHead::sigmoid: {
        delta = upstream;
        const Matrix& out = cache.output;
        for (std::size_t i = 0; i < delta.rows(); ++i)
          for (std::size_t j = 0; j < delta.cols(); ++j)
            delta(i, j) *= out(i, j) * (1.0 - out(i, j));
        break;
      }
      case OutputHead::softmax: {
        const Matrix& out = cache.output;
        delta = Matrix(out.rows(), out.cols());
        for (std::size_t i = 0; i < out.rows(); ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < out.cols(); ++j)
            dot += upstream(i, j) * out(i, j);
          for (std::size_t j = 0; j < out.cols(); ++j)
            delta(i, j) = out(i, j) * (upstream(i, j) - dot);
        }
        break;
      }
    }
  }

  for (std::size_t l = n_layers; l-- > 0;) {
    const Matrix& layer_in = cache.layer_inputs[l];
    matmul_tn(delta, layer_in, grads.weights[l]);
    auto& db = grads.biases[l];
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      const double* row = delta.row(i);
      for (std::size_t j = 0; j < delta.cols(); ++j) db[j] += row[j];
    }
    const bool need_down = l > 0 || input_grad != nullptr;
    if (!need_down) break;
    Matrix down;
    matmul(delta, params.weights[l], down);
    if (l > 0) {
      // layer_in is itself a ReLU output; zero entries carry zero gradient.
      for (std::size_t i = 0; i < down.rows(); ++i)
        for (std::size_t j = 0; j < down.cols(); ++j)
          if (layer_in(i, j) <= 0.0) down(i, j) = 0.0;
      delta = std::move(down);
    } else if (input_grad != nullptr) {
      *input_grad = std::move(down);
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Losses. All return the mean loss over the batch and its gradient w.r.t the
// predictions handed in.
// ---------------------------------------------------------------------------

struct LossValue {
  double value = 0.0;
  Matrix grad;
};

/// Mean over rows of the squared L2 residual; grad = (2/n)(pred - target).
inline LossValue loss_mse(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw std::invalid_argument("loss_mse: shape mismatch");
  LossValue out;
  out.grad = Matrix(pred.rows(), pred.cols());
  const double inv_n = pred.rows() > 0 ? 1.0 / static_cast<double>(pred.rows()) : 0.0;
  for (std::size_t i = 0; i < pred.rows(); ++i) {
    for (std::size_t j = 0; j < pred.cols(); ++j) {
      const double r = pred(i, j) - target(i, j);
      out.value += r * r * inv_n;
      out.grad(i, j) = 2.0 * r * inv_n;
    }
  }
  return out;
}

/// Binary cross-entropy on probabilities (n×1), labels in {0,1}. Probabilities
/// are clipped before the logs so the loss stays finite.
inline LossValue loss_logistic(const Matrix& prob, const std::vector<int>& labels) {
  if (prob.cols() != 1 || prob.rows() != labels.size())
    throw std::invalid_argument("loss_logistic: shape mismatch");
  LossValue out;
  out.grad = Matrix(prob.rows(), 1);
  const double inv_n = prob.rows() > 0 ? 1.0 / static_cast<double>(prob.rows()) : 0.0;
  for (std::size_t i = 0; i < prob.rows(); ++i) {
    const double p = clip_prob(prob(i, 0));
    const double y = labels[i] != 0 ? 1.0 : 0.0;
    out.value += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p)) * inv_n;
    out.grad(i, 0) = (p - y) / (p * (1.0 - p)) * inv_n;
  }
  return out;
}

/// Cross-entropy on raw logits (n×C); the gradient is w.r.t. the logits
/// (softmax fused in).
inline LossValue loss_softmax_ce(const Matrix& logits, const std::vector<int>& classes) {
  if (logits.rows() != classes.size())
    throw std::invalid_argument("loss_softmax_ce: shape mismatch");
  Matrix probs;
  detail::apply_head(OutputHead::softmax, logits, probs);
  LossValue out;
  out.grad = probs;
  const double inv_n = logits.rows() > 0 ? 1.0 / static_cast<double>(logits.rows()) : 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const int c = classes[i];
    if (c < 0 || static_cast<std::size_t>(c) >= logits.cols())
      throw std::invalid_argument("loss_softmax_ce: class index out of range");
    out.value += -std::log(clip_prob(probs(i, c))) * inv_n;
    out.grad(i, c) -= 1.0;
  }
  for (double& v : out.grad.storage()) v *= inv_n;
  return out;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  long t = 0;
  std::vector<Matrix> m_w, v_w;
  std::vector<std::vector<double>> m_b, v_b;

  static AdamState init(const MlpParams& params, AdamConfig cfg) {
    if (cfg.lr <= 0.0) throw std::invalid_argument("Adam: lr must be positive");
    AdamState s;
    s.cfg = cfg;
    for (const auto& w : params.weights) {
      s.m_w.emplace_back(w.rows(), w.cols());
      s.v_w.emplace_back(w.rows(), w.cols());
    }
    for (const auto& b : params.biases) {
      s.m_b.emplace_back(b.size(), 0.0);
      s.v_b.emplace_back(b.size(), 0.0);
    }
    return s;
  }
};

namespace detail {

inline void adam_update(double* p, double* m, double* v, const double* g,
                        std::size_t n, const AdamConfig& cfg, double bc1,
                        double bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

}  // namespace detail

/// One bias-corrected Adam step; increments state.t.
inline void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state) {
  if (!grads.all_finite())
    throw std::runtime_error("adam_step: non-finite gradient (training diverged)");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.t));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    detail::adam_update(params.weights[l].data(), state.m_w[l].data(),
                        state.v_w[l].data(), grads.weights[l].data(),
                        params.weights[l].size(), state.cfg, bc1, bc2);
    detail::adam_update(params.biases[l].data(), state.m_b[l].data(),
                        state.v_b[l].data(), grads.biases[l].data(),
                        params.biases[l].size(), state.cfg, bc1, bc2);
  }
}

/// Fisher-Yates shuffle of 0..n-1, used for full per-epoch reshuffling.
inline std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace codsa
