#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "codsa/dataset.hpp"
#include "codsa/metrics.hpp"
#include "codsa/nn.hpp"
#include "codsa/rng.hpp"
#include "codsa/scaler.hpp"

namespace codsa {

// ---------------------------------------------------------------------------
// MLP classifier / regressor, trained on the augmented sample with the
// unweighted mean loss (real and synthetic rows count identically) and early
// stopping on validation performance.
// ---------------------------------------------------------------------------

struct MlpTrainConfig {
  std::vector<int> hidden = {128, 128};  // two ReLU layers of 128 units
  int epochs_max = 2000;
  int patience = 20;
  double lr = 1e-3;
  int batch = 128;
};

struct ClassifierModel {
  MlpParams params;
  Standardizer scaler;
  bool degenerate = false;  // single-class training data
  int best_epoch = 0;
  double best_val_ce = std::numeric_limits<double>::infinity();
};

inline std::vector<double> predict_proba(const ClassifierModel& model,
                                         const Matrix& rows) {
  Matrix out = mlp_forward(model.params, model.scaler.transform(rows));
  std::vector<double> probs(out.rows());
  for (std::size_t i = 0; i < out.rows(); ++i) probs[i] = clip_prob(out(i, 0));
  return probs;
}

namespace detail {

inline Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& idx,
                          std::size_t begin, std::size_t end) {
  Matrix out(end - begin, src.cols());
  for (std::size_t i = begin; i < end; ++i)
    std::copy(src.row(idx[i]), src.row(idx[i]) + src.cols(), out.row(i - begin));
  return out;
}

inline double validation_ce(const MlpParams& params, const Matrix& val_x,
                            const std::vector<double>& val_y) {
  Matrix probs = mlp_forward(params, val_x);
  double ce = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const double p = clip_prob(probs(i, 0));
    ce += -(val_y[i] * std::log(p) + (1.0 - val_y[i]) * std::log(1.0 - p));
  }
  return probs.rows() > 0 ? ce / static_cast<double>(probs.rows()) : 0.0;
}

}  // namespace detail

/// Binary MLP classifier minimizing the mean logistic loss over the augmented
/// sample. Returns the parameter snapshot with the lowest validation
/// cross-entropy among visited epochs; training stops once `patience` epochs
/// in a row fail to improve it.
inline ClassifierModel train_classifier(const Dataset& train, const Dataset& val,
                                        const MlpTrainConfig& cfg, std::uint64_t seed) {
  if (train.target_kind != TargetKind::binary)
    throw std::invalid_argument("train_classifier: binary target required");
  ClassifierModel model;
  model.scaler = Standardizer::fit(train.features);

  bool has0 = false, has1 = false;
  for (double y : train.target) (y != 0.0 ? has1 : has0) = true;
  std::vector<int> sizes{static_cast<int>(train.dim())};
  for (int h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(1);
  model.params = MlpParams::init({sizes, OutputHead::sigmoid}, derive_seed(seed, "clf"));

  if (!has0 || !has1) {
    // Degenerate fit: constant predictor at the clipped empirical rate.
    double rate = 0.0;
    for (double y : train.target) rate += y;
    rate = clip_prob(train.n() > 0 ? rate / static_cast<double>(train.n()) : 0.5);
    for (auto& w : model.params.weights) w.fill(0.0);
    for (auto& b : model.params.biases) std::fill(b.begin(), b.end(), 0.0);
    model.params.biases.back()[0] = std::log(rate / (1.0 - rate));
    model.degenerate = true;
    return model;
  }

  const Matrix x = model.scaler.transform(train.features);
  const Matrix val_x = model.scaler.transform(val.features);
  auto state = AdamState::init(model.params, {.lr = cfg.lr});
  Rng shuffle_rng(derive_seed(seed, "clf-shuffle"));

  MlpParams best = model.params;
  double best_ce = detail::validation_ce(model.params, val_x, val.target);
  int best_epoch = 0;
  int streak = 0;
  const std::size_t n = train.n();
  const auto batch = static_cast<std::size_t>(cfg.batch);

  for (int epoch = 1; epoch <= cfg.epochs_max; ++epoch) {
    auto order = shuffled_indices(n, shuffle_rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(start + batch, n);
      Matrix xb = detail::gather_rows(x, order, start, end);
      auto cache = mlp_forward_cached(model.params, xb);
      Matrix upstream(end - start, 1);
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i)
        upstream(i - start, 0) =
            (cache.output(i - start, 0) - train.target[order[i]]) * inv;
      auto grads = mlp_backward(model.params, cache, upstream, GradKind::wrt_logits);
      adam_step(model.params, grads, state);
    }
    const double ce = detail::validation_ce(model.params, val_x, val.target);
    if (ce < best_ce) {
      best_ce = ce;
      best = model.params;
      best_epoch = epoch;
      streak = 0;
    } else {
      ++streak;
    }
    if (streak >= cfg.patience) break;
  }
  model.params = std::move(best);
  model.best_epoch = best_epoch;
  model.best_val_ce = best_ce;
  return model;
}

struct MlpRegressorModel {
  MlpParams params;
  Standardizer scaler;
  Standardizer target_scaler;  // single-column
  int best_epoch = 0;
  double best_val_rmse = std::numeric_limits<double>::infinity();
};

inline std::vector<double> predict_regression(const MlpRegressorModel& model,
                                              const Matrix& rows) {
  Matrix out = mlp_forward(model.params, model.scaler.transform(rows));
  std::vector<double> preds(out.rows());
  for (std::size_t i = 0; i < out.rows(); ++i)
    preds[i] = out(i, 0) * model.target_scaler.scale[0] + model.target_scaler.mean[0];
  return preds;
}

/// Auxiliary MLP regressor: the classifier body with an identity head and
/// squared loss, early-stopped on validation RMSE.
inline MlpRegressorModel train_mlp_regressor(const Dataset& train, const Dataset& val,
                                             const MlpTrainConfig& cfg,
                                             std::uint64_t seed) {
  if (train.target_kind != TargetKind::continuous)
    throw std::invalid_argument("train_mlp_regressor: continuous target required");
  MlpRegressorModel model;
  model.scaler = Standardizer::fit(train.features);
  Matrix ycol(train.n(), 1);
  for (std::size_t i = 0; i < train.n(); ++i) ycol(i, 0) = train.target[i];
  model.target_scaler = Standardizer::fit(ycol);

  std::vector<int> sizes{static_cast<int>(train.dim())};
  for (int h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(1);
  model.params = MlpParams::init({sizes, OutputHead::identity}, derive_seed(seed, "reg"));

  const Matrix x = model.scaler.transform(train.features);
  const Matrix y = model.target_scaler.transform(ycol);
  auto state = AdamState::init(model.params, {.lr = cfg.lr});
  Rng shuffle_rng(derive_seed(seed, "reg-shuffle"));

  auto val_rmse = [&](const MlpParams& params) {
    auto preds = mlp_forward(params, model.scaler.transform(val.features));
    double ss = 0.0;
    for (std::size_t i = 0; i < preds.rows(); ++i) {
      const double p =
          preds(i, 0) * model.target_scaler.scale[0] + model.target_scaler.mean[0];
      ss += (p - val.target[i]) * (p - val.target[i]);
    }
    return preds.rows() > 0 ? std::sqrt(ss / static_cast<double>(preds.rows())) : 0.0;
  };

  MlpParams best = model.params;
  double best_metric = val_rmse(model.params);
  int best_epoch = 0;
  int streak = 0;
  const std::size_t n = train.n();
  const auto batch = static_cast<std::size_t>(cfg.batch);
  for (int epoch = 1; epoch <= cfg.epochs_max; ++epoch) {
    auto order = shuffled_indices(n, shuffle_rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(start + batch, n);
      Matrix xb = detail::gather_rows(x, order, start, end);
      Matrix yb = detail::gather_rows(y, order, start, end);
      auto cache = mlp_forward_cached(model.params, xb);
      auto lv = loss_mse(cache.output, yb);
      auto grads = mlp_backward(model.params, cache, lv.grad);
      adam_step(model.params, grads, state);
    }
    const double metric = val_rmse(model.params);
    if (metric < best_metric) {
      best_metric = metric;
      best = model.params;
      best_epoch = epoch;
      streak = 0;
    } else {
      ++streak;
    }
    if (streak >= cfg.patience) break;
  }
  model.params = std::move(best);
  model.best_epoch = best_epoch;
  model.best_val_rmse = best_metric;
  return model;
}

// ---------------------------------------------------------------------------
// Random-forest regressor: bootstrap + exact CART variance-reduction splits,
// all features considered at every split, unlimited depth.
// ---------------------------------------------------------------------------

struct ForestConfig {
  int n_trees = 100;
  int min_samples_split = 2;
  bool bootstrap = true;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root
};

struct ForestModel {
  std::vector<Tree> trees;
  double target_min = 0.0;
  double target_max = 0.0;
};

struct BestSplit {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

/// Exact best variance-reduction split over all (feature, midpoint threshold)
/// pairs. Ties keep the lowest feature index, then the lowest threshold.
inline BestSplit find_best_split(const Matrix& features, const std::vector<double>& target,
                                 const std::vector<std::size_t>& idx) {
  BestSplit best;
  const std::size_t n = idx.size();
  if (n < 2) return best;
  double total = 0.0, total_sq = 0.0;
  for (std::size_t i : idx) {
    total += target[i];
    total_sq += target[i] * target[i];
  }
  const double parent_sse = total_sq - total * total / static_cast<double>(n);

  std::vector<std::pair<double, double>> vals(n);  // (feature value, target)
  for (std::size_t f = 0; f < features.cols(); ++f) {
    for (std::size_t i = 0; i < n; ++i)
      vals[i] = {features(idx[i], f), target[idx[i]]};
    std::sort(vals.begin(), vals.end());
    double left_sum = 0.0, left_sq = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += vals[i].second;
      left_sq += vals[i].second * vals[i].second;
      if (vals[i].first == vals[i + 1].first) continue;  // no cut between equals
      const auto nl = static_cast<double>(i + 1);
      const auto nr = static_cast<double>(n - i - 1);
      const double right_sum = total - left_sum;
      const double right_sq = total_sq - left_sq;
      const double sse =
          (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
      const double gain = parent_sse - sse;
      if (!best.found || gain > best.gain) {
        best.found = true;
        best.feature = static_cast<int>(f);
        best.threshold = 0.5 * (vals[i].first + vals[i + 1].first);
        best.gain = gain;
      }
    }
  }
  return best;
}

namespace detail {

inline Tree grow_tree(const Matrix& features, const std::vector<double>& target,
                      std::vector<std::size_t> root_idx, int min_samples_split) {
  Tree tree;
  struct Job {
    int node;
    std::vector<std::size_t> idx;
  };
  std::vector<Job> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, std::move(root_idx)});
  while (!stack.empty()) {
    Job job = std::move(stack.back());
    stack.pop_back();
    auto& idx = job.idx;
    double mean = 0.0;
    for (std::size_t i : idx) mean += target[i];
    mean /= static_cast<double>(idx.size());

    bool pure = true;
    for (std::size_t i : idx)
      if (target[i] != target[idx[0]]) {
        pure = false;
        break;
      }

    BestSplit split;
    if (!pure && idx.size() >= static_cast<std::size_t>(min_samples_split))
      split = find_best_split(features, target, idx);

    if (!split.found || split.gain <= 0.0) {
      tree.nodes[static_cast<std::size_t>(job.node)].feature = -1;
      tree.nodes[static_cast<std::size_t>(job.node)].leaf_value = mean;
      continue;
    }
    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx)
      (features(i, static_cast<std::size_t>(split.feature)) <= split.threshold
           ? left_idx
           : right_idx)
          .push_back(i);
    const int left_node = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int right_node = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    auto& node = tree.nodes[static_cast<std::size_t>(job.node)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left_node;
    node.right = right_node;
    stack.push_back({left_node, std::move(left_idx)});
    stack.push_back({right_node, std::move(right_idx)});
  }
  return tree;
}

inline double tree_predict(const Tree& tree, const double* row) {
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
    node = row[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  return tree.nodes[static_cast<std::size_t>(node)].leaf_value;
}

}  // namespace detail

/// Random-forest regressor; per-tree bootstrap streams are derived from the
/// tree index, so tree order (or parallel scheduling) cannot change results.
inline ForestModel train_forest(const Dataset& train, const ForestConfig& cfg,
                                std::uint64_t seed) {
  if (train.target_kind != TargetKind::continuous)
    throw std::invalid_argument("train_forest: continuous target required");
  if (train.n() == 0) throw std::invalid_argument("train_forest: empty training data");
  ForestModel model;
  model.target_min = *std::min_element(train.target.begin(), train.target.end());
  model.target_max = *std::max_element(train.target.begin(), train.target.end());
  model.trees.resize(static_cast<std::size_t>(cfg.n_trees));
  const std::size_t n = train.n();
  for (int t = 0; t < cfg.n_trees; ++t) {
    std::vector<std::size_t> idx(n);
    if (cfg.bootstrap) {
      Rng rng(derive_seed(seed, "tree", static_cast<std::uint64_t>(t)));
      for (std::size_t i = 0; i < n; ++i) idx[i] = rng.uniform_index(n);
    } else {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
    }
    model.trees[static_cast<std::size_t>(t)] = detail::grow_tree(
        train.features, train.target, std::move(idx), cfg.min_samples_split);
  }
  return model;
}

/// Mean over the trees' leaf values.
inline std::vector<double> forest_predict(const ForestModel& model, const Matrix& rows) {
  if (model.trees.empty()) throw std::invalid_argument("forest_predict: empty model");
  std::vector<double> preds(rows.rows(), 0.0);
  for (const auto& tree : model.trees)
    for (std::size_t i = 0; i < rows.rows(); ++i)
      preds[i] += detail::tree_predict(tree, rows.row(i));
  const double inv = 1.0 / static_cast<double>(model.trees.size());
  for (double& p : preds) p *= inv;
  return preds;
}

}  // namespace codsa
