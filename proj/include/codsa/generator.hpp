#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "codsa/dataset.hpp"
#include "codsa/nn.hpp"
#include "codsa/rng.hpp"
#include "codsa/scaler.hpp"

namespace codsa {

// ---------------------------------------------------------------------------
// Deterministic autoencoder: maps rows to a low-dimensional latent space and
// back, trained with squared loss. Rows are z-scored on the training sample
// before encoding and un-scored after decoding.
// ---------------------------------------------------------------------------

struct AutoencoderConfig {
  std::vector<int> hidden = {256, 256, 256};
  int latent_dim = 3;
  int epochs = 200;
  double lr = 1e-3;
  int batch = 128;
};

struct AutoencoderModel {
  MlpParams encoder;  // d -> d_u
  MlpParams decoder;  // d_u -> d
  Standardizer input_scaler;
  int latent_dim = 0;
  bool pretrained = false;
  /// Mean per-entry squared reconstruction error on the training rows,
  /// measured in scaled space.
  double reconstruction_error = std::numeric_limits<double>::quiet_NaN();

  int input_dim() const { return encoder.spec.input_dim(); }
};

/// The joint row representation the generator models: features plus the
/// target column when the target is continuous. Binary labels are carried by
/// the region condition instead, so only the features are encoded.
inline Matrix joint_rows(const Dataset& data) {
  if (data.target_kind != TargetKind::continuous) return data.features;
  Matrix rows(data.n(), data.dim() + 1);
  for (std::size_t i = 0; i < data.n(); ++i) {
    std::copy(data.features.row(i), data.features.row(i) + data.dim(), rows.row(i));
    rows(i, data.dim()) = data.target[i];
  }
  return rows;
}

inline Matrix encode(const AutoencoderModel& ae, const Matrix& rows) {
  return mlp_forward(ae.encoder, ae.input_scaler.transform(rows));
}

inline Matrix decode(const AutoencoderModel& ae, const Matrix& latents) {
  return ae.input_scaler.inverse(mlp_forward(ae.decoder, latents));
}

/// Squared-loss autoencoder on raw row matrices.
inline AutoencoderModel train_autoencoder_rows(const Matrix& rows,
                                               const AutoencoderConfig& cfg,
                                               std::uint64_t seed) {
  if (rows.rows() == 0) throw std::invalid_argument("train_autoencoder: empty data");
  if (cfg.latent_dim < 1 || cfg.latent_dim > static_cast<int>(rows.cols()))
    throw std::invalid_argument("train_autoencoder: latent_dim must be in 1..d");
  AutoencoderModel model;
  model.latent_dim = cfg.latent_dim;
  model.input_scaler = Standardizer::fit(rows);

  const int d = static_cast<int>(rows.cols());
  std::vector<int> enc_sizes{d};
  for (int h : cfg.hidden) enc_sizes.push_back(h);
  enc_sizes.push_back(cfg.latent_dim);
  std::vector<int> dec_sizes{cfg.latent_dim};
  for (auto it = cfg.hidden.rbegin(); it != cfg.hidden.rend(); ++it)
    dec_sizes.push_back(*it);
  dec_sizes.push_back(d);
  model.encoder = MlpParams::init({enc_sizes, OutputHead::identity},
                                  derive_seed(seed, "encoder"));
  model.decoder = MlpParams::init({dec_sizes, OutputHead::identity},
                                  derive_seed(seed, "decoder"));

  const Matrix x = model.input_scaler.transform(rows);
  auto enc_state = AdamState::init(model.encoder, {.lr = cfg.lr});
  auto dec_state = AdamState::init(model.decoder, {.lr = cfg.lr});
  Rng shuffle_rng(derive_seed(seed, "ae-shuffle"));
  const std::size_t n = x.rows();
  const auto batch = static_cast<std::size_t>(cfg.batch);

  auto full_error = [&] {
    const Matrix recon = mlp_forward(model.decoder, mlp_forward(model.encoder, x));
    return loss_mse(recon, x).value / static_cast<double>(d);
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto order = shuffled_indices(n, shuffle_rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(start + batch, n);
      Matrix xb(end - start, x.cols());
      for (std::size_t i = start; i < end; ++i)
        std::copy(x.row(order[i]), x.row(order[i]) + x.cols(), xb.row(i - start));
      auto enc_cache = mlp_forward_cached(model.encoder, xb);
      auto dec_cache = mlp_forward_cached(model.decoder, enc_cache.output);
      auto lv = loss_mse(dec_cache.output, xb);
      if (!std::isfinite(lv.value))
        throw std::runtime_error("train_autoencoder: loss diverged");
      Matrix latent_grad;
      auto dec_grads = mlp_backward(model.decoder, dec_cache, lv.grad,
                                    GradKind::wrt_output, &latent_grad);
      auto enc_grads = mlp_backward(model.encoder, enc_cache, latent_grad);
      adam_step(model.decoder, dec_grads, dec_state);
      adam_step(model.encoder, enc_grads, enc_state);
    }
  }
  model.reconstruction_error = full_error();
  if (!std::isfinite(model.reconstruction_error))
    throw std::runtime_error("train_autoencoder: training diverged");
  return model;
}

inline AutoencoderModel train_autoencoder(const Dataset& data,
                                          const AutoencoderConfig& cfg,
                                          std::uint64_t seed) {
  return train_autoencoder_rows(joint_rows(data), cfg, seed);
}

/// Autoencoder trained on an independent source sample and reused frozen for
/// a target task.
inline AutoencoderModel pretrain_transfer(const Dataset& source,
                                          const AutoencoderConfig& cfg,
                                          std::uint64_t seed) {
  AutoencoderModel model = train_autoencoder(source, cfg, seed);
  model.pretrained = true;
  return model;
}

// ---------------------------------------------------------------------------
// Discrete noise schedule and the forward marginal.
// ---------------------------------------------------------------------------

struct NoiseSchedule {
  int steps = 0;                  // T
  std::vector<double> beta;       // beta[t-1], t = 1..T
  std::vector<double> alpha_bar;  // alpha_bar[t-1] = prod_{s<=t} (1 - beta_s)

  /// alpha_bar at step t with the convention alpha_bar(0) = 1.
  double alpha_bar_at(int t) const {
    if (t < 0 || t > steps) throw std::out_of_range("alpha_bar_at: t out of 0..T");
    return t == 0 ? 1.0 : alpha_bar[static_cast<std::size_t>(t - 1)];
  }
};

inline NoiseSchedule make_schedule(int steps = 1000, double beta_min = 1e-4,
                                   double beta_max = 0.02) {
  if (steps < 1) throw std::invalid_argument("make_schedule: need at least one step");
  if (!(beta_min > 0.0) || beta_min > beta_max || !(beta_max < 1.0))
    throw std::invalid_argument("make_schedule: need 0 < beta_min <= beta_max < 1");
  NoiseSchedule s;
  s.steps = steps;
  s.beta.resize(static_cast<std::size_t>(steps));
  s.alpha_bar.resize(static_cast<std::size_t>(steps));
  double prod = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double frac =
        steps == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(steps - 1);
    const double b = beta_min + (beta_max - beta_min) * frac;
    s.beta[static_cast<std::size_t>(t - 1)] = b;
    prod *= 1.0 - b;
    s.alpha_bar[static_cast<std::size_t>(t - 1)] = prod;
  }
  return s;
}

/// Closed-form forward marginal: u_t = sqrt(abar_t) u0 + sqrt(1-abar_t) eps.
inline Matrix forward_diffuse(const NoiseSchedule& schedule, const Matrix& u0, int t,
                              const Matrix& noise) {
  if (t < 1 || t > schedule.steps)
    throw std::out_of_range("forward_diffuse: t out of 1..T");
  if (u0.rows() != noise.rows() || u0.cols() != noise.cols())
    throw std::invalid_argument("forward_diffuse: noise shape mismatch");
  const double abar = schedule.alpha_bar_at(t);
  const double signal = std::sqrt(abar);
  const double spread = std::sqrt(1.0 - abar);
  Matrix out(u0.rows(), u0.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = signal * u0.data()[i] + spread * noise.data()[i];
  return out;
}

// ---------------------------------------------------------------------------
// Region-conditioned noise-prediction network. The score of the diffused
// marginal is recovered as -eps_hat / sqrt(1 - abar_t).
// ---------------------------------------------------------------------------

struct ScoreNetConfig {
  std::vector<int> hidden = {1024, 1024, 1024, 1024, 1024,
                             1024, 1024, 1024, 1024, 1024};
  int time_embed_dim = 128;
  int epochs = 5000;
  double lr = 1e-4;
  int batch = 128;
  /// Exponential moving average of the weights used for sampling; averages
  /// out gradient noise in the low-noise score regime. 0 disables it.
  double ema_decay = 0.999;
};

struct DiffusionModel {
  MlpParams score_net;   // (d_u + K + embed) -> d_u
  MlpParams time_embed;  // scalar t/T -> embed (two layers)
  NoiseSchedule schedule;
  int num_regions = 0;
  int latent_dim = 0;
  Standardizer latent_scaler;
  bool trained = false;

  int embed_dim() const { return time_embed.spec.output_dim(); }
};

namespace detail {

/// [u | onehot(region) | time embedding], the score net input layout.
inline Matrix assemble_score_input(const Matrix& u, const std::vector<int>& regions,
                                   int num_regions, const Matrix& embed) {
  const std::size_t n = u.rows();
  const std::size_t d_u = u.cols();
  const std::size_t e = embed.cols();
  Matrix in(n, d_u + static_cast<std::size_t>(num_regions) + e);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = in.row(i);
    std::copy(u.row(i), u.row(i) + d_u, row);
    row[d_u + static_cast<std::size_t>(regions[i] - 1)] = 1.0;
    const double* erow = embed.rows() == 1 ? embed.row(0) : embed.row(i);
    std::copy(erow, erow + e, row + d_u + static_cast<std::size_t>(num_regions));
  }
  return in;
}

}  // namespace detail

/// Minimizes the eps-prediction form of the denoising score-matching loss,
/// E || eps - eps_hat(u_t, region, t) ||^2, with t uniform on {1..T}. The
/// time-embedding net trains jointly through the concatenated input.
inline DiffusionModel train_score_network(const Matrix& latents,
                                          const std::vector<int>& regions,
                                          int num_regions, const NoiseSchedule& schedule,
                                          const ScoreNetConfig& cfg, std::uint64_t seed) {
  if (latents.rows() == 0) throw std::invalid_argument("train_score_network: empty latents");
  if (regions.size() != latents.rows())
    throw std::invalid_argument("train_score_network: region count mismatch");
  if (!latents.all_finite())
    throw std::invalid_argument("train_score_network: non-finite latents");
  for (int k : regions)
    if (k < 1 || k > num_regions)
      throw std::invalid_argument("train_score_network: region out of 1..K");

  DiffusionModel model;
  model.schedule = schedule;
  model.num_regions = num_regions;
  model.latent_dim = static_cast<int>(latents.cols());
  model.latent_scaler = Standardizer::fit(latents);
  model.trained = true;

  const int d_u = model.latent_dim;
  std::vector<int> score_sizes{d_u + num_regions + cfg.time_embed_dim};
  for (int h : cfg.hidden) score_sizes.push_back(h);
  score_sizes.push_back(d_u);
  model.score_net = MlpParams::init({score_sizes, OutputHead::identity},
                                    derive_seed(seed, "score"));
  model.time_embed =
      MlpParams::init({{1, cfg.time_embed_dim, cfg.time_embed_dim}, OutputHead::identity},
                      derive_seed(seed, "time-embed"));
  {
    // Zero biases would park every hidden hinge at t = 0, leaving the
    // embedding affine over (0, 1]; spreading the hinges across the time
    // range gives the net resolution at small t where the noise scale
    // changes fastest.
    Rng hinge_rng(derive_seed(seed, "time-embed-hinges"));
    auto& w0 = model.time_embed.weights[0];
    auto& b0 = model.time_embed.biases[0];
    for (std::size_t i = 0; i < b0.size(); ++i)
      b0[i] = -w0(i, 0) * hinge_rng.uniform();
  }

  const Matrix u0_all = model.latent_scaler.transform(latents);
  auto score_state = AdamState::init(model.score_net, {.lr = cfg.lr});
  auto embed_state = AdamState::init(model.time_embed, {.lr = cfg.lr});
  Rng rng(derive_seed(seed, "score-train"));
  const std::size_t n = u0_all.rows();
  const auto batch = static_cast<std::size_t>(cfg.batch);
  const int T = schedule.steps;

  const bool use_ema = cfg.ema_decay > 0.0;
  MlpParams score_ema = model.score_net;
  MlpParams embed_ema = model.time_embed;
  auto ema_update = [&](MlpParams& shadow, const MlpParams& live) {
    const double d = cfg.ema_decay;
    for (std::size_t l = 0; l < shadow.weights.size(); ++l) {
      double* s = shadow.weights[l].data();
      const double* p = live.weights[l].data();
      for (std::size_t i = 0; i < shadow.weights[l].size(); ++i)
        s[i] = d * s[i] + (1.0 - d) * p[i];
      for (std::size_t i = 0; i < shadow.biases[l].size(); ++i)
        shadow.biases[l][i] = d * shadow.biases[l][i] + (1.0 - d) * live.biases[l][i];
    }
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto order = shuffled_indices(n, rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(start + batch, n);
      const std::size_t bs = end - start;
      Matrix u_t(bs, static_cast<std::size_t>(d_u));
      Matrix eps(bs, static_cast<std::size_t>(d_u));
      Matrix t_in(bs, 1);
      std::vector<int> batch_regions(bs);
      for (std::size_t i = 0; i < bs; ++i) {
        const std::size_t src = order[start + i];
        const int t = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(T)));
        const double abar = schedule.alpha_bar_at(t);
        const double signal = std::sqrt(abar);
        const double spread = std::sqrt(1.0 - abar);
        for (int j = 0; j < d_u; ++j) {
          const double e = rng.normal();
          eps(i, static_cast<std::size_t>(j)) = e;
          u_t(i, static_cast<std::size_t>(j)) =
              signal * u0_all(src, static_cast<std::size_t>(j)) + spread * e;
        }
        t_in(i, 0) = static_cast<double>(t) / static_cast<double>(T);
        batch_regions[i] = regions[src];
      }
      auto embed_cache = mlp_forward_cached(model.time_embed, t_in);
      Matrix input = detail::assemble_score_input(u_t, batch_regions, num_regions,
                                                  embed_cache.output);
      auto score_cache = mlp_forward_cached(model.score_net, input);
      auto lv = loss_mse(score_cache.output, eps);
      if (!std::isfinite(lv.value))
        throw std::runtime_error("train_score_network: loss diverged");
      Matrix input_grad;
      auto score_grads = mlp_backward(model.score_net, score_cache, lv.grad,
                                      GradKind::wrt_output, &input_grad);
      // gradient w.r.t. the embedding columns feeds the time-embed net
      Matrix embed_grad(bs, static_cast<std::size_t>(cfg.time_embed_dim));
      const std::size_t offset = static_cast<std::size_t>(d_u + num_regions);
      for (std::size_t i = 0; i < bs; ++i)
        std::copy(input_grad.row(i) + offset,
                  input_grad.row(i) + offset + static_cast<std::size_t>(cfg.time_embed_dim),
                  embed_grad.row(i));
      auto embed_grads = mlp_backward(model.time_embed, embed_cache, embed_grad);
      adam_step(model.score_net, score_grads, score_state);
      adam_step(model.time_embed, embed_grads, embed_state);
      if (use_ema) {
        ema_update(score_ema, model.score_net);
        ema_update(embed_ema, model.time_embed);
      }
    }
  }
  if (use_ema) {
    model.score_net = std::move(score_ema);
    model.time_embed = std::move(embed_ema);
  }
  return model;
}

/// Ancestral DDPM sampling conditioned on one region: u_T ~ N(0,I) down to
/// u_0, posterior variance (1-abar_{t-1})/(1-abar_t) beta_t. Each sample
/// draws its trajectory noise from its own derived stream, so the i-th row
/// does not depend on `count` and prefixes of longer runs coincide.
inline Matrix sample_latents(const DiffusionModel& model, int region, std::size_t count,
                             std::uint64_t seed) {
  if (!model.trained) throw std::logic_error("sample_latents: model not trained");
  if (region < 1 || region > model.num_regions)
    throw std::invalid_argument("sample_latents: region out of 1..K");
  const int d_u = model.latent_dim;
  const int T = model.schedule.steps;
  Matrix u(count, static_cast<std::size_t>(d_u));
  if (count == 0) return u;

  std::vector<Rng> streams;
  streams.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    streams.emplace_back(derive_seed(seed, "traj", i));
    for (int j = 0; j < d_u; ++j)
      u(i, static_cast<std::size_t>(j)) = streams.back().normal();
  }
  std::vector<int> regions(count, region);

  for (int t = T; t >= 1; --t) {
    Matrix t_in(1, 1);
    t_in(0, 0) = static_cast<double>(t) / static_cast<double>(T);
    const Matrix embed = mlp_forward(model.time_embed, t_in);
    const Matrix input =
        detail::assemble_score_input(u, regions, model.num_regions, embed);
    const Matrix eps_hat = mlp_forward(model.score_net, input);

    const double abar_t = model.schedule.alpha_bar_at(t);
    const double abar_prev = model.schedule.alpha_bar_at(t - 1);
    const double beta_t = model.schedule.beta[static_cast<std::size_t>(t - 1)];
    const double alpha_t = 1.0 - beta_t;
    const double coef = beta_t / std::sqrt(1.0 - abar_t);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha_t);
    const double sigma = std::sqrt((1.0 - abar_prev) / (1.0 - abar_t) * beta_t);
    for (std::size_t i = 0; i < count; ++i) {
      for (int j = 0; j < d_u; ++j) {
        double v = inv_sqrt_alpha *
                   (u(i, static_cast<std::size_t>(j)) -
                    coef * eps_hat(i, static_cast<std::size_t>(j)));
        if (t > 1) v += sigma * streams[i].normal();
        u(i, static_cast<std::size_t>(j)) = v;
      }
    }
  }
  return model.latent_scaler.inverse(u);
}

// ---------------------------------------------------------------------------
// The full conditional generator: autoencoder + conditional diffusion.
// ---------------------------------------------------------------------------

struct GeneratorConfig {
  AutoencoderConfig autoencoder;
  ScoreNetConfig score;
  int diffusion_steps = 1000;
  double beta_min = 1e-4;
  double beta_max = 0.02;
};

struct GeneratorTrainMeta {
  int ae_epochs = 0;
  int score_epochs = 0;
  double ae_lr = 0.0;
  double score_lr = 0.0;
  std::uint64_t seed = 0;
};

struct GeneratorModel {
  AutoencoderModel autoencoder;
  DiffusionModel diffusion;
  std::string transfer_tag = "none";  // none | pretrained-autoencoder
  TargetKind target_kind = TargetKind::none;
  std::size_t feature_dim = 0;
  int num_regions = 0;
  GeneratorTrainMeta meta;
};

/// Trains the conditional latent diffusion generator on Z_g. When a
/// pretrained autoencoder is supplied it is reused verbatim (frozen); only
/// the score network sees the target data.
inline GeneratorModel train_generator(const Dataset& data, const GeneratorConfig& cfg,
                                      const std::optional<AutoencoderModel>& pretrained,
                                      std::uint64_t seed) {
  if (data.n() == 0) throw std::invalid_argument("train_generator: empty training split");
  GeneratorModel gen;
  gen.target_kind = data.target_kind;
  gen.feature_dim = data.dim();
  gen.num_regions = data.num_regions;
  gen.meta = {cfg.autoencoder.epochs, cfg.score.epochs, cfg.autoencoder.lr,
              cfg.score.lr, seed};

  const Matrix rows = joint_rows(data);
  if (pretrained) {
    if (pretrained->input_dim() != static_cast<int>(rows.cols()))
      throw std::invalid_argument("train_generator: pretrained autoencoder schema mismatch");
    gen.autoencoder = *pretrained;
    gen.transfer_tag = "pretrained-autoencoder";
  } else {
    gen.autoencoder =
        train_autoencoder_rows(rows, cfg.autoencoder, derive_seed(seed, "ae"));
  }

  const Matrix latents = encode(gen.autoencoder, rows);
  const NoiseSchedule schedule =
      make_schedule(cfg.diffusion_steps, cfg.beta_min, cfg.beta_max);
  gen.diffusion = train_score_network(latents, data.region, data.num_regions, schedule,
                                      cfg.score, derive_seed(seed, "diffusion"));
  return gen;
}

/// `count` synthetic rows of one region. The sampling stream is derived from
/// (seed, region) only, so shorter draws are prefixes of longer ones.
inline Dataset synthesize_region(const GeneratorModel& gen, int region, long count,
                                 std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("synthesize_region: negative count");
  Dataset out;
  out.features = Matrix(static_cast<std::size_t>(count), gen.feature_dim);
  out.target_kind = gen.target_kind;
  out.num_regions = gen.num_regions;
  if (count == 0) return out;
  const Matrix latents = sample_latents(
      gen.diffusion, region, static_cast<std::size_t>(count),
      derive_seed(seed, "synth-region", static_cast<std::uint64_t>(region)));
  const Matrix rows = decode(gen.autoencoder, latents);
  for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
    std::copy(rows.row(i), rows.row(i) + gen.feature_dim, out.features.row(i));
    if (gen.target_kind == TargetKind::continuous)
      out.target.push_back(rows(i, gen.feature_dim));
    else if (gen.target_kind == TargetKind::binary)
      out.target.push_back(static_cast<double>(region - 1));  // label implied by region
    out.region.push_back(region);
    out.provenance.push_back(Provenance::synthetic);
  }
  return out;
}

/// Generates m synthetic rows with per-region counts from the allocation
/// vector (largest-remainder rounding, so the counts sum to m exactly).
inline Dataset synthesize(const GeneratorModel& gen, const std::vector<double>& alpha,
                          long m, std::uint64_t seed) {
  if (static_cast<int>(alpha.size()) != gen.num_regions)
    throw std::invalid_argument("synthesize: allocation length != K");
  double sum = 0.0;
  for (double a : alpha) {
    if (a < 0.0) throw std::invalid_argument("synthesize: allocation outside the simplex");
    sum += a;
  }
  if (m < 0) throw std::invalid_argument("synthesize: m must be >= 0");
  if (m > 0 && std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("synthesize: allocation must sum to 1");

  Dataset out;
  out.features = Matrix(0, gen.feature_dim);
  out.target_kind = gen.target_kind;
  out.num_regions = gen.num_regions;
  if (m == 0) return out;

  const auto quotas = largest_remainder_quotas(alpha, m);
  for (int k = 1; k <= gen.num_regions; ++k) {
    const long count = quotas[static_cast<std::size_t>(k - 1)];
    if (count == 0) continue;
    out = mix(out, synthesize_region(gen, k, count, seed));
  }
  return out;
}

}  // namespace codsa
