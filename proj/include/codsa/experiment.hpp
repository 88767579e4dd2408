#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "codsa/checkpoint.hpp"
#include "codsa/tuner.hpp"

namespace codsa {

struct CliOptions {
  std::filesystem::path out = "out";
  int workers = 1;
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
};

/// Output root override: a relative --out is resolved under $CODSA_OUT_ROOT
/// when that variable is set.
inline std::filesystem::path resolve_out_dir(const std::filesystem::path& out) {
  if (out.is_absolute()) return out;
  if (const char* root = std::getenv("CODSA_OUT_ROOT"))
    return std::filesystem::path(root) / out;
  return out;
}

namespace cfgdetail {

/// Strict-schema guard: any key outside the allowlist is a config error.
inline void check_keys(const json& j, const std::vector<std::string>& allowed,
                       const std::string& context) {
  if (!j.is_object()) throw std::invalid_argument(context + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw std::invalid_argument(context + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace cfgdetail

struct DataConfig {
  std::size_t n1 = 1400;
  std::size_t n2 = 3800;
  double sigma = 0.2;  // regression observation noise
  std::size_t val_per_region = 200;
  std::size_t test_per_region = 400;
};

inline DataConfig parse_data_config(const json& j, Task task) {
  cfgdetail::check_keys(j, {"n1", "n2", "sigma", "val_per_region", "test_per_region"},
                        "data");
  DataConfig d;
  d.n1 = cfgdetail::get_or<std::size_t>(j, "n1", d.n1);
  d.n2 = cfgdetail::get_or<std::size_t>(j, "n2", d.n2);
  d.sigma = cfgdetail::get_or<double>(j, "sigma", d.sigma);
  d.val_per_region = cfgdetail::get_or<std::size_t>(j, "val_per_region", d.val_per_region);
  d.test_per_region = cfgdetail::get_or<std::size_t>(j, "test_per_region", d.test_per_region);
  if (task == Task::classification && j.contains("sigma"))
    throw std::invalid_argument("data: 'sigma' applies to the regression task only");
  return d;
}

/// Stated experiment defaults: encoder/decoder and score-network widths,
/// schedule, and optimizer settings per task.
inline GeneratorConfig default_generator_config(Task task) {
  GeneratorConfig g;
  if (task == Task::classification) {
    g.autoencoder.hidden = {256, 256, 256};
    g.score.hidden.assign(10, 1024);
    g.score.time_embed_dim = 128;
  } else {
    g.autoencoder.hidden = {128, 128};
    g.score.hidden.assign(5, 512);
    g.score.time_embed_dim = 64;
  }
  g.autoencoder.latent_dim = 3;
  g.autoencoder.epochs = 200;
  g.autoencoder.lr = 1e-3;
  g.score.epochs = 5000;
  g.score.lr = 1e-4;
  g.score.batch = 128;
  g.diffusion_steps = 1000;
  g.beta_min = 1e-4;
  g.beta_max = 0.02;
  return g;
}

inline EstimatorConfig default_estimator_config(Task task) {
  EstimatorConfig e;
  if (task == Task::classification) {
    e.kind = EstimatorConfig::Kind::mlp_classifier;
    e.mlp.hidden = {128, 128};
  } else {
    e.kind = EstimatorConfig::Kind::forest;
    e.forest = ForestConfig{};
  }
  return e;
}

inline GeneratorConfig parse_generator_config(const json& j, Task task) {
  cfgdetail::check_keys(j,
                        {"ae_hidden", "latent_dim", "ae_epochs", "ae_lr", "ae_batch",
                         "score_hidden", "time_embed_dim", "score_epochs", "score_lr",
                         "score_batch", "diffusion_steps", "beta_min", "beta_max"},
                        "generator");
  GeneratorConfig g = default_generator_config(task);
  g.autoencoder.hidden =
      cfgdetail::get_or<std::vector<int>>(j, "ae_hidden", g.autoencoder.hidden);
  g.autoencoder.latent_dim = cfgdetail::get_or<int>(j, "latent_dim", g.autoencoder.latent_dim);
  g.autoencoder.epochs = cfgdetail::get_or<int>(j, "ae_epochs", g.autoencoder.epochs);
  g.autoencoder.lr = cfgdetail::get_or<double>(j, "ae_lr", g.autoencoder.lr);
  g.autoencoder.batch = cfgdetail::get_or<int>(j, "ae_batch", g.autoencoder.batch);
  g.score.hidden = cfgdetail::get_or<std::vector<int>>(j, "score_hidden", g.score.hidden);
  g.score.time_embed_dim = cfgdetail::get_or<int>(j, "time_embed_dim", g.score.time_embed_dim);
  g.score.epochs = cfgdetail::get_or<int>(j, "score_epochs", g.score.epochs);
  g.score.lr = cfgdetail::get_or<double>(j, "score_lr", g.score.lr);
  g.score.batch = cfgdetail::get_or<int>(j, "score_batch", g.score.batch);
  g.diffusion_steps = cfgdetail::get_or<int>(j, "diffusion_steps", g.diffusion_steps);
  g.beta_min = cfgdetail::get_or<double>(j, "beta_min", g.beta_min);
  g.beta_max = cfgdetail::get_or<double>(j, "beta_max", g.beta_max);
  return g;
}

inline EstimatorConfig parse_estimator_config(const json& j, Task task) {
  cfgdetail::check_keys(j,
                        {"kind", "hidden", "epochs_max", "patience", "lr", "batch",
                         "n_trees", "min_samples_split", "bootstrap"},
                        "estimator");
  EstimatorConfig e = default_estimator_config(task);
  if (j.contains("kind")) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "mlp-classifier") e.kind = EstimatorConfig::Kind::mlp_classifier;
    else if (kind == "forest") e.kind = EstimatorConfig::Kind::forest;
    else if (kind == "mlp-regressor") e.kind = EstimatorConfig::Kind::mlp_regressor;
    else throw std::invalid_argument("estimator: unknown kind '" + kind + "'");
  }
  e.mlp.hidden = cfgdetail::get_or<std::vector<int>>(j, "hidden", e.mlp.hidden);
  e.mlp.epochs_max = cfgdetail::get_or<int>(j, "epochs_max", e.mlp.epochs_max);
  e.mlp.patience = cfgdetail::get_or<int>(j, "patience", e.mlp.patience);
  e.mlp.lr = cfgdetail::get_or<double>(j, "lr", e.mlp.lr);
  e.mlp.batch = cfgdetail::get_or<int>(j, "batch", e.mlp.batch);
  e.forest.n_trees = cfgdetail::get_or<int>(j, "n_trees", e.forest.n_trees);
  e.forest.min_samples_split =
      cfgdetail::get_or<int>(j, "min_samples_split", e.forest.min_samples_split);
  e.forest.bootstrap = cfgdetail::get_or<bool>(j, "bootstrap", e.forest.bootstrap);
  return e;
}

inline GridSpec parse_grid(const json& j) {
  cfgdetail::check_keys(
      j, {"r", "alpha1", "m_over_n", "smogn_sigma", "include_baseline_point"}, "grid");
  GridSpec g;
  g.r_values = cfgdetail::get_or<std::vector<double>>(j, "r", {});
  g.alpha1_values = cfgdetail::get_or<std::vector<double>>(j, "alpha1", {});
  g.m_over_n_values = cfgdetail::get_or<std::vector<double>>(j, "m_over_n", {});
  g.smogn_sigmas = cfgdetail::get_or<std::vector<double>>(j, "smogn_sigma", g.smogn_sigmas);
  g.include_baseline_point =
      cfgdetail::get_or<bool>(j, "include_baseline_point", g.include_baseline_point);
  return g;
}

struct ExperimentConfig {
  Task task = Task::classification;
  Method method = Method::baseline;
  std::uint64_t seed = 1;
  std::size_t replicates = 10;
  DataConfig data;
  GridSpec grid;
  GeneratorConfig gen;
  EstimatorConfig est;
  std::size_t smote_k_neighbors = 5;
  int crossfit_folds = 5;
  std::size_t tau_samples = 0;
  int tau_projections = 64;
  bool emit_checkpoints = true;
  std::size_t transfer_source_size = 10000;
  std::optional<std::string> transfer_checkpoint;
};

inline Task parse_task(const json& j) {
  const auto task = j.at("task").get<std::string>();
  if (task == "classification") return Task::classification;
  if (task == "regression") return Task::regression;
  throw std::invalid_argument("unknown task: " + task);
}

inline ExperimentConfig parse_experiment_config(const json& j) {
  cfgdetail::check_keys(
      j, {"task", "method", "seed", "seeds", "data", "grid", "generator", "estimator",
          "smote_k_neighbors", "crossfit", "tau_samples", "tau_projections",
          "emit_checkpoints", "transfer"},
      "config");
  ExperimentConfig cfg;
  cfg.task = parse_task(j);
  cfg.method = method_from_name(j.at("method").get<std::string>());
  cfg.seed = cfgdetail::get_or<std::uint64_t>(j, "seed", cfg.seed);
  cfg.replicates = cfgdetail::get_or<std::size_t>(j, "seeds", cfg.replicates);
  if (cfg.replicates < 1) throw std::invalid_argument("config: need at least one seed");
  cfg.data = parse_data_config(j.contains("data") ? j.at("data") : json::object(), cfg.task);
  if (j.contains("grid")) cfg.grid = parse_grid(j.at("grid"));
  else cfg.grid = coarse_grid(cfg.task);
  cfg.gen = parse_generator_config(
      j.contains("generator") ? j.at("generator") : json::object(), cfg.task);
  cfg.est = parse_estimator_config(
      j.contains("estimator") ? j.at("estimator") : json::object(), cfg.task);
  cfg.smote_k_neighbors =
      cfgdetail::get_or<std::size_t>(j, "smote_k_neighbors", cfg.smote_k_neighbors);
  if (j.contains("crossfit")) {
    cfgdetail::check_keys(j.at("crossfit"), {"folds"}, "crossfit");
    cfg.crossfit_folds = cfgdetail::get_or<int>(j.at("crossfit"), "folds", 5);
  }
  cfg.tau_samples = cfgdetail::get_or<std::size_t>(j, "tau_samples", cfg.tau_samples);
  cfg.tau_projections = cfgdetail::get_or<int>(j, "tau_projections", cfg.tau_projections);
  cfg.emit_checkpoints = cfgdetail::get_or<bool>(j, "emit_checkpoints", cfg.emit_checkpoints);
  if (j.contains("transfer")) {
    cfgdetail::check_keys(j.at("transfer"), {"source_size", "checkpoint"}, "transfer");
    cfg.transfer_source_size =
        cfgdetail::get_or<std::size_t>(j.at("transfer"), "source_size", 10000);
    if (j.at("transfer").contains("checkpoint"))
      cfg.transfer_checkpoint = j.at("transfer").at("checkpoint").get<std::string>();
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Replicate assembly. Every replicate re-draws the dataset ("resamples of the
// original data") from streams derived off its own seed.
// ---------------------------------------------------------------------------

inline std::uint64_t replicate_seed(std::uint64_t root, std::size_t index) {
  return derive_seed(root, "replicate", index);
}

inline EvalCarve make_replicate_data(Task task, const DataConfig& data,
                                     std::uint64_t rep_seed) {
  Dataset full;
  if (task == Task::classification) {
    ClassifSimConfig cfg;
    cfg.n1 = data.n1;
    cfg.n2 = data.n2;
    cfg.seed = derive_seed(rep_seed, "dgp");
    full = gen_classification(cfg);
  } else {
    RegressSimConfig cfg;
    cfg.n1 = data.n1;
    cfg.n2 = data.n2;
    cfg.sigma = data.sigma;
    cfg.seed = derive_seed(rep_seed, "dgp");
    full = gen_regression(cfg);
  }
  return carve_balanced_eval(full, data.val_per_region, data.test_per_region,
                             derive_seed(rep_seed, "carve"));
}

inline Dataset make_transfer_source(Task task, const DataConfig& data,
                                    std::size_t source_size, std::uint64_t rep_seed) {
  const auto seed = derive_seed(rep_seed, "transfer-source");
  if (task == Task::classification) {
    const double minority_fraction =
        static_cast<double>(data.n1) / static_cast<double>(data.n1 + data.n2);
    return gen_classification_source(source_size, minority_fraction, seed);
  }
  return gen_regression_source(source_size, data.sigma, seed);
}

inline AutoencoderModel make_transfer_autoencoder(const ExperimentConfig& cfg,
                                                  std::uint64_t rep_seed) {
  const Dataset source =
      make_transfer_source(cfg.task, cfg.data, cfg.transfer_source_size, rep_seed);
  return pretrain_transfer(source, cfg.gen.autoencoder,
                           derive_seed(rep_seed, "pretrain"));
}

// ---------------------------------------------------------------------------
// Output files.
// ---------------------------------------------------------------------------

inline std::uint64_t config_hash(const json& j) { return hash_label(j.dump()); }

inline std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

inline void write_manifest(const std::filesystem::path& dir, const std::string& command,
                           const json& config, std::uint64_t root_seed,
                           const std::vector<std::string>& outputs) {
  json manifest{{"command", command},
                {"version", "codsa 0.1.0"},
                {"config", config},
                {"config_hash", hash_hex(config_hash(config))},
                {"root_seed", root_seed},
                {"outputs", outputs}};
  write_json_file(manifest, dir / "manifest.json");
}

inline std::string method_variant(Method m) {
  switch (m) {
    case Method::codsa: return "non-transfer";
    case Method::codsa_transfer: return "transfer";
    case Method::codsa_crossfit: return "crossfit";
    default: return "";
  }
}

inline std::string base_method_name(Method m) {
  switch (m) {
    case Method::codsa:
    case Method::codsa_transfer:
    case Method::codsa_crossfit: return "codsa";
    default: return method_name(m);
  }
}

inline void write_results_csv(const std::filesystem::path& path, Method method,
                              Task task, const TuneResult& result,
                              std::size_t replicates) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  const std::string metric = task == Task::classification ? "cross_entropy" : "rmse";
  out << "method,variant,scope,metric,mean,se,seeds\n";
  auto row = [&](const std::string& scope, const MeanSe& ms) {
    out << base_method_name(method) << "," << method_variant(method) << "," << scope
        << "," << metric << "," << format_double(ms.mean) << ","
        << format_double(ms.se) << "," << replicates << "\n";
  };
  for (std::size_t k = 0; k < result.region_test_summary.size(); ++k)
    row("region_" + std::to_string(k + 1), result.region_test_summary[k]);
  row("overall", result.test_summary);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline void write_tuning_table_csv(const std::filesystem::path& path,
                                   const TuneResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "seed_index,seed,r,alpha1,m_over_n,m,sigma,val_metric,test_metric,"
         "domain_index,generation_index,selected\n";
  std::vector<bool> selected(result.entries.size(), false);
  for (auto idx : result.best_per_seed) selected[idx] = true;
  for (std::size_t i = 0; i < result.entries.size(); ++i) {
    const auto& e = result.entries[i];
    out << e.seed_index << "," << e.seed << "," << format_double(e.point.r) << ","
        << format_double(e.point.alpha1) << "," << format_double(e.point.m_over_n)
        << "," << e.m << "," << format_double(e.point.sigma) << ","
        << format_double(e.val_metric) << "," << format_double(e.test_metric) << ","
        << format_double(e.indices.domain_index) << ","
        << format_double(e.indices.generation_index) << "," << (selected[i] ? 1 : 0)
        << "\n";
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline json index_report_to_json(const IndexReport& report) {
  auto nan_to_null = [](double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
  };
  json tau = json::array();
  for (double t : report.tau_hat) tau.push_back(nan_to_null(t));
  return json{{"domain_index", nan_to_null(report.domain_index)},
              {"generation_index", nan_to_null(report.generation_index)},
              {"alpha_tilde", report.alpha_tilde},
              {"tau_hat", tau}};
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

inline void cmd_simulate(const json& config, const CliOptions& options) {
  cfgdetail::check_keys(config, {"task", "seed", "data"}, "config");
  const Task task = parse_task(config);
  std::uint64_t root = cfgdetail::get_or<std::uint64_t>(config, "seed", 1);
  if (options.seed) root = *options.seed;
  const DataConfig data =
      parse_data_config(config.contains("data") ? config.at("data") : json::object(), task);

  const auto dir = resolve_out_dir(options.out);
  std::filesystem::create_directories(dir);
  if (options.dry_run) {
    write_manifest(dir, "simulate", config, root, {});
    return;
  }
  auto carve = make_replicate_data(task, data, replicate_seed(root, 0));
  write_csv(carve.train, dir / "train.csv");
  write_csv(carve.validation, dir / "validation.csv");
  write_csv(carve.test, dir / "test.csv");
  write_manifest(dir, "simulate", config, root,
                 {"train.csv", "validation.csv", "test.csv"});
}

struct RunArtifacts {
  TuneResult tuned;
  std::vector<ReplicateData> replicates;
  ExperimentConfig cfg;
};

/// Shared engine of cmd_run / cmd_sweep: replicate data, transfer models,
/// grid search.
inline RunArtifacts run_experiment(const json& config, const CliOptions& options) {
  RunArtifacts artifacts;
  artifacts.cfg = parse_experiment_config(config);
  auto& cfg = artifacts.cfg;
  if (options.seed) cfg.seed = *options.seed;

  std::optional<AutoencoderModel> shared_transfer;
  if (cfg.method == Method::codsa_transfer && cfg.transfer_checkpoint)
    shared_transfer = autoencoder_from_json(read_json_file(*cfg.transfer_checkpoint));

  artifacts.replicates.resize(cfg.replicates);
  parallel_for(cfg.replicates, options.workers, [&](std::size_t i) {
    ReplicateData rep;
    rep.seed = replicate_seed(cfg.seed, i);
    rep.carve = make_replicate_data(cfg.task, cfg.data, rep.seed);
    if (cfg.method == Method::codsa_transfer)
      rep.transfer = shared_transfer ? *shared_transfer
                                     : make_transfer_autoencoder(cfg, rep.seed);
    artifacts.replicates[i] = std::move(rep);
  });

  TuneConfig tune_cfg;
  tune_cfg.method = cfg.method;
  tune_cfg.grid = cfg.grid;
  tune_cfg.gen = cfg.gen;
  tune_cfg.est = cfg.est;
  tune_cfg.smote_k_neighbors = cfg.smote_k_neighbors;
  tune_cfg.crossfit_folds = cfg.crossfit_folds;
  tune_cfg.run_options.tau_samples = cfg.tau_samples;
  tune_cfg.run_options.tau_projections = cfg.tau_projections;
  tune_cfg.workers = options.workers;
  artifacts.tuned = tune(artifacts.replicates, tune_cfg);
  return artifacts;
}

inline void cmd_run(const json& config, const CliOptions& options) {
  const auto dir = resolve_out_dir(options.out);
  std::filesystem::create_directories(dir);
  if (options.dry_run) {
    auto cfg = parse_experiment_config(config);  // full validation
    make_replicate_data(cfg.task, cfg.data, replicate_seed(cfg.seed, 0));
    write_manifest(dir, "run", config, options.seed.value_or(cfg.seed), {});
    return;
  }
  auto artifacts = run_experiment(config, options);
  const auto& cfg = artifacts.cfg;
  const auto& tuned = artifacts.tuned;

  std::vector<std::string> outputs = {"results.csv", "tuning_table.csv",
                                      "index_report.json"};
  write_results_csv(dir / "results.csv", cfg.method, cfg.task, tuned, cfg.replicates);
  write_tuning_table_csv(dir / "tuning_table.csv", tuned);

  json reports = json::array();
  for (std::size_t s = 0; s < tuned.best_per_seed.size(); ++s) {
    const auto& best = tuned.entries[tuned.best_per_seed[s]];
    reports.push_back(json{{"seed", best.seed},
                           {"best",
                            {{"r", best.point.r},
                             {"alpha1", best.point.alpha1},
                             {"m_over_n", best.point.m_over_n},
                             {"m", best.m}}},
                           {"indices", index_report_to_json(best.indices)},
                           {"val_metric", best.val_metric},
                           {"test_metric", best.test_metric}});
  }
  write_json_file(reports, dir / "index_report.json");

  const bool is_codsa =
      cfg.method == Method::codsa || cfg.method == Method::codsa_transfer;
  if (cfg.emit_checkpoints && is_codsa && !tuned.best_per_seed.empty()) {
    const auto& best = tuned.entries[tuned.best_per_seed.front()];
    if (best.m > 0) {
      // Rebuild the winning generator from its derived streams; identical to
      // the one used during tuning.
      const auto& rep = artifacts.replicates.front();
      auto split =
          stratified_split(rep.carve.train, best.point.r, derive_seed(rep.seed, "split"));
      std::optional<AutoencoderModel> transfer = rep.transfer;
      auto generator = train_generator(
          split.generator_part, cfg.gen, transfer,
          derive_seed(rep.seed, "generator",
                      static_cast<std::uint64_t>(std::llround(best.point.r * 1e9))));
      write_json_file(generator_to_json(generator), dir / "generator_seed0.json");
      outputs.push_back("generator_seed0.json");
    }
  }
  write_manifest(dir, "run", config, cfg.seed, outputs);
}

inline void cmd_sweep(const json& config, const CliOptions& options) {
  json run_config = config;
  if (!run_config.contains("sweep_param"))
    throw std::invalid_argument("sweep: missing 'sweep_param'");
  const auto param_name = run_config.at("sweep_param").get<std::string>();
  run_config.erase("sweep_param");

  SweepParam param;
  if (param_name == "m_over_n") param = SweepParam::m_over_n;
  else if (param_name == "alpha1") param = SweepParam::alpha1;
  else if (param_name == "r") param = SweepParam::r;
  else throw std::invalid_argument("sweep: unknown param '" + param_name + "'");

  const auto dir = resolve_out_dir(options.out);
  std::filesystem::create_directories(dir);
  if (options.dry_run) {
    parse_experiment_config(run_config);
    write_manifest(dir, "sweep", config, options.seed.value_or(1), {});
    return;
  }
  auto artifacts = run_experiment(run_config, options);
  const auto& grid = artifacts.cfg.grid;
  const auto& values = param == SweepParam::m_over_n ? grid.m_over_n_values
                       : param == SweepParam::alpha1 ? grid.alpha1_values
                                                     : grid.r_values;
  auto rows = marginal_sweep(artifacts.tuned, param, values,
                             artifacts.replicates.size());
  const std::string filename = "sweep_" + param_name + ".csv";
  std::ofstream out(dir / filename);
  if (!out) throw std::runtime_error("cannot open sweep output");
  out << param_name << ",test_mean,test_se,seeds\n";
  for (const auto& row : rows)
    out << format_double(row.value) << "," << format_double(row.test.mean) << ","
        << format_double(row.test.se) << "," << row.per_seed_test.size() << "\n";
  write_manifest(dir, "sweep", config, artifacts.cfg.seed, {filename});
}

inline void cmd_pretrain(const json& config, const CliOptions& options) {
  cfgdetail::check_keys(config, {"task", "seed", "data", "source_sizes", "generator"},
                        "config");
  const Task task = parse_task(config);
  std::uint64_t root = cfgdetail::get_or<std::uint64_t>(config, "seed", 1);
  if (options.seed) root = *options.seed;
  const DataConfig data =
      parse_data_config(config.contains("data") ? config.at("data") : json::object(), task);
  const GeneratorConfig gen = parse_generator_config(
      config.contains("generator") ? config.at("generator") : json::object(), task);
  auto sizes = cfgdetail::get_or<std::vector<std::size_t>>(config, "source_sizes",
                                                           {1000, 3000, 6000, 10000});

  const auto dir = resolve_out_dir(options.out);
  std::filesystem::create_directories(dir);
  if (options.dry_run) {
    write_manifest(dir, "pretrain", config, root, {});
    return;
  }
  std::vector<std::string> outputs;
  for (std::size_t size : sizes) {
    const auto seed = derive_seed(root, "pretrain-size", size);
    const Dataset source = make_transfer_source(task, data, size, seed);
    auto model = pretrain_transfer(source, gen.autoencoder, derive_seed(seed, "pretrain"));
    const std::string filename = "autoencoder_source_" + std::to_string(size) + ".json";
    write_json_file(autoencoder_to_json(model), dir / filename);
    outputs.push_back(filename);
  }
  write_manifest(dir, "pretrain", config, root, outputs);
}

inline void cmd_diagnose(const json& config, const CliOptions& options) {
  cfgdetail::check_keys(config,
                        {"task", "seed", "data", "checkpoint", "lambda", "tau_samples",
                         "tau_projections"},
                        "config");
  const Task task = parse_task(config);
  std::uint64_t root = cfgdetail::get_or<std::uint64_t>(config, "seed", 1);
  if (options.seed) root = *options.seed;
  const DataConfig data =
      parse_data_config(config.contains("data") ? config.at("data") : json::object(), task);

  const auto& lj = config.at("lambda");
  cfgdetail::check_keys(lj, {"alpha1", "m", "m_over_n", "r"}, "lambda");
  const double r = lj.at("r").get<double>();
  const double alpha1 = lj.at("alpha1").get<double>();

  const auto dir = resolve_out_dir(options.out);
  std::filesystem::create_directories(dir);
  if (options.dry_run) {
    write_manifest(dir, "diagnose", config, root, {});
    return;
  }

  auto carve = make_replicate_data(task, data, replicate_seed(root, 0));
  const long n = static_cast<long>(carve.train.n());
  long m = 0;
  if (lj.contains("m")) m = lj.at("m").get<long>();
  else if (lj.contains("m_over_n"))
    m = std::lround(lj.at("m_over_n").get<double>() * static_cast<double>(n));
  else throw std::invalid_argument("lambda: need 'm' or 'm_over_n'");

  const auto p = region_stats(carve.train).proportions;
  const std::vector<double> q(p.size(), 1.0 / static_cast<double>(p.size()));
  const std::vector<double> alpha = {alpha1, 1.0 - alpha1};

  IndexReport report;
  report.domain_index = domain_index(alpha, m, p, n, r, q, &report.alpha_tilde);
  report.tau_hat.assign(p.size(), std::numeric_limits<double>::quiet_NaN());
  report.generation_index = m == 0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();

  const auto tau_samples = cfgdetail::get_or<std::size_t>(config, "tau_samples", 500);
  const auto tau_projections = cfgdetail::get_or<int>(config, "tau_projections", 64);
  if (m > 0 && config.contains("checkpoint")) {
    auto generator =
        generator_from_json(read_json_file(config.at("checkpoint").get<std::string>()));
    auto split = stratified_split(carve.train, r, derive_seed(replicate_seed(root, 0), "split"));
    if (split.reserved_part.n() > 0) {
      report.tau_hat = estimate_tau(
          generator, split.reserved_part, tau_samples, tau_projections,
          derive_seed(replicate_seed(root, 0), "tau-root",
                      static_cast<std::uint64_t>(std::llround(r * 1e9))));
      bool complete = true;
      for (double t : report.tau_hat)
        if (!std::isfinite(t)) complete = false;
      if (complete)
        report.generation_index = generation_index(
            alpha, m, reserved_count(n, r), report.tau_hat);
    }
  }

  json out = index_report_to_json(report);
  out["lambda"] = json{{"alpha1", alpha1}, {"m", m}, {"r", r}};
  out["p"] = p;
  out["q"] = q;
  const long min_m = min_feasible_m(q, p, n, r);
  out["min_feasible_m"] = min_m;
  if (m >= min_m && m > 0)
    out["alpha_optimal"] = allocate_optimal(q, p, n, m, r);
  write_json_file(out, dir / "diagnose.json");
  write_manifest(dir, "diagnose", config, root, {"diagnose.json"});
}

}  // namespace codsa
