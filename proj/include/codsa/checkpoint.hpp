#pragma once

#include "codsa/codsa.hpp"
#include "codsa/estimators.hpp"
#include "codsa/generator.hpp"
#include "codsa/serialize.hpp"

namespace codsa {

inline json scaler_to_json(const Standardizer& s) {
  return json{{"mean", s.mean}, {"scale", s.scale}};
}

inline Standardizer scaler_from_json(const json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  if (s.mean.size() != s.scale.size())
    throw std::invalid_argument("scaler_from_json: length mismatch");
  return s;
}

inline json autoencoder_to_json(const AutoencoderModel& ae) {
  return json{{"encoder", mlp_to_json(ae.encoder)},
              {"decoder", mlp_to_json(ae.decoder)},
              {"input_scaler", scaler_to_json(ae.input_scaler)},
              {"latent_dim", ae.latent_dim},
              {"pretrained", ae.pretrained},
              {"reconstruction_error", ae.reconstruction_error}};
}

inline AutoencoderModel autoencoder_from_json(const json& j) {
  AutoencoderModel ae;
  ae.encoder = mlp_from_json(j.at("encoder"));
  ae.decoder = mlp_from_json(j.at("decoder"));
  ae.input_scaler = scaler_from_json(j.at("input_scaler"));
  ae.latent_dim = j.at("latent_dim").get<int>();
  ae.pretrained = j.at("pretrained").get<bool>();
  ae.reconstruction_error = j.at("reconstruction_error").is_null()
                                ? std::numeric_limits<double>::quiet_NaN()
                                : j.at("reconstruction_error").get<double>();
  return ae;
}

inline json diffusion_to_json(const DiffusionModel& model) {
  // The linear schedule regenerates bit-exactly from (steps, endpoints).
  return json{{"score_net", mlp_to_json(model.score_net)},
              {"time_embed", mlp_to_json(model.time_embed)},
              {"schedule",
               {{"steps", model.schedule.steps},
                {"beta_min", model.schedule.beta.front()},
                {"beta_max", model.schedule.beta.back()}}},
              {"num_regions", model.num_regions},
              {"latent_dim", model.latent_dim},
              {"latent_scaler", scaler_to_json(model.latent_scaler)},
              {"trained", model.trained}};
}

inline DiffusionModel diffusion_from_json(const json& j) {
  DiffusionModel model;
  model.score_net = mlp_from_json(j.at("score_net"));
  model.time_embed = mlp_from_json(j.at("time_embed"));
  const auto& s = j.at("schedule");
  model.schedule = make_schedule(s.at("steps").get<int>(), s.at("beta_min").get<double>(),
                                 s.at("beta_max").get<double>());
  model.num_regions = j.at("num_regions").get<int>();
  model.latent_dim = j.at("latent_dim").get<int>();
  model.latent_scaler = scaler_from_json(j.at("latent_scaler"));
  model.trained = j.at("trained").get<bool>();
  return model;
}

inline json generator_to_json(const GeneratorModel& gen) {
  return json{{"autoencoder", autoencoder_to_json(gen.autoencoder)},
              {"diffusion", diffusion_to_json(gen.diffusion)},
              {"transfer_tag", gen.transfer_tag},
              {"target_kind", gen.target_kind == TargetKind::continuous ? "continuous"
                              : gen.target_kind == TargetKind::binary   ? "binary"
                                                                        : "none"},
              {"feature_dim", gen.feature_dim},
              {"num_regions", gen.num_regions},
              {"training",
               {{"ae_epochs", gen.meta.ae_epochs},
                {"score_epochs", gen.meta.score_epochs},
                {"ae_lr", gen.meta.ae_lr},
                {"score_lr", gen.meta.score_lr},
                {"seed", gen.meta.seed}}}};
}

inline GeneratorModel generator_from_json(const json& j) {
  GeneratorModel gen;
  gen.autoencoder = autoencoder_from_json(j.at("autoencoder"));
  gen.diffusion = diffusion_from_json(j.at("diffusion"));
  gen.transfer_tag = j.at("transfer_tag").get<std::string>();
  const auto kind = j.at("target_kind").get<std::string>();
  gen.target_kind = kind == "continuous" ? TargetKind::continuous
                    : kind == "binary"   ? TargetKind::binary
                                         : TargetKind::none;
  gen.feature_dim = j.at("feature_dim").get<std::size_t>();
  gen.num_regions = j.at("num_regions").get<int>();
  const auto& t = j.at("training");
  gen.meta = {t.at("ae_epochs").get<int>(), t.at("score_epochs").get<int>(),
              t.at("ae_lr").get<double>(), t.at("score_lr").get<double>(),
              t.at("seed").get<std::uint64_t>()};
  return gen;
}

inline json forest_to_json(const ForestModel& model) {
  json trees = json::array();
  for (const auto& tree : model.trees) {
    json nodes = json::array();
    for (const auto& n : tree.nodes)
      nodes.push_back(json{{"feature", n.feature},
                           {"threshold", n.threshold},
                           {"left", n.left},
                           {"right", n.right},
                           {"leaf_value", n.leaf_value}});
    trees.push_back(std::move(nodes));
  }
  return json{{"trees", std::move(trees)},
              {"target_min", model.target_min},
              {"target_max", model.target_max}};
}

inline ForestModel forest_from_json(const json& j) {
  ForestModel model;
  for (const auto& tree_j : j.at("trees")) {
    Tree tree;
    for (const auto& nj : tree_j) {
      TreeNode n;
      n.feature = nj.at("feature").get<int>();
      n.threshold = nj.at("threshold").get<double>();
      n.left = nj.at("left").get<int>();
      n.right = nj.at("right").get<int>();
      n.leaf_value = nj.at("leaf_value").get<double>();
      tree.nodes.push_back(n);
    }
    model.trees.push_back(std::move(tree));
  }
  model.target_min = j.at("target_min").get<double>();
  model.target_max = j.at("target_max").get<double>();
  return model;
}

}  // namespace codsa
