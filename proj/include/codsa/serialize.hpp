#pragma once

#include <fstream>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "codsa/nn.hpp"

namespace codsa {

using json = nlohmann::json;

/// Checkpoint layout: {"spec": layer_sizes, "head": string,
/// "weights": [layer][row][col], "biases": [layer][col]}. nlohmann emits
/// shortest-round-trip decimal text, so 64-bit values survive a round trip.
inline json mlp_to_json(const MlpParams& params) {
  json j;
  j["spec"] = params.spec.layer_sizes;
  j["head"] = head_name(params.spec.head);
  json weights = json::array();
  for (const auto& w : params.weights) {
    json rows = json::array();
    for (std::size_t i = 0; i < w.rows(); ++i) {
      json row = json::array();
      for (std::size_t jj = 0; jj < w.cols(); ++jj) row.push_back(w(i, jj));
      rows.push_back(std::move(row));
    }
    weights.push_back(std::move(rows));
  }
  j["weights"] = std::move(weights);
  j["biases"] = params.biases;
  return j;
}

inline MlpParams mlp_from_json(const json& j) {
  MlpParams params;
  params.spec.layer_sizes = j.at("spec").get<std::vector<int>>();
  params.spec.head = head_from_name(j.at("head").get<std::string>());
  params.spec.validate();
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() != params.spec.num_layers() ||
      biases.size() != params.spec.num_layers())
    throw std::invalid_argument("mlp_from_json: layer count mismatch");
  for (std::size_t l = 0; l < params.spec.num_layers(); ++l) {
    const std::size_t out_dim = static_cast<std::size_t>(params.spec.layer_sizes[l + 1]);
    const std::size_t in_dim = static_cast<std::size_t>(params.spec.layer_sizes[l]);
    const auto& wj = weights[l];
    if (wj.size() != out_dim)
      throw std::invalid_argument("mlp_from_json: weight row count mismatch");
    Matrix w(out_dim, in_dim);
    for (std::size_t i = 0; i < out_dim; ++i) {
      const auto& row = wj[i];
      if (row.size() != in_dim)
        throw std::invalid_argument("mlp_from_json: weight col count mismatch");
      for (std::size_t c = 0; c < in_dim; ++c) w(i, c) = row[c].get<double>();
    }
    params.weights.push_back(std::move(w));
    auto b = biases[l].get<std::vector<double>>();
    if (b.size() != out_dim)
      throw std::invalid_argument("mlp_from_json: bias length mismatch");
    params.biases.push_back(std::move(b));
  }
  return params;
}

inline void write_json_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  in >> j;
  return j;
}

}  // namespace codsa
