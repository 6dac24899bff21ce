#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lamil/attention.hpp"
#include "lamil/graph.hpp"
#include "lamil/loss.hpp"
#include "lamil/tensor.hpp"

namespace lamil {

enum class AttentionMode : std::uint8_t { kLocal = 0, kGlobal = 1 };

std::string to_string(AttentionMode mode);
AttentionMode parse_attention_mode(const std::string& s);

struct ModelConfig {
  std::size_t input_dim = 1024;
  std::size_t hidden_dim = 512;
  std::size_t targets = 10;
  std::size_t heads = 8;
  std::vector<std::size_t> neighbors = {16, 64};  // one entry per attention layer
  AttentionMode mode = AttentionMode::kLocal;
  bool self_loops = true;
  double layer_norm_eps = 1e-5;

  std::size_t layers() const noexcept { return neighbors.size(); }
  // Throws std::invalid_argument describing the first bad field.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ModelParams {
  Matrix embed;                      // [hidden × input]
  std::vector<double> embed_bias;    // [hidden]
  std::vector<AttentionLayerParams> layers;
  Matrix head;                       // [targets × hidden]
  std::vector<double> head_bias;     // [targets]

  static ModelParams zeros(const ModelConfig& config);
};

// Visits every parameter array in the fixed flat order: embed, embed_bias,
// then per layer (per head query, key, value), output, gamma, beta, then
// head, head_bias.
template <class Params, class Fn>
void for_each_array(Params& p, Fn&& fn) {
  fn(std::span(p.embed.data()));
  fn(std::span(p.embed_bias));
  for (auto& layer : p.layers) {
    for (auto& h : layer.heads) {
      fn(std::span(h.query.data()));
      fn(std::span(h.key.data()));
      fn(std::span(h.value.data()));
    }
    fn(std::span(layer.output.data()));
    fn(std::span(layer.gamma));
    fn(std::span(layer.beta));
  }
  fn(std::span(p.head.data()));
  fn(std::span(p.head_bias));
}

std::vector<double> flatten(const ModelParams& params);
ModelParams unflatten(const ModelConfig& config, std::span<const double> flat);
// In-place variants; the span length must equal the total parameter count.
void flatten_into(const ModelParams& params, std::span<double> out);
void load_flat(ModelParams& params, std::span<const double> flat);

std::size_t count_params(const ModelConfig& config);

// Xavier-uniform weights, zero biases, unit gamma, zero beta.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// One KnnGraph per layer for a bag, using the configured neighbour counts.
// Returns an empty list in global mode.
std::vector<KnnGraph> build_graphs(const ModelConfig& config, std::span<const Point> coords);

struct BagOutput {
  std::vector<double> logits;
  std::vector<double> probabilities;
  std::vector<double> embedding;
  std::vector<AttentionCache> caches;
};

BagOutput forward(const Matrix& features, std::span<const KnnGraph> graphs,
                  const ModelParams& params, const ModelConfig& config);

struct LossOptions {
  WeightMode weight_mode = WeightMode::kWholeTerm;
};

struct BackwardResult {
  double loss = 0.0;
  ModelParams grad;
  BagOutput output;
};

BackwardResult backward(const Matrix& features, std::span<const KnnGraph> graphs,
                        std::span<const std::uint8_t> labels, std::span<const double> weights,
                        const ModelParams& params, const ModelConfig& config,
                        LossOptions options = {});

}  // namespace lamil
