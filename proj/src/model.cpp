#include "lamil/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lamil/rng.hpp"

namespace lamil {

namespace {

struct ForwardTrace {
  std::vector<Matrix> block_inputs;
  std::vector<BlockForward> blocks;
  BagOutput output;
};

void check_inputs(const Matrix& features, std::span<const KnnGraph> graphs,
                  const ModelParams& params, const ModelConfig& config) {
  config.validate();
  if (features.rows() == 0) throw std::invalid_argument("forward: bag has no tiles");
  if (features.cols() != config.input_dim) {
    throw std::invalid_argument("forward: features " + features.shape() +
                                " do not match input dim " + std::to_string(config.input_dim));
  }
  if (params.embed.rows() != config.hidden_dim || params.embed.cols() != config.input_dim ||
      params.layers.size() != config.layers() || params.head.rows() != config.targets ||
      params.head.cols() != config.hidden_dim) {
    throw std::invalid_argument("forward: parameters do not match the model config");
  }
  if (config.mode == AttentionMode::kLocal) {
    if (graphs.size() != config.layers()) {
      throw std::invalid_argument("forward: " + std::to_string(graphs.size()) + " graphs for " +
                                  std::to_string(config.layers()) + " layers");
    }
    for (std::size_t l = 0; l < graphs.size(); ++l) {
      if (graphs[l].n() != features.rows()) {
        throw std::invalid_argument("forward: graph " + std::to_string(l) + " has " +
                                    std::to_string(graphs[l].n()) + " tiles, bag has " +
                                    std::to_string(features.rows()));
      }
    }
  }
}

const KnnGraph* graph_for(std::span<const KnnGraph> graphs, const ModelConfig& config,
                          std::size_t layer) {
  return config.mode == AttentionMode::kLocal ? &graphs[layer] : nullptr;
}

ForwardTrace run_forward(const Matrix& features, std::span<const KnnGraph> graphs,
                         const ModelParams& params, const ModelConfig& config) {
  check_inputs(features, graphs, params, config);
  ForwardTrace trace;
  Matrix tokens = matmul_bt(features, params.embed);
  add_row_inplace(tokens, params.embed_bias);

  for (std::size_t l = 0; l < config.layers(); ++l) {
    trace.block_inputs.push_back(std::move(tokens));
    trace.blocks.push_back(transformer_block(trace.block_inputs.back(), graph_for(graphs, config, l),
                                             params.layers[l], config.layer_norm_eps));
    tokens = trace.blocks.back().out;
  }

  BagOutput& out = trace.output;
  out.embedding = column_sums(tokens);
  const double inv_n = 1.0 / static_cast<double>(tokens.rows());
  for (double& v : out.embedding) v *= inv_n;

  out.logits = params.head_bias;
  for (std::size_t t = 0; t < config.targets; ++t) {
    const auto w = params.head.row(t);
    double acc = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c) acc += w[c] * out.embedding[c];
    out.logits[t] += acc;
  }
  out.probabilities.resize(out.logits.size());
  std::transform(out.logits.begin(), out.logits.end(), out.probabilities.begin(), sigmoid);
  for (const auto& b : trace.blocks) out.caches.push_back(b.attention.cache);
  return trace;
}

double xavier_bound(const Matrix& m) {
  return std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
}

}  // namespace

std::string to_string(AttentionMode mode) {
  return mode == AttentionMode::kLocal ? "local" : "global";
}

AttentionMode parse_attention_mode(const std::string& s) {
  if (s == "local") return AttentionMode::kLocal;
  if (s == "global") return AttentionMode::kGlobal;
  throw std::invalid_argument("unknown attention mode '" + s + "' (expected local or global)");
}

void ModelConfig::validate() const {
  if (input_dim == 0 || hidden_dim == 0 || targets == 0 || heads == 0) {
    throw std::invalid_argument("model config: all dimensions must be at least 1");
  }
  if (hidden_dim % heads != 0) {
    throw std::invalid_argument("model config: hidden dim " + std::to_string(hidden_dim) +
                                " not divisible by " + std::to_string(heads) + " heads");
  }
  if (neighbors.empty()) throw std::invalid_argument("model config: at least one layer required");
  if (mode == AttentionMode::kLocal) {
    for (std::size_t k : neighbors) {
      if (k == 0) throw std::invalid_argument("model config: neighbour count must be at least 1");
    }
  }
  if (!(layer_norm_eps >= 0.0) || !std::isfinite(layer_norm_eps)) {
    throw std::invalid_argument("model config: layer norm eps must be finite and non-negative");
  }
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  p.embed = Matrix(config.hidden_dim, config.input_dim);
  p.embed_bias.assign(config.hidden_dim, 0.0);
  for (std::size_t l = 0; l < config.layers(); ++l) {
    p.layers.push_back(AttentionLayerParams::zeros(config.hidden_dim, config.heads));
  }
  p.head = Matrix(config.targets, config.hidden_dim);
  p.head_bias.assign(config.targets, 0.0);
  return p;
}

namespace {

std::size_t flat_size(const ModelParams& params) {
  std::size_t total = 0;
  for_each_array(params, [&](std::span<const double> a) { total += a.size(); });
  return total;
}

void require_flat_size(const ModelParams& params, std::size_t got, const char* op) {
  const std::size_t expected = flat_size(params);
  if (got != expected) {
    throw std::invalid_argument(std::string(op) + ": " + std::to_string(got) +
                                " values, parameters need " + std::to_string(expected));
  }
}

}  // namespace

void flatten_into(const ModelParams& params, std::span<double> out) {
  require_flat_size(params, out.size(), "flatten");
  std::size_t pos = 0;
  for_each_array(params, [&](std::span<const double> a) {
    std::copy(a.begin(), a.end(), out.begin() + static_cast<std::ptrdiff_t>(pos));
    pos += a.size();
  });
}

std::vector<double> flatten(const ModelParams& params) {
  std::vector<double> flat(flat_size(params));
  flatten_into(params, flat);
  return flat;
}

void load_flat(ModelParams& params, std::span<const double> flat) {
  require_flat_size(params, flat.size(), "unflatten");
  std::size_t pos = 0;
  for_each_array(params, [&](std::span<double> a) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), a.size(), a.begin());
    pos += a.size();
  });
}

ModelParams unflatten(const ModelConfig& config, std::span<const double> flat) {
  ModelParams p = ModelParams::zeros(config);
  load_flat(p, flat);
  return p;
}

std::size_t count_params(const ModelConfig& config) {
  config.validate();
  const std::size_t D = config.input_dim, d = config.hidden_dim, T = config.targets;
  // Per layer: H heads × 3 projections of (d/H)×d, output d×d, gamma and beta.
  const std::size_t per_layer = 3 * d * d + d * d + 2 * d;
  return d * D + d + config.layers() * per_layer + T * d + T;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(config);
  Rng rng(seed);
  auto fill = [&](Matrix& m) {
    const double bound = xavier_bound(m);
    for (double& v : m.data()) v = rng.uniform(-bound, bound);
  };
  fill(p.embed);
  for (auto& layer : p.layers) {
    for (auto& h : layer.heads) {
      fill(h.query);
      fill(h.key);
      fill(h.value);
    }
    fill(layer.output);
    std::fill(layer.gamma.begin(), layer.gamma.end(), 1.0);
  }
  fill(p.head);
  return p;
}

std::vector<KnnGraph> build_graphs(const ModelConfig& config, std::span<const Point> coords) {
  std::vector<KnnGraph> graphs;
  if (config.mode == AttentionMode::kGlobal) return graphs;
  graphs.reserve(config.layers());
  for (std::size_t k : config.neighbors) graphs.push_back(build_knn(coords, k, config.self_loops));
  return graphs;
}

BagOutput forward(const Matrix& features, std::span<const KnnGraph> graphs,
                  const ModelParams& params, const ModelConfig& config) {
  return run_forward(features, graphs, params, config).output;
}

BackwardResult backward(const Matrix& features, std::span<const KnnGraph> graphs,
                        std::span<const std::uint8_t> labels, std::span<const double> weights,
                        const ModelParams& params, const ModelConfig& config,
                        LossOptions options) {
  ForwardTrace trace = run_forward(features, graphs, params, config);
  BackwardResult result;
  result.loss = weighted_bce(trace.output.logits, labels, weights, options.weight_mode);
  const auto d_logits = loss_grad(trace.output.logits, labels, weights, options.weight_mode);

  ModelParams& g = result.grad;
  g.layers.resize(config.layers());
  g.head = Matrix(config.targets, config.hidden_dim);
  const std::size_t n = features.rows(), d = config.hidden_dim;

  g.head_bias = d_logits;
  std::vector<double> d_embedding(d, 0.0);
  for (std::size_t t = 0; t < config.targets; ++t) {
    auto grow = g.head.row(t);
    const auto wrow = params.head.row(t);
    for (std::size_t c = 0; c < d; ++c) {
      grow[c] = d_logits[t] * trace.output.embedding[c];
      d_embedding[c] += d_logits[t] * wrow[c];
    }
  }

  // Mean pooling spreads the embedding gradient evenly over tiles.
  Matrix d_tokens(n, d);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = d_tokens.row(i);
    for (std::size_t c = 0; c < d; ++c) r[c] = d_embedding[c] * inv_n;
  }

  for (std::size_t l = config.layers(); l-- > 0;) {
    AttentionGrad ag = transformer_block_backward(d_tokens, trace.block_inputs[l],
                                                  graph_for(graphs, config, l), params.layers[l],
                                                  trace.blocks[l]);
    g.layers[l] = std::move(ag.d_params);
    d_tokens = std::move(ag.d_tokens);
  }

  g.embed = matmul_at(d_tokens, features);
  g.embed_bias = column_sums(d_tokens);
  result.output = std::move(trace.output);
  return result;
}

}  // namespace lamil
