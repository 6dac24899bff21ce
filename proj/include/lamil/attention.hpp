#pragma once

#include <cstdint>
#include <vector>

#include "lamil/graph.hpp"
#include "lamil/tensor.hpp"

namespace lamil {

// Per-head projections, each [head_dim × dim].
struct HeadParams {
  Matrix query;
  Matrix key;
  Matrix value;
};

struct AttentionLayerParams {
  std::vector<HeadParams> heads;
  Matrix output;  // [dim × dim], applied to the concatenated head outputs
  std::vector<double> gamma;
  std::vector<double> beta;

  std::size_t dim() const noexcept { return output.rows(); }
  std::size_t head_count() const noexcept { return heads.size(); }
  std::size_t head_dim() const noexcept { return heads.empty() ? 0 : heads.front().query.rows(); }

  static AttentionLayerParams zeros(std::size_t dim, std::size_t heads);
};

// Softmax weights of one attention layer. Entry (i, m, h) is the weight tile i
// gives its m-th neighbour (neighbors()[i*k + m]) in head h.
class AttentionCache {
 public:
  AttentionCache() = default;
  AttentionCache(std::size_t n, std::size_t k, std::size_t heads,
                 std::vector<std::uint32_t> neighbors);

  std::size_t n() const noexcept { return n_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t heads() const noexcept { return heads_; }
  const std::vector<std::uint32_t>& neighbors() const noexcept { return neighbors_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  double weight(std::size_t i, std::size_t m, std::size_t h) const {
    return weights_[(i * k_ + m) * heads_ + h];
  }
  double& weight(std::size_t i, std::size_t m, std::size_t h) {
    return weights_[(i * k_ + m) * heads_ + h];
  }

 private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::size_t heads_ = 0;
  std::vector<std::uint32_t> neighbors_;
  std::vector<double> weights_;
};

// Intermediates of one attention layer kept for the backward pass.
struct AttentionForward {
  Matrix out;
  AttentionCache cache;
  Matrix query;   // [n × dim], head h in columns [h*head_dim, (h+1)*head_dim)
  Matrix key;
  Matrix value;
  Matrix concat;  // head outputs before the output projection
};

struct AttentionGrad {
  Matrix d_tokens;
  AttentionLayerParams d_params;
};

AttentionForward local_attention_forward(const Matrix& tokens, const KnnGraph& graph,
                                         const AttentionLayerParams& params);
AttentionForward global_attention_forward(const Matrix& tokens,
                                          const AttentionLayerParams& params);

// Gradients of the projections only; d_params.gamma/beta stay zero.
AttentionGrad local_attention_backward(const Matrix& d_out, const Matrix& tokens,
                                       const KnnGraph& graph, const AttentionLayerParams& params,
                                       const AttentionForward& fwd);
AttentionGrad global_attention_backward(const Matrix& d_out, const Matrix& tokens,
                                        const AttentionLayerParams& params,
                                        const AttentionForward& fwd);

struct BlockForward {
  AttentionForward attention;
  std::vector<LayerNormResult> norms;
  Matrix out;
};

// layer_norm(tokens + attention(tokens)) row-wise. A null graph selects global
// attention.
BlockForward transformer_block(const Matrix& tokens, const KnnGraph* graph,
                               const AttentionLayerParams& params, double eps);
AttentionGrad transformer_block_backward(const Matrix& d_out, const Matrix& tokens,
                                         const KnnGraph* graph, const AttentionLayerParams& params,
                                         const BlockForward& fwd);

// Per-tile incoming attention mass summed over heads and neighbourhoods,
// min-max normalised to [0, 1]; all-equal raw scores map to 0.5.
std::vector<double> raw_attention_mass(const AttentionCache& cache);
std::vector<double> attention_scores(const AttentionCache& cache);
// Same, after checking that the cache rows line up with the graph rows.
std::vector<double> attention_scores(const AttentionCache& cache, const KnnGraph& graph);

}  // namespace lamil
