#include "lamil/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "eigen_view.hpp"

namespace lamil {

namespace {

using detail::dot;
using detail::idx;
using detail::view;

Matrix column_block(const Matrix& m, std::size_t offset, std::size_t width) {
  Matrix out(m.rows(), width);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto src = m.row(i).subspan(offset, width);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void add_column_block(Matrix& m, const Matrix& block, std::size_t offset) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto dst = m.row(i).subspan(offset, block.cols());
    auto src = block.row(i);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
  }
}

void check_params(const Matrix& tokens, const AttentionLayerParams& params) {
  const std::size_t d = params.dim();
  if (params.heads.empty() || d == 0 || d % params.head_count() != 0) {
    throw std::invalid_argument("attention: dim " + std::to_string(d) +
                                " not divisible by head count " +
                                std::to_string(params.head_count()));
  }
  if (tokens.cols() != d) {
    throw std::invalid_argument("attention: tokens " + tokens.shape() +
                                " do not match layer dim " + std::to_string(d));
  }
}

// Head h fills columns [h*head_dim, (h+1)*head_dim) of query, key and value.
void project(const Matrix& tokens, const AttentionLayerParams& params, AttentionForward& fwd) {
  const std::size_t n = tokens.rows(), d = params.dim(), dk = params.head_dim();
  fwd.query = Matrix(n, d);
  fwd.key = Matrix(n, d);
  fwd.value = Matrix(n, d);
  const auto x = view(tokens);
  auto q = view(fwd.query), k = view(fwd.key), v = view(fwd.value);
  for (std::size_t h = 0; h < params.head_count(); ++h) {
    const auto& hp = params.heads[h];
    const auto off = idx(h * dk), w = idx(dk);
    q.middleCols(off, w).noalias() = x * view(hp.query).transpose();
    k.middleCols(off, w).noalias() = x * view(hp.key).transpose();
    v.middleCols(off, w).noalias() = x * view(hp.value).transpose();
  }
}

// Shared tail of both backward passes: given the gradients w.r.t. the
// projected queries/keys/values, fill projection and token gradients.
void finish_backward(const Matrix& tokens, const AttentionLayerParams& params, const Matrix& dq,
                     const Matrix& dk, const Matrix& dv, AttentionGrad& grad) {
  const std::size_t dh = params.head_dim();
  const auto x = view(tokens);
  const auto gq = view(dq), gk = view(dk), gv = view(dv);
  grad.d_tokens = Matrix(tokens.rows(), tokens.cols());
  auto dx = view(grad.d_tokens);
  grad.d_params.heads.resize(params.head_count());
  for (std::size_t h = 0; h < params.head_count(); ++h) {
    const auto& hp = params.heads[h];
    auto& gh = grad.d_params.heads[h];
    const auto off = idx(h * dh), w = idx(dh);
    gh.query = Matrix(dh, tokens.cols());
    gh.key = Matrix(dh, tokens.cols());
    gh.value = Matrix(dh, tokens.cols());
    view(gh.query).noalias() = gq.middleCols(off, w).transpose() * x;
    view(gh.key).noalias() = gk.middleCols(off, w).transpose() * x;
    view(gh.value).noalias() = gv.middleCols(off, w).transpose() * x;
    dx.noalias() += gq.middleCols(off, w) * view(hp.query);
    dx.noalias() += gk.middleCols(off, w) * view(hp.key);
    dx.noalias() += gv.middleCols(off, w) * view(hp.value);
  }
}

}  // namespace

AttentionLayerParams AttentionLayerParams::zeros(std::size_t dim, std::size_t heads) {
  if (heads == 0 || dim % heads != 0) {
    throw std::invalid_argument("attention: dim " + std::to_string(dim) +
                                " not divisible by head count " + std::to_string(heads));
  }
  const std::size_t dk = dim / heads;
  AttentionLayerParams p;
  p.heads.assign(heads, HeadParams{Matrix(dk, dim), Matrix(dk, dim), Matrix(dk, dim)});
  p.output = Matrix(dim, dim);
  p.gamma.assign(dim, 0.0);
  p.beta.assign(dim, 0.0);
  return p;
}

AttentionCache::AttentionCache(std::size_t n, std::size_t k, std::size_t heads,
                               std::vector<std::uint32_t> neighbors)
    : n_(n), k_(k), heads_(heads), neighbors_(std::move(neighbors)), weights_(n * k * heads, 0.0) {
  if (neighbors_.size() != n * k) {
    throw std::invalid_argument("AttentionCache: neighbour table does not match n*k");
  }
}

AttentionForward local_attention_forward(const Matrix& tokens, const KnnGraph& graph,
                                         const AttentionLayerParams& params) {
  check_params(tokens, params);
  const std::size_t n = tokens.rows();
  if (graph.n() != n) {
    throw std::invalid_argument("local attention: graph has " + std::to_string(graph.n()) +
                                " tiles, tokens have " + std::to_string(n));
  }
  const std::size_t d = params.dim(), heads = params.head_count(), dk = params.head_dim();
  const std::size_t k = graph.k();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  AttentionForward fwd;
  project(tokens, params, fwd);
  fwd.cache = AttentionCache(n, k, heads, graph.table());
  fwd.concat = Matrix(n, d);

  std::vector<double> logits(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nb = graph.row(i);
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * dk;
      const auto qi = fwd.query.row(i).subspan(off, dk);
      for (std::size_t m = 0; m < k; ++m) {
        logits[m] = dot(qi, fwd.key.row(nb[m]).subspan(off, dk)) * scale;
      }
      const auto w = softmax(logits);
      auto out = fwd.concat.row(i).subspan(off, dk);
      for (std::size_t m = 0; m < k; ++m) {
        fwd.cache.weight(i, m, h) = w[m];
        const auto vj = fwd.value.row(nb[m]).subspan(off, dk);
        for (std::size_t c = 0; c < dk; ++c) out[c] += w[m] * vj[c];
      }
    }
  }
  fwd.out = matmul_bt(fwd.concat, params.output);
  return fwd;
}

AttentionForward global_attention_forward(const Matrix& tokens,
                                          const AttentionLayerParams& params) {
  check_params(tokens, params);
  const std::size_t n = tokens.rows();
  const std::size_t d = params.dim(), heads = params.head_count(), dk = params.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  std::vector<std::uint32_t> all(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    std::iota(all.begin() + static_cast<std::ptrdiff_t>(i * n),
              all.begin() + static_cast<std::ptrdiff_t>((i + 1) * n), 0u);
  }

  AttentionForward fwd;
  project(tokens, params, fwd);
  fwd.cache = AttentionCache(n, n, heads, std::move(all));
  fwd.concat = Matrix(n, d);

  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dk;
    Matrix scores = matmul_bt(column_block(fwd.query, off, dk), column_block(fwd.key, off, dk));
    for (double& s : scores.data()) s *= scale;
    Matrix weights(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto w = softmax(scores.row(i));
      std::copy(w.begin(), w.end(), weights.row(i).begin());
      for (std::size_t j = 0; j < n; ++j) fwd.cache.weight(i, j, h) = w[j];
    }
    add_column_block(fwd.concat, matmul(weights, column_block(fwd.value, off, dk)), off);
  }
  fwd.out = matmul_bt(fwd.concat, params.output);
  return fwd;
}

AttentionGrad local_attention_backward(const Matrix& d_out, const Matrix& tokens,
                                       const KnnGraph& graph, const AttentionLayerParams& params,
                                       const AttentionForward& fwd) {
  const std::size_t n = tokens.rows(), d = params.dim();
  const std::size_t heads = params.head_count(), dk = params.head_dim(), k = graph.k();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  AttentionGrad grad;
  grad.d_params.gamma.assign(d, 0.0);
  grad.d_params.beta.assign(d, 0.0);
  grad.d_params.output = matmul_at(d_out, fwd.concat);
  const Matrix d_concat = matmul(d_out, params.output);

  Matrix dq(n, d), dkey(n, d), dv(n, d);
  std::vector<double> w(k), dw(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nb = graph.row(i);
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * dk;
      const auto g = d_concat.row(i).subspan(off, dk);
      for (std::size_t m = 0; m < k; ++m) {
        w[m] = fwd.cache.weight(i, m, h);
        const auto vj = fwd.value.row(nb[m]).subspan(off, dk);
        auto dvj = dv.row(nb[m]).subspan(off, dk);
        for (std::size_t c = 0; c < dk; ++c) dvj[c] += w[m] * g[c];
        dw[m] = dot(g, vj);
      }
      const auto ds = softmax_backward(w, dw);
      const auto qi = fwd.query.row(i).subspan(off, dk);
      auto dqi = dq.row(i).subspan(off, dk);
      for (std::size_t m = 0; m < k; ++m) {
        const double s = ds[m] * scale;
        const auto kj = fwd.key.row(nb[m]).subspan(off, dk);
        auto dkj = dkey.row(nb[m]).subspan(off, dk);
        for (std::size_t c = 0; c < dk; ++c) {
          dqi[c] += s * kj[c];
          dkj[c] += s * qi[c];
        }
      }
    }
  }
  finish_backward(tokens, params, dq, dkey, dv, grad);
  return grad;
}

AttentionGrad global_attention_backward(const Matrix& d_out, const Matrix& tokens,
                                        const AttentionLayerParams& params,
                                        const AttentionForward& fwd) {
  const std::size_t n = tokens.rows(), d = params.dim();
  const std::size_t heads = params.head_count(), dk = params.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  AttentionGrad grad;
  grad.d_params.gamma.assign(d, 0.0);
  grad.d_params.beta.assign(d, 0.0);
  grad.d_params.output = matmul_at(d_out, fwd.concat);
  const Matrix d_concat = matmul(d_out, params.output);

  Matrix dq(n, d), dkey(n, d), dv(n, d);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dk;
    Matrix weights(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) weights(i, j) = fwd.cache.weight(i, j, h);
    }
    const Matrix g = column_block(d_concat, off, dk);
    const Matrix vh = column_block(fwd.value, off, dk);
    add_column_block(dv, matmul_at(weights, g), off);
    const Matrix dweights = matmul_bt(g, vh);
    Matrix dscores(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ds = softmax_backward(weights.row(i), dweights.row(i));
      for (std::size_t j = 0; j < n; ++j) dscores(i, j) = ds[j] * scale;
    }
    add_column_block(dq, matmul(dscores, column_block(fwd.key, off, dk)), off);
    add_column_block(dkey, matmul_at(dscores, column_block(fwd.query, off, dk)), off);
  }
  finish_backward(tokens, params, dq, dkey, dv, grad);
  return grad;
}

BlockForward transformer_block(const Matrix& tokens, const KnnGraph* graph,
                               const AttentionLayerParams& params, double eps) {
  BlockForward fwd;
  fwd.attention = graph ? local_attention_forward(tokens, *graph, params)
                        : global_attention_forward(tokens, params);
  Matrix residual = tokens;
  add_inplace(residual, fwd.attention.out);
  fwd.out = Matrix(tokens.rows(), tokens.cols());
  fwd.norms.reserve(tokens.rows());
  for (std::size_t i = 0; i < tokens.rows(); ++i) {
    fwd.norms.push_back(layer_norm_with_stats(residual.row(i), params.gamma, params.beta, eps));
    std::copy(fwd.norms.back().out.begin(), fwd.norms.back().out.end(), fwd.out.row(i).begin());
  }
  return fwd;
}

AttentionGrad transformer_block_backward(const Matrix& d_out, const Matrix& tokens,
                                         const KnnGraph* graph, const AttentionLayerParams& params,
                                         const BlockForward& fwd) {
  const std::size_t n = tokens.rows(), d = params.dim();
  std::vector<double> dgamma(d, 0.0), dbeta(d, 0.0);
  Matrix d_residual(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto dx = layer_norm_backward(d_out.row(i), fwd.norms[i], params.gamma, dgamma, dbeta);
    std::copy(dx.begin(), dx.end(), d_residual.row(i).begin());
  }
  AttentionGrad grad =
      graph ? local_attention_backward(d_residual, tokens, *graph, params, fwd.attention)
            : global_attention_backward(d_residual, tokens, params, fwd.attention);
  add_inplace(grad.d_tokens, d_residual);
  grad.d_params.gamma = std::move(dgamma);
  grad.d_params.beta = std::move(dbeta);
  return grad;
}

std::vector<double> raw_attention_mass(const AttentionCache& cache) {
  std::vector<double> mass(cache.n(), 0.0);
  const auto& nb = cache.neighbors();
  for (std::size_t i = 0; i < cache.n(); ++i) {
    for (std::size_t m = 0; m < cache.k(); ++m) {
      const std::uint32_t j = nb[i * cache.k() + m];
      if (j >= cache.n()) throw std::invalid_argument("attention scores: neighbour index out of range");
      for (std::size_t h = 0; h < cache.heads(); ++h) mass[j] += cache.weight(i, m, h);
    }
  }
  return mass;
}

std::vector<double> attention_scores(const AttentionCache& cache) {
  auto mass = raw_attention_mass(cache);
  if (mass.empty()) return mass;
  const auto [lo, hi] = std::minmax_element(mass.begin(), mass.end());
  const double mn = *lo, mx = *hi;
  if (mx == mn) {
    std::fill(mass.begin(), mass.end(), 0.5);
    return mass;
  }
  for (double& v : mass) v = (v - mn) / (mx - mn);
  return mass;
}

std::vector<double> attention_scores(const AttentionCache& cache, const KnnGraph& graph) {
  if (cache.n() != graph.n() || cache.k() != graph.k() || cache.neighbors() != graph.table()) {
    throw std::invalid_argument("attention scores: cache is not aligned with the graph");
  }
  return attention_scores(cache);
}

}  // namespace lamil
