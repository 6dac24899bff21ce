#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lamil/model.hpp"
#include "oracles.hpp"

using namespace lamil;

namespace {

ModelConfig small_config(AttentionMode mode) {
  ModelConfig c;
  c.input_dim = 3;
  c.hidden_dim = 4;
  c.targets = 2;
  c.heads = 2;
  c.neighbors = {2, 3};
  c.mode = mode;
  return c;
}

// Non-trivial gamma/beta and biases so every parameter array carries signal.
ModelParams random_params(const ModelConfig& c, lamil::Rng& rng) {
  ModelParams p = ModelParams::zeros(c);
  for_each_array(p, [&](std::span<double> a) {
    for (double& v : a) v = rng.uniform(-0.8, 0.8);
  });
  for (auto& layer : p.layers) {
    for (double& g : layer.gamma) g += 1.0;
  }
  return p;
}

struct RandomBag {
  Matrix features;
  std::vector<Point> coords;
  std::vector<std::uint8_t> labels;
};

RandomBag random_bag(lamil::Rng& rng, const ModelConfig& c, std::size_t n) {
  RandomBag b{oracle::random_matrix(rng, n, c.input_dim, 1.5), oracle::random_points(rng, n, 4.0), {}};
  for (std::size_t t = 0; t < c.targets; ++t) b.labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
  return b;
}

}  // namespace

TEST_CASE("count_params: default, minimal and head growth") {
  // D·d + d + l·(4d² + 2d) + T·d + T for D=1024, d=512, T=10, l=2.
  CHECK(count_params(ModelConfig{}) == 2'629'130u);

  ModelConfig minimal;
  minimal.input_dim = minimal.hidden_dim = minimal.targets = minimal.heads = 1;
  minimal.neighbors = {4};
  CHECK(count_params(minimal) == 10u);

  ModelConfig wide = ModelConfig{};
  wide.targets = 20;
  CHECK(count_params(wide) - count_params(ModelConfig{}) == 512u * 10u + 10u);

  for (const auto& c : {ModelConfig{}, minimal, small_config(AttentionMode::kLocal)}) {
    CHECK(flatten(ModelParams::zeros(c)).size() == count_params(c));
  }
}

TEST_CASE("init_params: deterministic, bounded, differing across seeds") {
  const ModelConfig c;
  const ModelParams a = init_params(c, 5);
  const ModelParams b = init_params(c, 5);
  CHECK(flatten(a) == flatten(b));
  CHECK(flatten(a) != flatten(init_params(c, 6)));

  const double embed_bound = std::sqrt(6.0 / (1024.0 + 512.0));
  const auto [lo, hi] = std::minmax_element(a.embed.data().begin(), a.embed.data().end());
  CHECK(*lo >= -embed_bound);
  CHECK(*hi <= embed_bound);
  CHECK(*hi > 0.9 * embed_bound);

  const double head_bound = std::sqrt(6.0 / (64.0 + 512.0));
  for (const auto& layer : a.layers) {
    for (const auto& h : layer.heads) {
      for (double v : h.query.data()) CHECK_UNARY(std::abs(v) <= head_bound);
    }
    CHECK(std::all_of(layer.gamma.begin(), layer.gamma.end(), [](double g) { return g == 1.0; }));
    CHECK(std::all_of(layer.beta.begin(), layer.beta.end(), [](double g) { return g == 0.0; }));
  }
  CHECK(std::all_of(a.embed_bias.begin(), a.embed_bias.end(), [](double v) { return v == 0.0; }));
  CHECK(std::all_of(a.head_bias.begin(), a.head_bias.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("flatten and unflatten are inverse") {
  lamil::Rng rng(51);
  const auto c = small_config(AttentionMode::kLocal);
  const ModelParams p = random_params(c, rng);
  const auto flat = flatten(p);
  CHECK(flatten(unflatten(c, flat)) == flat);
  std::vector<double> short_flat(flat.begin(), flat.end() - 1);
  CHECK_THROWS_AS(unflatten(c, short_flat), std::invalid_argument);
}

TEST_CASE("model config validation") {
  ModelConfig c;
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ModelConfig{};
  c.neighbors = {};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ModelConfig{};
  c.neighbors = {0, 4};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(parse_attention_mode("global") == AttentionMode::kGlobal);
  CHECK_THROWS_AS(parse_attention_mode("sparse"), std::invalid_argument);
}

TEST_CASE("forward: shapes, range and determinism") {
  lamil::Rng rng(52);
  const auto c = small_config(AttentionMode::kLocal);
  const ModelParams p = random_params(c, rng);
  const auto bag = random_bag(rng, c, 9);
  const auto graphs = build_graphs(c, bag.coords);
  REQUIRE(graphs.size() == 2);
  CHECK(graphs[0].k() == 2);
  CHECK(graphs[1].k() == 3);

  const BagOutput a = forward(bag.features, graphs, p, c);
  CHECK(a.logits.size() == 2);
  CHECK(a.embedding.size() == 4);
  CHECK(a.caches.size() == 2);
  for (double prob : a.probabilities) CHECK((prob > 0.0 && prob < 1.0));
  const BagOutput b = forward(bag.features, graphs, p, c);
  CHECK(a.logits == b.logits);
  CHECK(a.embedding == b.embedding);

  CHECK(build_graphs(small_config(AttentionMode::kGlobal), bag.coords).empty());
  CHECK_THROWS_AS(forward(oracle::random_matrix(rng, 9, 5), graphs, p, c), std::invalid_argument);
}

TEST_CASE("forward: zero head gives probability one half") {
  lamil::Rng rng(53);
  const auto c = small_config(AttentionMode::kLocal);
  ModelParams p = random_params(c, rng);
  p.head = Matrix(c.targets, c.hidden_dim);
  std::fill(p.head_bias.begin(), p.head_bias.end(), 0.0);
  const auto bag = random_bag(rng, c, 6);
  for (double prob : forward(bag.features, build_graphs(c, bag.coords), p, c).probabilities) {
    CHECK(prob == 0.5);
  }
}

TEST_CASE("forward: local with complete graphs equals global") {
  lamil::Rng rng(54);
  for (int trial = 0; trial < 10; ++trial) {
    auto local = small_config(AttentionMode::kLocal);
    const std::size_t n = 1 + rng.below(12);
    local.neighbors = {n, n + 3};
    auto global = local;
    global.mode = AttentionMode::kGlobal;
    const ModelParams p = random_params(local, rng);
    const auto bag = random_bag(rng, local, n);
    const auto a = forward(bag.features, build_graphs(local, bag.coords), p, local);
    const auto b = forward(bag.features, {}, p, global);
    CHECK(oracle::max_rel_error(a.logits, b.logits) <= 1e-10);
  }
}

TEST_CASE("backward: full-parameter gradient matches finite differences") {
  lamil::Rng rng(55);
  for (const auto mode : {AttentionMode::kLocal, AttentionMode::kGlobal}) {
    for (const auto weighting : {WeightMode::kWholeTerm, WeightMode::kPositiveTerm}) {
      CAPTURE(to_string(mode));
      const auto c = small_config(mode);
      const ModelParams p = random_params(c, rng);
      const auto bag = random_bag(rng, c, 5);
      const auto graphs = build_graphs(c, bag.coords);
      const std::vector<double> w{2.5, 0.4};
      const LossOptions opts{weighting};

      const BackwardResult r = backward(bag.features, graphs, bag.labels, w, p, c, opts);
      auto loss_at = [&](std::span<const double> flat) {
        const auto out = forward(bag.features, graphs, unflatten(c, flat), c);
        return weighted_bce(out.logits, bag.labels, w, weighting);
      };
      CHECK(r.loss == doctest::Approx(loss_at(flatten(p))).epsilon(1e-14));
      const auto fd = oracle::finite_difference(loss_at, flatten(p));
      CHECK(oracle::max_rel_error(flatten(r.grad), fd) < 1e-4);
    }
  }
}

TEST_CASE("backward: zero class weights give zero gradient") {
  lamil::Rng rng(56);
  const auto c = small_config(AttentionMode::kLocal);
  const ModelParams p = random_params(c, rng);
  const auto bag = random_bag(rng, c, 7);
  const std::vector<double> w{0.0, 0.0};
  const auto r = backward(bag.features, build_graphs(c, bag.coords), bag.labels, w, p, c);
  CHECK(r.loss == 0.0);
  const auto g = flatten(r.grad);
  CHECK(std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("bag outputs and gradients are invariant under tile permutation") {
  lamil::Rng rng(57);
  for (const auto mode : {AttentionMode::kLocal, AttentionMode::kGlobal}) {
    const auto c = small_config(mode);
    const ModelParams p = random_params(c, rng);
    const std::size_t n = 11;
    const auto bag = random_bag(rng, c, n);
    const auto graphs = build_graphs(c, bag.coords);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    rng.shuffle(perm.begin(), perm.end());
    std::vector<std::uint32_t> inverse(n);
    for (std::size_t r = 0; r < n; ++r) inverse[perm[r]] = static_cast<std::uint32_t>(r);

    Matrix features(n, c.input_dim);
    for (std::size_t r = 0; r < n; ++r) {
      std::copy(bag.features.row(perm[r]).begin(), bag.features.row(perm[r]).end(),
                features.row(r).begin());
    }
    std::vector<KnnGraph> relabeled;
    for (const auto& g : graphs) {
      std::vector<std::uint32_t> table;
      for (std::size_t r = 0; r < n; ++r) {
        for (auto j : g.row(perm[r])) table.push_back(inverse[j]);
      }
      relabeled.emplace_back(n, g.k(), table, g.self_loops());
    }

    const std::vector<double> w{1.3, 0.7};
    const auto a = backward(bag.features, graphs, bag.labels, w, p, c);
    const auto b = backward(features, relabeled, bag.labels, w, p, c);
    CHECK(oracle::max_rel_error(a.output.logits, b.output.logits) <= 1e-12);
    CHECK(oracle::max_rel_error(flatten(a.grad), flatten(b.grad)) <= 1e-10);
  }
}
