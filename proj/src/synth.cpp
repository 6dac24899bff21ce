#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <utility>

#include "lamil/data.hpp"
#include "lamil/loss.hpp"
#include "lamil/rng.hpp"

namespace lamil {

namespace {

using Cell = std::pair<int, int>;

// Random 4-connected patch of n grid cells grown from the origin: each step
// adds a uniformly chosen cell from the current frontier.
std::vector<Cell> grow_tissue(std::size_t n, Rng& rng) {
  std::vector<Cell> cells{{0, 0}};
  std::set<Cell> taken{{0, 0}};
  std::vector<Cell> frontier;
  std::set<Cell> in_frontier;
  auto push_neighbours = [&](Cell c) {
    constexpr int dx[] = {1, -1, 0, 0};
    constexpr int dy[] = {0, 0, 1, -1};
    for (int d = 0; d < 4; ++d) {
      Cell nb{c.first + dx[d], c.second + dy[d]};
      if (!taken.count(nb) && in_frontier.insert(nb).second) frontier.push_back(nb);
    }
  };
  push_neighbours(cells.front());
  while (cells.size() < n) {
    const std::size_t pick = rng.below(frontier.size());
    const Cell c = frontier[pick];
    frontier[pick] = frontier.back();
    frontier.pop_back();
    in_frontier.erase(c);
    taken.insert(c);
    cells.push_back(c);
    push_neighbours(c);
  }
  int min_x = 0, min_y = 0;
  for (const auto& c : cells) {
    min_x = std::min(min_x, c.first);
    min_y = std::min(min_y, c.second);
  }
  for (auto& c : cells) c = {c.first - min_x, c.second - min_y};
  return cells;
}

}  // namespace

Dataset synth_dataset(const SynthOptions& o) {
  if (o.bags == 0 || o.min_tiles == 0 || o.dim == 0 || o.targets == 0) {
    throw std::invalid_argument("synth: bags, tiles, dim and targets must all be at least 1");
  }
  if (o.max_tiles < o.min_tiles) throw std::invalid_argument("synth: max tiles below min tiles");
  if (o.dim < o.targets) {
    throw std::invalid_argument("synth: feature dim " + std::to_string(o.dim) +
                                " is smaller than target count " + std::to_string(o.targets));
  }
  if (!(o.radius >= 0.0) || !std::isfinite(o.effect)) {
    throw std::invalid_argument("synth: radius must be >= 0 and effect finite");
  }

  const Rng root(o.seed);
  Dataset ds;
  for (std::size_t t = 0; t < o.targets; ++t) ds.target_names.push_back("target_" + std::to_string(t));

  for (std::size_t b = 0; b < o.bags; ++b) {
    Rng mask_rng = root.split("mask", b);
    Rng label_rng = root.split("labels", b);
    Rng feature_rng = root.split("features", b);
    Rng motif_rng = root.split("motif", b);

    Bag bag;
    char id[32];
    std::snprintf(id, sizeof id, "bag_%04zu", b);
    bag.bag_id = id;
    std::snprintf(id, sizeof id, "patient_%04zu", b);
    bag.patient_id = id;
    bag.dim = o.dim;

    const std::size_t n = o.min_tiles + mask_rng.below(o.max_tiles - o.min_tiles + 1);
    const auto cells = grow_tissue(n, mask_rng);
    bag.coords.reserve(2 * n);
    for (const auto& c : cells) {
      bag.coords.push_back(static_cast<float>(c.first + mask_rng.uniform(-0.25, 0.25)));
      bag.coords.push_back(static_cast<float>(c.second + mask_rng.uniform(-0.25, 0.25)));
    }

    std::vector<double> features(n * o.dim);
    for (double& v : features) v = feature_rng.normal();

    for (std::size_t t = 0; t < o.targets; ++t) {
      const bool positive = label_rng.bernoulli(0.5);
      bag.labels.push_back(positive ? kPositive : kNegative);
      if (!positive) continue;
      const std::size_t centre = motif_rng.below(n);
      const double cx = bag.coords[2 * centre], cy = bag.coords[2 * centre + 1];
      for (std::size_t i = 0; i < n; ++i) {
        const double dx = bag.coords[2 * i] - cx, dy = bag.coords[2 * i + 1] - cy;
        if (dx * dx + dy * dy <= o.radius * o.radius) features[i * o.dim + t] += o.effect;
      }
    }
    bag.features.assign(features.begin(), features.end());
    ds.bags.push_back(std::move(bag));
  }
  return ds;
}

}  // namespace lamil
