#include "lamil/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lamil {

KnnGraph::KnnGraph(std::size_t n, std::size_t k, std::vector<std::uint32_t> neighbors,
                   bool self_loops)
    : n_(n), k_(k), table_(std::move(neighbors)), self_loops_(self_loops) {
  if (table_.size() != n * k) {
    throw std::invalid_argument("KnnGraph: table length " + std::to_string(table_.size()) +
                                " does not match n*k = " + std::to_string(n * k));
  }
}

KnnGraph build_knn(std::span<const Point> coords, std::size_t k, bool self_loops) {
  const std::size_t n = coords.size();
  if (n == 0) throw std::invalid_argument("build_knn: no tiles");
  if (k == 0) throw std::invalid_argument("build_knn: k must be at least 1");
  if (!self_loops && n < 2) {
    throw std::invalid_argument("build_knn: excluding self loops needs at least 2 tiles");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(coords[i][0]) || !std::isfinite(coords[i][1])) {
      throw std::invalid_argument("build_knn: non-finite coordinate at tile " + std::to_string(i));
    }
  }
  const std::size_t available = self_loops ? n : n - 1;
  const std::size_t eff_k = std::min(k, available);

  std::vector<std::uint32_t> table(n * eff_k);
  std::vector<double> dist(n);
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = coords[i][0] - coords[j][0];
      const double dy = coords[i][1] - coords[j][1];
      dist[j] = dx * dx + dy * dy;
    }
    std::iota(order.begin(), order.end(), 0u);
    // Self always comes first (distance 0, and it wins ties against duplicates
    // of its own position) or is removed entirely.
    auto less = [&](std::uint32_t a, std::uint32_t b) {
      if (a == i || b == i) return a == i && b != i;
      if (dist[a] != dist[b]) return dist[a] < dist[b];
      return a < b;
    };
    const std::size_t skip = self_loops ? 0 : 1;
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(eff_k + skip),
                      order.end(), less);
    std::copy_n(order.begin() + static_cast<std::ptrdiff_t>(skip), eff_k,
                table.begin() + static_cast<std::ptrdiff_t>(i * eff_k));
  }
  return KnnGraph(n, eff_k, std::move(table), self_loops);
}

KnnGraph complete_graph(std::size_t n) {
  std::vector<std::uint32_t> table;
  table.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    table.push_back(static_cast<std::uint32_t>(i));
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) table.push_back(static_cast<std::uint32_t>(j));
    }
  }
  return KnnGraph(n, n, std::move(table), true);
}

std::optional<GraphViolation> validate(const KnnGraph& graph, std::size_t n) {
  if (graph.n() != n) {
    return GraphViolation{0, 0, "graph has " + std::to_string(graph.n()) + " rows, expected " +
                                    std::to_string(n)};
  }
  const std::size_t max_k = graph.self_loops() ? n : (n == 0 ? 0 : n - 1);
  if (graph.k() == 0 || graph.k() > max_k) {
    return GraphViolation{0, 0, "neighbour count " + std::to_string(graph.k()) + " out of range"};
  }
  std::vector<std::size_t> seen(n, static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < n; ++i) {
    auto r = graph.row(i);
    for (std::size_t c = 0; c < r.size(); ++c) {
      const std::uint32_t j = r[c];
      if (j >= n) return GraphViolation{i, c, "index " + std::to_string(j) + " out of range"};
      if (seen[j] == i) return GraphViolation{i, c, "duplicate index " + std::to_string(j)};
      seen[j] = i;
      if (graph.self_loops() && c == 0 && j != i) {
        return GraphViolation{i, c, "first neighbour is not the tile itself"};
      }
      if (!graph.self_loops() && j == i) return GraphViolation{i, c, "unexpected self loop"};
    }
  }
  return std::nullopt;
}

}  // namespace lamil
