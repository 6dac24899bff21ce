#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lamil {

using Point = std::array<double, 2>;

// Neighbour table of a k-nearest-neighbour graph over tile coordinates.
// Row i lists the tiles that tile i attends to, nearest first.
class KnnGraph {
 public:
  KnnGraph() = default;
  KnnGraph(std::size_t n, std::size_t k, std::vector<std::uint32_t> neighbors, bool self_loops);

  std::size_t n() const noexcept { return n_; }
  std::size_t k() const noexcept { return k_; }
  bool self_loops() const noexcept { return self_loops_; }

  std::span<const std::uint32_t> row(std::size_t i) const { return {table_.data() + i * k_, k_}; }
  const std::vector<std::uint32_t>& table() const noexcept { return table_; }

  friend bool operator==(const KnnGraph&, const KnnGraph&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<std::uint32_t> table_;
  bool self_loops_ = true;
};

// Exact O(n²) search. Effective k is min(k, n) with self loops, min(k, n - 1)
// without. Equal distances are ordered by ascending tile index.
KnnGraph build_knn(std::span<const Point> coords, std::size_t k, bool self_loops = true);

// Every tile connected to every tile, self first then ascending index.
KnnGraph complete_graph(std::size_t n);

struct GraphViolation {
  std::size_t row = 0;
  std::size_t column = 0;
  std::string reason;
};

// Empty result means the graph is valid for n tiles.
std::optional<GraphViolation> validate(const KnnGraph& graph, std::size_t n);

}  // namespace lamil
