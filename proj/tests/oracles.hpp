#pragma once

// Reference implementations and seeded instance generators for the test
// suites. Nothing here calls into the library beyond its plain data types
// (Matrix, Point, AttentionLayerParams), so a bug in the main path cannot
// validate itself.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lamil/attention.hpp"
#include "lamil/graph.hpp"
#include "lamil/rng.hpp"
#include "lamil/tensor.hpp"

namespace oracle {

using lamil::Matrix;
using lamil::Point;

Matrix naive_matmul(const Matrix& a, const Matrix& b);

// Neighbour table by sorting every row fully on (self first, distance, index).
std::vector<std::vector<std::uint32_t>> knn(std::span<const Point> coords, std::size_t k,
                                            bool self_loops = true);

// Multi-head attention with an explicit n×n score matrix per head; entries
// with mask[i][j] == false get -inf before the softmax.
Matrix dense_attention(const Matrix& tokens, const lamil::AttentionLayerParams& params,
                       const std::vector<std::vector<bool>>& mask);
std::vector<std::vector<bool>> graph_mask(const lamil::KnnGraph& graph);
std::vector<std::vector<bool>> full_mask(std::size_t n);

// Fraction of (positive, negative) pairs ranked correctly, ties count 0.5.
// Returns -1 when either class is empty. Missing labels (255) are skipped.
double auroc_pairs(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Central finite differences of f at x.
std::vector<double> finite_difference(const std::function<double(std::span<const double>)>& f,
                                      std::span<const double> x, double h = 1e-5);

// max_i |a_i - b_i| / max(1, |b_i|)
double max_rel_error(std::span<const double> a, std::span<const double> b);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Seeded generators.
Matrix random_matrix(lamil::Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0);
lamil::AttentionLayerParams random_layer(lamil::Rng& rng, std::size_t dim, std::size_t heads,
                                         double scale = 0.5);
// Points on a coarse lattice so exact distance ties are common.
std::vector<Point> lattice_points(lamil::Rng& rng, std::size_t n, int extent);
std::vector<Point> random_points(lamil::Rng& rng, std::size_t n, double extent);

}  // namespace oracle
