#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lamil {

inline constexpr std::uint8_t kNegative = 0;
inline constexpr std::uint8_t kPositive = 1;
inline constexpr std::uint8_t kMissing = 255;

// Per-target weights n_neg / n_pos from a training split.
using ClassWeights = std::vector<double>;

enum class WeightMode {
  kWholeTerm,     // weight scales the full per-target BCE
  kPositiveTerm,  // weight scales only the y·log σ(x) term
};

// label_rows[b][t] for bags b and targets t; missing labels are skipped.
ClassWeights pos_weights(std::span<const std::vector<std::uint8_t>> label_rows,
                         std::span<const std::string> target_names = {});

double weighted_bce(std::span<const double> logits, std::span<const std::uint8_t> labels,
                    std::span<const double> weights, WeightMode mode = WeightMode::kWholeTerm);

std::vector<double> loss_grad(std::span<const double> logits, std::span<const std::uint8_t> labels,
                              std::span<const double> weights,
                              WeightMode mode = WeightMode::kWholeTerm);

}  // namespace lamil
