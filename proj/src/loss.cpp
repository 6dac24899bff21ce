#include "lamil/loss.hpp"

#include <cmath>
#include <stdexcept>

#include "lamil/tensor.hpp"

namespace lamil {

namespace {

std::size_t check_inputs(std::span<const double> logits, std::span<const std::uint8_t> labels,
                         std::span<const double> weights) {
  if (logits.size() != labels.size() || logits.size() != weights.size()) {
    throw std::invalid_argument("weighted_bce: length mismatch (logits " +
                                std::to_string(logits.size()) + ", labels " +
                                std::to_string(labels.size()) + ", weights " +
                                std::to_string(weights.size()) + ")");
  }
  std::size_t present = 0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] == kMissing) continue;
    if (labels[t] != kNegative && labels[t] != kPositive) {
      throw std::invalid_argument("weighted_bce: invalid label " + std::to_string(labels[t]) +
                                  " for target " + std::to_string(t));
    }
    ++present;
  }
  if (present == 0) throw std::invalid_argument("weighted_bce: all targets missing");
  return present;
}

}  // namespace

ClassWeights pos_weights(std::span<const std::vector<std::uint8_t>> label_rows,
                         std::span<const std::string> target_names) {
  if (label_rows.empty()) throw std::invalid_argument("pos_weights: no bags");
  const std::size_t targets = label_rows.front().size();
  std::vector<std::size_t> pos(targets, 0), neg(targets, 0);
  for (const auto& row : label_rows) {
    if (row.size() != targets) throw std::invalid_argument("pos_weights: ragged label table");
    for (std::size_t t = 0; t < targets; ++t) {
      if (row[t] == kPositive) ++pos[t];
      else if (row[t] == kNegative) ++neg[t];
    }
  }
  ClassWeights w(targets);
  for (std::size_t t = 0; t < targets; ++t) {
    if (pos[t] == 0 || neg[t] == 0) {
      const std::string name = t < target_names.size() ? target_names[t] : std::to_string(t);
      throw std::invalid_argument("pos_weights: target " + name + " has " +
                                  std::to_string(pos[t]) + " positives and " +
                                  std::to_string(neg[t]) + " negatives");
    }
    w[t] = static_cast<double>(neg[t]) / static_cast<double>(pos[t]);
  }
  return w;
}

double weighted_bce(std::span<const double> logits, std::span<const std::uint8_t> labels,
                    std::span<const double> weights, WeightMode mode) {
  const std::size_t present = check_inputs(logits, labels, weights);
  double sum = 0.0;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    if (labels[t] == kMissing) continue;
    // log(1 - σ(x)) = log σ(-x)
    const double y = labels[t] == kPositive ? 1.0 : 0.0;
    const double pos_term = y * log_sigmoid(logits[t]);
    const double neg_term = (1.0 - y) * log_sigmoid(-logits[t]);
    sum += mode == WeightMode::kWholeTerm ? weights[t] * (pos_term + neg_term)
                                          : weights[t] * pos_term + neg_term;
  }
  return -sum / static_cast<double>(present);
}

std::vector<double> loss_grad(std::span<const double> logits, std::span<const std::uint8_t> labels,
                              std::span<const double> weights, WeightMode mode) {
  const std::size_t present = check_inputs(logits, labels, weights);
  const double scale = 1.0 / static_cast<double>(present);
  std::vector<double> g(logits.size(), 0.0);
  for (std::size_t t = 0; t < logits.size(); ++t) {
    if (labels[t] == kMissing) continue;
    const double y = labels[t] == kPositive ? 1.0 : 0.0;
    const double p = sigmoid(logits[t]);
    if (mode == WeightMode::kWholeTerm) {
      g[t] = scale * weights[t] * (p - y);
    } else {
      g[t] = scale * (weights[t] * y * (p - 1.0) + (1.0 - y) * p);
    }
  }
  return g;
}

}  // namespace lamil
