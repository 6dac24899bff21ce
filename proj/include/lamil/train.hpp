#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lamil/data.hpp"
#include "lamil/model.hpp"
#include "lamil/optim.hpp"

namespace lamil {

struct TrainConfig {
  OptimHyperparams optim;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  LossOptions loss;
  // Called after every epoch with the mean training loss of that epoch.
  std::function<void(std::size_t epoch, double mean_loss)> on_epoch;
};

// A bag's features promoted to double plus its per-layer graphs.
struct PreparedBag {
  Matrix features;
  std::vector<KnnGraph> graphs;
  std::vector<std::uint8_t> labels;
};

PreparedBag prepare_bag(const Bag& bag, const ModelConfig& config);
std::vector<PreparedBag> prepare_bags(const Dataset& dataset, const ModelConfig& config);

// Copies input_dim and targets from the dataset into a config.
ModelConfig fit_config_to_data(ModelConfig config, const Dataset& dataset);

struct TrainResult {
  ModelParams params;
  std::vector<double> step_losses;
  std::vector<double> epoch_losses;
};

// Batch size 1, bag order reshuffled every epoch. The returned params are the
// Lookahead slow weights after a final forced sync.
TrainResult train_model(std::span<const PreparedBag> bags, std::span<const std::size_t> train_indices,
                        const ClassWeights& weights, const ModelConfig& config,
                        const TrainConfig& train);

// Sigmoid outputs per bag, [bag][target].
std::vector<std::vector<double>> predict(std::span<const PreparedBag> bags,
                                         std::span<const std::size_t> indices,
                                         const ModelParams& params, const ModelConfig& config);

}  // namespace lamil
