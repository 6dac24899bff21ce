#include "lamil/train.hpp"

#include <numeric>
#include <stdexcept>

#include "lamil/rng.hpp"

namespace lamil {

PreparedBag prepare_bag(const Bag& bag, const ModelConfig& config) {
  PreparedBag p;
  p.features = bag.feature_matrix();
  const auto pts = bag.points();
  p.graphs = build_graphs(config, pts);
  p.labels = bag.labels;
  return p;
}

std::vector<PreparedBag> prepare_bags(const Dataset& dataset, const ModelConfig& config) {
  std::vector<PreparedBag> out;
  out.reserve(dataset.bags.size());
  for (const auto& b : dataset.bags) out.push_back(prepare_bag(b, config));
  return out;
}

ModelConfig fit_config_to_data(ModelConfig config, const Dataset& dataset) {
  config.input_dim = dataset.dim();
  config.targets = dataset.targets();
  config.validate();
  return config;
}

TrainResult train_model(std::span<const PreparedBag> bags, std::span<const std::size_t> train_indices,
                        const ClassWeights& weights, const ModelConfig& config,
                        const TrainConfig& train) {
  if (train_indices.empty()) throw std::invalid_argument("train: no training bags");
  if (weights.size() != config.targets) {
    throw std::invalid_argument("train: " + std::to_string(weights.size()) +
                                " class weights for " + std::to_string(config.targets) + " targets");
  }
  const Rng root(train.seed);
  TrainResult result;
  result.params = init_params(config, root.split("init").next());
  std::vector<double> flat = flatten(result.params);
  OptimState state = make_optim_state(flat, train.optim);

  ModelParams current = result.params;
  std::vector<double> grad(flat.size());

  std::vector<std::size_t> order(train_indices.begin(), train_indices.end());
  for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
    Rng shuffle_rng = root.split("order", epoch);
    shuffle_rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      const PreparedBag& bag = bags[idx];
      load_flat(current, flat);
      const BackwardResult r =
          backward(bag.features, bag.graphs, bag.labels, weights, current, config, train.loss);
      flatten_into(r.grad, grad);
      optimizer_step(flat, grad, state);
      result.step_losses.push_back(r.loss);
      epoch_loss += r.loss;
    }
    epoch_loss /= static_cast<double>(order.size());
    result.epoch_losses.push_back(epoch_loss);
    if (train.on_epoch) train.on_epoch(epoch, epoch_loss);
  }
  lookahead_force_sync(flat, state);
  result.params = unflatten(config, flat);
  return result;
}

std::vector<std::vector<double>> predict(std::span<const PreparedBag> bags,
                                         std::span<const std::size_t> indices,
                                         const ModelParams& params, const ModelConfig& config) {
  std::vector<std::vector<double>> out;
  out.reserve(indices.size());
  for (std::size_t idx : indices) {
    out.push_back(forward(bags[idx].features, bags[idx].graphs, params, config).probabilities);
  }
  return out;
}

}  // namespace lamil
