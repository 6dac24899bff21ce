#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "lamil/model.hpp"
#include "lamil/optim.hpp"
#include "lamil/train.hpp"

namespace lamil {

// Everything a run needs besides the data. Defaults follow the published
// setup: k = (16, 64), d = 512, lr 2e-5, weight decay 2e-5, 10 epochs.
struct RunConfig {
  ModelConfig model;
  OptimHyperparams optim;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  LossOptions loss;

  TrainConfig train_config() const;
};

// Learning-rate presets: "crc" = 2e-5, "stad" = 2e-4.
double preset_learning_rate(const std::string& name);

// Line-oriented "key = value" text with '#' comments. Unknown keys, repeated
// keys and unparsable values are errors reported with their line number.
// An explicit "lr" overrides "preset" regardless of order.
RunConfig parse_run_config(const std::string& text, const std::string& source = "config");
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace lamil
