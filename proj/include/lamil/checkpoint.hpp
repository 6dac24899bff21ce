#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lamil/model.hpp"

namespace lamil {

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

// "LAMP", u16 version 1, then little-endian: u32 input_dim, hidden_dim,
// targets, heads, layers; u8 mode, u8 self_loops; u32 k per layer;
// f64 layer_norm_eps; u64 parameter count; f64 parameters in flat order.
std::vector<std::uint8_t> encode_checkpoint(const ModelConfig& config, const ModelParams& params);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ModelParams& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lamil
