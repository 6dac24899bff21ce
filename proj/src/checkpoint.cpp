#include "lamil/checkpoint.hpp"

#include <stdexcept>

#include "byte_io.hpp"
#include "lamil/data.hpp"

namespace lamil {

namespace {
constexpr char kCheckpointMagic[4] = {'L', 'A', 'M', 'P'};
constexpr std::uint16_t kCheckpointVersion = 1;
}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ModelConfig& config, const ModelParams& params) {
  config.validate();
  const auto flat = flatten(params);
  if (flat.size() != count_params(config)) {
    throw std::invalid_argument("checkpoint: parameters do not match the config");
  }
  ByteWriter w;
  w.raw(kCheckpointMagic, 4);
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(config.input_dim));
  w.u32(static_cast<std::uint32_t>(config.hidden_dim));
  w.u32(static_cast<std::uint32_t>(config.targets));
  w.u32(static_cast<std::uint32_t>(config.heads));
  w.u32(static_cast<std::uint32_t>(config.layers()));
  w.u8(static_cast<std::uint8_t>(config.mode));
  w.u8(config.self_loops ? 1 : 0);
  for (std::size_t k : config.neighbors) w.u32(static_cast<std::uint32_t>(k));
  w.f64(config.layer_norm_eps);
  w.u64(flat.size());
  for (double v : flat) w.f64(v);
  return std::move(w).take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic(kCheckpointMagic, "checkpoint");
  const std::size_t version_at = r.offset();
  if (r.u16() != kCheckpointVersion) throw FormatError("unsupported checkpoint version", version_at);

  Checkpoint ck;
  ModelConfig& c = ck.config;
  const std::size_t config_at = r.offset();
  c.input_dim = r.u32();
  c.hidden_dim = r.u32();
  c.targets = r.u32();
  c.heads = r.u32();
  const std::uint32_t layers = r.u32();
  const std::size_t mode_at = r.offset();
  const std::uint8_t mode = r.u8();
  if (mode > 1) throw FormatError("invalid attention mode " + std::to_string(mode), mode_at);
  c.mode = static_cast<AttentionMode>(mode);
  const std::size_t flag_at = r.offset();
  const std::uint8_t self_loops = r.u8();
  if (self_loops > 1) throw FormatError("invalid self-loop flag", flag_at);
  c.self_loops = self_loops == 1;
  if (layers > r.remaining() / 4) throw FormatError("truncated input", bytes.size());
  c.neighbors.resize(layers);
  for (auto& k : c.neighbors) k = r.u32();
  c.layer_norm_eps = r.f64();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid model config: ") + e.what(), config_at);
  }

  const std::size_t count_at = r.offset();
  const std::uint64_t count = r.u64();
  if (count != count_params(c)) {
    throw FormatError("parameter count " + std::to_string(count) + " does not match config",
                      count_at);
  }
  if (count > r.remaining() / 8) throw FormatError("truncated input", bytes.size());
  std::vector<double> flat(count);
  for (double& v : flat) v = r.f64();
  r.expect_end("checkpoint");
  ck.params = unflatten(c, flat);
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ModelParams& params) {
  write_file_bytes(path, encode_checkpoint(config, params));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

}  // namespace lamil
