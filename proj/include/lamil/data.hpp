#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lamil/graph.hpp"
#include "lamil/tensor.hpp"

namespace lamil {

// One slide: tile centres, tile features and per-target labels
// (0 negative, 1 positive, 255 missing). Stored as 32-bit floats so that a
// file round trip is byte-exact.
struct Bag {
  std::string bag_id;
  std::string patient_id;
  std::size_t dim = 0;
  std::vector<float> coords;    // [tiles × 2]
  std::vector<float> features;  // [tiles × dim]
  std::vector<std::uint8_t> labels;

  std::size_t tiles() const noexcept { return coords.size() / 2; }
  std::size_t targets() const noexcept { return labels.size(); }

  Matrix feature_matrix() const;
  std::vector<Point> points() const;
  void validate() const;

  friend bool operator==(const Bag&, const Bag&) = default;
};

struct Dataset {
  std::vector<Bag> bags;
  std::vector<std::string> target_names;

  std::size_t dim() const { return bags.empty() ? 0 : bags.front().dim; }
  std::size_t targets() const noexcept { return target_names.size(); }
  std::vector<std::vector<std::uint8_t>> label_rows() const;
  void validate() const;
};

// Malformed bag or checkpoint bytes. offset() is where decoding stopped.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

std::vector<std::uint8_t> encode_bag(const Bag& bag);
Bag decode_bag(std::span<const std::uint8_t> bytes);

void save_bag(const std::filesystem::path& path, const Bag& bag);
Bag load_bag(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// Manifest text: first line "targets: a,b,c", then one bag path per line,
// relative to the manifest's directory. Blank lines and '#' lines are skipped.
inline constexpr const char* kManifestName = "manifest.txt";

// Writes bag_NNNN.lamb files and the manifest into dir.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
// Accepts the dataset directory or the manifest file itself.
Dataset load_dataset(const std::filesystem::path& dir_or_manifest);

// tiles CSV: header bag_id,patient_id,x,y,f_0..f_{D-1}, one row per tile.
// labels CSV: header bag_id,<target names>; cells 0, 1, or empty/NA for missing.
Dataset import_csv(std::istream& tiles_csv, std::istream& labels_csv);

struct SynthOptions {
  std::size_t bags = 200;
  std::size_t min_tiles = 100;
  std::size_t max_tiles = 100;
  std::size_t dim = 32;
  std::size_t targets = 4;
  double radius = 3.0;
  double effect = 3.0;
  std::uint64_t seed = 0;
};

// Planted-motif data: each bag is a jittered grid patch; a positive target t
// gets +effect on feature t for every tile within radius of one random tile.
Dataset synth_dataset(const SynthOptions& options);

// Patient-grouped greedy stratification; returns a fold index per bag.
std::vector<std::size_t> stratified_kfold(const Dataset& dataset, std::size_t folds,
                                          std::uint64_t seed);

}  // namespace lamil
