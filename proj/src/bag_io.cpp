#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "byte_io.hpp"
#include "lamil/data.hpp"
#include "lamil/loss.hpp"

namespace lamil {

namespace {

constexpr char kBagMagic[4] = {'L', 'A', 'M', 'B'};
constexpr std::uint16_t kBagVersion = 1;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

Matrix Bag::feature_matrix() const {
  std::vector<double> data(features.begin(), features.end());
  return Matrix(tiles(), dim, std::move(data));
}

std::vector<Point> Bag::points() const {
  std::vector<Point> pts(tiles());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {coords[2 * i], coords[2 * i + 1]};
  return pts;
}

void Bag::validate() const {
  const std::string where = "bag '" + bag_id + "': ";
  if (coords.size() % 2 != 0) throw std::invalid_argument(where + "odd coordinate count");
  if (tiles() == 0) throw std::invalid_argument(where + "no tiles");
  if (dim == 0) throw std::invalid_argument(where + "feature dim is 0");
  if (features.size() != tiles() * dim) {
    throw std::invalid_argument(where + "feature rows do not match coordinate rows");
  }
  if (labels.empty()) throw std::invalid_argument(where + "no labels");
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] != kNegative && labels[t] != kPositive && labels[t] != kMissing) {
      throw std::invalid_argument(where + "label " + std::to_string(labels[t]) + " for target " +
                                  std::to_string(t) + " is not 0, 1 or 255");
    }
  }
  if (bag_id.size() > 0xffff || patient_id.size() > 0xffff) {
    throw std::invalid_argument(where + "identifier longer than 65535 bytes");
  }
}

std::vector<std::vector<std::uint8_t>> Dataset::label_rows() const {
  std::vector<std::vector<std::uint8_t>> rows;
  rows.reserve(bags.size());
  for (const auto& b : bags) rows.push_back(b.labels);
  return rows;
}

void Dataset::validate() const {
  if (bags.empty()) throw std::invalid_argument("dataset: no bags");
  if (target_names.empty()) throw std::invalid_argument("dataset: no targets");
  for (const auto& b : bags) {
    b.validate();
    if (b.dim != dim()) {
      throw std::invalid_argument("dataset: bag '" + b.bag_id + "' has feature dim " +
                                  std::to_string(b.dim) + ", expected " + std::to_string(dim()));
    }
    if (b.targets() != targets()) {
      throw std::invalid_argument("dataset: bag '" + b.bag_id + "' has " +
                                  std::to_string(b.targets()) + " labels, expected " +
                                  std::to_string(targets()));
    }
  }
}

std::vector<std::uint8_t> encode_bag(const Bag& bag) {
  bag.validate();
  ByteWriter w;
  w.raw(kBagMagic, 4);
  w.u16(kBagVersion);
  w.u32(static_cast<std::uint32_t>(bag.tiles()));
  w.u32(static_cast<std::uint32_t>(bag.dim));
  w.u32(static_cast<std::uint32_t>(bag.targets()));
  w.string16(bag.bag_id);
  w.string16(bag.patient_id);
  for (float v : bag.coords) w.f32(v);
  for (float v : bag.features) w.f32(v);
  for (std::uint8_t v : bag.labels) w.u8(v);
  return std::move(w).take();
}

Bag decode_bag(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic(kBagMagic, "bag");
  const std::size_t version_at = r.offset();
  if (r.u16() != kBagVersion) throw FormatError("unsupported bag version", version_at);

  Bag bag;
  const std::size_t dims_at = r.offset();
  const std::uint32_t n = r.u32();
  const std::uint32_t dim = r.u32();
  const std::uint32_t targets = r.u32();
  if (n == 0 || dim == 0 || targets == 0) {
    throw FormatError("bag header has a zero tile, feature or target count", dims_at);
  }
  bag.dim = dim;
  bag.bag_id = r.string16();
  bag.patient_id = r.string16();
  // Guard the allocation against headers that promise more than the file holds.
  const std::uint64_t payload = 4ull * 2 * n + 4ull * n * dim + targets;
  if (payload > r.remaining()) throw FormatError("truncated bag payload", bytes.size());
  bag.coords.resize(2ull * n);
  for (float& v : bag.coords) v = r.f32();
  bag.features.resize(static_cast<std::size_t>(n) * dim);
  for (float& v : bag.features) v = r.f32();
  bag.labels.resize(targets);
  for (auto& v : bag.labels) {
    const std::size_t at = r.offset();
    v = r.u8();
    if (v != kNegative && v != kPositive && v != kMissing) {
      throw FormatError("invalid label byte " + std::to_string(v), at);
    }
  }
  r.expect_end("bag");
  return bag;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void save_bag(const std::filesystem::path& path, const Bag& bag) {
  write_file_bytes(path, encode_bag(bag));
}

Bag load_bag(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_bag(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  dataset.validate();
  for (const auto& name : dataset.target_names) {
    if (name.empty() || name.find_first_of(",\n") != std::string::npos) {
      throw std::invalid_argument("dataset: target name '" + name + "' is empty or has a comma");
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  std::ostringstream manifest;
  manifest << "targets: ";
  for (std::size_t t = 0; t < dataset.target_names.size(); ++t) {
    manifest << (t ? "," : "") << dataset.target_names[t];
  }
  manifest << '\n';
  for (std::size_t b = 0; b < dataset.bags.size(); ++b) {
    char name[32];
    std::snprintf(name, sizeof name, "bag_%04zu.lamb", b);
    save_bag(dir / name, dataset.bags[b]);
    manifest << name << '\n';
  }
  std::ofstream out(dir / kManifestName, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << manifest.str();
}

Dataset load_dataset(const std::filesystem::path& dir_or_manifest) {
  const auto manifest_path = std::filesystem::is_directory(dir_or_manifest)
                                 ? dir_or_manifest / kManifestName
                                 : dir_or_manifest;
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest " + manifest_path.string());
  const auto base = manifest_path.parent_path();

  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = manifest_path.string() + ":" + std::to_string(line_no) + ": ";
    if (!have_header) {
      const std::string prefix = "targets:";
      if (line.rfind(prefix, 0) != 0) {
        throw std::runtime_error(where + "expected 'targets: name,name,...' header");
      }
      ds.target_names = split(trim(line.substr(prefix.size())), ',');
      if (ds.target_names.empty() ||
          std::any_of(ds.target_names.begin(), ds.target_names.end(),
                      [](const std::string& s) { return s.empty(); })) {
        throw std::runtime_error(where + "empty target name");
      }
      have_header = true;
      continue;
    }
    try {
      ds.bags.push_back(load_bag(base / line));
    } catch (const std::exception& e) {
      throw std::runtime_error(where + e.what());
    }
  }
  if (!have_header) throw std::runtime_error(manifest_path.string() + ": missing targets header");
  ds.validate();
  return ds;
}

Dataset import_csv(std::istream& tiles_csv, std::istream& labels_csv) {
  std::string line;
  if (!std::getline(tiles_csv, line)) throw std::runtime_error("tiles CSV: empty input");
  const auto header = split(trim(line), ',');
  if (header.size() < 5 || header[0] != "bag_id" || header[1] != "patient_id" ||
      header[2] != "x" || header[3] != "y") {
    throw std::runtime_error(
        "tiles CSV line 1: header must be bag_id,patient_id,x,y,f_0,...");
  }
  const std::size_t dim = header.size() - 4;

  auto parse_double = [](const std::string& s, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || !std::isfinite(v)) {
      throw std::runtime_error(where + "cannot parse number '" + s + "'");
    }
    return v;
  };

  Dataset ds;
  std::map<std::string, std::size_t> index;
  std::size_t line_no = 1;
  while (std::getline(tiles_csv, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = "tiles CSV line " + std::to_string(line_no) + ": ";
    const auto cells = split(trim(line), ',');
    if (cells.size() != header.size()) {
      throw std::runtime_error(where + "expected " + std::to_string(header.size()) +
                               " columns, got " + std::to_string(cells.size()));
    }
    auto [it, inserted] = index.try_emplace(cells[0], ds.bags.size());
    if (inserted) {
      Bag b;
      b.bag_id = cells[0];
      b.patient_id = cells[1];
      b.dim = dim;
      ds.bags.push_back(std::move(b));
    }
    Bag& bag = ds.bags[it->second];
    if (bag.patient_id != cells[1]) {
      throw std::runtime_error(where + "bag '" + cells[0] + "' listed under two patients");
    }
    for (std::size_t c = 2; c < 4; ++c) {
      bag.coords.push_back(static_cast<float>(parse_double(cells[c], where)));
    }
    for (std::size_t c = 4; c < cells.size(); ++c) {
      bag.features.push_back(static_cast<float>(parse_double(cells[c], where)));
    }
  }
  if (ds.bags.empty()) throw std::runtime_error("tiles CSV: no tiles");

  if (!std::getline(labels_csv, line)) throw std::runtime_error("labels CSV: empty input");
  const auto lheader = split(trim(line), ',');
  if (lheader.size() < 2 || lheader[0] != "bag_id") {
    throw std::runtime_error("labels CSV line 1: header must be bag_id,<target>,...");
  }
  ds.target_names.assign(lheader.begin() + 1, lheader.end());
  std::vector<bool> labelled(ds.bags.size(), false);
  line_no = 1;
  while (std::getline(labels_csv, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = "labels CSV line " + std::to_string(line_no) + ": ";
    const auto cells = split(trim(line), ',');
    if (cells.size() != lheader.size()) {
      throw std::runtime_error(where + "expected " + std::to_string(lheader.size()) + " columns");
    }
    auto it = index.find(cells[0]);
    if (it == index.end()) throw std::runtime_error(where + "unknown bag '" + cells[0] + "'");
    if (labelled[it->second]) throw std::runtime_error(where + "duplicate bag '" + cells[0] + "'");
    labelled[it->second] = true;
    auto& labels = ds.bags[it->second].labels;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const auto& v = cells[c];
      if (v == "0") labels.push_back(kNegative);
      else if (v == "1") labels.push_back(kPositive);
      else if (v.empty() || v == "NA") labels.push_back(kMissing);
      else throw std::runtime_error(where + "label '" + v + "' is not 0, 1, NA or empty");
    }
  }
  for (std::size_t b = 0; b < ds.bags.size(); ++b) {
    if (!labelled[b]) throw std::runtime_error("labels CSV: no row for bag '" + ds.bags[b].bag_id + "'");
  }
  ds.validate();
  return ds;
}

}  // namespace lamil
