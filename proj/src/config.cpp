#include "lamil/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace lamil {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Parser {
  std::string where;

  [[noreturn]] void fail(const std::string& msg) const { throw std::invalid_argument(where + msg); }

  std::uint64_t u64(const std::string& v) const {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) fail("expected a non-negative integer, got '" + v + "'");
    return out;
  }

  double real(const std::string& v) const {
    std::size_t used = 0;
    double out = 0.0;
    try {
      out = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (v.empty() || used != v.size() || !std::isfinite(out)) fail("expected a number, got '" + v + "'");
    return out;
  }

  bool boolean(const std::string& v) const {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail("expected true or false, got '" + v + "'");
  }

  std::vector<std::size_t> list(const std::string& v) const {
    std::vector<std::size_t> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) out.push_back(u64(trim(item)));
    if (out.empty()) fail("expected a comma-separated list");
    return out;
  }
};

}  // namespace

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.optim = optim;
  t.epochs = epochs;
  t.seed = seed;
  t.loss = loss;
  return t;
}

double preset_learning_rate(const std::string& name) {
  if (name == "crc") return 2e-5;
  if (name == "stad") return 2e-4;
  throw std::invalid_argument("unknown preset '" + name + "' (expected crc or stad)");
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  RunConfig cfg;
  std::map<std::string, std::size_t> seen;
  std::optional<double> preset_lr;
  bool explicit_lr = false;

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    Parser p{source + ":" + std::to_string(line_no) + ": "};
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) p.fail("expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh) {
      p.fail("key '" + key + "' already set on line " + std::to_string(it->second));
    }

    if (key == "hidden_dim") cfg.model.hidden_dim = p.u64(value);
    else if (key == "heads") cfg.model.heads = p.u64(value);
    else if (key == "neighbors") cfg.model.neighbors = p.list(value);
    else if (key == "mode") {
      try {
        cfg.model.mode = parse_attention_mode(value);
      } catch (const std::invalid_argument& e) {
        p.fail(e.what());
      }
    }
    else if (key == "self_loops") cfg.model.self_loops = p.boolean(value);
    else if (key == "layer_norm_eps") cfg.model.layer_norm_eps = p.real(value);
    else if (key == "preset") {
      try {
        preset_lr = preset_learning_rate(value);
      } catch (const std::invalid_argument& e) {
        p.fail(e.what());
      }
    }
    else if (key == "lr") {
      cfg.optim.lr = p.real(value);
      explicit_lr = true;
    }
    else if (key == "beta1") cfg.optim.beta1 = p.real(value);
    else if (key == "beta2") cfg.optim.beta2 = p.real(value);
    else if (key == "adam_eps") cfg.optim.eps = p.real(value);
    else if (key == "weight_decay") cfg.optim.weight_decay = p.real(value);
    else if (key == "lookahead_alpha") cfg.optim.lookahead_alpha = p.real(value);
    else if (key == "lookahead_k") cfg.optim.lookahead_k = p.u64(value);
    else if (key == "epochs") cfg.epochs = p.u64(value);
    else if (key == "seed") cfg.seed = p.u64(value);
    else if (key == "loss_weighting") {
      if (value == "whole") cfg.loss.weight_mode = WeightMode::kWholeTerm;
      else if (value == "positive") cfg.loss.weight_mode = WeightMode::kPositiveTerm;
      else p.fail("loss_weighting must be 'whole' or 'positive', got '" + value + "'");
    }
    else p.fail("unknown key '" + key + "'");
  }
  if (preset_lr && !explicit_lr) cfg.optim.lr = *preset_lr;

  try {
    cfg.optim.validate();
    // Data-derived dims are filled in later; check the rest with placeholders.
    ModelConfig probe = cfg.model;
    probe.input_dim = probe.targets = 1;
    probe.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(source + ": " + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path.string());
}

}  // namespace lamil
