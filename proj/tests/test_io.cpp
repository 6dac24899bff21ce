#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "lamil/checkpoint.hpp"
#include "lamil/config.hpp"
#include "lamil/data.hpp"
#include "lamil/heatmap.hpp"

using namespace lamil;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_run_config(text, "run.cfg");
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return {};
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("run config defaults") {
  const RunConfig c = parse_run_config("");
  CHECK(c.model.neighbors == std::vector<std::size_t>{16, 64});
  CHECK(c.model.hidden_dim == 512);
  CHECK(c.model.input_dim == 1024);
  CHECK(c.model.heads == 8);
  CHECK(c.model.mode == AttentionMode::kLocal);
  CHECK(c.optim.lr == 2e-5);
  CHECK(c.optim.weight_decay == 2e-5);
  CHECK(c.optim.lookahead_alpha == 0.5);
  CHECK(c.optim.lookahead_k == 5);
  CHECK(c.epochs == 10);
  CHECK(c.loss.weight_mode == WeightMode::kWholeTerm);
}

TEST_CASE("run config parsing") {
  const RunConfig c = parse_run_config(
      "# comment\n"
      "hidden_dim = 64   # trailing comment\n"
      "heads = 4\n"
      "neighbors = 8, 32, 4\n"
      "mode = global\n"
      "self_loops = false\n"
      "preset = stad\n"
      "epochs = 3\n"
      "seed = 42\n"
      "loss_weighting = positive\n"
      "lookahead_k = 7\n");
  CHECK(c.model.hidden_dim == 64);
  CHECK(c.model.heads == 4);
  CHECK(c.model.neighbors == std::vector<std::size_t>{8, 32, 4});
  CHECK(c.model.mode == AttentionMode::kGlobal);
  CHECK(!c.model.self_loops);
  CHECK(c.optim.lr == 2e-4);
  CHECK(c.epochs == 3);
  CHECK(c.seed == 42);
  CHECK(c.loss.weight_mode == WeightMode::kPositiveTerm);
  CHECK(c.optim.lookahead_k == 7);
  CHECK(c.train_config().seed == 42);

  CHECK(parse_run_config("lr = 0.5\npreset = crc\n").optim.lr == 0.5);
  CHECK(parse_run_config("preset = crc\n").optim.lr == 2e-5);
}

TEST_CASE("run config errors name the line") {
  CHECK(error_of("epochs = 2\nlearning_rate = 1\n").find("run.cfg:2:") != std::string::npos);
  CHECK(error_of("epochs = 2\nlearning_rate = 1\n").find("unknown key") != std::string::npos);
  CHECK(error_of("epochs = 2\nepochs = 3\n").find("run.cfg:2:") != std::string::npos);
  CHECK(error_of("epochs = many\n").find("run.cfg:1:") != std::string::npos);
  CHECK(error_of("\n\nmode = sparse\n").find("run.cfg:3:") != std::string::npos);
  CHECK(error_of("just words\n").find("run.cfg:1:") != std::string::npos);
  CHECK(!error_of("hidden_dim = 10\nheads = 3\n").empty());
  CHECK(!error_of("lr = -1\n").empty());
  CHECK(!error_of("preset = luad\n").empty());
}

TEST_CASE("checkpoint round trip is bit-exact") {
  ModelConfig c;
  c.input_dim = 5;
  c.hidden_dim = 6;
  c.targets = 3;
  c.heads = 3;
  c.neighbors = {4, 9, 2};
  c.self_loops = false;
  c.layer_norm_eps = 1e-6;
  const ModelParams p = init_params(c, 17);
  const auto bytes = encode_checkpoint(c, p);
  const Checkpoint back = decode_checkpoint(bytes);
  CHECK(back.config == c);
  CHECK(flatten(back.params) == flatten(p));
  CHECK(encode_checkpoint(back.config, back.params) == bytes);
  CHECK(encode_checkpoint(c, init_params(c, 17)) == bytes);
  CHECK(std::equal(bytes.begin(), bytes.begin() + 4, "LAMP"));

  auto bad = bytes;
  bad[0] = 'X';
  try {
    decode_checkpoint(bad);
    FAIL("expected rejection");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 0);
  }
  const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 3);
  CHECK_THROWS_AS(decode_checkpoint(truncated), FormatError);
  auto trailing = bytes;
  trailing.push_back(1);
  CHECK_THROWS_AS(decode_checkpoint(trailing), FormatError);
}

TEST_CASE("heatmap colour ramp") {
  CHECK(score_color(0.0) == "rgb(255,255,255)");
  CHECK(score_color(1.0) == "rgb(255,0,0)");
  CHECK(score_color(0.5) == "rgb(255,128,128)");
}

TEST_CASE("scores CSV and SVG heatmap") {
  const std::vector<Point> pts{{2, 3}, {3, 3}, {2, 4}};
  const std::vector<double> scores{0.0, 1.0, 0.25};
  std::ostringstream csv;
  write_scores_csv(csv, pts, scores);
  CHECK(csv.str() ==
        "tile_index,x,y,score\n"
        "0,2,3,0.000000\n"
        "1,3,3,1.000000\n"
        "2,2,4,0.250000\n");

  std::ostringstream svg;
  write_heatmap_svg(svg, pts, scores);
  const std::string s = svg.str();
  CHECK(s.rfind("<svg", 0) == 0);
  CHECK(s.find("</svg>") != std::string::npos);
  CHECK(count_of(s, "<title>tile") == 3);
  CHECK(s.find("fill=\"rgb(255,0,0)\"") != std::string::npos);
  CHECK(s.find("fill=\"rgb(255,255,255)\"") != std::string::npos);

  std::ostringstream sink;
  CHECK_THROWS_AS(write_scores_csv(sink, pts, std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(write_heatmap_svg(sink, {}, {}), std::invalid_argument);
}
