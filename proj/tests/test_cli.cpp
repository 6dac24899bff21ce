#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "commands.hpp"
#include "lamil/checkpoint.hpp"
#include "lamil/config.hpp"
#include "lamil/data.hpp"
#include "lamil/train.hpp"

using namespace lamil;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct Workspace {
  fs::path root;
  explicit Workspace(const std::string& name) : root(fs::temp_directory_path() / ("lamil_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string operator/(const std::string& leaf) const { return (root / leaf).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::vector<double> read_log(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<double> losses;
  while (std::getline(in, line)) losses.push_back(std::stod(line.substr(line.find(',') + 1)));
  return losses;
}

const char* kSmallModel =
    "hidden_dim = 8\nheads = 2\nneighbors = 4, 8\nepochs = 1\nlr = 0.001\nseed = 3\n";

}  // namespace

TEST_CASE("cli synth: contract, determinism and precondition") {
  Workspace ws("synth");
  const std::vector<std::string> flags{"--bags", "10", "--tiles", "20", "--dim", "8",
                                       "--targets", "2", "--seed", "1"};
  auto args = std::vector<std::string>{"synth", "--out", ws / "a"};
  args.insert(args.end(), flags.begin(), flags.end());
  REQUIRE(run(args).code == 0);
  std::size_t lamb = 0;
  for (const auto& e : fs::directory_iterator(ws / "a")) lamb += e.path().extension() == ".lamb";
  CHECK(lamb == 10);
  CHECK(fs::exists(ws / "a/manifest.txt"));

  args[2] = ws / "b";
  REQUIRE(run(args).code == 0);
  for (const auto& e : fs::directory_iterator(ws / "a")) {
    CHECK(slurp(e.path().string()) == slurp(ws / ("b/" + e.path().filename().string())));
  }

  const Result bad = run({"synth", "--out", ws / "c", "--dim", "1", "--targets", "2"});
  CHECK(bad.code != 0);
  CHECK(bad.err.find("dim") != std::string::npos);
  CHECK(run({"synth", "--out", ws / "d", "--tiles", "5:x"}).code != 0);
  CHECK(run({"synth", "--out", ws / "e", "--tiles", "5:9", "--bags", "3", "--dim", "4"}).code == 0);
}

TEST_CASE("cli usage errors") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"train", "--out", "x"}).code == 2);
  CHECK(run({"synth", "--out", "x", "--bags", "many"}).code == 2);
}

TEST_CASE("cli train: checkpoint round trip and determinism") {
  Workspace ws("train");
  REQUIRE(run({"synth", "--out", ws / "data", "--bags", "8", "--tiles", "12", "--dim", "4",
               "--targets", "2", "--seed", "2"})
              .code == 0);
  write_text(ws / "run.cfg", kSmallModel);
  const Result r = run({"train", "--data", ws / "data", "--config", ws / "run.cfg", "--out", ws / "m1.lamp"});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("epoch 1 loss") != std::string::npos);
  REQUIRE(run({"train", "--data", ws / "data", "--config", ws / "run.cfg", "--out", ws / "m2.lamp"}).code == 0);
  CHECK(slurp(ws / "m1.lamp") == slurp(ws / "m2.lamp"));

  const Checkpoint ck = load_checkpoint(ws / "m1.lamp");
  CHECK(ck.config.input_dim == 4);
  CHECK(ck.config.targets == 2);
  CHECK(ck.config.hidden_dim == 8);
  const auto bytes = read_file_bytes(ws / "m1.lamp");
  CHECK(encode_checkpoint(ck.config, ck.params) == bytes);

  // The CLI result equals a direct library run with the same seeds.
  const Dataset ds = load_dataset(ws / "data");
  const ModelConfig cfg = fit_config_to_data(parse_run_config(kSmallModel).model, ds);
  const auto prepared = prepare_bags(ds, cfg);
  std::vector<std::size_t> all(ds.bags.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto trained = train_model(prepared, all, pos_weights(ds.label_rows(), ds.target_names), cfg,
                                   parse_run_config(kSmallModel).train_config());
  CHECK(flatten(trained.params) == flatten(ck.params));

  const Result missing = run({"train", "--data", ws / "nowhere", "--out", ws / "m3.lamp"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("nowhere") != std::string::npos);

  write_text(ws / "bad.cfg", "epochs = 1\nlearnin_rate = 2\n");
  const Result bad_cfg = run({"train", "--data", ws / "data", "--config", ws / "bad.cfg", "--out", ws / "m4.lamp"});
  CHECK(bad_cfg.code == 1);
  CHECK(bad_cfg.err.find(":2:") != std::string::npos);

  CHECK(run({"train", "--data", ws / "data", "--config", ws / "run.cfg", "--out", ws / "m5.lamp",
             "--folds", "2", "--holdout", "1"})
            .code == 0);
  CHECK(run({"train", "--data", ws / "data", "--out", ws / "m6.lamp", "--holdout", "1"}).code == 1);
}

TEST_CASE("cli train: global and local with k = n follow the same loss trajectory") {
  Workspace ws("equiv");
  REQUIRE(run({"synth", "--out", ws / "data", "--bags", "6", "--tiles", "10", "--dim", "4",
               "--targets", "2", "--seed", "5"})
              .code == 0);
  write_text(ws / "run.cfg", "hidden_dim = 8\nheads = 2\nepochs = 3\nlr = 0.01\nseed = 1\n");
  REQUIRE(run({"train", "--data", ws / "data", "--config", ws / "run.cfg", "--out", ws / "g.lamp",
               "--mode", "global", "--log", ws / "g.csv"})
              .code == 0);
  REQUIRE(run({"train", "--data", ws / "data", "--config", ws / "run.cfg", "--out", ws / "l.lamp",
               "--mode", "local", "--neighbors", "10,10", "--log", ws / "l.csv"})
              .code == 0);
  const auto g = read_log(ws / "g.csv"), l = read_log(ws / "l.csv");
  REQUIRE(g.size() == 18);
  REQUIRE(l.size() == g.size());
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(g[i] - l[i]) <= 1e-8);
}

TEST_CASE("cli cv and eval") {
  Workspace ws("cv");
  REQUIRE(run({"synth", "--out", ws / "data", "--bags", "12", "--tiles", "10", "--dim", "4",
               "--targets", "2", "--seed", "4"})
              .code == 0);
  write_text(ws / "run.cfg", kSmallModel);
  CHECK(run({"cv", "--data", ws / "data", "--config", ws / "run.cfg", "--folds", "1", "--report", ws / "r.csv"}).code == 1);
  REQUIRE(run({"cv", "--data", ws / "data", "--config", ws / "run.cfg", "--folds", "3", "--report", ws / "r1.csv"}).code == 0);
  REQUIRE(run({"cv", "--data", ws / "data", "--config", ws / "run.cfg", "--folds", "3", "--report", ws / "r2.csv"}).code == 0);
  const std::string report = slurp(ws / "r1.csv");
  CHECK(report == slurp(ws / "r2.csv"));
  CHECK(report.rfind("fold,target,auroc\n", 0) == 0);
  CHECK(report.find("# summary\ntarget,mean,std\n") != std::string::npos);

  REQUIRE(run({"train", "--data", ws / "data", "--config", ws / "run.cfg", "--out", ws / "m.lamp"}).code == 0);
  const Result ev = run({"eval", "--model", ws / "m.lamp", "--data", ws / "data", "--report", ws / "e.csv",
                         "--predictions", ws / "p.csv"});
  REQUIRE(ev.code == 0);
  CHECK(slurp(ws / "e.csv").rfind("fold,target,auroc\n0,target_0,", 0) == 0);
  const std::string predictions = slurp(ws / "p.csv");
  CHECK(std::count(predictions.begin(), predictions.end(), '\n') == 1 + 12 * 2);
}

TEST_CASE("cli attend: score contract, layer choice and degenerate bag") {
  Workspace ws("attend");
  REQUIRE(run({"synth", "--out", ws / "data", "--bags", "6", "--tiles", "15", "--dim", "4",
               "--targets", "2", "--seed", "6"})
              .code == 0);
  write_text(ws / "run.cfg", kSmallModel);
  REQUIRE(run({"train", "--data", ws / "data", "--config", ws / "run.cfg", "--out", ws / "m.lamp"}).code == 0);

  const std::string bag = ws / "data/bag_0000.lamb";
  REQUIRE(run({"attend", "--model", ws / "m.lamp", "--bag", bag, "--out", ws / "s.csv", "--svg", ws / "h.svg"}).code == 0);
  std::ifstream in(ws / "s.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "tile_index,x,y,score");
  std::vector<double> scores;
  while (std::getline(in, line)) scores.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  CHECK(scores.size() == 15);
  CHECK(*std::min_element(scores.begin(), scores.end()) == 0.0);
  CHECK(*std::max_element(scores.begin(), scores.end()) == 1.0);
  CHECK(slurp(ws / "h.svg").find("</svg>") != std::string::npos);

  // Same numbers as the library on the same forward pass.
  const Checkpoint ck = load_checkpoint(ws / "m.lamp");
  const PreparedBag prepared = prepare_bag(load_bag(bag), ck.config);
  const auto out = forward(prepared.features, prepared.graphs, ck.params, ck.config);
  const auto lib = attention_scores(out.caches.back(), prepared.graphs.back());
  for (std::size_t i = 0; i < scores.size(); ++i) CHECK(std::abs(scores[i] - lib[i]) <= 5e-7);

  CHECK(run({"attend", "--model", ws / "m.lamp", "--bag", bag, "--layer", "0", "--out", ws / "s0.csv"}).code == 0);
  const Result bad = run({"attend", "--model", ws / "m.lamp", "--bag", bag, "--layer", "2", "--out", ws / "s2.csv"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("out of range") != std::string::npos);

  Bag single = load_bag(bag);
  single.coords.resize(2);
  single.features.resize(single.dim);
  save_bag(ws / "single.lamb", single);
  REQUIRE(run({"attend", "--model", ws / "m.lamp", "--bag", ws / "single.lamb", "--out", ws / "one.csv"}).code == 0);
  const std::string one = slurp(ws / "one.csv");
  CHECK(std::count(one.begin(), one.end(), '\n') == 2);
  CHECK(one.find(",0.500000\n") != std::string::npos);
}

TEST_CASE("cli import") {
  Workspace ws("import");
  write_text(ws / "tiles.csv", "bag_id,patient_id,x,y,f_0,f_1\ns1,p1,0,0,1,2\ns1,p1,1,0,3,4\ns2,p2,0,0,5,6\n");
  write_text(ws / "labels.csv", "bag_id,MSI\ns1,1\ns2,0\n");
  REQUIRE(run({"import", "--tiles", ws / "tiles.csv", "--labels", ws / "labels.csv", "--out", ws / "ds"}).code == 0);
  const Dataset ds = load_dataset(ws / "ds");
  CHECK(ds.bags.size() == 2);
  CHECK(ds.target_names == std::vector<std::string>{"MSI"});
  CHECK(run({"import", "--tiles", ws / "none.csv", "--labels", ws / "labels.csv", "--out", ws / "x"}).code == 1);
}
