#include "commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "lamil/checkpoint.hpp"
#include "lamil/config.hpp"
#include "lamil/data.hpp"
#include "lamil/eval.hpp"
#include "lamil/heatmap.hpp"
#include "lamil/train.hpp"

namespace lamil::cli {

namespace {

struct SynthArgs {
  std::string out;
  std::size_t bags = 200;
  std::string tiles = "100";
  std::size_t dim = 32;
  std::size_t targets = 4;
  double radius = 3.0;
  double effect = 3.0;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  std::string data;
  std::string config;
  std::string out;
  std::string mode;
  std::string neighbors;
  std::size_t folds = 0;
  std::optional<std::size_t> holdout;
  std::string log;
};

struct CvArgs {
  std::string data;
  std::string config;
  std::size_t folds = 5;
  std::optional<std::uint64_t> seed;
  std::string report;
};

struct EvalArgs {
  std::string model;
  std::string data;
  std::string report;
  std::string predictions;
};

struct AttendArgs {
  std::string model;
  std::string bag;
  std::optional<std::size_t> layer;
  std::string out;
  std::string svg;
};

struct ImportArgs {
  std::string tiles;
  std::string labels;
  std::string out;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

void parse_tile_range(const std::string& text, SynthOptions& o) {
  const auto colon = text.find(':');
  try {
    std::size_t used = 0;
    if (colon == std::string::npos) {
      o.min_tiles = o.max_tiles = std::stoul(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } else {
      o.min_tiles = std::stoul(text.substr(0, colon), &used);
      if (used != colon) throw std::invalid_argument(text);
      const std::string hi = text.substr(colon + 1);
      o.max_tiles = std::stoul(hi, &used);
      if (used != hi.size()) throw std::invalid_argument(text);
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("--tiles expects N or MIN:MAX, got '" + text + "'");
  }
}

RunConfig run_config_from(const std::string& path) {
  return path.empty() ? parse_run_config("") : load_run_config(path);
}

std::vector<std::size_t> parse_neighbors(const std::string& text) {
  return parse_run_config("neighbors = " + text, "--neighbors").model.neighbors;
}

void cmd_synth(const SynthArgs& a, std::ostream& err) {
  SynthOptions o;
  o.bags = a.bags;
  parse_tile_range(a.tiles, o);
  o.dim = a.dim;
  o.targets = a.targets;
  o.radius = a.radius;
  o.effect = a.effect;
  o.seed = a.seed;
  const Dataset ds = synth_dataset(o);
  save_dataset(a.out, ds);
  err << "wrote " << ds.bags.size() << " bags to " << a.out << '\n';
}

void cmd_train(const TrainArgs& a, std::ostream& err) {
  RunConfig rc = run_config_from(a.config);
  if (!a.mode.empty()) rc.model.mode = parse_attention_mode(a.mode);
  if (!a.neighbors.empty()) rc.model.neighbors = parse_neighbors(a.neighbors);
  const Dataset ds = load_dataset(a.data);
  const ModelConfig cfg = fit_config_to_data(rc.model, ds);

  std::vector<std::size_t> train_idx;
  if (a.folds > 0) {
    if (!a.holdout || *a.holdout >= a.folds) {
      throw std::invalid_argument("--holdout must name a fold below --folds");
    }
    const auto assignment = stratified_kfold(ds, a.folds, rc.seed);
    for (std::size_t b = 0; b < assignment.size(); ++b) {
      if (assignment[b] != *a.holdout) train_idx.push_back(b);
    }
  } else {
    if (a.holdout) throw std::invalid_argument("--holdout needs --folds");
    for (std::size_t b = 0; b < ds.bags.size(); ++b) train_idx.push_back(b);
  }

  std::vector<std::vector<std::uint8_t>> labels;
  for (std::size_t b : train_idx) labels.push_back(ds.bags[b].labels);
  const ClassWeights weights = pos_weights(labels, ds.target_names);

  TrainConfig tc = rc.train_config();
  tc.on_epoch = [&err](std::size_t epoch, double loss) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "epoch %zu loss %.6f\n", epoch + 1, loss);
    err << buf;
  };
  const auto prepared = prepare_bags(ds, cfg);
  const TrainResult result = train_model(prepared, train_idx, weights, cfg, tc);
  save_checkpoint(a.out, cfg, result.params);

  if (!a.log.empty()) {
    auto log = open_output(a.log);
    log << "step,loss\n";
    char buf[64];
    for (std::size_t s = 0; s < result.step_losses.size(); ++s) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", s, result.step_losses[s]);
      log << buf;
    }
  }
}

void cmd_cv(const CvArgs& a, std::ostream& err) {
  if (a.folds < 2) throw std::invalid_argument("--folds must be at least 2");
  const RunConfig rc = run_config_from(a.config);
  const Dataset ds = load_dataset(a.data);
  TrainConfig tc = rc.train_config();
  const std::uint64_t seed = a.seed.value_or(rc.seed);
  const CvReport report = cross_validate(ds, rc.model, tc, a.folds, seed);
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  auto out = open_output(a.report);
  write_report(out, report);
  err << format_report(report);
}

void cmd_eval(const EvalArgs& a, std::ostream& err) {
  const Checkpoint ck = load_checkpoint(a.model);
  const Dataset ds = load_dataset(a.data);
  if (ds.dim() != ck.config.input_dim || ds.targets() != ck.config.targets) {
    throw std::invalid_argument("dataset dims do not match the checkpoint");
  }
  const auto prepared = prepare_bags(ds, ck.config);
  std::vector<std::size_t> all(ds.bags.size());
  for (std::size_t b = 0; b < all.size(); ++b) all[b] = b;
  const auto probs = predict(prepared, all, ck.params, ck.config);

  CvReport report;
  report.targets = ds.target_names;
  report.fold_auroc.push_back(per_target_auroc(probs, ds.label_rows(), ds.targets()));
  summarize(report);
  auto out = open_output(a.report);
  write_report(out, report);
  err << format_report(report);

  if (!a.predictions.empty()) {
    auto pred = open_output(a.predictions);
    pred << "bag_id,target,probability\n";
    char buf[64];
    for (std::size_t b = 0; b < probs.size(); ++b) {
      for (std::size_t t = 0; t < ds.targets(); ++t) {
        std::snprintf(buf, sizeof buf, "%.6f", probs[b][t]);
        pred << ds.bags[b].bag_id << ',' << ds.target_names[t] << ',' << buf << '\n';
      }
    }
  }
}

void cmd_attend(const AttendArgs& a, std::ostream& err) {
  const Checkpoint ck = load_checkpoint(a.model);
  const Bag bag = load_bag(a.bag);
  if (bag.dim != ck.config.input_dim) {
    throw std::invalid_argument("bag feature dim " + std::to_string(bag.dim) +
                                " does not match checkpoint input dim " +
                                std::to_string(ck.config.input_dim));
  }
  const std::size_t layer = a.layer.value_or(ck.config.layers() - 1);
  if (layer >= ck.config.layers()) {
    throw std::out_of_range("--layer " + std::to_string(layer) + " out of range (model has " +
                            std::to_string(ck.config.layers()) + " layers)");
  }
  const auto pts = bag.points();
  const PreparedBag prepared = prepare_bag(bag, ck.config);
  const BagOutput out = forward(prepared.features, prepared.graphs, ck.params, ck.config);
  const auto scores = ck.config.mode == AttentionMode::kLocal
                          ? attention_scores(out.caches[layer], prepared.graphs[layer])
                          : attention_scores(out.caches[layer]);
  auto csv = open_output(a.out);
  write_scores_csv(csv, pts, scores);
  if (!a.svg.empty()) {
    auto svg = open_output(a.svg);
    write_heatmap_svg(svg, pts, scores);
  }
  err << "scored " << scores.size() << " tiles from layer " << layer << '\n';
}

void cmd_import(const ImportArgs& a, std::ostream& err) {
  std::ifstream tiles(a.tiles), labels(a.labels);
  if (!tiles) throw std::runtime_error("cannot open " + a.tiles);
  if (!labels) throw std::runtime_error("cannot open " + a.labels);
  const Dataset ds = import_csv(tiles, labels);
  save_dataset(a.out, ds);
  err << "imported " << ds.bags.size() << " bags to " << a.out << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Local-attention graph transformer for multiple-instance learning", "lamil"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a planted-motif dataset");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--bags", synth.bags, "Number of bags")->check(CLI::PositiveNumber);
  s->add_option("--tiles", synth.tiles, "Tiles per bag: N or MIN:MAX");
  s->add_option("--dim", synth.dim, "Feature dimension")->check(CLI::PositiveNumber);
  s->add_option("--targets", synth.targets, "Number of targets")->check(CLI::PositiveNumber);
  s->add_option("--radius", synth.radius, "Motif radius in tile units");
  s->add_option("--effect", synth.effect, "Feature shift inside the motif");
  s->add_option("--seed", synth.seed, "Random seed");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model and write a checkpoint");
  t->add_option("--data", train.data, "Dataset directory or manifest")->required();
  t->add_option("--config", train.config, "Run config file");
  t->add_option("--out", train.out, "Checkpoint path")->required();
  t->add_option("--mode", train.mode, "Override attention mode (local|global)");
  t->add_option("--neighbors", train.neighbors, "Override per-layer k, e.g. 16,64");
  t->add_option("--folds", train.folds, "Split into folds and train without the holdout");
  t->add_option("--holdout", train.holdout, "Fold left out of training");
  t->add_option("--log", train.log, "Write per-step training loss CSV");

  CvArgs cv;
  auto* c = app.add_subcommand("cv", "Stratified cross-validation");
  c->add_option("--data", cv.data, "Dataset directory or manifest")->required();
  c->add_option("--config", cv.config, "Run config file");
  c->add_option("--folds", cv.folds, "Number of folds");
  c->add_option("--seed", cv.seed, "Seed for folds and training (default: config seed)");
  c->add_option("--report", cv.report, "Report CSV path")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a dataset with a checkpoint");
  e->add_option("--model", ev.model, "Checkpoint path")->required();
  e->add_option("--data", ev.data, "Dataset directory or manifest")->required();
  e->add_option("--report", ev.report, "Report CSV path")->required();
  e->add_option("--predictions", ev.predictions, "Per-bag probability CSV");

  AttendArgs at;
  auto* a = app.add_subcommand("attend", "Export per-tile attention scores");
  a->add_option("--model", at.model, "Checkpoint path")->required();
  a->add_option("--bag", at.bag, "Bag file")->required();
  a->add_option("--layer", at.layer, "Attention layer (0-based, default last)");
  a->add_option("--out", at.out, "Scores CSV path")->required();
  a->add_option("--svg", at.svg, "Heatmap SVG path");

  ImportArgs im;
  auto* i = app.add_subcommand("import", "Convert tile and label CSVs to bag files");
  i->add_option("--tiles", im.tiles, "Tile CSV")->required();
  i->add_option("--labels", im.labels, "Label CSV")->required();
  i->add_option("--out", im.out, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*s) cmd_synth(synth, err);
    else if (*t) cmd_train(train, err);
    else if (*c) cmd_cv(cv, err);
    else if (*e) cmd_eval(ev, err);
    else if (*a) cmd_attend(at, err);
    else if (*i) cmd_import(im, err);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace lamil::cli
