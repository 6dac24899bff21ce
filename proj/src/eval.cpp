#include "lamil/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "lamil/loss.hpp"
#include "lamil/rng.hpp"

namespace lamil {

namespace {

std::string fixed4(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

}  // namespace

std::optional<double> auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("auroc: " + std::to_string(scores.size()) + " scores for " +
                                std::to_string(labels.size()) + " labels");
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kMissing) continue;
    if (!std::isfinite(scores[i])) throw std::invalid_argument("auroc: non-finite score");
    idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Ranks doubled so tied midranks stay integral: tie block [lo, hi) gets
  // 2·rank = lo + hi + 1.
  std::uint64_t pos_rank2 = 0, n_pos = 0;
  for (std::size_t lo = 0; lo < idx.size();) {
    std::size_t hi = lo + 1;
    while (hi < idx.size() && scores[idx[hi]] == scores[idx[lo]]) ++hi;
    for (std::size_t m = lo; m < hi; ++m) {
      if (labels[idx[m]] == kPositive) {
        pos_rank2 += lo + hi + 1;
        ++n_pos;
      }
    }
    lo = hi;
  }
  const std::uint64_t n_neg = idx.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const std::uint64_t u2 = pos_rank2 - n_pos * (n_pos + 1);
  return static_cast<double>(u2) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

void summarize(CvReport& report) {
  const std::size_t targets = report.targets.size();
  report.mean.assign(targets, std::nullopt);
  report.stddev.assign(targets, std::nullopt);
  for (std::size_t t = 0; t < targets; ++t) {
    std::vector<double> vals;
    for (const auto& fold : report.fold_auroc) {
      if (fold[t]) vals.push_back(*fold[t]);
    }
    if (vals.empty()) continue;
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
    report.mean[t] = mean;
    if (vals.size() < 2) continue;
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    report.stddev[t] = std::sqrt(ss / static_cast<double>(vals.size() - 1));
  }
}

std::vector<std::optional<double>> per_target_auroc(
    std::span<const std::vector<double>> probabilities,
    std::span<const std::vector<std::uint8_t>> labels, std::size_t targets) {
  std::vector<std::optional<double>> out(targets);
  std::vector<double> s(probabilities.size());
  std::vector<std::uint8_t> y(labels.size());
  for (std::size_t t = 0; t < targets; ++t) {
    for (std::size_t b = 0; b < probabilities.size(); ++b) {
      s[b] = probabilities[b][t];
      y[b] = labels[b][t];
    }
    out[t] = auroc(s, y);
  }
  return out;
}

CvReport cross_validate(const Dataset& dataset, const ModelConfig& config,
                        const TrainConfig& train, std::size_t folds, std::uint64_t seed) {
  dataset.validate();
  const ModelConfig cfg = fit_config_to_data(config, dataset);
  const auto assignment = stratified_kfold(dataset, folds, seed);
  const auto prepared = prepare_bags(dataset, cfg);
  const Rng root(seed);

  CvReport report;
  report.targets = dataset.target_names;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t b = 0; b < assignment.size(); ++b) {
      (assignment[b] == f ? val_idx : train_idx).push_back(b);
    }
    std::vector<std::vector<std::uint8_t>> train_labels, val_labels;
    for (std::size_t b : train_idx) train_labels.push_back(dataset.bags[b].labels);
    for (std::size_t b : val_idx) val_labels.push_back(dataset.bags[b].labels);

    const ClassWeights weights = pos_weights(train_labels, dataset.target_names);
    TrainConfig fold_train = train;
    fold_train.seed = root.split("fold", f).next();
    const TrainResult trained = train_model(prepared, train_idx, weights, cfg, fold_train);
    const auto probs = predict(prepared, val_idx, trained.params, cfg);
    auto row = per_target_auroc(probs, val_labels, cfg.targets);
    for (std::size_t t = 0; t < row.size(); ++t) {
      if (!row[t]) {
        report.warnings.push_back("fold " + std::to_string(f) + ": target " +
                                  dataset.target_names[t] +
                                  " has a single class in validation; AUROC undefined");
      }
    }
    report.fold_auroc.push_back(std::move(row));
  }
  summarize(report);
  return report;
}

void write_report(std::ostream& out, const CvReport& report) {
  out << "fold,target,auroc\n";
  for (std::size_t f = 0; f < report.fold_auroc.size(); ++f) {
    for (std::size_t t = 0; t < report.targets.size(); ++t) {
      out << f << ',' << report.targets[t] << ',' << fixed4(report.fold_auroc[f][t]) << '\n';
    }
  }
  out << "# summary\n";
  out << "target,mean,std\n";
  for (std::size_t t = 0; t < report.targets.size(); ++t) {
    out << report.targets[t] << ',' << fixed4(report.mean[t]) << ',' << fixed4(report.stddev[t])
        << '\n';
  }
}

std::string format_report(const CvReport& report) {
  std::ostringstream s;
  write_report(s, report);
  return s.str();
}

}  // namespace lamil
