#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lamil/data.hpp"
#include "lamil/model.hpp"
#include "lamil/train.hpp"

namespace lamil {

// Mann–Whitney AUROC with midranks for tied scores. Missing labels (255) are
// skipped; nullopt when fewer than one positive and one negative remain.
std::optional<double> auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct CvReport {
  std::vector<std::string> targets;
  std::vector<std::vector<std::optional<double>>> fold_auroc;  // [fold][target]
  std::vector<std::optional<double>> mean;
  std::vector<std::optional<double>> stddev;  // sample (n - 1) convention
  std::vector<std::string> warnings;

  friend bool operator==(const CvReport&, const CvReport&) = default;
};

// Fills mean/stddev from fold_auroc, ignoring missing cells.
void summarize(CvReport& report);

// Per-target AUROC of one scored split.
std::vector<std::optional<double>> per_target_auroc(
    std::span<const std::vector<double>> probabilities,
    std::span<const std::vector<std::uint8_t>> labels, std::size_t targets);

// Stratified patient-disjoint k-fold CV. Each fold trains a fresh model on
// the other folds with class weights from those folds only.
CvReport cross_validate(const Dataset& dataset, const ModelConfig& config,
                        const TrainConfig& train, std::size_t folds, std::uint64_t seed);

// "fold,target,auroc" rows, then a "# summary" block of "target,mean,std".
// Values use 4 decimals; missing cells print as NA.
void write_report(std::ostream& out, const CvReport& report);
std::string format_report(const CvReport& report);

}  // namespace lamil
