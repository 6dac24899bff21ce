#include <algorithm>
#include <stdexcept>

#include "lamil/data.hpp"
#include "lamil/loss.hpp"
#include "lamil/rng.hpp"

namespace lamil {

std::vector<std::size_t> stratified_kfold(const Dataset& dataset, std::size_t folds,
                                          std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("stratified_kfold: need at least 2 folds");
  const std::size_t targets = dataset.targets();

  // Group bags by patient in order of first appearance.
  std::vector<std::string> patient_ids;
  std::vector<std::vector<std::size_t>> patient_bags;
  for (std::size_t b = 0; b < dataset.bags.size(); ++b) {
    const auto& pid = dataset.bags[b].patient_id;
    auto it = std::find(patient_ids.begin(), patient_ids.end(), pid);
    if (it == patient_ids.end()) {
      patient_ids.push_back(pid);
      patient_bags.push_back({b});
    } else {
      patient_bags[static_cast<std::size_t>(it - patient_ids.begin())].push_back(b);
    }
  }
  const std::size_t patients = patient_ids.size();
  if (patients < folds) {
    throw std::invalid_argument("stratified_kfold: " + std::to_string(patients) +
                                " patients cannot fill " + std::to_string(folds) + " folds");
  }

  std::vector<std::vector<std::size_t>> pos(patients, std::vector<std::size_t>(targets, 0));
  std::vector<std::size_t> total_pos(targets, 0);
  for (std::size_t p = 0; p < patients; ++p) {
    for (std::size_t b : patient_bags[p]) {
      for (std::size_t t = 0; t < targets; ++t) {
        if (dataset.bags[b].labels[t] == kPositive) {
          ++pos[p][t];
          ++total_pos[t];
        }
      }
    }
  }

  // Rarest positive label first; patients without positives go last.
  constexpr std::size_t kNoPositive = static_cast<std::size_t>(-1);
  std::vector<std::size_t> rarity(patients, kNoPositive);
  for (std::size_t p = 0; p < patients; ++p) {
    for (std::size_t t = 0; t < targets; ++t) {
      if (pos[p][t] > 0) rarity[p] = std::min(rarity[p], total_pos[t]);
    }
  }
  std::vector<std::size_t> order(patients);
  for (std::size_t p = 0; p < patients; ++p) order[p] = p;
  Rng(seed).split("folds").shuffle(order.begin(), order.end());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rarity[a] < rarity[b]; });

  const double per_fold = 1.0 / static_cast<double>(folds);
  std::vector<std::vector<std::size_t>> fold_pos(folds, std::vector<std::size_t>(targets, 0));
  std::vector<std::size_t> fold_size(folds, 0);
  std::vector<std::size_t> assignment(dataset.bags.size(), 0);
  for (std::size_t p : order) {
    std::size_t best = 0;
    double best_deficit = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      double deficit = 0.0;
      for (std::size_t t = 0; t < targets; ++t) {
        if (pos[p][t] == 0) continue;
        deficit += static_cast<double>(total_pos[t]) * per_fold - static_cast<double>(fold_pos[f][t]);
      }
      const bool better = f == 0 || deficit > best_deficit ||
                          (deficit == best_deficit && fold_size[f] < fold_size[best]);
      if (better) {
        best = f;
        best_deficit = deficit;
      }
    }
    for (std::size_t t = 0; t < targets; ++t) fold_pos[best][t] += pos[p][t];
    fold_size[best] += patient_bags[p].size();
    for (std::size_t b : patient_bags[p]) assignment[b] = best;
  }
  return assignment;
}

}  // namespace lamil
