#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lamil {

struct OptimHyperparams {
  double lr = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 2e-5;
  double lookahead_alpha = 0.5;
  std::size_t lookahead_k = 5;

  void validate() const;
  friend bool operator==(const OptimHyperparams&, const OptimHyperparams&) = default;
};

// AdamW moments plus Lookahead slow weights over one flat parameter vector.
struct OptimState {
  OptimHyperparams hyper;
  std::size_t step = 0;             // AdamW steps taken
  std::size_t since_sync = 0;       // inner steps since the last Lookahead sync
  std::vector<double> m;
  std::vector<double> v;
  std::vector<double> slow;
};

// Slow weights start at the initial parameters.
OptimState make_optim_state(std::span<const double> params, const OptimHyperparams& hyper);

// Decoupled decay θ ← θ − lr·wd·θ, then the bias-corrected Adam update.
void adamw_step(std::span<double> params, std::span<const double> grads, OptimState& state);

// After every lookahead_k inner steps: slow ← slow + α(fast − slow), fast ← slow.
// Returns true when a sync happened.
bool lookahead_sync(std::span<double> fast, OptimState& state);

// Sync now regardless of the counter (used to read out the slow weights).
void lookahead_force_sync(std::span<double> fast, OptimState& state);

// adamw_step followed by lookahead_sync.
void optimizer_step(std::span<double> params, std::span<const double> grads, OptimState& state);

}  // namespace lamil
