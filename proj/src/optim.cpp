#include "lamil/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lamil {

void OptimHyperparams::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("optimizer: lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("optimizer: betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("optimizer: eps must be > 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("optimizer: weight decay must be >= 0");
  if (!(lookahead_alpha > 0.0 && lookahead_alpha <= 1.0)) {
    throw std::invalid_argument("optimizer: lookahead alpha must lie in (0, 1]");
  }
  if (lookahead_k == 0) throw std::invalid_argument("optimizer: lookahead k must be >= 1");
}

OptimState make_optim_state(std::span<const double> params, const OptimHyperparams& hyper) {
  hyper.validate();
  OptimState s;
  s.hyper = hyper;
  s.m.assign(params.size(), 0.0);
  s.v.assign(params.size(), 0.0);
  s.slow.assign(params.begin(), params.end());
  return s;
}

void adamw_step(std::span<double> params, std::span<const double> grads, OptimState& state) {
  const auto& h = state.hyper;
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adamw_step: length mismatch (params " +
                                std::to_string(params.size()) + ", grads " +
                                std::to_string(grads.size()) + ", state " +
                                std::to_string(state.m.size()) + ")");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw std::invalid_argument("adamw_step: non-finite gradient at parameter " +
                                  std::to_string(i));
    }
  }
  ++state.step;
  ++state.since_sync;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(h.beta1, t);
  const double bc2 = 1.0 - std::pow(h.beta2, t);
  const double decay = h.lr * h.weight_decay;
  double* p = params.data();
  const double* g = grads.data();
  double* m = state.m.data();
  double* v = state.v.data();
  for (std::size_t i = 0; i < params.size(); ++i) {
    p[i] -= decay * p[i];
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    p[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
  }
}

void lookahead_force_sync(std::span<double> fast, OptimState& state) {
  if (fast.size() != state.slow.size()) {
    throw std::invalid_argument("lookahead: parameter length does not match slow weights");
  }
  const double alpha = state.hyper.lookahead_alpha;
  for (std::size_t i = 0; i < fast.size(); ++i) {
    state.slow[i] += alpha * (fast[i] - state.slow[i]);
    fast[i] = state.slow[i];
  }
  state.since_sync = 0;
}

bool lookahead_sync(std::span<double> fast, OptimState& state) {
  if (state.since_sync < state.hyper.lookahead_k) return false;
  lookahead_force_sync(fast, state);
  return true;
}

void optimizer_step(std::span<double> params, std::span<const double> grads, OptimState& state) {
  adamw_step(params, grads, state);
  lookahead_sync(params, state);
}

}  // namespace lamil
