#include "feddag/optim.hpp"

#include <cmath>

#include "feddag/errors.hpp"

namespace feddag {

void SgdConfig::validate() const {
  require(lr > 0.0 && std::isfinite(lr), "sgd: lr must be positive");
  require(momentum >= 0.0 && momentum < 1.0, "sgd: momentum must lie in [0, 1)");
  require(weight_decay >= 0.0 && std::isfinite(weight_decay), "sgd: weight_decay must be >= 0");
}

SgdResult sgd_step(const ParamVector& params, const ParamVector& grads, const SgdConfig& config,
                   SgdState state) {
  config.validate();
  require_same_dim(params, grads, "sgd_step");
  if (!grads.all_finite()) throw DivergenceError("sgd_step: non-finite gradient");
  if (state.velocity.empty()) state.velocity = ParamVector(params.dim());
  require_same_dim(params, state.velocity, "sgd_step (momentum buffer)");

  ParamVector next = params;
  for (std::size_t i = 0; i < params.dim(); ++i) {
    const double g = grads[i] + config.weight_decay * params[i];
    state.velocity[i] = config.momentum * state.velocity[i] + g;
    next[i] = params[i] - config.lr * state.velocity[i];
  }
  return {std::move(next), std::move(state)};
}

}  // namespace feddag
