#pragma once

#include "feddag/param_vector.hpp"

namespace feddag {

struct SgdConfig {
  double lr = 1e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;

  void validate() const;
};

/// Momentum buffer. An empty buffer is lazily sized on the first step.
struct SgdState {
  ParamVector velocity;
};

struct SgdResult {
  ParamVector params;
  SgdState state;
};

/// Momentum SGD with L2 weight decay folded into the gradient:
///   g' = g + wd * p;  v = mu * v + g';  p = p - lr * v
/// Throws DivergenceError on non-finite gradient entries.
SgdResult sgd_step(const ParamVector& params, const ParamVector& grads, const SgdConfig& config,
                   SgdState state);

}  // namespace feddag
