#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "feddag/mlp.hpp"
#include "feddag/param_vector.hpp"
#include "feddag/sample.hpp"

namespace feddag {

struct ShaHyper {
  double rho = 1e-7;  // sharpness perturbation radius
  double beta = 0.3;  // weight sharpening exponent
  std::size_t k = 4;  // history depth for within-client averaging
  std::size_t history_cap = 8;
  /// Score a client's model on its own validation set as well as the others'.
  bool include_self = true;
  /// Validation sets used per scoring; 0 means all eligible sets.
  std::size_t eval_clients_per_round = 0;

  void validate() const;
};

struct ScoredSnapshot {
  ParamVector params;
  double score = 0.0;
  std::size_t round = 0;
};

struct PerturbResult {
  ParamVector params;
  bool perturbed = true;  // false when the gradient was (numerically) zero
};

/// theta + rho * g / |g|_2. A gradient with norm below 1e-12 leaves theta
/// unchanged and reports perturbed = false.
PerturbResult perturb_model(const ParamVector& theta, const ParamVector& grad, double rho);

/// Score cap applied when the summed validation loss is (near) zero.
inline constexpr double kMaxScore = 1e9;

struct ScoreResult {
  double score = 0.0;
  double total_loss = 0.0;
  bool near_perfect = false;
};

/// 1 / sum_j mean_{(x, y) in val_j} CE(model(x), y).
ScoreResult evaluate_score(const ParamVector& theta_hat, const TaskArch& arch,
                           std::span<const std::span<const Sample>> val_sets);

/// Mean cross-entropy of a model over one dataset.
double mean_cls_loss(const ParamVector& params, const TaskArch& arch,
                     std::span<const Sample> data);

struct DenseResult {
  ScoredSnapshot aggregated;
  std::vector<ScoredSnapshot> history;
  std::size_t selected = 0;  // number of history entries averaged in
};

/// Within-client dense averaging: the latest (at most k) history entries
/// scoring above `current` are averaged with it, params and score alike.
/// The raw `current` snapshot is appended to the history, which is then
/// trimmed to `history_cap` by dropping the oldest entries.
DenseResult within_client_aggregate(const ScoredSnapshot& current,
                                    std::vector<ScoredSnapshot> history, std::size_t k,
                                    std::size_t history_cap);

/// w_i = s_i^beta / sum_j s_j^beta. Throws on non-positive scores.
std::vector<double> softmax_weights(std::span<const double> scores, double beta);

struct GlobalModels {
  ParamVector task;
  ParamVector generator;
};

/// Weighted sums of task models and generators with the same weights.
GlobalModels across_client_aggregate(std::span<const ParamVector> task_models,
                                     std::span<const ParamVector> generators,
                                     std::span<const double> weights);

}  // namespace feddag
