#include "feddag/sha.hpp"

#include <algorithm>
#include <cmath>

#include "feddag/errors.hpp"
#include "feddag/losses.hpp"

namespace feddag {

void ShaHyper::validate() const {
  require(rho >= 0.0 && std::isfinite(rho), "sha: rho must be >= 0");
  require(beta >= 0.0 && std::isfinite(beta), "sha: beta must be >= 0");
  require(history_cap > 0, "sha: history_cap must be positive");
}

PerturbResult perturb_model(const ParamVector& theta, const ParamVector& grad, double rho) {
  require_same_dim(theta, grad, "perturb_model");
  require(grad.all_finite(), "perturb_model: non-finite gradient");
  require(rho >= 0.0, "perturb_model: rho must be >= 0");
  const double norm = l2_norm(grad.values());
  if (norm < 1e-12) return {theta, false};
  ParamVector out(theta.dim());
  const double scale = rho / norm;
  for (std::size_t i = 0; i < theta.dim(); ++i) out[i] = theta[i] + scale * grad[i];
  return {std::move(out), true};
}

double mean_cls_loss(const ParamVector& params, const TaskArch& arch,
                     std::span<const Sample> data) {
  require(!data.empty(), "mean_cls_loss: empty dataset");
  double total = 0.0;
  for (const auto& s : data) total += loss_cls(task_forward(params, arch, s.x).logits, s.label);
  return total / static_cast<double>(data.size());
}

ScoreResult evaluate_score(const ParamVector& theta_hat, const TaskArch& arch,
                           std::span<const std::span<const Sample>> val_sets) {
  require(!val_sets.empty(), "evaluate_score: no validation sets");
  ScoreResult out;
  for (const auto& set : val_sets) {
    require(!set.empty(), "evaluate_score: empty validation set");
    out.total_loss += mean_cls_loss(theta_hat, arch, set);
  }
  if (!std::isfinite(out.total_loss)) throw DivergenceError("evaluate_score: non-finite loss");
  if (out.total_loss < 1e-9) {
    out.score = kMaxScore;
    out.near_perfect = true;
  } else {
    out.score = std::min(kMaxScore, 1.0 / out.total_loss);
  }
  return out;
}

DenseResult within_client_aggregate(const ScoredSnapshot& current,
                                    std::vector<ScoredSnapshot> history, std::size_t k,
                                    std::size_t history_cap) {
  require(history_cap > 0, "within_client_aggregate: history_cap must be positive");
  require(std::is_sorted(history.begin(), history.end(),
                         [](const auto& a, const auto& b) { return a.round < b.round; }),
          "within_client_aggregate: history must be sorted by round");

  std::vector<const ScoredSnapshot*> selected;
  for (auto it = history.rbegin(); it != history.rend() && selected.size() < k; ++it) {
    if (it->score > current.score) selected.push_back(&*it);
  }

  DenseResult out;
  out.selected = selected.size();
  if (selected.empty()) {
    out.aggregated = current;
  } else {
    std::vector<ParamVector> members;
    members.reserve(selected.size() + 1);
    double score_sum = current.score;
    for (const auto* s : selected) {
      members.push_back(s->params);
      score_sum += s->score;
    }
    members.push_back(current.params);
    out.aggregated.params = param_mean(members);
    out.aggregated.score = score_sum / static_cast<double>(members.size());
    out.aggregated.round = current.round;
  }

  history.push_back(current);
  if (history.size() > history_cap) {
    history.erase(history.begin(),
                  history.begin() + static_cast<std::ptrdiff_t>(history.size() - history_cap));
  }
  out.history = std::move(history);
  return out;
}

std::vector<double> softmax_weights(std::span<const double> scores, double beta) {
  require(!scores.empty(), "softmax_weights: no scores");
  require(beta >= 0.0 && std::isfinite(beta), "softmax_weights: beta must be >= 0");
  for (double s : scores) {
    require(s > 0.0 && std::isfinite(s), "softmax_weights: scores must be positive");
  }
  // s^beta evaluated in log space relative to the largest score.
  std::vector<double> logs(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) logs[i] = beta * std::log(scores[i]);
  const double mx = *std::max_element(logs.begin(), logs.end());
  std::vector<double> w(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(logs[i] - mx);
    z += w[i];
  }
  for (auto& x : w) x /= z;
  return w;
}

GlobalModels across_client_aggregate(std::span<const ParamVector> task_models,
                                     std::span<const ParamVector> generators,
                                     std::span<const double> weights) {
  require(task_models.size() == weights.size() && generators.size() == weights.size(),
          "across_client_aggregate: weight/model count mismatch");
  return {param_weighted_sum(task_models, weights), param_weighted_sum(generators, weights)};
}

}  // namespace feddag
