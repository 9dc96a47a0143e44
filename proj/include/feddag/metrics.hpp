#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "feddag/mlp.hpp"
#include "feddag/param_vector.hpp"
#include "feddag/sample.hpp"

namespace feddag {

struct EvalResult {
  double acc = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;  // absent when fewer than two classes are present
  std::size_t n = 0;
  std::vector<std::size_t> support;  // per class
  std::vector<std::string> warnings;
};

/// Rank-statistic (Mann-Whitney) AUC, ties counted as one half.
/// Samples whose label equals `positive_class` are positives. Returns
/// nullopt when either side is empty.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::size_t> labels,
                              std::size_t positive_class);

/// Metrics from per-sample class probabilities (rows of length num_classes).
/// ACC is plain accuracy; F1 and AUC are support-weighted one-vs-rest means
/// over the classes present in `labels`.
EvalResult evaluate_predictions(std::span<const std::vector<double>> probabilities,
                                std::span<const std::size_t> labels, std::size_t num_classes);

EvalResult evaluate(const ParamVector& model, const TaskArch& arch,
                    std::span<const Sample> dataset);

struct PairedComparison {
  double mean_diff = 0.0;
  std::size_t wins = 0;    // a > b
  std::size_t losses = 0;  // a < b
  std::size_t n = 0;
  double sign_test_p = 1.0;
};

/// Seed-aligned comparison of two metric lists with an exact two-sided sign
/// test (ties dropped). Requires equal lengths >= 3.
PairedComparison paired_compare(std::span<const double> runs_a, std::span<const double> runs_b);

/// Exact two-sided sign-test p-value for `wins` successes out of `trials`.
double sign_test_p(std::size_t wins, std::size_t trials);

}  // namespace feddag
