#include "feddag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "feddag/errors.hpp"
#include "feddag/losses.hpp"

namespace feddag {

std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::size_t> labels,
                              std::size_t positive_class) {
  require(scores.size() == labels.size(), "roc_auc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks (1-based) over tied groups.
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == positive_class) {
      pos_rank_sum += rank[i];
      ++n_pos;
    }
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

EvalResult evaluate_predictions(std::span<const std::vector<double>> probabilities,
                                std::span<const std::size_t> labels, std::size_t num_classes) {
  require(!labels.empty(), "evaluate: empty dataset");
  require(probabilities.size() == labels.size(), "evaluate: prediction/label count mismatch");
  EvalResult r;
  r.n = labels.size();
  r.support.assign(num_classes, 0);
  std::vector<std::size_t> predicted(r.n);
  std::vector<std::size_t> pred_count(num_classes, 0), true_pos(num_classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < r.n; ++i) {
    require(labels[i] < num_classes, "evaluate: label out of range");
    const auto& p = probabilities[i];
    predicted[i] = static_cast<std::size_t>(std::distance(p.begin(), std::max_element(p.begin(), p.end())));
    ++r.support[labels[i]];
    ++pred_count[predicted[i]];
    if (predicted[i] == labels[i]) {
      ++correct;
      ++true_pos[labels[i]];
    }
  }
  r.acc = static_cast<double>(correct) / static_cast<double>(r.n);

  std::size_t present = 0;
  double f1_sum = 0.0, auc_sum = 0.0;
  std::vector<double> scores(r.n);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (r.support[c] == 0) {
      r.warnings.push_back("class " + std::to_string(c) + " absent; excluded from weighted means");
      continue;
    }
    ++present;
    const double w = static_cast<double>(r.support[c]);
    const double tp = static_cast<double>(true_pos[c]);
    const double denom = static_cast<double>(r.support[c] + pred_count[c]);
    f1_sum += w * (denom > 0.0 ? 2.0 * tp / denom : 0.0);

    for (std::size_t i = 0; i < r.n; ++i) scores[i] = probabilities[i][c];
    if (auto auc = roc_auc(scores, labels, c)) auc_sum += w * *auc;
  }
  const double total = static_cast<double>(r.n);
  r.f1 = f1_sum / total;
  if (present >= 2) {
    r.auc = auc_sum / total;
  } else {
    r.warnings.emplace_back("only one class present; AUC undefined");
  }
  return r;
}

EvalResult evaluate(const ParamVector& model, const TaskArch& arch,
                    std::span<const Sample> dataset) {
  require(!dataset.empty(), "evaluate: empty dataset");
  std::vector<std::vector<double>> probs;
  std::vector<std::size_t> labels;
  probs.reserve(dataset.size());
  labels.reserve(dataset.size());
  for (const auto& s : dataset) {
    probs.push_back(softmax(task_forward(model, arch, s.x).logits));
    labels.push_back(s.label);
  }
  return evaluate_predictions(probs, labels, arch.num_classes);
}

double sign_test_p(std::size_t wins, std::size_t trials) {
  if (trials == 0) return 1.0;
  const std::size_t tail = std::min(wins, trials - wins);
  // P(X <= tail) for X ~ Binomial(trials, 1/2). Binomial coefficients are
  // exact in double for the seed counts used here.
  double choose = 1.0, count = 0.0;
  for (std::size_t i = 0; i <= tail; ++i) {
    count += choose;
    choose = choose * static_cast<double>(trials - i) / static_cast<double>(i + 1);
  }
  return std::min(1.0, 2.0 * std::ldexp(count, -static_cast<int>(trials)));
}

PairedComparison paired_compare(std::span<const double> runs_a, std::span<const double> runs_b) {
  require(runs_a.size() == runs_b.size(), "paired_compare: runs are not seed-aligned");
  require(runs_a.size() >= 3, "paired_compare: at least 3 paired runs required");
  PairedComparison out;
  out.n = runs_a.size();
  double diff = 0.0;
  for (std::size_t i = 0; i < out.n; ++i) {
    diff += runs_a[i] - runs_b[i];
    if (runs_a[i] > runs_b[i]) ++out.wins;
    if (runs_a[i] < runs_b[i]) ++out.losses;
  }
  out.mean_diff = diff / static_cast<double>(out.n);
  out.sign_test_p = sign_test_p(out.wins, out.wins + out.losses);
  return out;
}

}  // namespace feddag
