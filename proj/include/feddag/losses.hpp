#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace feddag {

/// Feature vectors with an L2 norm below this are treated as degenerate.
inline constexpr double kDegenerateNorm = 1e-12;

/// Upper bound on the discrepancy loss.
class CapM {
 public:
  explicit CapM(double m);
  double value() const noexcept { return m_; }

 private:
  double m_;
};

/// || f/|f| - g/|g| ||^2, in [0, 4]. Throws ContractError when either input
/// has L2 norm below kDegenerateNorm.
double normalized_sq_dist(std::span<const double> f, std::span<const double> f_hat);

struct DistGrad {
  double value = 0.0;
  std::vector<double> d_f;
  std::vector<double> d_f_hat;
};

/// normalized_sq_dist together with its gradient in both arguments.
DistGrad normalized_sq_dist_grad(std::span<const double> f, std::span<const double> f_hat);

/// min(normalized_sq_dist, m).
double loss_dis(std::span<const double> f, std::span<const double> f_hat, CapM cap);
double loss_sim(std::span<const double> f, std::span<const double> f_hat);

/// Softmax cross-entropy in nats, max-shifted.
double loss_cls(std::span<const double> logits, std::size_t label);

/// d loss_cls / d logits = softmax(logits) - onehot(label).
std::vector<double> loss_cls_grad(std::span<const double> logits, std::size_t label);

std::vector<double> softmax(std::span<const double> logits);

}  // namespace feddag
