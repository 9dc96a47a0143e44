#include "feddag/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "feddag/errors.hpp"
#include "feddag/param_vector.hpp"

namespace feddag {
namespace {

void check_pair(std::span<const double> f, std::span<const double> f_hat) {
  require(f.size() == f_hat.size(), "feature distance: dimension mismatch");
  require(!f.empty(), "feature distance: empty feature vectors");
}

double checked_norm(std::span<const double> v) {
  const double n = l2_norm(v);
  if (!(n >= kDegenerateNorm)) {
    throw ContractError("feature distance: degenerate feature vector (norm " + std::to_string(n) +
                        ")");
  }
  return n;
}

}  // namespace

CapM::CapM(double m) : m_(m) {
  require(m > 0.0 && std::isfinite(m), "cap m must be positive");
}

double normalized_sq_dist(std::span<const double> f, std::span<const double> f_hat) {
  check_pair(f, f_hat);
  const double nf = checked_norm(f);
  const double nh = checked_norm(f_hat);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double d = f[i] / nf - f_hat[i] / nh;
    s += d * d;
  }
  return s;
}

DistGrad normalized_sq_dist_grad(std::span<const double> f, std::span<const double> f_hat) {
  check_pair(f, f_hat);
  const double nf = checked_norm(f);
  const double nh = checked_norm(f_hat);
  const std::size_t n = f.size();
  std::vector<double> u(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = f[i] / nf;
    v[i] = f_hat[i] / nh;
  }
  DistGrad out;
  out.d_f.resize(n);
  out.d_f_hat.resize(n);
  // d/du = 2(u - v); pulled back through u = f/|f| by (I - u u^T)/|f|.
  double u_dot_gu = 0.0, v_dot_gv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = u[i] - v[i];
    out.value += d * d;
    u_dot_gu += u[i] * 2.0 * d;
    v_dot_gv += v[i] * -2.0 * d;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double d = u[i] - v[i];
    out.d_f[i] = (2.0 * d - u[i] * u_dot_gu) / nf;
    out.d_f_hat[i] = (-2.0 * d - v[i] * v_dot_gv) / nh;
  }
  return out;
}

double loss_dis(std::span<const double> f, std::span<const double> f_hat, CapM cap) {
  return std::min(normalized_sq_dist(f, f_hat), cap.value());
}

double loss_sim(std::span<const double> f, std::span<const double> f_hat) {
  return normalized_sq_dist(f, f_hat);
}

std::vector<double> softmax(std::span<const double> logits) {
  require(!logits.empty(), "softmax: empty logits");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (auto& x : p) x /= z;
  return p;
}

double loss_cls(std::span<const double> logits, std::size_t label) {
  require(label < logits.size(), "loss_cls: label out of range");
  const double mx = *std::max_element(logits.begin(), logits.end());
  const double shifted = logits[label] - mx;
  if (shifted == 0.0) {
    // True class holds the max: log(1 + rest) via log1p keeps tiny losses exact.
    double rest = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      if (i != label) rest += std::exp(logits[i] - mx);
    }
    return std::log1p(rest);
  }
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  return std::log(z) - shifted;
}

std::vector<double> loss_cls_grad(std::span<const double> logits, std::size_t label) {
  require(label < logits.size(), "loss_cls: label out of range");
  auto p = softmax(logits);
  p[label] -= 1.0;
  return p;
}

}  // namespace feddag
