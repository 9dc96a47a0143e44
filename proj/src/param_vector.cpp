#include "feddag/param_vector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "feddag/errors.hpp"

namespace feddag {

bool ParamVector::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_dim(const ParamVector& a, const ParamVector& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw ContractError(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) +
                        " vs " + std::to_string(b.dim()) + ")");
  }
}

ParamVector param_axpy(double a, const ParamVector& x, const ParamVector& y) {
  require_same_dim(x, y, "param_axpy");
  ParamVector out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] = a * x[i] + y[i];
  return out;
}

ParamVector param_scale(double a, const ParamVector& x) {
  ParamVector out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] = a * x[i];
  return out;
}

ParamVector param_mean(std::span<const ParamVector> vectors) {
  require(!vectors.empty(), "param_mean: empty list");
  ParamVector out(vectors.front().dim());
  for (const auto& v : vectors) {
    require_same_dim(out, v, "param_mean");
    for (std::size_t i = 0; i < v.dim(); ++i) out[i] += v[i];
  }
  const double n = static_cast<double>(vectors.size());
  for (std::size_t i = 0; i < out.dim(); ++i) out[i] /= n;
  return out;
}

ParamVector param_weighted_sum(std::span<const ParamVector> vectors,
                               std::span<const double> weights) {
  require(!vectors.empty(), "param_weighted_sum: empty list");
  require(vectors.size() == weights.size(), "param_weighted_sum: weight/model count mismatch");
  ParamVector out(vectors.front().dim());
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    require_same_dim(out, vectors[k], "param_weighted_sum");
    const double w = weights[k];
    for (std::size_t i = 0; i < out.dim(); ++i) out[i] += w * vectors[k][i];
  }
  return out;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double linf_distance(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b, "linf_distance");
  double d = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

std::uint64_t checksum(const ParamVector& v) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double x : v.values()) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &x, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace feddag
