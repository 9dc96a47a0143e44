#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace feddag {

/// Flat parameter vector. Models, gradients, perturbations and aggregation
/// results all travel as ParamVectors; two vectors combine only when their
/// dims match.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}
  ParamVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t dim() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  bool all_finite() const noexcept;

  bool operator==(const ParamVector&) const = default;

 private:
  std::vector<double> values_;
};

/// a*x + y
ParamVector param_axpy(double a, const ParamVector& x, const ParamVector& y);
ParamVector param_scale(double a, const ParamVector& x);
/// Elementwise arithmetic mean. Throws on an empty list or mismatched dims.
ParamVector param_mean(std::span<const ParamVector> vectors);
/// sum_i weights[i] * vectors[i]
ParamVector param_weighted_sum(std::span<const ParamVector> vectors,
                               std::span<const double> weights);

double l2_norm(std::span<const double> v);
double linf_distance(const ParamVector& a, const ParamVector& b);

/// FNV-1a over the raw bytes; used to assert that a vector was not touched.
std::uint64_t checksum(const ParamVector& v);

void require_same_dim(const ParamVector& a, const ParamVector& b, const char* what);

}  // namespace feddag
