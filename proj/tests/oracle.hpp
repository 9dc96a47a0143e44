// Independent reference implementations used as test oracles. Nothing here
// calls the library's forward, backward, optimizer or aggregation code; the
// only shared pieces are the documented parameter layout (row-major W then b
// per layer), the seed derivation and std::shuffle for batch order.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "feddag/mlp.hpp"
#include "feddag/param_vector.hpp"
#include "feddag/rng.hpp"
#include "feddag/sample.hpp"

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

struct Layer {
  Mat W;  // out x in
  Vec b;
  bool relu = false;
  bool tanh_out = false;
};

// Unpacks a flat vector into matrices following the documented layout.
inline std::vector<Layer> unpack(const std::vector<double>& p, const std::vector<std::size_t>& dims,
                                 bool relu_hidden, bool relu_last, bool tanh_last) {
  std::vector<Layer> layers;
  std::size_t pos = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer L;
    L.W.assign(dims[l + 1], Vec(dims[l]));
    for (auto& row : L.W) {
      for (auto& w : row) w = p.at(pos++);
    }
    L.b.resize(dims[l + 1]);
    for (auto& b : L.b) b = p.at(pos++);
    const bool last = l + 2 == dims.size();
    L.relu = last ? relu_last : relu_hidden;
    L.tanh_out = last && tanh_last;
    layers.push_back(std::move(L));
  }
  return layers;
}

inline Vec layer_apply(const Layer& L, const Vec& x) {
  Vec y(L.W.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    double s = L.b[i];
    for (std::size_t j = 0; j < x.size(); ++j) s += L.W[i][j] * x[j];
    if (L.relu) s = s > 0.0 ? s : 0.0;
    if (L.tanh_out) s = std::tanh(s);
    y[i] = s;
  }
  return y;
}

struct TaskOut {
  Vec features;
  Vec logits;
};

// ReLU task model: hidden layers and the feature layer are ReLU, logits linear.
inline TaskOut task_forward(const std::vector<double>& p, const feddag::TaskArch& arch, const Vec& x) {
  std::vector<std::size_t> dims{arch.input_dim};
  dims.insert(dims.end(), arch.hidden_dims.begin(), arch.hidden_dims.end());
  dims.push_back(arch.feature_dim);
  dims.push_back(arch.num_classes);
  const auto layers = unpack(p, dims, true, false, false);
  Vec h = x;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) h = layer_apply(layers[l], h);
  return {h, layer_apply(layers.back(), h)};
}

inline Vec gen_forward(const std::vector<double>& p, const feddag::GenArch& arch, const Vec& x) {
  std::vector<std::size_t> dims{arch.input_dim};
  dims.insert(dims.end(), arch.hidden_dims.begin(), arch.hidden_dims.end());
  dims.push_back(arch.input_dim);
  const auto layers = unpack(p, dims, true, false, true);
  Vec h = x;
  for (const auto& L : layers) h = layer_apply(L, h);
  return h;
}

inline double cross_entropy(const Vec& logits, std::size_t y) {
  // Direct log-sum-exp in long double.
  long double mx = *std::max_element(logits.begin(), logits.end());
  long double s = 0.0L;
  for (double z : logits) s += std::exp(static_cast<long double>(z) - mx);
  return static_cast<double>(std::log(s) + mx - logits[y]);
}

inline double sq_dist_normalized(const Vec& f, const Vec& g) {
  long double nf = 0, ng = 0;
  for (double v : f) nf += static_cast<long double>(v) * v;
  for (double v : g) ng += static_cast<long double>(v) * v;
  nf = std::sqrt(nf);
  ng = std::sqrt(ng);
  long double d = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const long double t = f[i] / nf - g[i] / ng;
    d += t * t;
  }
  return static_cast<double>(d);
}

// Central finite differences of a scalar function of a flat vector.
inline Vec fd_gradient(const std::function<double(const Vec&)>& fn, Vec at, double h = 1e-5) {
  Vec g(at.size());
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double orig = at[i];
    at[i] = orig + h;
    const double up = fn(at);
    at[i] = orig - h;
    const double down = fn(at);
    at[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||), with 0 when both vanish.
inline double rel_error(const Vec& a, const Vec& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

// Plain backprop of mean cross-entropy for the ReLU task model, written
// against the matrix form (independent of the library's tape code).
inline Vec ce_gradient(const std::vector<double>& p, const feddag::TaskArch& arch,
                       const std::vector<feddag::Sample>& batch) {
  std::vector<std::size_t> dims{arch.input_dim};
  dims.insert(dims.end(), arch.hidden_dims.begin(), arch.hidden_dims.end());
  dims.push_back(arch.feature_dim);
  dims.push_back(arch.num_classes);
  const auto layers = unpack(p, dims, true, false, false);
  std::vector<Mat> gW(layers.size());
  std::vector<Vec> gb(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    gW[l].assign(layers[l].W.size(), Vec(layers[l].W[0].size(), 0.0));
    gb[l].assign(layers[l].b.size(), 0.0);
  }
  for (const auto& s : batch) {
    std::vector<Vec> acts{s.x};
    for (const auto& L : layers) acts.push_back(layer_apply(L, acts.back()));
    const Vec& z = acts.back();
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0;
    for (double v : z) sum += std::exp(v - mx);
    Vec delta(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      delta[i] = std::exp(z[i] - mx) / sum - (i == s.label ? 1.0 : 0.0);
    }
    for (std::size_t l = layers.size(); l-- > 0;) {
      const Vec& in = acts[l];
      for (std::size_t i = 0; i < delta.size(); ++i) {
        gb[l][i] += delta[i];
        for (std::size_t j = 0; j < in.size(); ++j) gW[l][i][j] += delta[i] * in[j];
      }
      if (l == 0) break;
      Vec prev(in.size(), 0.0);
      for (std::size_t j = 0; j < in.size(); ++j) {
        for (std::size_t i = 0; i < delta.size(); ++i) prev[j] += layers[l].W[i][j] * delta[i];
        if (layers[l - 1].relu && !(in[j] > 0.0)) prev[j] = 0.0;
      }
      delta = std::move(prev);
    }
  }
  Vec flat;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (const auto& row : gW[l]) {
      for (double v : row) flat.push_back(v * inv);
    }
    for (double v : gb[l]) flat.push_back(v * inv);
  }
  return flat;
}

struct SgdParams {
  double lr, momentum, weight_decay;
};

// Local plain-SGD training of one client for `epochs` epochs.
inline Vec local_sgd(Vec p, const feddag::TaskArch& arch, const std::vector<feddag::Sample>& train,
                     SgdParams opt, std::size_t batch_size, std::size_t epochs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vec v(p.size(), 0.0);
  for (std::size_t e = 0; e < epochs; ++e) {
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      std::vector<feddag::Sample> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
        batch.push_back(train[order[i]]);
      }
      const Vec g = ce_gradient(p, arch, batch);
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double decayed = g[i] + opt.weight_decay * p[i];
        v[i] = opt.momentum * v[i] + decayed;
        p[i] -= opt.lr * v[i];
      }
    }
  }
  return p;
}

// Standalone FedAvg: every round each client starts from the global model,
// trains locally with fresh momentum, and the server averages uniformly.
inline Vec fedavg(Vec global, const feddag::TaskArch& arch,
                  const std::vector<std::vector<feddag::Sample>>& client_train, SgdParams opt,
                  std::size_t batch_size, std::size_t epochs, std::size_t rounds, std::uint64_t seed) {
  for (std::size_t r = 1; r <= rounds; ++r) {
    Vec sum(global.size(), 0.0);
    for (std::size_t c = 0; c < client_train.size(); ++c) {
      const auto local = local_sgd(global, arch, client_train[c], opt, batch_size, epochs,
                                   feddag::derive_seed(seed, {6, r, c}));
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += local[i];
    }
    for (std::size_t i = 0; i < sum.size(); ++i) global[i] = sum[i] / static_cast<double>(client_train.size());
  }
  return global;
}

// Pairwise-enumeration AUC (ties count one half).
inline double brute_auc(const Vec& scores, const std::vector<bool>& positive) {
  double num = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[i] && !positive[j]) {
        ++pairs;
        num += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
      }
    }
  }
  return num / static_cast<double>(pairs);
}

// Exact two-sided sign-test p-value by enumerating all 2^n sign patterns.
inline double brute_sign_p(std::size_t wins, std::size_t n) {
  const std::size_t k = std::min(wins, n - wins);
  std::size_t extreme = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    const auto c = static_cast<std::size_t>(__builtin_popcountll(mask));
    if (c <= k || c >= n - k) ++extreme;
  }
  return std::min(1.0, static_cast<double>(extreme) / static_cast<double>(std::size_t{1} << n));
}

}  // namespace oracle
