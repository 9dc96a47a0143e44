#pragma once

#include <random>
#include <vector>

#include "feddag/ndag.hpp"
#include "feddag/sample.hpp"

namespace fixtures {

inline feddag::ModelArchs small_archs(std::size_t input_dim = 4, std::size_t classes = 3) {
  feddag::ModelArchs a;
  a.task = {input_dim, {6, 5}, 4, classes, feddag::Activation::relu};
  a.gen = {input_dim, {5}};
  return a;
}

inline std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline feddag::ParamVector random_params(std::mt19937_64& rng, std::size_t n, double scale = 0.8) {
  return feddag::ParamVector(uniform(rng, n, -scale, scale));
}

inline std::vector<feddag::Sample> random_batch(std::mt19937_64& rng, std::size_t n,
                                                std::size_t dim, std::size_t classes) {
  std::vector<feddag::Sample> batch(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Keep inputs away from the clamp boundaries so x_hat is smooth in phi.
    batch[i].x = uniform(rng, dim, 0.3, 0.7);
    batch[i].label = i % classes;
  }
  return batch;
}

inline feddag::ClientModels random_models(std::mt19937_64& rng, const feddag::ModelArchs& a) {
  feddag::ClientModels m;
  m.teacher = random_params(rng, a.task.param_count());
  m.student = random_params(rng, a.task.param_count());
  m.generator = random_params(rng, a.gen.param_count());
  return m;
}

// Random models whose teacher and student features are well away from zero
// on every sample of `batch`, so no sample is skipped as degenerate.
inline feddag::ClientModels healthy_models(std::mt19937_64& rng, const feddag::ModelArchs& a,
                                           const std::vector<feddag::Sample>& batch) {
  for (;;) {
    auto m = random_models(rng, a);
    bool ok = true;
    for (const auto& s : batch) {
      for (const auto* p : {&m.teacher, &m.student}) {
        const auto out = feddag::task_forward(*p, a.task, s.x);
        double n2 = 0.0;
        for (double v : out.features) n2 += v * v;
        ok = ok && n2 > 0.01;
      }
    }
    if (ok) return m;
  }
}

}  // namespace fixtures
