#include "feddag/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "feddag/errors.hpp"

namespace feddag {
namespace {

double activate(Activation act, double z) {
  switch (act) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::identity: return z;
  }
  return z;
}

// Derivative expressed through the pre-activation z and the output a.
double activate_grad(Activation act, double z, double a) {
  switch (act) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - a * a;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

std::size_t total_params(const std::vector<DenseLayer>& layers) {
  return std::accumulate(layers.begin(), layers.end(), std::size_t{0},
                         [](std::size_t acc, const DenseLayer& l) { return acc + l.param_count(); });
}

ParamVector init_dense(const std::vector<DenseLayer>& layers, std::mt19937_64& rng) {
  ParamVector params(total_params(layers));
  std::size_t offset = 0;
  for (const auto& layer : layers) {
    const double s = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    std::uniform_real_distribution<double> dist(-s, s);
    for (std::size_t i = 0; i < layer.in * layer.out; ++i) params[offset + i] = dist(rng);
    offset += layer.param_count();  // biases start at zero
  }
  return params;
}

void dense_forward(std::span<const double> params, const std::vector<DenseLayer>& layers,
                   std::span<const double> x, DenseTape& tape) {
  tape.acts.resize(layers.size() + 1);
  tape.pre.resize(layers.size());
  tape.acts[0].assign(x.begin(), x.end());
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const double* w = params.data() + offset;
    const double* b = w + layer.in * layer.out;
    const auto& in = tape.acts[l];
    auto& pre = tape.pre[l];
    auto& out = tape.acts[l + 1];
    pre.resize(layer.out);
    out.resize(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      double z = b[o];
      const double* row = w + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) z += row[i] * in[i];
      pre[o] = z;
      out[o] = activate(layer.act, z);
    }
    offset += layer.param_count();
  }
}

std::vector<std::size_t> layer_offsets(const std::vector<DenseLayer>& layers) {
  std::vector<std::size_t> offsets(layers.size());
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    offsets[l] = offset;
    offset += layers[l].param_count();
  }
  return offsets;
}

// Propagates d_out (gradient at the output of `layer`) to its input while
// accumulating weight and bias gradients.
std::vector<double> layer_backward(std::span<const double> params, std::size_t offset,
                                   const DenseLayer& layer, const std::vector<double>& in,
                                   const std::vector<double>& pre, const std::vector<double>& out,
                                   std::span<const double> d_out, std::span<double> grad) {
  const double* w = params.data() + offset;
  double* gw = grad.data() + offset;
  double* gb = gw + layer.in * layer.out;
  std::vector<double> d_in(layer.in, 0.0);
  for (std::size_t o = 0; o < layer.out; ++o) {
    const double dz = d_out[o] * activate_grad(layer.act, pre[o], out[o]);
    if (dz == 0.0) continue;
    gb[o] += dz;
    const double* row = w + o * layer.in;
    double* grow = gw + o * layer.in;
    for (std::size_t i = 0; i < layer.in; ++i) {
      grow[i] += dz * in[i];
      d_in[i] += dz * row[i];
    }
  }
  return d_in;
}

void check_input(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw ContractError(std::string(what) + ": input has length " + std::to_string(got) +
                        ", architecture expects " + std::to_string(expected));
  }
}

void check_params(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw ContractError(std::string(what) + ": parameter vector has dim " + std::to_string(got) +
                        ", architecture expects " + std::to_string(expected));
  }
}

}  // namespace

std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw ContractError("unknown activation '" + std::string(name) + "'");
}

void TaskArch::validate() const {
  require(input_dim > 0, "TaskArch: input_dim must be positive");
  require(feature_dim >= 2, "TaskArch: feature_dim must be >= 2");
  require(num_classes >= 2, "TaskArch: num_classes must be >= 2");
  for (auto h : hidden_dims) require(h > 0, "TaskArch: hidden dims must be positive");
}

std::vector<DenseLayer> TaskArch::layers() const {
  std::vector<DenseLayer> out;
  std::size_t width = input_dim;
  for (auto h : hidden_dims) {
    out.push_back({width, h, activation});
    width = h;
  }
  out.push_back({width, feature_dim, activation});
  out.push_back({feature_dim, num_classes, Activation::identity});
  return out;
}

std::size_t TaskArch::param_count() const { return total_params(layers()); }

void GenArch::validate() const {
  require(input_dim > 0, "GenArch: input_dim must be positive");
  for (auto h : hidden_dims) require(h > 0, "GenArch: hidden dims must be positive");
}

std::vector<DenseLayer> GenArch::layers() const {
  std::vector<DenseLayer> out;
  std::size_t width = input_dim;
  for (auto h : hidden_dims) {
    out.push_back({width, h, Activation::relu});
    width = h;
  }
  out.push_back({width, input_dim, Activation::tanh});
  return out;
}

std::size_t GenArch::param_count() const { return total_params(layers()); }

ParamVector init_task_params(const TaskArch& arch, std::mt19937_64& rng) {
  arch.validate();
  return init_dense(arch.layers(), rng);
}

ParamVector init_gen_params(const GenArch& arch, std::mt19937_64& rng) {
  arch.validate();
  return init_dense(arch.layers(), rng);
}

TaskPass task_forward_taped(const ParamVector& params, const TaskArch& arch,
                            std::span<const double> x) {
  const auto layers = arch.layers();
  check_params(total_params(layers), params.dim(), "task_forward");
  check_input(arch.input_dim, x.size(), "task_forward");
  TaskPass pass;
  dense_forward(params.values(), layers, x, pass.tape);
  return pass;
}

GenPass gen_forward_taped(const ParamVector& params, const GenArch& arch,
                          std::span<const double> x) {
  const auto layers = arch.layers();
  check_params(total_params(layers), params.dim(), "gen_forward");
  check_input(arch.input_dim, x.size(), "gen_forward");
  GenPass pass;
  dense_forward(params.values(), layers, x, pass.tape);
  return pass;
}

TaskOutput task_forward(const ParamVector& params, const TaskArch& arch,
                        std::span<const double> x) {
  auto pass = task_forward_taped(params, arch, x);
  auto& acts = pass.tape.acts;
  return {std::move(acts[acts.size() - 2]), std::move(acts.back())};
}

std::vector<double> gen_forward(const ParamVector& params, const GenArch& arch,
                                std::span<const double> x) {
  auto pass = gen_forward_taped(params, arch, x);
  return std::move(pass.tape.acts.back());
}

std::vector<double> task_backward(const ParamVector& params, const TaskArch& arch,
                                  const TaskPass& pass, std::span<const double> d_features,
                                  std::span<const double> d_logits, std::span<double> param_grad) {
  const auto layers = arch.layers();
  check_params(total_params(layers), param_grad.size(), "task_backward");
  const auto offsets = layer_offsets(layers);
  const auto& tape = pass.tape;
  const std::size_t n = layers.size();

  std::vector<double> g(arch.num_classes, 0.0);
  if (!d_logits.empty()) std::copy(d_logits.begin(), d_logits.end(), g.begin());
  g = layer_backward(params.values(), offsets[n - 1], layers[n - 1], tape.acts[n - 1],
                     tape.pre[n - 1], tape.acts[n], g, param_grad);
  if (!d_features.empty()) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += d_features[i];
  }
  for (std::size_t l = n - 1; l-- > 0;) {
    g = layer_backward(params.values(), offsets[l], layers[l], tape.acts[l], tape.pre[l],
                       tape.acts[l + 1], g, param_grad);
  }
  return g;
}

std::vector<double> gen_backward(const ParamVector& params, const GenArch& arch,
                                 const GenPass& pass, std::span<const double> d_delta,
                                 std::span<double> param_grad) {
  const auto layers = arch.layers();
  check_params(total_params(layers), param_grad.size(), "gen_backward");
  const auto offsets = layer_offsets(layers);
  const auto& tape = pass.tape;
  std::vector<double> g(d_delta.begin(), d_delta.end());
  for (std::size_t l = layers.size(); l-- > 0;) {
    g = layer_backward(params.values(), offsets[l], layers[l], tape.acts[l], tape.pre[l],
                       tape.acts[l + 1], g, param_grad);
  }
  return g;
}

std::size_t predict(const ParamVector& params, const TaskArch& arch, std::span<const double> x) {
  const auto out = task_forward(params, arch, x);
  return static_cast<std::size_t>(
      std::distance(out.logits.begin(), std::max_element(out.logits.begin(), out.logits.end())));
}

}  // namespace feddag
