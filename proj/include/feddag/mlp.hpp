#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "feddag/param_vector.hpp"

namespace feddag {

enum class Activation { relu, tanh, identity };

std::string_view to_string(Activation act);
Activation activation_from_string(std::string_view name);

/// One fully connected layer. Parameters are laid out as the row-major
/// weight matrix (out x in) followed by the bias (out).
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation act = Activation::identity;

  std::size_t param_count() const noexcept { return in * out + out; }
};

/// Task model: an MLP feature extractor followed by a linear classifier.
/// Hidden layers and the feature layer use `activation`; logits are linear.
struct TaskArch {
  std::size_t input_dim = 16;
  std::vector<std::size_t> hidden_dims = {32, 32};
  std::size_t feature_dim = 16;
  std::size_t num_classes = 3;
  Activation activation = Activation::relu;

  void validate() const;
  std::vector<DenseLayer> layers() const;
  std::size_t param_count() const;
};

/// Perturbation generator: ReLU hidden layers and a tanh output of the
/// same width as the input.
struct GenArch {
  std::size_t input_dim = 16;
  std::vector<std::size_t> hidden_dims = {32};

  void validate() const;
  std::vector<DenseLayer> layers() const;
  std::size_t param_count() const;
};

/// Cached activations of one forward pass. acts[0] is the input, acts[l + 1]
/// the output of layer l; pre[l] the pre-activation of layer l.
struct DenseTape {
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<double>> pre;
};

struct TaskOutput {
  std::vector<double> features;
  std::vector<double> logits;
};

/// Forward pass with the tape retained for a later backward call.
struct TaskPass {
  DenseTape tape;

  std::span<const double> features() const { return tape.acts[tape.acts.size() - 2]; }
  std::span<const double> logits() const { return tape.acts.back(); }
};

struct GenPass {
  DenseTape tape;

  std::span<const double> delta() const { return tape.acts.back(); }
};

ParamVector init_task_params(const TaskArch& arch, std::mt19937_64& rng);
ParamVector init_gen_params(const GenArch& arch, std::mt19937_64& rng);

TaskOutput task_forward(const ParamVector& params, const TaskArch& arch, std::span<const double> x);
std::vector<double> gen_forward(const ParamVector& params, const GenArch& arch,
                                std::span<const double> x);

TaskPass task_forward_taped(const ParamVector& params, const TaskArch& arch,
                            std::span<const double> x);
GenPass gen_forward_taped(const ParamVector& params, const GenArch& arch,
                          std::span<const double> x);

/// Reverse pass through the task model. `d_features` and `d_logits` are the
/// loss gradients at the two heads (an empty span means zero). Parameter
/// gradients are accumulated into `param_grad`; the input gradient is returned.
std::vector<double> task_backward(const ParamVector& params, const TaskArch& arch,
                                  const TaskPass& pass, std::span<const double> d_features,
                                  std::span<const double> d_logits, std::span<double> param_grad);

std::vector<double> gen_backward(const ParamVector& params, const GenArch& arch,
                                 const GenPass& pass, std::span<const double> d_delta,
                                 std::span<double> param_grad);

/// Predicted class (argmax of logits, lowest index on ties).
std::size_t predict(const ParamVector& params, const TaskArch& arch, std::span<const double> x);

}  // namespace feddag
