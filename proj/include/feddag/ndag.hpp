#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "feddag/losses.hpp"
#include "feddag/mlp.hpp"
#include "feddag/optim.hpp"
#include "feddag/param_vector.hpp"
#include "feddag/sample.hpp"

namespace feddag {

/// Per-coordinate box the inputs (and generated inputs) live in.
struct InputRange {
  double lo = 0.0;
  double hi = 1.0;
};

struct NdagHyper {
  double alpha = 0.3;  // perturbation intensity
  double m = 0.1;      // discrepancy cap
  double ema_decay = 0.999;
  SgdConfig task_opt{1e-3, 0.9, 5e-4};
  SgdConfig gen_opt{1e-3, 0.9, 5e-4};
  std::size_t batch_size = 32;
  std::size_t local_epochs = 1;
  InputRange range;
  /// A batch in which more than this fraction of samples has degenerate
  /// features aborts the round.
  double collapse_fraction = 0.5;

  void validate() const;
  CapM cap() const { return CapM(m); }
};

struct ModelArchs {
  TaskArch task;
  GenArch gen;

  void validate() const;
};

/// The three local models of a client plus optimizer state.
struct ClientModels {
  ParamVector teacher;
  ParamVector student;
  ParamVector generator;
  SgdState student_opt;
  SgdState generator_opt;
};

/// x_hat = clamp(x + alpha * G(x), lo, hi)
std::vector<double> generate(const ParamVector& gen_params, const GenArch& arch,
                             std::span<const double> x, double alpha, InputRange range);

/// Weights of the three loss terms in a scalar objective.
struct LossComposition {
  double cls = 0.0;
  double dis = 0.0;
  double sim = 0.0;
};

inline constexpr LossComposition kGeneratorObjective{1.0, -1.0, 0.0};  // L_cls - L_dis
inline constexpr LossComposition kStudentObjective{1.0, 0.0, 1.0};     // L_cls + L_sim

/// Which parameter vectors to differentiate. Unrequested roles come back zero.
struct GradRequest {
  bool teacher = false;
  bool student = false;
  bool generator = false;

  static constexpr GradRequest all() { return {true, true, true}; }
};

/// Batch means of each loss term. raw_dis is the uncapped discrepancy.
struct BatchLosses {
  double objective = 0.0;
  double l_cls = 0.0;
  double l_dis = 0.0;
  double l_sim = 0.0;
  double raw_dis = 0.0;
  std::size_t degenerate = 0;
  std::size_t size = 0;
};

struct GradientSet {
  ParamVector teacher;
  ParamVector student;
  ParamVector generator;
};

struct LossEvaluation {
  BatchLosses losses;
  GradientSet grads;
};

/// Forward and reverse pass of one loss composition over a batch: the
/// teacher sees x, the generator produces x_hat and the student sees x_hat.
/// Every term is averaged over the batch size. Samples whose teacher or
/// student features are degenerate contribute no feature term; if more than
/// `collapse_fraction` of the batch is degenerate a DivergenceError is thrown.
LossEvaluation backward(const ClientModels& models, const ModelArchs& archs,
                        std::span<const Sample> batch, const NdagHyper& hyper,
                        LossComposition composition, GradRequest request = GradRequest::all());

/// Mean cross-entropy of the task model on clean inputs and its gradient.
struct ClassificationEval {
  double loss = 0.0;
  ParamVector grad;
};
ClassificationEval classification_backward(const ParamVector& params, const TaskArch& arch,
                                           std::span<const Sample> batch);

struct StepResult {
  ClientModels models;
  BatchLosses losses;
  ParamVector grad;  // gradient used for the step
};

/// One momentum-SGD step on the generator minimizing L_cls - L_dis.
StepResult generator_step(ClientModels models, const ModelArchs& archs,
                          std::span<const Sample> batch, const NdagHyper& hyper);

/// One momentum-SGD step on the student minimizing L_cls + L_sim.
StepResult student_step(ClientModels models, const ModelArchs& archs,
                        std::span<const Sample> batch, const NdagHyper& hyper);

/// decay * teacher + (1 - decay) * student
ParamVector ema_update(const ParamVector& teacher, const ParamVector& student, double decay);

/// Per-batch losses of one local round. Terms not computed (plain training)
/// are NaN.
struct TraceRow {
  std::size_t batch = 0;
  double l_cls_g = 0.0;
  double l_dis = 0.0;
  double l_cls_s = 0.0;
  double l_sim = 0.0;
};

struct ClientRoundResult {
  ClientModels models;
  ParamVector last_batch_grad;  // student gradient of the final batch
  std::vector<TraceRow> trace;
  std::size_t degenerate_samples = 0;
};

/// Sample visiting order for one epoch sequence; shared by every training
/// path so that modes see the same batches.
std::vector<std::size_t> batch_order(std::size_t n, std::mt19937_64& rng);

/// One local round. With NDAG enabled each mini-batch runs
/// generate -> generator_step -> student_step -> ema_update. With NDAG
/// disabled the student is trained on plain cross-entropy and the returned
/// teacher is the trained student.
ClientRoundResult client_round(ClientModels models, const ModelArchs& archs,
                               std::span<const Sample> train, const NdagHyper& hyper,
                               bool ndag_enabled, std::uint64_t shuffle_seed);

}  // namespace feddag
