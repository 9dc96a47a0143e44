#include "feddag/ndag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "feddag/errors.hpp"

namespace feddag {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void scale_in_place(ParamVector& v, double a) {
  for (auto& x : v.values()) x *= a;
}

void check_finite_loss(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw DivergenceError(std::string("non-finite ") + what + " loss");
  }
}

}  // namespace

void NdagHyper::validate() const {
  require(alpha >= 0.0 && alpha <= 1.0, "ndag: alpha must lie in [0, 1]");
  require(m > 0.0 && std::isfinite(m), "ndag: m must be positive");
  require(ema_decay >= 0.0 && ema_decay <= 1.0, "ndag: ema_decay must lie in [0, 1]");
  require(batch_size > 0, "ndag: batch_size must be positive");
  require(local_epochs > 0, "ndag: local_epochs must be positive");
  require(range.lo < range.hi, "ndag: input range must satisfy lo < hi");
  require(collapse_fraction >= 0.0 && collapse_fraction <= 1.0,
          "ndag: collapse_fraction must lie in [0, 1]");
  task_opt.validate();
  gen_opt.validate();
}

void ModelArchs::validate() const {
  task.validate();
  gen.validate();
  require(task.input_dim == gen.input_dim, "task and generator input dims differ");
}

std::vector<double> generate(const ParamVector& gen_params, const GenArch& arch,
                             std::span<const double> x, double alpha, InputRange range) {
  require(alpha >= 0.0 && alpha <= 1.0, "generate: alpha must lie in [0, 1]");
  const auto delta = gen_forward(gen_params, arch, x);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::clamp(x[i] + alpha * delta[i], range.lo, range.hi);
  }
  return out;
}

LossEvaluation backward(const ClientModels& models, const ModelArchs& archs,
                        std::span<const Sample> batch, const NdagHyper& hyper,
                        LossComposition composition, GradRequest request) {
  require(!batch.empty(), "backward: empty batch");
  const double m = hyper.cap().value();
  const double alpha = hyper.alpha;

  LossEvaluation eval;
  auto& grads = eval.grads;
  grads.teacher = ParamVector(models.teacher.dim());
  grads.student = ParamVector(models.student.dim());
  grads.generator = ParamVector(models.generator.dim());
  auto& L = eval.losses;
  L.size = batch.size();

  const bool needs_features = composition.dis != 0.0 || composition.sim != 0.0 || request.teacher;
  const bool gen_on_path = request.generator && alpha != 0.0;
  std::vector<double> x_hat(archs.task.input_dim);
  std::vector<double> inside(archs.task.input_dim);

  for (const auto& sample : batch) {
    const auto& x = sample.x;
    const auto gen_pass = gen_forward_taped(models.generator, archs.gen, x);
    const auto delta = gen_pass.delta();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double raw = x[i] + alpha * delta[i];
      inside[i] = (raw >= hyper.range.lo && raw <= hyper.range.hi) ? 1.0 : 0.0;
      x_hat[i] = std::clamp(raw, hyper.range.lo, hyper.range.hi);
    }
    const auto student_pass = task_forward_taped(models.student, archs.task, x_hat);

    const double cls = loss_cls(student_pass.logits(), sample.label);
    L.l_cls += cls;
    std::vector<double> d_logits = loss_cls_grad(student_pass.logits(), sample.label);
    for (auto& g : d_logits) g *= composition.cls;

    std::vector<double> d_f_hat;
    std::vector<double> d_f;
    TaskPass teacher_pass;
    bool feature_term = false;
    if (needs_features) {
      teacher_pass = task_forward_taped(models.teacher, archs.task, x);
      const auto f = teacher_pass.features();
      const auto f_hat = student_pass.features();
      if (l2_norm(f) < kDegenerateNorm || l2_norm(f_hat) < kDegenerateNorm) {
        ++L.degenerate;
      } else {
        auto dist = normalized_sq_dist_grad(f, f_hat);
        L.raw_dis += dist.value;
        L.l_dis += std::min(dist.value, m);
        L.l_sim += dist.value;
        // min(d, m) is flat once the cap is reached.
        const double coeff = composition.sim + (dist.value < m ? composition.dis : 0.0);
        if (coeff != 0.0) {
          feature_term = true;
          for (auto& g : dist.d_f_hat) g *= coeff;
          for (auto& g : dist.d_f) g *= coeff;
          d_f_hat = std::move(dist.d_f_hat);
          d_f = std::move(dist.d_f);
        }
      }
    }

    if (request.student || gen_on_path) {
      std::vector<double> scratch;
      std::span<double> student_grad = grads.student.values();
      if (!request.student) {
        scratch.assign(grads.student.dim(), 0.0);
        student_grad = scratch;
      }
      const auto d_x_hat =
          task_backward(models.student, archs.task, student_pass, d_f_hat, d_logits, student_grad);
      if (gen_on_path) {
        std::vector<double> d_delta(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) d_delta[i] = alpha * inside[i] * d_x_hat[i];
        gen_backward(models.generator, archs.gen, gen_pass, d_delta, grads.generator.values());
      }
    }
    if (request.teacher && feature_term) {
      task_backward(models.teacher, archs.task, teacher_pass, d_f, {}, grads.teacher.values());
    }
  }

  if (static_cast<double>(L.degenerate) > hyper.collapse_fraction * static_cast<double>(L.size)) {
    throw DivergenceError("feature collapse: " + std::to_string(L.degenerate) + " of " +
                          std::to_string(L.size) + " samples have degenerate features");
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  L.l_cls *= inv;
  L.l_dis *= inv;
  L.l_sim *= inv;
  L.raw_dis *= inv;
  L.objective = composition.cls * L.l_cls + composition.dis * L.l_dis + composition.sim * L.l_sim;
  scale_in_place(grads.teacher, inv);
  scale_in_place(grads.student, inv);
  scale_in_place(grads.generator, inv);
  return eval;
}

ClassificationEval classification_backward(const ParamVector& params, const TaskArch& arch,
                                           std::span<const Sample> batch) {
  require(!batch.empty(), "classification_backward: empty batch");
  ClassificationEval out{0.0, ParamVector(params.dim())};
  for (const auto& sample : batch) {
    const auto pass = task_forward_taped(params, arch, sample.x);
    out.loss += loss_cls(pass.logits(), sample.label);
    const auto d_logits = loss_cls_grad(pass.logits(), sample.label);
    task_backward(params, arch, pass, {}, d_logits, out.grad.values());
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  scale_in_place(out.grad, inv);
  return out;
}

StepResult generator_step(ClientModels models, const ModelArchs& archs,
                          std::span<const Sample> batch, const NdagHyper& hyper) {
  auto eval = backward(models, archs, batch, hyper, kGeneratorObjective, {false, false, true});
  check_finite_loss(eval.losses.objective, "generator");
  auto step = sgd_step(models.generator, eval.grads.generator, hyper.gen_opt,
                       std::move(models.generator_opt));
  models.generator = std::move(step.params);
  models.generator_opt = std::move(step.state);
  return {std::move(models), eval.losses, std::move(eval.grads.generator)};
}

StepResult student_step(ClientModels models, const ModelArchs& archs,
                        std::span<const Sample> batch, const NdagHyper& hyper) {
  auto eval = backward(models, archs, batch, hyper, kStudentObjective, {false, true, false});
  check_finite_loss(eval.losses.objective, "student");
  auto step = sgd_step(models.student, eval.grads.student, hyper.task_opt,
                       std::move(models.student_opt));
  models.student = std::move(step.params);
  models.student_opt = std::move(step.state);
  return {std::move(models), eval.losses, std::move(eval.grads.student)};
}

ParamVector ema_update(const ParamVector& teacher, const ParamVector& student, double decay) {
  require(decay >= 0.0 && decay <= 1.0, "ema_update: decay must lie in [0, 1]");
  require_same_dim(teacher, student, "ema_update");
  ParamVector out(teacher.dim());
  const double keep = 1.0 - decay;
  for (std::size_t i = 0; i < out.dim(); ++i) out[i] = decay * teacher[i] + keep * student[i];
  return out;
}

std::vector<std::size_t> batch_order(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

ClientRoundResult client_round(ClientModels models, const ModelArchs& archs,
                               std::span<const Sample> train, const NdagHyper& hyper,
                               bool ndag_enabled, std::uint64_t shuffle_seed) {
  hyper.validate();
  require(!train.empty(), "client_round: empty training set");

  ClientRoundResult result;
  std::mt19937_64 rng(shuffle_seed);
  std::vector<Sample> batch;
  batch.reserve(hyper.batch_size);
  std::size_t batch_index = 0;

  for (std::size_t epoch = 0; epoch < hyper.local_epochs; ++epoch) {
    const auto order = batch_order(train.size(), rng);
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t stop = std::min(order.size(), start + hyper.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train[order[i]]);

      TraceRow row;
      row.batch = batch_index++;
      if (ndag_enabled) {
        auto gen = generator_step(std::move(models), archs, batch, hyper);
        row.l_cls_g = gen.losses.l_cls;
        row.l_dis = gen.losses.l_dis;
        result.degenerate_samples += gen.losses.degenerate;
        // The student step regenerates x_hat with the updated generator.
        auto stu = student_step(std::move(gen.models), archs, batch, hyper);
        row.l_cls_s = stu.losses.l_cls;
        row.l_sim = stu.losses.l_sim;
        result.degenerate_samples += stu.losses.degenerate;
        models = std::move(stu.models);
        models.teacher = ema_update(models.teacher, models.student, hyper.ema_decay);
        result.last_batch_grad = std::move(stu.grad);
      } else {
        auto eval = classification_backward(models.student, archs.task, batch);
        check_finite_loss(eval.loss, "classification");
        auto step =
            sgd_step(models.student, eval.grad, hyper.task_opt, std::move(models.student_opt));
        models.student = std::move(step.params);
        models.student_opt = std::move(step.state);
        row.l_cls_g = kNaN;
        row.l_dis = kNaN;
        row.l_cls_s = eval.loss;
        row.l_sim = kNaN;
        result.last_batch_grad = std::move(eval.grad);
      }
      result.trace.push_back(row);
    }
  }
  if (!ndag_enabled) models.teacher = models.student;
  result.models = std::move(models);
  return result;
}

}  // namespace feddag
