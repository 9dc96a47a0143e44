#include "feddag/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "feddag/checkpoint.hpp"
#include "feddag/errors.hpp"
#include "feddag/losses.hpp"
#include "feddag/rng.hpp"

namespace feddag {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Every model crossing the client/server boundary goes through the binary
// wire frame.
ParamVector transmit(const ParamVector& params, ModelRole role, std::size_t round,
                     const std::string& arch) {
  return decode(encode(Checkpoint{role, round, arch, params})).params;
}

std::vector<std::span<const Sample>> scoring_sets(std::size_t owner, std::span<const ClientData> data,
                                                  const ShaHyper& sha, std::uint64_t seed,
                                                  std::size_t round) {
  std::vector<std::size_t> eligible;
  for (std::size_t j = 0; j < data.size(); ++j) {
    if (j != owner || sha.include_self) eligible.push_back(j);
  }
  if (eligible.empty()) eligible.push_back(owner);  // single-client federation
  if (sha.eval_clients_per_round > 0 && sha.eval_clients_per_round < eligible.size()) {
    std::mt19937_64 rng(derive_seed(seed, {5, round, owner}));
    std::shuffle(eligible.begin(), eligible.end(), rng);
    eligible.resize(sha.eval_clients_per_round);
    std::sort(eligible.begin(), eligible.end());
  }
  std::vector<std::span<const Sample>> sets;
  for (auto j : eligible) sets.emplace_back(data[j].val);
  return sets;
}

double mean_student_loss(const std::vector<TraceRow>& trace) {
  if (trace.empty()) return kNaN;
  double s = 0.0;
  for (const auto& r : trace) s += r.l_cls_s;
  return s / static_cast<double>(trace.size());
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::feddag: return "feddag";
    case Mode::fedavg: return "fedavg";
    case Mode::no_ndag: return "no_ndag";
    case Mode::no_sha: return "no_sha";
  }
  return "feddag";
}

Mode mode_from_string(std::string_view name) {
  if (name == "feddag") return Mode::feddag;
  if (name == "fedavg" || name == "no_both") return Mode::fedavg;
  if (name == "no_ndag") return Mode::no_ndag;
  if (name == "no_sha") return Mode::no_sha;
  throw ContractError("unknown mode '" + std::string(name) +
                      "' (expected feddag, fedavg, no_ndag or no_sha)");
}

bool ndag_active(Mode mode) { return mode == Mode::feddag || mode == Mode::no_sha; }
bool sha_active(Mode mode) { return mode == Mode::feddag || mode == Mode::no_ndag; }

std::string_view to_string(Distribution d) {
  switch (d) {
    case Distribution::student_only: return "student_only";
    case Distribution::teacher_and_student: return "teacher_and_student";
    case Distribution::global_student: return "global_student";
  }
  return "student_only";
}

Distribution distribution_from_string(std::string_view name) {
  if (name == "student_only") return Distribution::student_only;
  if (name == "teacher_and_student") return Distribution::teacher_and_student;
  if (name == "global_student") return Distribution::global_student;
  throw ContractError("unknown distribution '" + std::string(name) +
                      "' (expected student_only, teacher_and_student or global_student)");
}

void FederationConfig::validate() const {
  require(rounds > 0, "federation: rounds must be positive");
  require(warmup_rounds < rounds, "federation: warmup_rounds must be < rounds");
  require(threads > 0, "federation: threads must be positive");
  ndag.validate();
  sha.validate();
}

std::uint64_t client_shuffle_seed(std::uint64_t seed, std::size_t round, std::size_t client) {
  return derive_seed(seed, {6, round, client});
}

ServerState init_server(const FederationConfig& config, const ModelArchs& archs) {
  archs.validate();
  std::mt19937_64 task_rng(derive_seed(config.seed, {7}));
  std::mt19937_64 gen_rng(derive_seed(config.seed, {8}));
  ServerState s;
  s.global_task = init_task_params(archs.task, task_rng);
  s.global_gen = init_gen_params(archs.gen, gen_rng);
  s.global_student = s.global_task;
  return s;
}

std::vector<ClientState> init_clients(std::size_t n, const ServerState& server) {
  require(n > 0, "init_clients: need at least one client");
  std::vector<ClientState> clients(n);
  for (auto& c : clients) {
    c.models.teacher = server.global_task;
    c.models.student = server.global_task;
    c.models.generator = server.global_gen;
  }
  return clients;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

RoundMetrics run_round(ServerState& server, std::vector<ClientState>& clients,
                       std::span<const ClientData> data, const FederationConfig& config,
                       const ModelArchs& archs) {
  require(clients.size() == data.size(), "run_round: client/data count mismatch");
  require(!clients.empty(), "run_round: no clients");
  const std::size_t n = clients.size();
  const std::size_t round = server.round + 1;
  const bool warmup = round <= config.warmup_rounds;
  const bool ndag = !warmup && ndag_active(config.mode);
  const bool sha = !warmup && sha_active(config.mode);
  const std::string task_desc = describe(archs.task);
  const std::string gen_desc = describe(archs.gen);

  RoundMetrics metrics;
  metrics.round = round;
  metrics.warmup = warmup;
  metrics.clients.resize(n);

  // (1) distribution
  const ParamVector& student_source =
      config.distribution == Distribution::global_student && !warmup ? server.global_student
                                                                     : server.global_task;
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = clients[i];
    const auto teacher_sum = checksum(c.models.teacher);
    c.models.student = transmit(student_source, ModelRole::student, round, task_desc);
    c.models.generator = transmit(server.global_gen, ModelRole::generator, round, gen_desc);
    c.models.student_opt = {};
    c.models.generator_opt = {};
    if (!warmup && config.distribution == Distribution::teacher_and_student) {
      c.models.teacher = transmit(server.global_task, ModelRole::teacher, round, task_desc);
      c.teacher_ready = true;
    } else if (checksum(c.models.teacher) != teacher_sum) {
      throw std::logic_error("distribution overwrote a client teacher");
    }
    if (!warmup && !c.teacher_ready) {
      c.models.teacher = c.models.student;
      c.teacher_ready = true;
    }
  }

  // (2) local training and upload
  std::vector<ParamVector> last_grads(n);
  parallel_for(n, config.threads, [&](std::size_t i) {
    auto& c = clients[i];
    try {
      auto result = client_round(std::move(c.models), archs, data[i].train, config.ndag, ndag,
                                 client_shuffle_seed(config.seed, round, i));
      c.models = std::move(result.models);
      last_grads[i] = std::move(result.last_batch_grad);
      auto& log = metrics.clients[i];
      log.client = i;
      log.train_loss = mean_student_loss(result.trace);
      log.degenerate_samples = result.degenerate_samples;
      log.trace = std::move(result.trace);
    } catch (const DivergenceError& e) {
      throw DivergenceError("client " + std::to_string(i) + " round " + std::to_string(round) +
                            ": " + e.what());
    } catch (const ContractError& e) {
      throw ContractError("client " + std::to_string(i) + " round " + std::to_string(round) +
                          ": " + e.what());
    }
  });

  std::vector<ParamVector> uploaded_task(n), uploaded_gen(n), uploaded_student(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = clients[i].models;
    uploaded_task[i] = transmit(warmup ? m.student : m.teacher,
                                warmup ? ModelRole::student : ModelRole::teacher, round, task_desc);
    uploaded_gen[i] = transmit(m.generator, ModelRole::generator, round, gen_desc);
    if (config.distribution == Distribution::global_student) {
      uploaded_student[i] = transmit(m.student, ModelRole::student, round, task_desc);
    }
  }

  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  if (sha) {
    // (3) sharpness-aware scoring
    std::vector<ScoreResult> scores(n);
    std::vector<bool> perturbed(n);
    parallel_for(n, config.threads, [&](std::size_t i) {
      const auto theta_hat = perturb_model(uploaded_task[i], last_grads[i], config.sha.rho);
      perturbed[i] = theta_hat.perturbed;
      const auto sets = scoring_sets(i, data, config.sha, config.seed, round);
      scores[i] = evaluate_score(theta_hat.params, archs.task, sets);
    });
    // (4) within-client dense aggregation
    std::vector<double> dense_scores(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto dense = within_client_aggregate({uploaded_task[i], scores[i].score, round},
                                           std::move(clients[i].history), config.sha.k,
                                           config.sha.history_cap);
      clients[i].history = std::move(dense.history);
      uploaded_task[i] = dense.aggregated.params;
      clients[i].models.teacher = dense.aggregated.params;
      dense_scores[i] = dense.aggregated.score;
      auto& log = metrics.clients[i];
      log.raw_score = scores[i].score;
      log.post_dense_score = dense.aggregated.score;
      log.perturbed = perturbed[i];
      log.dense_selected = dense.selected;
    }
    // (5) soft-balanced weights
    weights = softmax_weights(dense_scores, config.sha.beta);
  } else {
    for (auto& log : metrics.clients) {
      log.raw_score = kNaN;
      log.post_dense_score = kNaN;
    }
  }
  for (std::size_t i = 0; i < n; ++i) metrics.clients[i].weight = weights[i];

  // (6) across-client aggregation
  if (sha) {
    auto global = across_client_aggregate(uploaded_task, uploaded_gen, weights);
    server.global_task = std::move(global.task);
    server.global_gen = std::move(global.generator);
    if (config.distribution == Distribution::global_student) {
      server.global_student = param_weighted_sum(uploaded_student, weights);
    }
  } else {
    server.global_task = param_mean(uploaded_task);
    if (!warmup) server.global_gen = param_mean(uploaded_gen);
    if (config.distribution == Distribution::global_student) {
      server.global_student = warmup ? server.global_task : param_mean(uploaded_student);
    }
  }
  server.round = round;

  // Source validation of the new global model.
  double loss = 0.0;
  std::size_t correct = 0, count = 0;
  for (const auto& d : data) {
    for (const auto& s : d.val) {
      const auto out = task_forward(server.global_task, archs.task, s.x);
      loss += loss_cls(out.logits, s.label);
      const auto pred = static_cast<std::size_t>(std::distance(
          out.logits.begin(), std::max_element(out.logits.begin(), out.logits.end())));
      correct += pred == s.label ? 1 : 0;
      ++count;
    }
  }
  if (count > 0) {
    metrics.source_val_loss = loss / static_cast<double>(count);
    metrics.source_val_acc = static_cast<double>(correct) / static_cast<double>(count);
  }
  return metrics;
}

std::vector<ClientData> assign_clients(std::span<const DomainDataset> sources,
                                       std::size_t n_clients) {
  require(!sources.empty(), "assign_clients: no source domains");
  const std::size_t d = sources.size();
  const std::size_t n = n_clients == 0 ? d : n_clients;
  std::vector<ClientData> clients(n);
  if (n <= d) {
    for (std::size_t k = 0; k < d; ++k) {
      auto& c = clients[k % n];
      c.train.insert(c.train.end(), sources[k].train.begin(), sources[k].train.end());
      c.val.insert(c.val.end(), sources[k].val.begin(), sources[k].val.end());
      c.domains.push_back(sources[k].domain);
    }
  } else {
    // More clients than domains: each domain is shared round-robin by the
    // clients assigned to it.
    for (std::size_t k = 0; k < d; ++k) {
      std::vector<std::size_t> owners;
      for (std::size_t i = k; i < n; i += d) owners.push_back(i);
      const std::size_t parts = owners.size();
      for (std::size_t j = 0; j < sources[k].train.size(); ++j) {
        clients[owners[j % parts]].train.push_back(sources[k].train[j]);
      }
      for (std::size_t j = 0; j < sources[k].val.size(); ++j) {
        clients[owners[j % parts]].val.push_back(sources[k].val[j]);
      }
      for (auto i : owners) clients[i].domains.push_back(sources[k].domain);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    require(!clients[i].train.empty() && !clients[i].val.empty(),
            "assign_clients: client " + std::to_string(i) + " received no data");
  }
  return clients;
}

RunReport run_lodo(const Benchmark& bench, const FederationConfig& config,
                   const ModelArchs& archs) {
  config.validate();
  archs.validate();
  require(bench.domains.size() >= 2, "run_lodo: benchmark needs at least two domains");
  require(archs.task.input_dim == bench.input_dim, "run_lodo: input_dim does not match benchmark");
  require(archs.task.num_classes == bench.n_classes,
          "run_lodo: num_classes does not match benchmark");

  RunReport report;
  for (const auto& target : bench.domains) {
    std::vector<DomainDataset> sources;
    for (const auto& d : bench.domains) {
      if (d.domain != target.domain) sources.push_back(d);
    }
    const auto data = assign_clients(sources, config.n_clients);
    std::vector<Sample> target_all = target.train;
    target_all.insert(target_all.end(), target.val.begin(), target.val.end());

    FoldReport fold;
    fold.held_out = target.domain;
    auto server = init_server(config, archs);
    auto clients = init_clients(data.size(), server);
    for (std::size_t r = 0; r < config.rounds; ++r) {
      auto metrics = run_round(server, clients, data, config, archs);
      if (config.probe_every_round) metrics.target = evaluate(server.global_task, archs.task, target_all);
      fold.rounds.push_back(std::move(metrics));
    }
    fold.final_metrics = evaluate(server.global_task, archs.task, target_all);
    fold.rounds.back().target = fold.final_metrics;
    fold.final_server = std::move(server);
    report.folds.push_back(std::move(fold));
  }

  const double nf = static_cast<double>(report.folds.size());
  for (const auto& f : report.folds) {
    report.average.acc += f.final_metrics.acc / nf;
    report.average.f1 += f.final_metrics.f1 / nf;
    report.average.auc += f.final_metrics.auc.value_or(kNaN) / nf;
  }
  return report;
}

}  // namespace feddag
