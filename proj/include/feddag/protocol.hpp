#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "feddag/data.hpp"
#include "feddag/metrics.hpp"
#include "feddag/ndag.hpp"
#include "feddag/sha.hpp"

namespace feddag {

/// Which components are active: feddag = NDAG + SHA, fedavg = neither.
enum class Mode { feddag, fedavg, no_ndag, no_sha };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);
bool ndag_active(Mode mode);
bool sha_active(Mode mode);

/// What the server's global task model is sent to each round.
///   student_only        F -> S; the teacher stays local (default)
///   teacher_and_student F -> T and S
///   global_student      students are aggregated into a separate global
///                       student that is sent to S; F is built from teachers
enum class Distribution { student_only, teacher_and_student, global_student };

std::string_view to_string(Distribution d);
Distribution distribution_from_string(std::string_view name);

struct FederationConfig {
  std::size_t n_clients = 0;  // 0: one client per source domain
  std::size_t rounds = 35;
  std::size_t warmup_rounds = 5;
  NdagHyper ndag;
  ShaHyper sha;
  Mode mode = Mode::feddag;
  Distribution distribution = Distribution::student_only;
  std::uint64_t seed = 0;
  bool probe_every_round = false;  // analysis only; never feeds back
  std::size_t threads = 1;

  void validate() const;
};

/// Training and validation data held by one client.
struct ClientData {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<std::size_t> domains;
};

struct ClientState {
  ClientModels models;
  std::vector<ScoredSnapshot> history;
  bool teacher_ready = false;
};

struct ServerState {
  ParamVector global_task;
  ParamVector global_gen;
  ParamVector global_student;  // only used by Distribution::global_student
  std::size_t round = 0;       // rounds completed
};

/// Per-client bookkeeping for one round. Scores are NaN when not computed.
struct ClientRoundLog {
  std::size_t client = 0;
  double train_loss = 0.0;  // mean student cross-entropy over the round
  double raw_score = 0.0;
  double post_dense_score = 0.0;
  double weight = 0.0;
  bool perturbed = false;
  std::size_t dense_selected = 0;
  std::size_t degenerate_samples = 0;
  std::vector<TraceRow> trace;
};

struct RoundMetrics {
  std::size_t round = 0;  // 1-based
  bool warmup = false;
  std::vector<ClientRoundLog> clients;
  double source_val_loss = 0.0;
  double source_val_acc = 0.0;
  std::optional<EvalResult> target;  // set only when probed
};

ServerState init_server(const FederationConfig& config, const ModelArchs& archs);
std::vector<ClientState> init_clients(std::size_t n, const ServerState& server);

/// Seed for a client's batch order in a round; identical across modes.
std::uint64_t client_shuffle_seed(std::uint64_t seed, std::size_t round, std::size_t client);

/// One communication round: distribute, train locally, (score, densely
/// aggregate,) weight and aggregate. Client failures are rethrown with the
/// client id attached.
RoundMetrics run_round(ServerState& server, std::vector<ClientState>& clients,
                       std::span<const ClientData> data, const FederationConfig& config,
                       const ModelArchs& archs);

/// Builds the clients of one LODO fold from the source domains.
std::vector<ClientData> assign_clients(std::span<const DomainDataset> sources,
                                       std::size_t n_clients);

struct FoldReport {
  std::size_t held_out = 0;
  std::vector<RoundMetrics> rounds;
  EvalResult final_metrics;
  ServerState final_server;
};

struct MetricSummary {
  double acc = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
};

struct RunReport {
  std::vector<FoldReport> folds;
  MetricSummary average;
};

/// Leave-one-domain-out: one federation per held-out domain, evaluated on
/// all samples of that domain after the final round.
RunReport run_lodo(const Benchmark& bench, const FederationConfig& config, const ModelArchs& archs);

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace feddag
