#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "feddag/config.hpp"
#include "feddag/protocol.hpp"

namespace feddag {

/// LODO run of a resolved config on its benchmark.
RunReport run_config(const RunConfig& config, const Benchmark& bench, std::size_t threads = 1);

/// Ablation rows in table order: full, w/o NDAG, w/o SHA, w/o Both.
inline constexpr std::array<Mode, 4> kAblationModes = {Mode::feddag, Mode::no_ndag, Mode::no_sha,
                                                       Mode::fedavg};
std::string_view ablation_label(Mode mode);

struct AblationResult {
  std::vector<std::uint64_t> seeds;
  std::size_t n_domains = 0;
  // runs[mode][seed] in kAblationModes / seeds order
  std::vector<std::vector<RunReport>> runs;
  std::vector<std::string> warnings;
};

/// Every mode over every seed of `config.seeds`. Jobs run on up to `threads`
/// workers; results do not depend on the worker count.
AblationResult run_ablation(const RunConfig& config, const Benchmark& bench,
                            std::size_t threads = 1);

enum class Metric { acc, f1, auc };
double metric_of(const EvalResult& r, Metric metric);

/// Held-out metric of (mode, seed, domain); NaN when undefined.
double ablation_value(const AblationResult& result, std::size_t mode, std::size_t seed,
                      std::size_t domain, Metric metric);

/// mode,acc_d0..acc_avg,f1_d0..f1_avg,auc_d0..auc_avg with seed-averaged values.
std::string ablation_csv(const AblationResult& result);
/// Full FedDAG against each ablation, paired over seeds and over domains.
/// Empty (header only) when fewer than three seeds were run.
std::string ablation_paired_csv(const AblationResult& result);
/// One row per (mode, seed, held-out domain).
std::string ablation_runs_csv(const AblationResult& result);

struct SweepPoint {
  double value = 0.0;
  RunConfig config;
  RunReport report;
};

std::vector<SweepPoint> run_sweep(const RunConfig& config, const Benchmark& bench,
                                  std::string_view param, const std::vector<double>& values,
                                  std::size_t threads = 1);
std::string sweep_csv(std::string_view param, const std::vector<SweepPoint>& points);

/// Worker count from FEDDAG_THREADS (default 1). Throws ConfigError on junk.
std::size_t threads_from_env();

}  // namespace feddag
