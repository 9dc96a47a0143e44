#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "feddag/data.hpp"
#include "feddag/protocol.hpp"

namespace feddag {

/// Fully resolved experiment configuration. Parsed from a single flat JSON
/// object; every key is optional and falls back to the defaults below.
struct RunConfig {
  // federation
  Mode mode = Mode::feddag;
  Distribution distribution = Distribution::student_only;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::size_t rounds = 35;
  std::size_t warmup_rounds = 5;
  std::size_t n_clients = 0;
  std::size_t local_epochs = 1;
  std::size_t batch_size = 32;
  bool probe_every_round = false;

  // optimizers
  double lr = 1e-3;
  double lr_gen = 1e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;

  // local adversarial generation
  double alpha = 0.3;
  double m = 0.1;
  double ema_decay = 0.999;
  double input_lo = 0.0;
  double input_hi = 1.0;
  double collapse_fraction = 0.5;

  // aggregation
  double rho = 1e-7;
  double beta = 0.3;
  std::size_t k = 4;
  std::size_t history_cap = 8;
  bool include_self = true;
  std::size_t eval_clients_per_round = 0;

  // benchmark
  std::size_t n_domains = 5;
  std::size_t n_classes = 3;
  std::size_t input_dim = 16;
  std::size_t samples_per_domain = 600;
  double style_strength = 1.0;
  double label_noise = 0.0;
  std::uint64_t bench_seed = 7;
  std::string bench_csv;  // when set, data is loaded from this file instead

  // architectures
  std::vector<std::size_t> hidden_dims = {32, 32};
  std::size_t feature_dim = 16;
  std::string activation = "relu";
  std::vector<std::size_t> gen_hidden_dims = {32};

  std::string output_dir = "out";

  /// Throws ConfigError naming the offending key.
  void validate() const;

  FederationConfig federation() const;
  BenchSpec bench_spec() const;
  ModelArchs archs(std::size_t input_dim, std::size_t num_classes) const;
};

/// Parses a flat JSON config. Unknown keys, wrong types and out-of-range
/// values raise ConfigError with "line N: ..." diagnostics.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const RunConfig& config);

/// Overrides a single numeric key (used by sweeps). Throws ConfigError for
/// keys outside the sweepable set.
void set_sweep_param(RunConfig& config, std::string_view name, double value);
bool is_sweep_param(std::string_view name);

/// The benchmark described by the config (generated or loaded from CSV).
Benchmark load_benchmark(const RunConfig& config);

}  // namespace feddag
