// feddag: command-line front end for the federated simulator.
//
//   feddag run          --config cfg.json [--out dir] [--seed N] [--mode M]
//   feddag ablate       --config cfg.json [--out dir] [--seed N]
//   feddag sweep        --config cfg.json --param alpha --values 0,0.1,0.3
//   feddag export-bench --config spec.json --out bench.csv
//
// Exit codes: 0 ok, 2 config error, 3 divergence, 4 I/O error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "feddag/config.hpp"
#include "feddag/errors.hpp"
#include "feddag/experiment.hpp"
#include "feddag/report.hpp"

namespace fs = std::filesystem;
using namespace feddag;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string mode;
};

RunConfig resolve(const CommonFlags& flags) {
  RunConfig config = flags.config_path.empty() ? RunConfig{} : load_config(flags.config_path);
  if (!flags.out.empty()) config.output_dir = flags.out;
  if (flags.seed) {
    config.seed = *flags.seed;
    config.seeds = {*flags.seed};
  }
  if (!flags.mode.empty()) {
    try {
      config.mode = mode_from_string(flags.mode);
    } catch (const ContractError& e) {
      throw ConfigError(std::string("--mode: ") + e.what());
    }
  }
  config.validate();
  return config;
}

void print_summary(const std::string& label, const RunReport& report) {
  std::printf("%-10s", label.c_str());
  for (const auto& f : report.folds) {
    std::printf("  d%zu acc=%.4f", f.held_out, f.final_metrics.acc);
  }
  std::printf("  | avg acc=%.4f f1=%.4f auc=%.4f\n", report.average.acc, report.average.f1,
              report.average.auc);
}

int cmd_run(const CommonFlags& flags) {
  const auto config = resolve(flags);
  const auto bench = load_benchmark(config);
  const auto report = run_config(config, bench, threads_from_env());
  write_run_outputs(config.output_dir, config, report, config.archs(bench.input_dim, bench.n_classes));
  print_summary(std::string(to_string(config.mode)), report);
  std::printf("outputs written to %s\n", config.output_dir.c_str());
  return 0;
}

int cmd_ablate(const CommonFlags& flags) {
  const auto config = resolve(flags);
  const auto bench = load_benchmark(config);
  const auto result = run_ablation(config, bench, threads_from_env());
  for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const fs::path dir = config.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  write_text(dir / "ablation_config.json", to_json(config).dump(2) + "\n");
  write_text(dir / "ablation.csv", ablation_csv(result));
  write_text(dir / "ablation_runs.csv", ablation_runs_csv(result));
  write_text(dir / "ablation_paired.csv", ablation_paired_csv(result));
  std::printf("%-10s %8s %8s %8s\n", "mode", "acc", "f1", "auc");
  for (std::size_t m = 0; m < kAblationModes.size(); ++m) {
    double acc = 0, f1 = 0, auc = 0;
    for (const auto& r : result.runs[m]) {
      acc += r.average.acc;
      f1 += r.average.f1;
      auc += r.average.auc;
    }
    const double n = static_cast<double>(result.runs[m].size());
    std::printf("%-10s %8.4f %8.4f %8.4f\n", std::string(ablation_label(kAblationModes[m])).c_str(),
                acc / n, f1 / n, auc / n);
  }
  std::printf("outputs written to %s\n", dir.c_str());
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& param, const std::vector<double>& values) {
  auto config = resolve(flags);
  const auto bench = load_benchmark(config);
  const auto points = run_sweep(config, bench, param, values, threads_from_env());
  const fs::path dir = config.output_dir;
  const auto archs = config.archs(bench.input_dim, bench.n_classes);
  for (const auto& p : points) {
    write_run_outputs(dir / (param + "=" + format_number(p.value)), p.config, p.report, archs);
    print_summary(param + "=" + format_number(p.value), p.report);
  }
  const auto csv = sweep_csv(param, points);
  write_text(dir / "sweep.csv", csv);
  write_text(dir / "sweep.svg", sweep_plot_from_csv(csv));
  std::printf("outputs written to %s\n", dir.c_str());
  return 0;
}

int cmd_export_bench(const CommonFlags& flags) {
  const auto config = resolve(flags);
  if (flags.out.empty()) throw ConfigError("export-bench: --out <file.csv> is required");
  const auto bench = make_benchmark(config.bench_spec());
  export_csv(bench, flags.out);
  std::printf("wrote %zu samples over %zu domains to %s\n", bench.samples.size(),
              bench.domains.size(), flags.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FedDAG federated domain-generalization simulator"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string param;
  std::vector<double> values;
  auto add_common = [&](CLI::App* sub, bool with_mode) {
    sub->add_option("--config", flags.config_path, "JSON config (defaults when omitted)");
    sub->add_option("--out", flags.out, "output directory (file for export-bench)");
    sub->add_option("--seed", flags.seed, "override seed (and the ablation seed list)");
    if (with_mode) sub->add_option("--mode", flags.mode, "feddag, fedavg, no_ndag or no_sha");
  };
  auto* run = app.add_subcommand("run", "leave-one-domain-out run of one configuration");
  add_common(run, true);
  auto* ablate = app.add_subcommand("ablate", "all four modes over the configured seeds");
  add_common(ablate, false);
  auto* sweep = app.add_subcommand("sweep", "one run per value of a hyperparameter");
  add_common(sweep, true);
  sweep->add_option("--param", param, "alpha, beta, k, rho, m, eval_clients_per_round, n_clients")
      ->required();
  sweep->add_option("--values", values, "comma-separated values")->required()->delimiter(',');
  auto* export_bench = app.add_subcommand("export-bench", "write the benchmark as CSV");
  add_common(export_bench, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(flags);
    if (*ablate) return cmd_ablate(flags);
    if (*sweep) return cmd_sweep(flags, param, values);
    if (*export_bench) return cmd_export_bench(flags);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ContractError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return 3;
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return 4;
  }
  return 0;
}
