#include "feddag/experiment.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <tuple>
#include <limits>

#include "feddag/errors.hpp"
#include "feddag/report.hpp"

namespace feddag {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr const char* kMetricNames[] = {"acc", "f1", "auc"};
constexpr Metric kMetrics[] = {Metric::acc, Metric::f1, Metric::auc};

double nan_mean(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (std::isfinite(x)) {
      s += x;
      ++n;
    }
  }
  return n == 0 ? kNaN : s / static_cast<double>(n);
}

}  // namespace

RunReport run_config(const RunConfig& config, const Benchmark& bench, std::size_t threads) {
  auto fed = config.federation();
  fed.threads = threads;
  return run_lodo(bench, fed, config.archs(bench.input_dim, bench.n_classes));
}

std::string_view ablation_label(Mode mode) {
  switch (mode) {
    case Mode::feddag: return "FedDAG";
    case Mode::no_ndag: return "w/o NDAG";
    case Mode::no_sha: return "w/o SHA";
    case Mode::fedavg: return "w/o Both";
  }
  return "FedDAG";
}

AblationResult run_ablation(const RunConfig& config, const Benchmark& bench, std::size_t threads) {
  require(!config.seeds.empty(), "ablation: seed list is empty");
  AblationResult result;
  result.seeds = config.seeds;
  result.n_domains = bench.domains.size();
  result.runs.assign(kAblationModes.size(), std::vector<RunReport>(config.seeds.size()));
  if (config.seeds.size() < 3) {
    result.warnings.push_back("fewer than three seeds: paired statistics omitted");
  }
  const std::size_t n_seeds = config.seeds.size();
  parallel_for(kAblationModes.size() * n_seeds, threads, [&](std::size_t job) {
    RunConfig c = config;
    c.mode = kAblationModes[job / n_seeds];
    c.seed = config.seeds[job % n_seeds];
    result.runs[job / n_seeds][job % n_seeds] = run_config(c, bench, 1);
  });
  return result;
}

double metric_of(const EvalResult& r, Metric metric) {
  switch (metric) {
    case Metric::acc: return r.acc;
    case Metric::f1: return r.f1;
    case Metric::auc: return r.auc.value_or(kNaN);
  }
  return kNaN;
}

double ablation_value(const AblationResult& result, std::size_t mode, std::size_t seed,
                      std::size_t domain, Metric metric) {
  return metric_of(result.runs.at(mode).at(seed).folds.at(domain).final_metrics, metric);
}

std::string ablation_csv(const AblationResult& result) {
  const std::size_t nd = result.n_domains;
  std::string out = "mode";
  for (const auto* name : kMetricNames) {
    for (std::size_t d = 0; d < nd; ++d) out += std::string(",") + name + "_d" + std::to_string(d);
    out += std::string(",") + name + "_avg";
  }
  out += '\n';
  for (std::size_t m = 0; m < kAblationModes.size(); ++m) {
    out += to_string(kAblationModes[m]);
    for (auto metric : kMetrics) {
      std::vector<double> per_domain(nd);
      for (std::size_t d = 0; d < nd; ++d) {
        std::vector<double> v;
        for (std::size_t s = 0; s < result.seeds.size(); ++s) {
          v.push_back(ablation_value(result, m, s, d, metric));
        }
        per_domain[d] = nan_mean(v);
        out += "," + format_number(per_domain[d]);
      }
      out += "," + format_number(nan_mean(per_domain));
    }
    out += '\n';
  }
  return out;
}

std::string ablation_paired_csv(const AblationResult& result) {
  std::string out = "baseline,metric,pairing,n,mean_diff,wins,losses,sign_test_p\n";
  if (result.seeds.size() < 3) return out;
  const std::size_t nd = result.n_domains, ns = result.seeds.size();
  for (std::size_t m = 1; m < kAblationModes.size(); ++m) {
    for (std::size_t k = 0; k < 3; ++k) {
      const auto metric = kMetrics[k];
      // Seed pairing: domain-averaged metric per seed.
      std::vector<double> a, b;
      for (std::size_t s = 0; s < ns; ++s) {
        std::vector<double> va, vb;
        for (std::size_t d = 0; d < nd; ++d) {
          va.push_back(ablation_value(result, 0, s, d, metric));
          vb.push_back(ablation_value(result, m, s, d, metric));
        }
        a.push_back(nan_mean(va));
        b.push_back(nan_mean(vb));
      }
      // Domain pairing: seed-averaged metric per held-out domain.
      std::vector<double> da, db;
      for (std::size_t d = 0; d < nd; ++d) {
        std::vector<double> va, vb;
        for (std::size_t s = 0; s < ns; ++s) {
          va.push_back(ablation_value(result, 0, s, d, metric));
          vb.push_back(ablation_value(result, m, s, d, metric));
        }
        da.push_back(nan_mean(va));
        db.push_back(nan_mean(vb));
      }
      for (const auto& [pairing, xa, xb] :
           {std::tuple{"seed", a, b}, std::tuple{"domain", da, db}}) {
        if (xa.size() < 3) continue;
        const auto cmp = paired_compare(xa, xb);
        out += std::string(to_string(kAblationModes[m])) + "," + kMetricNames[k] + "," + pairing +
               "," + std::to_string(cmp.n) + "," + format_number(cmp.mean_diff) + "," +
               std::to_string(cmp.wins) + "," + std::to_string(cmp.losses) + "," +
               format_number(cmp.sign_test_p) + "\n";
      }
    }
  }
  return out;
}

std::string ablation_runs_csv(const AblationResult& result) {
  std::string out = "mode,seed,held_out,acc,f1,auc\n";
  for (std::size_t m = 0; m < kAblationModes.size(); ++m) {
    for (std::size_t s = 0; s < result.seeds.size(); ++s) {
      for (const auto& fold : result.runs[m][s].folds) {
        const auto& r = fold.final_metrics;
        out += std::string(to_string(kAblationModes[m])) + "," + std::to_string(result.seeds[s]) +
               "," + std::to_string(fold.held_out) + "," + format_number(r.acc) + "," +
               format_number(r.f1) + "," + format_number(r.auc.value_or(kNaN)) + "\n";
      }
    }
  }
  return out;
}

std::vector<SweepPoint> run_sweep(const RunConfig& config, const Benchmark& bench,
                                  std::string_view param, const std::vector<double>& values,
                                  std::size_t threads) {
  if (!is_sweep_param(param)) {
    RunConfig probe = config;
    set_sweep_param(probe, param, 0.0);  // throws the unknown-parameter error
  }
  if (values.empty()) throw ConfigError("sweep: no values given");
  std::vector<SweepPoint> points(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    points[i].value = values[i];
    points[i].config = config;
    set_sweep_param(points[i].config, param, values[i]);
  }
  parallel_for(points.size(), threads, [&](std::size_t i) {
    points[i].report = run_config(points[i].config, bench, 1);
  });
  return points;
}

std::string sweep_csv(std::string_view param, const std::vector<SweepPoint>& points) {
  std::string out(kSweepHeader);
  out += '\n';
  for (const auto& p : points) {
    out += std::string(param) + "," + format_number(p.value) + "," +
           format_number(p.report.average.acc) + "," + format_number(p.report.average.f1) + "," +
           format_number(p.report.average.auc) + "\n";
  }
  return out;
}

std::size_t threads_from_env() {
  const char* env = std::getenv("FEDDAG_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  std::size_t n = 0;
  const auto* end = env + std::char_traits<char>::length(env);
  const auto res = std::from_chars(env, end, n);
  if (res.ec != std::errc() || res.ptr != end || n == 0) {
    throw ConfigError("FEDDAG_THREADS must be a positive integer, got '" + std::string(env) + "'");
  }
  return n;
}

}  // namespace feddag
