#include "feddag/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "feddag/errors.hpp"

namespace feddag {
namespace {

using json = nlohmann::json;

class KeyError : public ConfigError {
 public:
  KeyError(std::string key, const std::string& msg)
      : ConfigError(key + ": " + msg), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct Field {
  const char* name;
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;
};

template <typename T>
T as(const json& v, const char* key) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw KeyError(key, "expected a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw KeyError(key, "expected true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw KeyError(key, "expected a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0 && !v.is_number_unsigned())) {
        throw KeyError(key, "expected a non-negative integer");
      }
    } else {
      if (!v.is_array()) throw KeyError(key, "expected an array");
      for (const auto& e : v) {
        if (!e.is_number_integer() || e.get<std::int64_t>() < 0) {
          throw KeyError(key, "expected an array of non-negative integers");
        }
      }
    }
    return v.get<T>();
  } catch (const json::exception&) {
    throw KeyError(key, "value has the wrong type");
  }
}

#define FIELD(name, type) \
  Field { #name, [](RunConfig& c, const json& v) { c.name = as<type>(v, #name); }, \
          [](const RunConfig& c) { return json(c.name); } }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"mode",
            [](RunConfig& c, const json& v) {
              try {
                c.mode = mode_from_string(as<std::string>(v, "mode"));
              } catch (const ContractError& e) {
                throw KeyError("mode", e.what());
              }
            },
            [](const RunConfig& c) { return json(std::string(to_string(c.mode))); }},
      Field{"distribution",
            [](RunConfig& c, const json& v) {
              try {
                c.distribution = distribution_from_string(as<std::string>(v, "distribution"));
              } catch (const ContractError& e) {
                throw KeyError("distribution", e.what());
              }
            },
            [](const RunConfig& c) { return json(std::string(to_string(c.distribution))); }},
      FIELD(seed, std::uint64_t),
      FIELD(seeds, std::vector<std::uint64_t>),
      FIELD(rounds, std::size_t),
      FIELD(warmup_rounds, std::size_t),
      FIELD(n_clients, std::size_t),
      FIELD(local_epochs, std::size_t),
      FIELD(batch_size, std::size_t),
      FIELD(probe_every_round, bool),
      FIELD(lr, double),
      FIELD(lr_gen, double),
      FIELD(momentum, double),
      FIELD(weight_decay, double),
      FIELD(alpha, double),
      FIELD(m, double),
      FIELD(ema_decay, double),
      FIELD(input_lo, double),
      FIELD(input_hi, double),
      FIELD(collapse_fraction, double),
      FIELD(rho, double),
      FIELD(beta, double),
      FIELD(k, std::size_t),
      FIELD(history_cap, std::size_t),
      FIELD(include_self, bool),
      FIELD(eval_clients_per_round, std::size_t),
      FIELD(n_domains, std::size_t),
      FIELD(n_classes, std::size_t),
      FIELD(input_dim, std::size_t),
      FIELD(samples_per_domain, std::size_t),
      FIELD(style_strength, double),
      FIELD(label_noise, double),
      FIELD(bench_seed, std::uint64_t),
      FIELD(bench_csv, std::string),
      FIELD(hidden_dims, std::vector<std::size_t>),
      FIELD(feature_dim, std::size_t),
      FIELD(activation, std::string),
      FIELD(gen_hidden_dims, std::vector<std::size_t>),
      FIELD(output_dir, std::string),
  };
  return table;
}

#undef FIELD

void check(bool ok, const char* key, const std::string& msg) {
  if (!ok) throw KeyError(key, msg);
}

std::size_t line_of(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) line += text[i] == '\n' ? 1 : 0;
  return line;
}

std::size_t line_of_key(std::string_view text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  return pos == std::string_view::npos ? 0 : line_of(text, pos);
}

const std::vector<const char*> kSweepParams = {"alpha", "beta", "k", "rho", "m",
                                               "eval_clients_per_round", "n_clients"};

}  // namespace

void RunConfig::validate() const {
  check(rounds > 0, "rounds", "must be positive");
  check(!seeds.empty(), "seeds", "must list at least one seed");
  check(warmup_rounds < rounds, "warmup_rounds", "must be smaller than rounds");
  check(local_epochs > 0, "local_epochs", "must be positive");
  check(batch_size > 0, "batch_size", "must be positive");
  check(lr > 0.0 && std::isfinite(lr), "lr", "must be positive");
  check(lr_gen > 0.0 && std::isfinite(lr_gen), "lr_gen", "must be positive");
  check(momentum >= 0.0 && momentum < 1.0, "momentum", "must lie in [0, 1)");
  check(weight_decay >= 0.0 && std::isfinite(weight_decay), "weight_decay", "must be >= 0");
  check(alpha >= 0.0 && alpha <= 1.0, "alpha", "must lie in [0, 1]");
  check(m > 0.0 && std::isfinite(m), "m", "must be positive");
  check(ema_decay >= 0.0 && ema_decay <= 1.0, "ema_decay", "must lie in [0, 1]");
  check(input_lo < input_hi, "input_hi", "must be greater than input_lo");
  check(collapse_fraction >= 0.0 && collapse_fraction <= 1.0, "collapse_fraction",
        "must lie in [0, 1]");
  check(rho >= 0.0 && std::isfinite(rho), "rho", "must be >= 0");
  check(beta >= 0.0 && beta <= 10.0, "beta", "must lie in [0, 10]");
  check(history_cap > 0, "history_cap", "must be positive");
  check(k <= history_cap, "k", "must not exceed history_cap");
  check(n_domains >= 2, "n_domains", "must be >= 2");
  check(n_classes >= 2, "n_classes", "must be >= 2");
  check(input_dim >= 2, "input_dim", "must be >= 2");
  check(samples_per_domain >= 10 * n_classes, "samples_per_domain", "must be >= 10 * n_classes");
  check(style_strength >= 0.0 && std::isfinite(style_strength), "style_strength", "must be >= 0");
  check(label_noise >= 0.0 && label_noise < 0.5, "label_noise", "must lie in [0, 0.5)");
  check(feature_dim >= 2, "feature_dim", "must be >= 2");
  for (auto h : hidden_dims) check(h > 0, "hidden_dims", "entries must be positive");
  for (auto h : gen_hidden_dims) check(h > 0, "gen_hidden_dims", "entries must be positive");
  check(activation == "relu" || activation == "tanh", "activation", "must be relu or tanh");
  check(!output_dir.empty(), "output_dir", "must not be empty");
}

FederationConfig RunConfig::federation() const {
  FederationConfig f;
  f.n_clients = n_clients;
  f.rounds = rounds;
  f.warmup_rounds = warmup_rounds;
  f.mode = mode;
  f.distribution = distribution;
  f.seed = seed;
  f.probe_every_round = probe_every_round;
  f.ndag.alpha = alpha;
  f.ndag.m = m;
  f.ndag.ema_decay = ema_decay;
  f.ndag.task_opt = {lr, momentum, weight_decay};
  f.ndag.gen_opt = {lr_gen, momentum, weight_decay};
  f.ndag.batch_size = batch_size;
  f.ndag.local_epochs = local_epochs;
  f.ndag.range = {input_lo, input_hi};
  f.ndag.collapse_fraction = collapse_fraction;
  f.sha.rho = rho;
  f.sha.beta = beta;
  f.sha.k = k;
  f.sha.history_cap = history_cap;
  f.sha.include_self = include_self;
  f.sha.eval_clients_per_round = eval_clients_per_round;
  return f;
}

BenchSpec RunConfig::bench_spec() const {
  return {n_domains, n_classes, input_dim, samples_per_domain, style_strength, label_noise, bench_seed};
}

ModelArchs RunConfig::archs(std::size_t in_dim, std::size_t num_classes) const {
  ModelArchs a;
  a.task = {in_dim, hidden_dims, feature_dim, num_classes, activation_from_string(activation)};
  a.gen = {in_dim, gen_hidden_dims};
  return a;
}

RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("line " + std::to_string(line_of(text, e.byte > 0 ? e.byte - 1 : 0)) +
                      ": invalid JSON (" + e.what() + ")");
  }
  if (!doc.is_object()) throw ConfigError("line 1: config must be a JSON object");

  RunConfig config;
  std::string key;
  try {
    for (const auto& [k, v] : doc.items()) {
      key = k;
      const auto& table = fields();
      const auto it = std::find_if(table.begin(), table.end(),
                                   [&](const Field& f) { return k == f.name; });
      if (it == table.end()) throw KeyError(k, "unknown key");
      it->set(config, v);
    }
    config.validate();
  } catch (const KeyError& e) {
    const auto line = line_of_key(text, e.key());
    throw ConfigError((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + e.what());
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

nlohmann::ordered_json to_json(const RunConfig& config) {
  nlohmann::ordered_json j;
  for (const auto& f : fields()) j[f.name] = f.get(config);
  return j;
}

bool is_sweep_param(std::string_view name) {
  return std::find(kSweepParams.begin(), kSweepParams.end(), name) != kSweepParams.end();
}

void set_sweep_param(RunConfig& config, std::string_view name, double value) {
  if (!is_sweep_param(name)) {
    throw ConfigError("unknown sweep parameter '" + std::string(name) +
                      "' (expected alpha, beta, k, rho, m, eval_clients_per_round or n_clients)");
  }
  auto as_count = [&](double v) {
    if (v < 0.0 || v != std::floor(v)) {
      throw ConfigError(std::string(name) + ": sweep value must be a non-negative integer");
    }
    return static_cast<std::size_t>(v);
  };
  if (name == "alpha") config.alpha = value;
  else if (name == "beta") config.beta = value;
  else if (name == "k") config.k = as_count(value);
  else if (name == "rho") config.rho = value;
  else if (name == "m") config.m = value;
  else if (name == "eval_clients_per_round") config.eval_clients_per_round = as_count(value);
  else if (name == "n_clients") config.n_clients = as_count(value);
  if (config.k > config.history_cap) config.history_cap = config.k;
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("sweep value out of range: ") + e.what());
  }
}

Benchmark load_benchmark(const RunConfig& config) {
  if (!config.bench_csv.empty()) return load_csv(config.bench_csv, config.bench_seed);
  return make_benchmark(config.bench_spec());
}

}  // namespace feddag
