#include "feddag/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "feddag/errors.hpp"
#include "feddag/rng.hpp"

namespace feddag {
namespace {

// Generator shape constants for the synthetic benchmark.
constexpr double kIntrinsicNoise = 0.55;    // within-class spread before styling
constexpr double kObservationNoise = 0.08;  // isotropic noise after styling
constexpr double kMaxAngle = std::numbers::pi / 5.0;

struct StyleMap {
  // Plane rotations applied in order, then per-coordinate scale and bias.
  struct Givens {
    std::size_t i, j;
    double c, s;
  };
  std::vector<Givens> rotations;
  std::vector<double> scale;
  std::vector<double> bias;

  std::vector<double> apply(std::vector<double> z) const {
    for (const auto& g : rotations) {
      const double a = z[g.i], b = z[g.j];
      z[g.i] = g.c * a - g.s * b;
      z[g.j] = g.s * a + g.c * b;
    }
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = scale[k] * z[k] + bias[k];
    return z;
  }
};

StyleMap make_style(std::size_t dim, double strength, std::mt19937_64& rng) {
  StyleMap style;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> coord(0, dim - 1);
  for (std::size_t r = 0; r < 2 * dim; ++r) {
    std::size_t i = coord(rng), j = coord(rng);
    const double angle = unit(rng) * kMaxAngle * strength;
    if (i == j) j = (i + 1) % dim;
    style.rotations.push_back({i, j, std::cos(angle), std::sin(angle)});
  }
  style.scale.resize(dim);
  style.bias.resize(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    style.scale[k] = 1.0 + strength * unit(rng);
    style.bias[k] = strength * strength * unit(rng);
  }
  return style;
}

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

void normalize_columns(std::vector<Sample>& samples, std::size_t dim) {
  for (std::size_t k = 0; k < dim; ++k) {
    double lo = samples.front().x[k], hi = lo;
    for (const auto& s : samples) {
      lo = std::min(lo, s.x[k]);
      hi = std::max(hi, s.x[k]);
    }
    const double span = hi - lo;
    for (auto& s : samples) s.x[k] = span > 0.0 ? (s.x[k] - lo) / span : 0.0;
  }
}

}  // namespace

void BenchSpec::validate() const {
  require(n_domains >= 2, "bench: n_domains must be >= 2");
  require(n_classes >= 2, "bench: n_classes must be >= 2");
  require(input_dim >= 2, "bench: input_dim must be >= 2");
  require(samples_per_domain >= 10 * n_classes, "bench: samples_per_domain must be >= 10 * n_classes");
  require(style_strength >= 0.0 && std::isfinite(style_strength), "bench: style_strength must be >= 0");
  require(label_noise >= 0.0 && label_noise < 0.5, "bench: label_noise must lie in [0, 0.5)");
}

Benchmark make_benchmark(const BenchSpec& spec) {
  spec.validate();
  const std::size_t d = spec.input_dim;
  std::mt19937_64 anchor_rng(derive_seed(spec.seed, {1}));
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<std::vector<double>> anchors(spec.n_classes, std::vector<double>(d));
  for (auto& a : anchors) {
    for (auto& v : a) v = normal(anchor_rng);
  }

  Benchmark bench;
  bench.n_classes = spec.n_classes;
  bench.input_dim = d;
  bench.samples.reserve(spec.n_domains * spec.samples_per_domain);
  for (std::size_t dom = 0; dom < spec.n_domains; ++dom) {
    std::mt19937_64 style_rng(derive_seed(spec.seed, {2, dom}));
    const auto style = make_style(d, spec.style_strength, style_rng);
    std::mt19937_64 rng(derive_seed(spec.seed, {3, dom}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> other(1, spec.n_classes - 1);
    for (std::size_t n = 0; n < spec.samples_per_domain; ++n) {
      const std::size_t cls = n % spec.n_classes;
      std::vector<double> z(d);
      for (std::size_t k = 0; k < d; ++k) z[k] = anchors[cls][k] + kIntrinsicNoise * normal(rng);
      auto x = style.apply(std::move(z));
      for (auto& v : x) v += kObservationNoise * normal(rng);
      std::size_t label = cls;
      if (spec.label_noise > 0.0 && unit(rng) < spec.label_noise) {
        label = (cls + other(rng)) % spec.n_classes;
      }
      bench.samples.push_back({std::move(x), label, dom});
    }
  }
  normalize_columns(bench.samples, d);
  bench.domains = split_by_domain(bench.samples, spec.seed);
  return bench;
}

DomainDataset stratified_split(std::span<const Sample> samples, std::size_t domain,
                               std::uint64_t seed) {
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) by_class[samples[i].label].push_back(i);

  std::mt19937_64 rng(derive_seed(seed, {4, domain}));
  std::vector<bool> is_val(samples.size(), false);
  std::size_t n_val = 0;
  for (auto& [label, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto take = static_cast<std::size_t>(std::floor(static_cast<double>(idx.size()) / 10.0 + 0.5));
    for (std::size_t i = 0; i < take; ++i) is_val[idx[i]] = true;
    n_val += take;
  }
  if (n_val == 0 && samples.size() >= 2) {
    // Every class is too small to contribute; hold out one sample anyway.
    is_val[by_class.rbegin()->second.front()] = true;
  }

  DomainDataset out;
  out.domain = domain;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (is_val[i] ? out.val : out.train).push_back(samples[i]);
  }
  return out;
}

std::vector<DomainDataset> split_by_domain(std::span<const Sample> samples, std::uint64_t seed) {
  std::map<std::size_t, std::vector<Sample>> groups;
  for (const auto& s : samples) groups[s.domain].push_back(s);
  std::vector<DomainDataset> out;
  for (const auto& [domain, group] : groups) {
    require(group.size() >= kMinDomainSamples,
            "domain " + std::to_string(domain) + " has " + std::to_string(group.size()) +
                " samples; at least " + std::to_string(kMinDomainSamples) + " required");
    out.push_back(stratified_split(group, domain, seed));
  }
  return out;
}

std::string csv_header(std::size_t input_dim) {
  std::string h = "domain,label";
  for (std::size_t k = 0; k < input_dim; ++k) h += ",f" + std::to_string(k);
  return h;
}

void export_csv(const Benchmark& bench, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << csv_header(bench.input_dim) << '\n';
  for (const auto& s : bench.samples) {
    out << s.domain << ',' << s.label;
    for (double v : s.x) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Benchmark load_csv(const std::filesystem::path& path, std::uint64_t split_seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), split_seed);
}

Benchmark parse_csv(const std::string& text, std::uint64_t split_seed) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ContractError("csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 3) throw ContractError("csv line 1: header needs domain,label,f0,...");
  const std::size_t dim = header.size() - 2;
  if (line != csv_header(dim)) {
    throw ContractError("csv line 1: header must be '" + csv_header(dim) + "'");
  }

  Benchmark bench;
  bench.input_dim = dim;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    const auto where = "csv line " + std::to_string(line_no) + ": ";
    if (cells.size() != dim + 2) {
      throw ContractError(where + "expected " + std::to_string(dim + 2) + " fields, got " +
                          std::to_string(cells.size()));
    }
    auto parse_index = [&](const std::string& c, const char* what) {
      std::size_t v = 0;
      const auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || p != c.data() + c.size()) {
        throw ContractError(where + what + " '" + c + "' is not a non-negative integer");
      }
      return v;
    };
    Sample s;
    s.domain = parse_index(cells[0], "domain");
    s.label = parse_index(cells[1], "label");
    s.x.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      const auto& c = cells[k + 2];
      double v = 0.0;
      const auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || p != c.data() + c.size() || !std::isfinite(v)) {
        throw ContractError(where + "feature f" + std::to_string(k) + " '" + c +
                            "' is not a finite number");
      }
      s.x[k] = v;
    }
    bench.samples.push_back(std::move(s));
  }
  if (bench.samples.empty()) throw ContractError("csv: no data rows");

  std::set<std::size_t> labels;
  for (const auto& s : bench.samples) labels.insert(s.label);
  if (*labels.rbegin() + 1 != labels.size()) {
    throw ContractError("csv: labels must be contiguous integers starting at 0");
  }
  bench.n_classes = labels.size();
  normalize_columns(bench.samples, dim);
  bench.domains = split_by_domain(bench.samples, split_seed);
  return bench;
}

}  // namespace feddag
