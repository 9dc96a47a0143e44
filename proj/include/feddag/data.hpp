#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "feddag/sample.hpp"

namespace feddag {

/// Synthetic multi-domain benchmark parameters.
struct BenchSpec {
  std::size_t n_domains = 5;
  std::size_t n_classes = 3;
  std::size_t input_dim = 16;
  std::size_t samples_per_domain = 600;
  double style_strength = 1.0;
  double label_noise = 0.0;
  std::uint64_t seed = 7;

  void validate() const;
};

/// Datasets plus the pre-split sample order (needed for CSV export).
struct Benchmark {
  std::size_t n_classes = 0;
  std::size_t input_dim = 0;
  std::vector<Sample> samples;
  std::vector<DomainDataset> domains;
};

/// Class anchors shared by all domains; each domain warps them with its own
/// affine style map (rotation, per-coordinate scale, bias), observation
/// noise is added, and every coordinate is min-max normalized to [0, 1]
/// over the whole benchmark. style_strength = 0 makes every style map the
/// identity.
Benchmark make_benchmark(const BenchSpec& spec);

/// Class-stratified train/validation split (9:1 per class). Train and val
/// keep the input order. Deterministic in (samples, seed, domain).
DomainDataset stratified_split(std::span<const Sample> samples, std::size_t domain,
                               std::uint64_t seed);

/// Groups samples by domain and splits each domain.
std::vector<DomainDataset> split_by_domain(std::span<const Sample> samples, std::uint64_t seed);

inline constexpr std::size_t kMinDomainSamples = 10;

/// Header: domain,label,f0,...,f{d-1}
std::string csv_header(std::size_t input_dim);

/// Writes the benchmark in generation order with round-trip precision.
void export_csv(const Benchmark& bench, const std::filesystem::path& path);

/// Parses a CSV in the export schema, min-max normalizes each feature over
/// the whole file and splits every domain with `split_seed`.
/// Throws IoError / ContractError with the offending line number.
Benchmark load_csv(const std::filesystem::path& path, std::uint64_t split_seed);
Benchmark parse_csv(const std::string& text, std::uint64_t split_seed);

}  // namespace feddag
