#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "feddag/mlp.hpp"
#include "feddag/param_vector.hpp"

namespace feddag {

enum class ModelRole { global_task, global_generator, teacher, student, generator };

std::string_view to_string(ModelRole role);
ModelRole role_from_string(std::string_view name);

/// A parameter vector tagged with what it is and when it was produced.
/// `arch` is a JSON descriptor of the owning architecture.
struct Checkpoint {
  ModelRole role = ModelRole::global_task;
  std::size_t round = 0;
  std::string arch;
  ParamVector params;

  bool operator==(const Checkpoint&) const = default;
};

std::string describe(const TaskArch& arch);
std::string describe(const GenArch& arch);

/// JSON document: {"format", "role", "round", "arch", "dim", "values"}.
std::string to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(std::string_view text);

/// Little-endian binary frame used for in-process client/server messages:
///   "FDAG" | u32 version | u32 role | u64 round | u64 arch_len | arch bytes
///   | u64 dim | dim x f64
std::vector<std::uint8_t> encode(const Checkpoint& ckpt);
Checkpoint decode(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace feddag
