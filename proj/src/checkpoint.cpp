#include "feddag/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "feddag/errors.hpp"

namespace feddag {
namespace {

constexpr std::uint32_t kWireVersion = 1;
constexpr char kMagic[4] = {'F', 'D', 'A', 'G'};
constexpr const char* kJsonFormat = "feddag-checkpoint-v1";

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::endian::native == std::endian::little, "wire format assumes little endian");
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ContractError("wire: truncated frame");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view to_string(ModelRole role) {
  switch (role) {
    case ModelRole::global_task: return "global_task";
    case ModelRole::global_generator: return "global_generator";
    case ModelRole::teacher: return "teacher";
    case ModelRole::student: return "student";
    case ModelRole::generator: return "generator";
  }
  return "global_task";
}

ModelRole role_from_string(std::string_view name) {
  for (auto r : {ModelRole::global_task, ModelRole::global_generator, ModelRole::teacher,
                 ModelRole::student, ModelRole::generator}) {
    if (to_string(r) == name) return r;
  }
  throw ContractError("unknown model role '" + std::string(name) + "'");
}

std::string describe(const TaskArch& arch) {
  nlohmann::json j = {{"kind", "task"},
                      {"input_dim", arch.input_dim},
                      {"hidden_dims", arch.hidden_dims},
                      {"feature_dim", arch.feature_dim},
                      {"num_classes", arch.num_classes},
                      {"activation", std::string(to_string(arch.activation))}};
  return j.dump();
}

std::string describe(const GenArch& arch) {
  nlohmann::json j = {{"kind", "generator"},
                      {"input_dim", arch.input_dim},
                      {"hidden_dims", arch.hidden_dims}};
  return j.dump();
}

std::string to_json(const Checkpoint& ckpt) {
  nlohmann::ordered_json j;
  j["format"] = kJsonFormat;
  j["role"] = std::string(to_string(ckpt.role));
  j["round"] = ckpt.round;
  j["arch"] = nlohmann::json::parse(ckpt.arch.empty() ? "{}" : ckpt.arch);
  j["dim"] = ckpt.params.dim();
  j["values"] = ckpt.params.data();
  return j.dump();
}

Checkpoint checkpoint_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != kJsonFormat) {
      throw ContractError("checkpoint: unsupported format");
    }
    Checkpoint ckpt;
    ckpt.role = role_from_string(j.at("role").get<std::string>());
    ckpt.round = j.at("round").get<std::size_t>();
    ckpt.arch = j.at("arch").dump();
    ckpt.params = ParamVector(j.at("values").get<std::vector<double>>());
    if (ckpt.params.dim() != j.at("dim").get<std::size_t>()) {
      throw ContractError("checkpoint: dim does not match values length");
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("checkpoint: ") + e.what());
  }
}

std::vector<std::uint8_t> encode(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out;
  out.reserve(40 + ckpt.arch.size() + 8 * ckpt.params.dim());
  out.insert(out.end(), kMagic, kMagic + 4);
  put(out, kWireVersion);
  put(out, static_cast<std::uint32_t>(ckpt.role));
  put(out, static_cast<std::uint64_t>(ckpt.round));
  put(out, static_cast<std::uint64_t>(ckpt.arch.size()));
  out.insert(out.end(), ckpt.arch.begin(), ckpt.arch.end());
  put(out, static_cast<std::uint64_t>(ckpt.params.dim()));
  for (double v : ckpt.params.values()) put(out, v);
  return out;
}

Checkpoint decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.get_string(4) != std::string(kMagic, 4)) throw ContractError("wire: bad magic");
  if (r.get<std::uint32_t>() != kWireVersion) throw ContractError("wire: unsupported version");
  Checkpoint ckpt;
  const auto role = r.get<std::uint32_t>();
  if (role > static_cast<std::uint32_t>(ModelRole::generator)) throw ContractError("wire: bad role");
  ckpt.role = static_cast<ModelRole>(role);
  ckpt.round = r.get<std::uint64_t>();
  ckpt.arch = r.get_string(r.get<std::uint64_t>());
  const auto dim = r.get<std::uint64_t>();
  std::vector<double> values(dim);
  for (auto& v : values) v = r.get<double>();
  if (!r.done()) throw ContractError("wire: trailing bytes");
  ckpt.params = ParamVector(std::move(values));
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << to_json(ckpt) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace feddag
