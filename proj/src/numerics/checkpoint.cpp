#include "xltrade/numerics/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace xltrade::numerics {
namespace {

constexpr std::array<char, 4> kMagic{'X', 'L', 'T', 'R'};

template <typename T>
void put(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T take(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) throw CheckpointError("truncated checkpoint");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterList& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot open " + path.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kCheckpointVersion);
  for (const auto& [name, tensor] : params) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(tensor.rank()));
    for (auto extent : tensor.shape()) put<std::uint64_t>(os, extent);
    for (double v : tensor.values()) put<double>(os, v);
  }
  if (!os) throw CheckpointError("write failed for " + path.string());
}

ParameterList load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open " + path.string());
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) throw CheckpointError("bad checkpoint magic");
  if (const auto version = take<std::uint32_t>(is); version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  ParameterList params;
  while (is.peek() != std::char_traits<char>::eof()) {
    const auto name_len = take<std::uint32_t>(is);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw CheckpointError("truncated checkpoint");
    const auto rank = take<std::uint32_t>(is);
    if (rank > 8) throw CheckpointError("implausible rank in checkpoint record " + name);
    Shape shape(rank);
    for (auto& e : shape) e = static_cast<std::size_t>(take<std::uint64_t>(is));
    std::vector<double> values(shape_size(shape));
    for (auto& v : values) v = take<double>(is);
    try {
      params.push_back({std::move(name), Tensor(std::move(shape), std::move(values), true)});
    } catch (const NonFiniteError&) {
      throw CheckpointError("non-finite value in checkpoint");
    }
  }
  return params;
}

void assign_parameters(ParameterList& target, const ParameterList& source) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, tensor] : source) by_name[name] = &tensor;
  if (by_name.size() != target.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(by_name.size()) + " tensors, model expects " +
                          std::to_string(target.size()));
  }
  for (auto& [name, tensor] : target) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw CheckpointError("checkpoint lacks parameter " + name);
    if (it->second->shape() != tensor.shape()) {
      throw CheckpointError("shape mismatch for " + name + ": checkpoint " + shape_string(it->second->shape()) +
                            ", model " + shape_string(tensor.shape()));
    }
    auto dst = tensor.mutable_values();
    std::copy(it->second->values().begin(), it->second->values().end(), dst.begin());
  }
}

}  // namespace xltrade::numerics
