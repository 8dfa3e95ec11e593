#pragma once

#include <filesystem>
#include <stdexcept>

#include "xltrade/numerics/tensor.hpp"

namespace xltrade::numerics {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (little-endian): "XLTR", u32 version, then per tensor
// u32 name length, name bytes, u32 rank, u64 extents[rank], f64 values.
void save_checkpoint(const std::filesystem::path& path, const ParameterList& params);
ParameterList load_checkpoint(const std::filesystem::path& path);

/// Copies values from `source` into the same-named leaves of `target`.
/// Throws CheckpointError on a missing name, extra name, or shape mismatch.
void assign_parameters(ParameterList& target, const ParameterList& source);

}  // namespace xltrade::numerics
