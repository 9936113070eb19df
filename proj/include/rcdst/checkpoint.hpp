#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rcdst/tensor.hpp"

namespace rcdst {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  Matrix values;
};

/// Binary layout: "DSTC", u32 version, length-prefixed metadata JSON, u32
/// tensor count, then per tensor: length-prefixed name, u32 rank, u64 dims,
/// raw little-endian doubles in row-major order.
struct Checkpoint {
  std::string metadata;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
};

void write_checkpoint(std::ostream& out, const std::string& metadata, const ParameterRefs& params);
void save_checkpoint(const std::filesystem::path& path, const std::string& metadata,
                     const ParameterRefs& params);
Checkpoint read_checkpoint(std::istream& in, const std::string& label = "checkpoint");
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies tensors into parameters by name; names and shapes must match.
void restore_parameters(const Checkpoint& checkpoint, const ParameterRefs& params);

}  // namespace rcdst
