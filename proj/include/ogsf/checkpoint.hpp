#pragma once

// Parameter checkpoint file ("OGSW"), little-endian:
//
//   magic "OGSW" | version u32 | tensor count u32
//   per tensor: name length u16, UTF-8 name, rank u8, dims u32[rank],
//               float32 values (row-major)

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ogsf/tensor.hpp"

namespace ogsf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct CheckpointEntry {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<CheckpointEntry> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<CheckpointEntry> load_checkpoint(const std::filesystem::path& path);

// Copies entries into same-named leaves. Throws DimensionError listing every
// missing, unexpected or mis-shaped tensor name.
void assign_checkpoint(const std::vector<CheckpointEntry>& entries,
                       std::vector<NamedTensor>& params);

}  // namespace ogsf
