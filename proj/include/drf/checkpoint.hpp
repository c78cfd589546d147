#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "drf/tensor.hpp"

namespace drf {

// Ordered name -> tensor map used for checkpoints and any on-disk state.
struct NamedTensors {
  std::vector<std::pair<std::string, Tensor>> items;

  void add(const std::string& name, const Tensor& t) {
    items.emplace_back(name, t);
  }
  const Tensor* find(const std::string& name) const;
  const Tensor& get(const std::string& name) const;  // throws if absent
};

// Checkpoint file layout (version 1, little-endian):
//   8 bytes magic "DRFCKPT\n"
//   u32 version
//   u32 meta length, then UTF-8 JSON metadata
//   u32 tensor count
//   per tensor: u32 name length, name bytes, u32 ndim, u64 dims[ndim],
//               f64 values (row-major)
// Round-trips are bit-exact.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const NamedTensors& tensors);

std::pair<nlohmann::json, NamedTensors> load_checkpoint(
    const std::string& path);

// FNV-1a over the tensors' names, shapes and raw values; stable identity for
// reproducibility checks and epoch reports.
std::uint64_t tensors_checksum(const NamedTensors& tensors);

}  // namespace drf
