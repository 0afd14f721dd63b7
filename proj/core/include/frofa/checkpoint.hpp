#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frofa/map_head.hpp"

namespace frofa {

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> values;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// Flat little-endian f32 tensors back to back in `bin_path`, plus an index
// "<stem>.json": {"format", "dtype", "meta", "tensors": [{name, offset, shape}]}
// with offsets counted in f32 elements.
struct Checkpoint {
  std::vector<NamedTensor> tensors;
  nlohmann::json meta = nlohmann::json::object();

  [[nodiscard]] const NamedTensor& get(const std::string& name) const;
};

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& bin_path);
Checkpoint read_checkpoint(const std::filesystem::path& bin_path);
std::filesystem::path checkpoint_index_path(const std::filesystem::path& bin_path);

Checkpoint to_checkpoint(const MapHeadParams& params);
MapHeadParams map_head_from_checkpoint(const Checkpoint& ckpt);

}  // namespace frofa
