#pragma once

#include <filesystem>
#include <string>

#include "transtext/params.hpp"

namespace transtext {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string config_json;
  ParamStore params;
};

/// Binary layout: "TTXT", u32 version, u64 blob length + JSON blob, then per
/// tensor: u32 name length, name, u32 ndim, ndim x u64 dims, float64 data.
/// All integers and floats little-endian.
void save_checkpoint(const std::filesystem::path& path, const std::string& config_json, const ParamStore& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace transtext
