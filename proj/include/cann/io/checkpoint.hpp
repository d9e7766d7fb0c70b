#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cann/model/cann_model.hpp"

namespace cann::io {

inline constexpr char kCheckpointMagic[] = "CANNCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: magic, u32 version, u32 length + model config JSON, u32 tensor
/// count, then per tensor u16 name length, name, u32 rows, u32 cols, f64
/// values; finally a u64 FNV-1a of every preceding byte. Little-endian.
std::string serialize_checkpoint(CannModel& model);
CannModel deserialize_checkpoint(const std::string& bytes, const std::string& source = "checkpoint");

void save_checkpoint(CannModel& model, const std::filesystem::path& path);
CannModel load_checkpoint(const std::filesystem::path& path);

}  // namespace cann::io
