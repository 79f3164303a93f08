#pragma once

#include <filesystem>
#include <string>

#include "ihdr/fusion/model.hpp"
#include "ihdr/tonemap.hpp"

namespace ihdr::fusion {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    FusionModel model;
    ToneNetModel tonenet;
};

/// Layout (little-endian): "IHDRCKPT", u32 version, u32 config length,
/// config JSON, u64 parameter count, float32 parameters (fusion then
/// ToneNet), u32 CRC-32 of all preceding bytes.
std::string encode_checkpoint(const FusionModel& model, const ToneNetModel& tonenet);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const FusionModel& model, const ToneNetModel& tonenet);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ihdr::fusion
