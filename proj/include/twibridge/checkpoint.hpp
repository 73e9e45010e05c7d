#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "twibridge/segnet.hpp"

namespace twibridge::checkpoint {

// Layout: "TWBR", u16 version, u32 class_count, u32 patch_radius,
// u32 channels, then class_count * feature_count f64 weights. All
// little-endian.
inline constexpr std::uint16_t kFormatVersion = 1;

std::vector<std::uint8_t> serialize(const segnet::ModelParams& model);
segnet::ModelParams deserialize(std::span<const std::uint8_t> bytes);

void save(const std::filesystem::path& path, const segnet::ModelParams& model);
segnet::ModelParams load(const std::filesystem::path& path);

// FNV-1a over the serialized bytes, as 16 hex digits.
std::string hash(const segnet::ModelParams& model);

}  // namespace twibridge::checkpoint
