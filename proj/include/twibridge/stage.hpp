#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace twibridge {

// Illumination stages, ordered from lightest to darkest.
enum class DomainStage : std::uint8_t { Day = 0, Civil = 1, Nautical = 2, Astronomical = 3, Night = 4 };

inline constexpr std::size_t kStageCount = 5;
inline constexpr std::array<DomainStage, kStageCount> kAllStages = {
    DomainStage::Day, DomainStage::Civil, DomainStage::Nautical, DomainStage::Astronomical, DomainStage::Night};

constexpr std::size_t stage_index(DomainStage s) { return static_cast<std::size_t>(s); }

std::string_view stage_name(DomainStage s);
// Throws ConfigError on an unknown name.
DomainStage parse_stage(std::string_view name);

}  // namespace twibridge
