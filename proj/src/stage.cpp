#include "twibridge/stage.hpp"

#include "twibridge/errors.hpp"

namespace twibridge {
namespace {
constexpr std::array<std::string_view, kStageCount> kNames = {"day", "civil", "nautical", "astronomical", "night"};
}

std::string_view stage_name(DomainStage s) { return kNames[stage_index(s)]; }

DomainStage parse_stage(std::string_view name) {
  for (std::size_t i = 0; i < kStageCount; ++i) {
    if (kNames[i] == name) return kAllStages[i];
  }
  throw ConfigError("unknown stage '" + std::string(name) + "'");
}

}  // namespace twibridge
