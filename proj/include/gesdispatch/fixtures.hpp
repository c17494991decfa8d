#pragma once

// Bundled synthetic scenarios generated from fixed seeds.

#include "gesdispatch/dispatch.hpp"

#include <cstdint>

namespace ges {

inline constexpr std::uint64_t kSmokeSeed = 7;
inline constexpr std::uint64_t kFleetSeed = 2024;

/// Three-step tariff: 0.5 at night, 0.9 shoulder, 1.4 evening peak.
Series tou_tariff(std::size_t horizon = 24);

/// One battery, one air-conditioner and one electric vehicle.
ScenarioBundle smoke_fleet(std::uint64_t seed = kSmokeSeed);

/// 100 air-conditioning TCLs with heterogeneous thermal parameters.
ScenarioBundle synthetic_100tcl(std::uint64_t seed = kFleetSeed, std::size_t units = 100);

/// Evening peak window, 19:00 to 22:00.
std::vector<std::size_t> peak_window();

} // namespace ges
