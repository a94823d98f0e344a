#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ogrit/recording.hpp"
#include "ogrit/scene.hpp"

namespace ogrit {

enum class ScenarioKind { t_junction, roundabout };

ScenarioKind scenario_kind_from_string(const std::string& name);
std::string_view to_string(ScenarioKind kind);

/// Major road along x, minor road from the south; buildings on both southern corners
/// hide major-road traffic from the minor approach.
StaticScene make_t_junction_scene();
/// Four-arm roundabout (ring radius 20 m, counter-clockwise) with a central island and a
/// building between the east and north arms.
StaticScene make_roundabout_scene();
StaticScene make_scene(ScenarioKind kind);

struct SyntheticOptions {
  double duration{60.0};     // seconds per episode
  double frame_rate{10.0};
  double spawn_until{42.0};  // no new vehicles after this time
};

struct SyntheticData {
  StaticScene scene;
  std::vector<Recording> episodes;
};

/// Scripted drivers: each vehicle picks an exit, follows lane midlines with
/// trapezoidal speed profiles, gives way where its lane yields, and keeps a gap to the
/// vehicle ahead. Deterministic in (kind, n_episodes, seed).
SyntheticData generate_synthetic(ScenarioKind kind, int n_episodes, std::uint64_t seed,
                                 const SyntheticOptions& options = {});

}  // namespace ogrit
