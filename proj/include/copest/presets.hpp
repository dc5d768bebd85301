// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "copest/sim.hpp"

namespace copest::presets {

/// Bundled payloads "a".."d" (three-robot rigid bodies with CAD-derived
/// mass, center of mass, principal inertia, and grasp frames).
sim::PayloadModel payload(const std::string& name);

enum class Phase { kKinematics, kStatics, kInertia };

/// Trajectory and sampling choices for the three phases of a session.
struct Protocol {
  sim::TrajectoryConfig kinematics;
  sim::TrajectoryConfig statics;
  sim::TrajectoryConfig inertia;
  double kinematics_rate = 100.0;
  double statics_rate = 100.0;
  double inertia_rate = 100.0;
};

/// "standard": the experimental protocol (80 random vias at 0.5-0.8 s,
/// six 12 s static holds, one-minute periodic excitation, 100 Hz).
/// "validation": slow excitation sized so that discretization error sits
/// well below the exact-recovery tolerances on noise-free data.
Protocol protocol(const std::string& name);

/// A noise profile bundles the injected-noise magnitudes with the static
/// detection settings that match them.
struct NoiseProfile {
  sim::NoiseConfig noise;
  double static_tolerance_n = 0.01;       // force constancy window tolerance
  double static_twist_tolerance = 0.05;   // rest check on derived twists
  std::string provenance;
};

/// "none" (all zeros) or "calibrated" (tuned so full-pipeline errors land
/// at the magnitudes reported for the hardware experiments).
NoiseProfile noise_profile(const std::string& name);

/// Complete scenario description: payload plus per-phase protocols.
struct Scenario {
  std::string name;
  sim::PayloadModel payload;
  geom::Vec3 gravity{0.0, 0.0, -9.81};
  bool force_only_wrenches = true;
};

Scenario scenario(const std::string& name);  // "a".."d"

/// Scenario for one phase of a session, ready for sim::synthesize_dataset.
sim::ScenarioConfig phase_scenario(const Scenario& sc, const Protocol& proto,
                                   Phase phase, const sim::NoiseConfig& noise,
                                   std::uint64_t seed);

/// JSON round trip for scenario and noise files (the CLI accepts either a
/// preset name or a path to one of these).
std::string scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const std::string& text);
std::string noise_to_json(const NoiseProfile& profile);
NoiseProfile noise_from_json(const std::string& text);

/// Resolves "a".."d" or a file path.
Scenario resolve_scenario(const std::string& name_or_path);
/// Resolves "none", "calibrated", or a file path.
NoiseProfile resolve_noise(const std::string& name_or_path);

}  // namespace copest::presets
