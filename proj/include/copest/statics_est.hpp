// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "copest/geom.hpp"
#include "copest/kin_est.hpp"

namespace copest::statics {

/// One collapsed static hold: window-averaged wrenches and orientations.
struct StaticSample {
  std::vector<geom::Wrench> wrench;    // per robot, in {i}
  std::vector<geom::Rotation> r_s0_i;  // grasp orientations in {s0}
  geom::Rotation r_s_s0;               // payload attitude factor (s = frame 1)
  int hold_id = 0;
  double start_time = 0.0;
  double duration = 0.0;
};

/// Per-robot inputs to static-window detection, sampled on shared timestamps.
struct RobotStaticStreams {
  std::vector<geom::Wrench> wrench;    // filtered wrench stream
  std::vector<geom::Transform> pose;   // T_i0_i
  std::vector<geom::Twist> twist;      // derived twists (rest check)
  geom::Rotation home_orientation_s0;  // R_{s0, i0}
};

/// Maximal windows where every force channel's peak-to-peak variation stays
/// within `force_tolerance_n` for at least `min_duration_s`, with derived
/// twist norms below `twist_tolerance`; each window is averaged into one
/// StaticSample.
std::vector<StaticSample> detect_static_windows(
    const std::vector<RobotStaticStreams>& robots,
    const std::vector<double>& timestamps, double force_tolerance_n = 0.01,
    double min_duration_s = 6.0, double twist_tolerance = 0.05);

struct MassEstimate {
  double mass = 0.0;
  double residual_norm = 0.0;      // z-row least-squares residual
  geom::Vec3 xy_residual_rms = geom::Vec3::Zero();  // unused x,y equilibrium rows
  bool valid = false;              // mass > 0
};

/// Scalar least squares on the z-component of the force equilibrium,
/// gravity expressed in {s0} as (0, 0, -|g|).
MassEstimate estimate_mass(const std::vector<StaticSample>& samples,
                           const geom::Vec3& gravity_w);

struct ComEstimate {
  geom::Vec3 p_sc = geom::Vec3::Zero();
  double residual_norm = 0.0;
  geom::Vec3 singular_values = geom::Vec3::Zero();
};

/// Center-of-mass position in {s} from the moment equilibrium, using grasp
/// positions/orientations from the estimated graph. Requires holds whose
/// orientations differ about an axis not aligned with gravity; otherwise
/// throws InsufficientOrientations naming the unobservable direction.
ComEstimate estimate_com(const std::vector<StaticSample>& samples, double mass,
                         const kin::GraspGraph& graph,
                         const geom::Vec3& gravity_w);

}  // namespace copest::statics
