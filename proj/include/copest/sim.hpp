// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "copest/geom.hpp"

namespace copest::sim {

/// Rigid payload: mass, center-of-mass principal frame in grasp frame {1},
/// principal moments, and the grasp frames T_1i (T_11 = identity).
struct PayloadModel {
  double mass = 0.0;                                // kg
  geom::Transform com_frame;                        // T_1c
  geom::Vec3 principal_inertia = geom::Vec3::Zero();  // kg m^2, diag of I_c
  std::vector<geom::Transform> grasp_transforms;    // T_1i

  int robot_count() const { return static_cast<int>(grasp_transforms.size()); }

  /// Inertia matrix about the center of mass on {1}-aligned axes (frame {b}).
  geom::Mat3 inertia_in_b() const;

  /// mass > 0, moments > 0 and physically realizable (triangle
  /// inequalities), T_11 = identity.
  void validate() const;
};

struct NoiseConfig {
  double pose_position_sigma = 0.0;      // m
  double pose_rotation_sigma = 0.0;      // rad
  double wrench_force_sigma = 0.0;       // N
  double wrench_moment_sigma = 0.0;      // N m
  double encoder_quantization = 0.0;     // rad (and m for translations), 0 = off
  double internal_force_amplitude = 0.0; // N, 0 = off

  bool is_zero() const;
  void validate() const;
};

enum class TrajectoryKind { kRandomVia, kPeriodic, kStaticHolds };

struct TrajectoryConfig {
  TrajectoryKind kind = TrajectoryKind::kRandomVia;

  // random_via
  int via_count = 80;
  std::pair<double, double> transit_time_range = {0.5, 0.8};  // s
  std::pair<double, double> dwell_time_range = {0.5, 0.8};    // s
  double rotation_amplitude_deg = 10.0;
  double translation_amplitude_m = 0.1;

  // static_holds
  std::vector<geom::Rotation> hold_orientations;
  double hold_duration_s = 12.0;

  // periodic (per-axis sinusoids; amplitudes shared so square terms cancel)
  double periodic_duration_s = 60.0;
  double periodic_base_frequency_hz = 0.3;

  void validate() const;
};

struct ScenarioConfig {
  PayloadModel payload;
  geom::Vec3 gravity{0.0, 0.0, -9.81};  // m/s^2, world frame
  double sample_rate = 100.0;           // Hz
  NoiseConfig noise;
  TrajectoryConfig trajectory;
  std::uint64_t seed = 0;
  bool force_only_wrenches = true;  // gimbal-style grippers: F_i = (0, f_i)

  void validate() const;
};

/// One sample of the payload trajectory: pose of {c} in the generator frame
/// plus the body twist and its elementwise derivative, all analytic.
struct TrajectorySample {
  geom::Transform pose;
  geom::Twist twist;
  geom::TwistRate rate;
};

/// Twice-differentiable payload trajectory sampled at `sample_rate`.
/// Velocity and acceleration are analytic derivatives, not differences.
std::vector<TrajectorySample> generate_payload_trajectory(
    const TrajectoryConfig& config, double sample_rate, std::uint64_t seed);

/// Per-robot kinematic streams produced by rigidly attaching frame {i} at
/// constant T_ci to the payload trajectory.
struct RobotKinematics {
  std::vector<geom::Transform> pose;  // T_i0_i, referenced to the pose at t=0
  std::vector<geom::Twist> twist;     // V_i in {i}
  std::vector<geom::TwistRate> rate;  // Vdot_i in {i}
  geom::Transform home_in_world;      // T_w_i0
};

RobotKinematics rigid_attach(const std::vector<TrajectorySample>& payload_world,
                             const geom::Transform& t_ci);

/// Net wrench the grippers must apply, expressed in {b} (at the CoM, axes of
/// {1}): force m(a_b - g_b), moment I alpha + w x I w. Reduces to -m g in
/// {b} at rest.
geom::Wrench newton_euler_total_wrench(const PayloadModel& payload,
                                       const geom::Rotation& r_wb,
                                       const geom::Twist& v_b,
                                       const geom::TwistRate& vdot_b,
                                       const geom::Vec3& gravity_w);

/// Grasp map G with columns Ad(T_ib)^T restricted to each robot's wrench
/// channels (6 per robot, or 3 force channels in force-only mode).
Eigen::MatrixXd grasp_map(const std::vector<geom::Transform>& t_bi,
                          bool force_only);

/// Minimum-norm wrench distribution: returns per-robot wrenches in {i} whose
/// adjoint-transposed sum reproduces `total_b`. Optional internal component
/// lives in the grasp-map null space (coefficients on an orthonormal basis).
/// Throws InsufficientExcitation when the total has a component outside the
/// grasp map's range.
std::vector<geom::Wrench> distribute_wrench(
    const geom::Wrench& total_b, const std::vector<geom::Transform>& t_bi,
    bool force_only,
    const std::optional<Eigen::VectorXd>& internal_coeffs = std::nullopt);

/// Full synthetic dataset: noisy measurement streams plus noise-free
/// reference streams and payload truth.
struct GroundTruthDataset {
  struct RobotStreams {
    std::vector<geom::Transform> pose_raw;
    std::vector<geom::Wrench> wrench_raw;
    std::vector<geom::Transform> pose_ref;
    std::vector<geom::Twist> twist_ref;
    std::vector<geom::TwistRate> rate_ref;
    std::vector<geom::Wrench> wrench_ref;
    geom::Rotation home_orientation_s0;  // R_{s0, i0}
  };

  ScenarioConfig scenario;
  std::vector<double> timestamps;
  std::vector<RobotStreams> robots;
  std::vector<TrajectorySample> payload_world;  // truth, world-anchored
  std::vector<geom::Wrench> total_wrench_b;     // truth
};

/// Trajectory -> rigid attach -> Newton-Euler -> wrench distribution, then
/// measurement noise per NoiseConfig. Deterministic given scenario.seed.
GroundTruthDataset synthesize_dataset(const ScenarioConfig& scenario);

/// Rotation R_w_s0 of the gravity-aligned frame: z-axis opposite gravity.
/// Identity for the default gravity (0, 0, -g).
geom::Rotation gravity_aligned_frame(const geom::Vec3& gravity_w);

}  // namespace copest::sim
