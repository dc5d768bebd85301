// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#include "copest/sim.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "copest/rng.hpp"

namespace copest::sim {

using geom::Mat3;
using geom::Mat6;
using geom::Rotation;
using geom::Transform;
using geom::Twist;
using geom::TwistRate;
using geom::Vec3;
using geom::Vec6;
using geom::Wrench;

Mat3 PayloadModel::inertia_in_b() const {
  const Mat3& r = com_frame.rotation.matrix();
  return r * principal_inertia.asDiagonal() * r.transpose();
}

void PayloadModel::validate() const {
  if (mass <= 0.0) throw ConfigError("PayloadModel: mass must be positive");
  if ((principal_inertia.array() <= 0.0).any()) {
    throw ConfigError("PayloadModel: principal inertias must be positive");
  }
  const Vec3& i = principal_inertia;
  if (i.x() + i.y() < i.z() - 1e-12 || i.y() + i.z() < i.x() - 1e-12 ||
      i.z() + i.x() < i.y() - 1e-12) {
    throw ConfigError("PayloadModel: principal inertias violate the triangle "
                      "inequalities (not physically realizable)");
  }
  if (grasp_transforms.empty()) {
    throw ConfigError("PayloadModel: at least one grasp transform required");
  }
  if (!grasp_transforms.front().is_approx(Transform::identity(), 1e-12)) {
    throw ConfigError("PayloadModel: T_11 must be the identity");
  }
}

bool NoiseConfig::is_zero() const {
  return pose_position_sigma == 0.0 && pose_rotation_sigma == 0.0 &&
         wrench_force_sigma == 0.0 && wrench_moment_sigma == 0.0 &&
         encoder_quantization == 0.0 && internal_force_amplitude == 0.0;
}

void NoiseConfig::validate() const {
  for (double v : {pose_position_sigma, pose_rotation_sigma, wrench_force_sigma,
                   wrench_moment_sigma, encoder_quantization,
                   internal_force_amplitude}) {
    if (v < 0.0) throw ConfigError("NoiseConfig: magnitudes must be >= 0");
  }
}

void TrajectoryConfig::validate() const {
  switch (kind) {
    case TrajectoryKind::kRandomVia:
      if (via_count < 1) throw ConfigError("trajectory: via_count must be >= 1");
      if (transit_time_range.first <= 0.0 ||
          transit_time_range.second < transit_time_range.first ||
          dwell_time_range.first <= 0.0 ||
          dwell_time_range.second < dwell_time_range.first) {
        throw ConfigError("trajectory: time ranges must be positive intervals");
      }
      break;
    case TrajectoryKind::kStaticHolds:
      if (hold_orientations.empty()) {
        throw ConfigError("trajectory: static_holds needs hold orientations");
      }
      if (hold_duration_s <= 0.0) {
        throw ConfigError("trajectory: hold duration must be positive");
      }
      if (transit_time_range.first <= 0.0 ||
          transit_time_range.second < transit_time_range.first) {
        throw ConfigError("trajectory: time ranges must be positive intervals");
      }
      break;
    case TrajectoryKind::kPeriodic:
      if (periodic_duration_s <= 0.0 || periodic_base_frequency_hz <= 0.0) {
        throw ConfigError("trajectory: periodic duration and base frequency "
                          "must be positive");
      }
      break;
  }
  if (rotation_amplitude_deg < 0.0 || rotation_amplitude_deg > 90.0) {
    throw ConfigError("trajectory: rotation amplitude out of range [0, 90] deg");
  }
  if (translation_amplitude_m < 0.0) {
    throw ConfigError("trajectory: translation amplitude must be >= 0");
  }
}

void ScenarioConfig::validate() const {
  payload.validate();
  noise.validate();
  trajectory.validate();
  if (sample_rate <= 0.0) throw ConfigError("scenario: sample rate must be positive");
  if (!gravity.allFinite()) throw ConfigError("scenario: gravity must be finite");
}

namespace {

// Quintic time scaling s(tau) on [0, 1]: zero velocity and acceleration at
// both ends, so screw segments join with C2 continuity.
void quintic(double tau, double& s, double& sd, double& sdd) {
  const double t2 = tau * tau;
  const double t3 = t2 * tau;
  s = t3 * (10.0 - 15.0 * tau + 6.0 * t2);
  sd = t2 * (30.0 - 60.0 * tau + 30.0 * t2);
  sdd = tau * (60.0 - 180.0 * tau + 120.0 * t2);
}

// One screw-interpolated piece: pose(t) = base * exp(screw * s(tau)).
// Body twist is screw * sdot, acceleration screw * sddot, exactly.
struct Segment {
  double t0 = 0.0;
  double duration = 1.0;
  Transform base;
  Vec6 screw = Vec6::Zero();
};

TrajectorySample eval_segment(const Segment& seg, double t) {
  double tau = (t - seg.t0) / seg.duration;
  tau = std::clamp(tau, 0.0, 1.0);
  double s, sd, sdd;
  quintic(tau, s, sd, sdd);
  sd /= seg.duration;
  sdd /= seg.duration * seg.duration;

  TrajectorySample out;
  out.pose = seg.base * geom::se3_exp((seg.screw * s).eval());
  out.twist = Twist::from_vec(seg.screw * sd);
  out.rate = TwistRate::from_vec(seg.screw * sdd);
  return out;
}

std::vector<TrajectorySample> sample_segments(const std::vector<Segment>& segs,
                                              double sample_rate) {
  const Segment& last = segs.back();
  const double total = last.t0 + last.duration;
  const auto n = static_cast<Eigen::Index>(std::floor(total * sample_rate)) + 1;

  std::vector<TrajectorySample> out;
  out.reserve(n);
  std::size_t seg = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / sample_rate;
    while (seg + 1 < segs.size() && t >= segs[seg + 1].t0) ++seg;
    out.push_back(eval_segment(segs[seg], t));
  }
  return out;
}

std::vector<TrajectorySample> random_via_trajectory(const TrajectoryConfig& cfg,
                                                    double sample_rate,
                                                    Rng& rng) {
  const double amp_rad = cfg.rotation_amplitude_deg * M_PI / 180.0;
  Transform prev = Transform::identity();
  std::vector<Segment> segs;
  double t = 0.0;
  for (int k = 0; k < cfg.via_count; ++k) {
    const Rotation r = geom::rot_exp(rng.unit_vector() * rng.uniform(0.0, amp_rad));
    const Vec3 p(rng.uniform(-cfg.translation_amplitude_m, cfg.translation_amplitude_m),
                 rng.uniform(-cfg.translation_amplitude_m, cfg.translation_amplitude_m),
                 rng.uniform(-cfg.translation_amplitude_m, cfg.translation_amplitude_m));
    const Transform via(r, p);

    Segment transit;
    transit.t0 = t;
    transit.duration = rng.uniform(cfg.transit_time_range.first,
                                   cfg.transit_time_range.second);
    transit.base = prev;
    transit.screw = geom::se3_log(prev.inverse() * via);
    t += transit.duration;
    segs.push_back(transit);

    Segment dwell;
    dwell.t0 = t;
    dwell.duration = rng.uniform(cfg.dwell_time_range.first,
                                 cfg.dwell_time_range.second);
    dwell.base = via;
    t += dwell.duration;
    segs.push_back(dwell);

    prev = via;
  }
  return sample_segments(segs, sample_rate);
}

std::vector<TrajectorySample> static_holds_trajectory(const TrajectoryConfig& cfg,
                                                      double sample_rate,
                                                      Rng& rng) {
  std::vector<Segment> segs;
  double t = 0.0;
  Transform prev(cfg.hold_orientations.front(), Vec3::Zero());

  Segment first;
  first.t0 = 0.0;
  first.duration = cfg.hold_duration_s;
  first.base = prev;
  t += first.duration;
  segs.push_back(first);

  for (std::size_t k = 1; k < cfg.hold_orientations.size(); ++k) {
    const Transform hold(cfg.hold_orientations[k], Vec3::Zero());

    Segment transit;
    transit.t0 = t;
    transit.duration = rng.uniform(cfg.transit_time_range.first,
                                   cfg.transit_time_range.second);
    transit.base = prev;
    transit.screw = geom::se3_log(prev.inverse() * hold);
    t += transit.duration;
    segs.push_back(transit);

    Segment dwell;
    dwell.t0 = t;
    dwell.duration = cfg.hold_duration_s;
    dwell.base = hold;
    t += dwell.duration;
    segs.push_back(dwell);

    prev = hold;
  }
  return sample_segments(segs, sample_rate);
}

// Product-of-exponentials factor with a sinusoidal profile.
struct PoeFactor {
  Vec6 screw;
  double amplitude;
  double omega;  // 2 pi f
  double phase;
};

struct PoeState {
  Transform pose;
  Vec6 twist = Vec6::Zero();
  Vec6 rate = Vec6::Zero();
};

// Body twist/acceleration of a product T_a * T_b from the factors' own.
PoeState compose(const PoeState& a, const PoeState& b) {
  const Mat6 adj_b_inv = geom::adjoint(b.pose.inverse());
  const Vec6 mapped = adj_b_inv * a.twist;
  PoeState out;
  out.pose = a.pose * b.pose;
  out.twist = mapped + b.twist;
  out.rate = adj_b_inv * a.rate - geom::ad(b.twist) * mapped + b.rate;
  return out;
}

PoeState eval_factor(const PoeFactor& f, double t) {
  const double arg = f.omega * t + f.phase;
  const double value = f.amplitude * std::sin(arg);
  const double d1 = f.amplitude * f.omega * std::cos(arg);
  const double d2 = -f.amplitude * f.omega * f.omega * std::sin(arg);
  PoeState s;
  s.pose = geom::se3_exp((f.screw * value).eval());
  s.twist = f.screw * d1;
  s.rate = f.screw * d2;
  return s;
}

std::vector<TrajectorySample> periodic_trajectory(const TrajectoryConfig& cfg,
                                                  double sample_rate) {
  const double amp_rad = cfg.rotation_amplitude_deg * M_PI / 180.0;
  const double base = cfg.periodic_base_frequency_hz;
  if (base * 1.57 >= sample_rate / 2.0) {
    throw ConfigError("trajectory: periodic content too close to Nyquist");
  }

  // Disjoint frequencies per axis and a shared rotation amplitude keep the
  // DC components of angular-velocity products out of the inertia regressor.
  const double rot_ratio[3] = {1.0, 1.21, 1.43};
  const double trans_ratio[3] = {1.09, 1.33, 1.57};
  const double rot_phase[3] = {0.0, 2.0 * M_PI / 3.0, 4.0 * M_PI / 3.0};
  const double trans_phase[3] = {0.5, 1.6, 2.7};

  std::vector<PoeFactor> factors;
  for (int axis = 0; axis < 3; ++axis) {
    PoeFactor f;
    f.screw = Vec6::Zero();
    f.screw[axis] = 1.0;
    f.amplitude = amp_rad;
    f.omega = 2.0 * M_PI * base * rot_ratio[axis];
    f.phase = rot_phase[axis];
    factors.push_back(f);
  }
  for (int axis = 0; axis < 3; ++axis) {
    PoeFactor f;
    f.screw = Vec6::Zero();
    f.screw[3 + axis] = 1.0;
    f.amplitude = cfg.translation_amplitude_m;
    f.omega = 2.0 * M_PI * base * trans_ratio[axis];
    f.phase = trans_phase[axis];
    factors.push_back(f);
  }

  const auto n =
      static_cast<Eigen::Index>(std::floor(cfg.periodic_duration_s * sample_rate)) + 1;
  std::vector<TrajectorySample> out;
  out.reserve(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / sample_rate;
    PoeState acc = eval_factor(factors[0], t);
    for (std::size_t j = 1; j < factors.size(); ++j) {
      acc = compose(acc, eval_factor(factors[j], t));
    }
    TrajectorySample s;
    s.pose = acc.pose;
    s.twist = Twist::from_vec(acc.twist);
    s.rate = TwistRate::from_vec(acc.rate);
    out.push_back(s);
  }
  return out;
}

}  // namespace

std::vector<TrajectorySample> generate_payload_trajectory(
    const TrajectoryConfig& config, double sample_rate, std::uint64_t seed) {
  config.validate();
  if (sample_rate <= 0.0) {
    throw ConfigError("generate_payload_trajectory: sample rate must be positive");
  }
  Rng rng = Rng(seed).derive(17);
  switch (config.kind) {
    case TrajectoryKind::kRandomVia:
      return random_via_trajectory(config, sample_rate, rng);
    case TrajectoryKind::kStaticHolds:
      return static_holds_trajectory(config, sample_rate, rng);
    case TrajectoryKind::kPeriodic:
      return periodic_trajectory(config, sample_rate);
  }
  throw ConfigError("generate_payload_trajectory: unknown kind");
}

RobotKinematics rigid_attach(const std::vector<TrajectorySample>& payload_world,
                             const Transform& t_ci) {
  if (payload_world.empty()) {
    throw ConfigError("rigid_attach: empty payload trajectory");
  }
  const Transform t_ic = t_ci.inverse();
  RobotKinematics out;
  out.home_in_world = payload_world.front().pose * t_ci;
  const Transform home_inv = out.home_in_world.inverse();
  out.pose.reserve(payload_world.size());
  out.twist.reserve(payload_world.size());
  out.rate.reserve(payload_world.size());
  for (const TrajectorySample& s : payload_world) {
    out.pose.push_back(home_inv * (s.pose * t_ci));
    out.twist.push_back(geom::transform_twist(t_ic, s.twist));
    out.rate.push_back(geom::transform_twist_rate(t_ic, s.rate));
  }
  return out;
}

Wrench newton_euler_total_wrench(const PayloadModel& payload,
                                 const Rotation& r_wb, const Twist& v_b,
                                 const TwistRate& vdot_b,
                                 const Vec3& gravity_w) {
  const Mat3 inertia = payload.inertia_in_b();
  const Vec3& w = v_b.angular;
  const Vec3 a_b = vdot_b.linear_accel + w.cross(v_b.linear);
  const Vec3 g_b = r_wb.matrix().transpose() * gravity_w;

  Wrench total;
  total.force = payload.mass * (a_b - g_b);
  total.moment = inertia * vdot_b.angular_accel + w.cross(inertia * w);
  total.frame = "b";
  return total;
}

Eigen::MatrixXd grasp_map(const std::vector<Transform>& t_bi, bool force_only) {
  const int n = static_cast<int>(t_bi.size());
  const int per = force_only ? 3 : 6;
  Eigen::MatrixXd g(6, per * n);
  for (int i = 0; i < n; ++i) {
    const Mat6 block = geom::adjoint(t_bi[i].inverse()).transpose();
    if (force_only) {
      g.middleCols(per * i, per) = block.rightCols<3>();
    } else {
      g.middleCols(per * i, per) = block;
    }
  }
  return g;
}

std::vector<Wrench> distribute_wrench(
    const Wrench& total_b, const std::vector<Transform>& t_bi, bool force_only,
    const std::optional<Eigen::VectorXd>& internal_coeffs) {
  if (t_bi.empty()) throw ConfigError("distribute_wrench: no grasp transforms");

  const Eigen::MatrixXd g = grasp_map(t_bi, force_only);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double rank_tol = 1e-10 * std::max(1.0, smax);
  int rank = 0;
  while (rank < sv.size() && sv(rank) > rank_tol) ++rank;

  const Vec6 w = total_b.vec();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(g.cols());
  for (int k = 0; k < rank; ++k) {
    x += svd.matrixV().col(k) * (svd.matrixU().col(k).dot(w) / sv(k));
  }

  const double residual = (g * x - w).norm();
  if (residual > 1e-9 * std::max(1.0, w.norm())) {
    std::vector<Eigen::VectorXd> unreachable;
    for (int k = rank; k < 6; ++k) {
      const Eigen::VectorXd dir = svd.matrixU().col(k);
      if (std::abs(dir.dot(w)) > 1e-9 * std::max(1.0, w.norm())) {
        unreachable.push_back(dir);
      }
    }
    throw InsufficientExcitation(
        "distribute_wrench: total wrench has a component outside the grasp "
        "map range (rank " + std::to_string(rank) + "); unrealizable wrench "
        "directions attached",
        std::move(unreachable));
  }

  if (internal_coeffs && internal_coeffs->size() > 0) {
    const int null_dim = static_cast<int>(g.cols()) - rank;
    const int use = std::min<int>(null_dim, static_cast<int>(internal_coeffs->size()));
    for (int j = 0; j < use; ++j) {
      x += svd.matrixV().col(rank + j) * (*internal_coeffs)(j);
    }
  }

  std::vector<Wrench> out(t_bi.size());
  const int per = force_only ? 3 : 6;
  for (std::size_t i = 0; i < t_bi.size(); ++i) {
    Wrench f;
    if (force_only) {
      f.moment = Vec3::Zero();
      f.force = x.segment<3>(per * static_cast<int>(i));
    } else {
      f.moment = x.segment<3>(per * static_cast<int>(i));
      f.force = x.segment<3>(per * static_cast<int>(i) + 3);
    }
    out[i] = f;
  }
  return out;
}

Rotation gravity_aligned_frame(const Vec3& gravity_w) {
  const double norm = gravity_w.norm();
  if (norm < 1e-12) return Rotation::identity();
  const Vec3 z = -gravity_w / norm;
  Vec3 ref = std::abs(z.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  Vec3 x = (ref - z * z.dot(ref)).normalized();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return Rotation::project(r);
}

GroundTruthDataset synthesize_dataset(const ScenarioConfig& scenario) {
  scenario.validate();
  const PayloadModel& payload = scenario.payload;
  const int n_robots = payload.robot_count();

  GroundTruthDataset ds;
  ds.scenario = scenario;

  // Generate the payload motion, then anchor the world frame so that robot
  // 1's grasp frame at t = 0 coincides with the gravity-aligned frame {s0}.
  std::vector<TrajectorySample> traj = generate_payload_trajectory(
      scenario.trajectory, scenario.sample_rate, scenario.seed);
  const Transform anchor = payload.com_frame * traj.front().pose.inverse();
  for (TrajectorySample& s : traj) {
    s.pose = anchor * s.pose;
  }
  ds.payload_world = traj;

  const std::size_t n = traj.size();
  ds.timestamps.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    ds.timestamps[k] = static_cast<double>(k) / scenario.sample_rate;
  }

  const Rotation r_w_s0 = gravity_aligned_frame(scenario.gravity);
  const Rotation r_s0_w = r_w_s0.inverse();

  // Constant grasp-frame relations.
  const Transform t_1b(Rotation::identity(), payload.com_frame.translation);
  const Transform t_bc = t_1b.inverse() * payload.com_frame;
  std::vector<Transform> t_bi(n_robots);
  std::vector<Transform> t_ci(n_robots);
  for (int i = 0; i < n_robots; ++i) {
    t_bi[i] = t_1b.inverse() * payload.grasp_transforms[i];
    t_ci[i] = payload.com_frame.inverse() * payload.grasp_transforms[i];
  }

  Rng master(scenario.seed);
  std::optional<Eigen::VectorXd> internal;
  if (scenario.noise.internal_force_amplitude > 0.0) {
    const Eigen::MatrixXd g = grasp_map(t_bi, scenario.force_only_wrenches);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g);
    const auto& sv = svd.singularValues();
    int rank = 0;
    while (rank < sv.size() && sv(rank) > 1e-10 * std::max(1.0, sv(0))) ++rank;
    const int null_dim = static_cast<int>(g.cols()) - rank;
    if (null_dim > 0) {
      Rng r = master.derive(101);
      Eigen::VectorXd coeffs(null_dim);
      for (int j = 0; j < null_dim; ++j) coeffs[j] = r.normal();
      coeffs *= scenario.noise.internal_force_amplitude / coeffs.norm();
      internal = coeffs;
    }
  }

  // Rigid kinematics per robot.
  ds.robots.resize(n_robots);
  for (int i = 0; i < n_robots; ++i) {
    RobotKinematics kin = rigid_attach(traj, t_ci[i]);
    auto& rs = ds.robots[i];
    rs.pose_ref = std::move(kin.pose);
    rs.twist_ref = std::move(kin.twist);
    rs.rate_ref = std::move(kin.rate);
    rs.home_orientation_s0 = r_s0_w * kin.home_in_world.rotation;
    rs.wrench_ref.resize(n);
    rs.pose_raw.resize(n);
    rs.wrench_raw.resize(n);
  }

  // Dynamics and wrench distribution per timestep.
  ds.total_wrench_b.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const TrajectorySample& s = traj[k];
    const Twist v_b = geom::transform_twist(t_bc, s.twist);
    const TwistRate a_b = geom::transform_twist_rate(t_bc, s.rate);
    const Rotation r_wb = s.pose.rotation * payload.com_frame.rotation.inverse();

    const Wrench total =
        newton_euler_total_wrench(payload, r_wb, v_b, a_b, scenario.gravity);
    ds.total_wrench_b[k] = total;

    const std::vector<Wrench> wrenches =
        distribute_wrench(total, t_bi, scenario.force_only_wrenches, internal);
    for (int i = 0; i < n_robots; ++i) {
      ds.robots[i].wrench_ref[k] = wrenches[i];
    }
  }

  // Measurement noise.
  const NoiseConfig& nz = scenario.noise;
  for (int i = 0; i < n_robots; ++i) {
    auto& rs = ds.robots[i];
    Rng pose_rng = master.derive(200 + static_cast<std::uint64_t>(i));
    Rng wrench_rng = master.derive(300 + static_cast<std::uint64_t>(i));
    for (std::size_t k = 0; k < n; ++k) {
      Transform p = rs.pose_ref[k];
      if (nz.pose_rotation_sigma > 0.0) {
        p.rotation = geom::rot_exp(pose_rng.normal3(nz.pose_rotation_sigma)) *
                     p.rotation;
      }
      if (nz.pose_position_sigma > 0.0) {
        p.translation += pose_rng.normal3(nz.pose_position_sigma);
      }
      if (nz.encoder_quantization > 0.0) {
        const double q = nz.encoder_quantization;
        auto quantize = [q](double v) { return std::round(v / q) * q; };
        Vec3 w = geom::rot_log(p.rotation);
        p.rotation = geom::rot_exp(w.unaryExpr(quantize));
        p.translation = p.translation.unaryExpr(quantize);
      }
      rs.pose_raw[k] = p;

      Wrench f = rs.wrench_ref[k];
      if (nz.wrench_force_sigma > 0.0) {
        f.force += wrench_rng.normal3(nz.wrench_force_sigma);
      }
      if (nz.wrench_moment_sigma > 0.0) {
        f.moment += wrench_rng.normal3(nz.wrench_moment_sigma);
      }
      rs.wrench_raw[k] = f;
    }
  }

  return ds;
}

}  // namespace copest::sim
