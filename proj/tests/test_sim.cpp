#include <doctest.h>

#include <cmath>

#include "copest/presets.hpp"
#include "copest/rng.hpp"
#include "copest/sim.hpp"

using namespace copest;
using namespace copest::geom;
using namespace copest::sim;

namespace {

TrajectoryConfig small_random_via() {
  TrajectoryConfig t;
  t.kind = TrajectoryKind::kRandomVia;
  t.via_count = 10;
  t.transit_time_range = {0.5, 0.8};
  t.dwell_time_range = {0.5, 0.8};
  t.rotation_amplitude_deg = 10.0;
  t.translation_amplitude_m = 0.1;
  return t;
}

ScenarioConfig small_scenario(TrajectoryKind kind = TrajectoryKind::kRandomVia) {
  ScenarioConfig cfg;
  cfg.payload = presets::payload("a");
  cfg.trajectory = small_random_via();
  if (kind == TrajectoryKind::kPeriodic) {
    cfg.trajectory.kind = kind;
    cfg.trajectory.periodic_duration_s = 10.0;
    cfg.trajectory.periodic_base_frequency_hz = 0.3;
  } else if (kind == TrajectoryKind::kStaticHolds) {
    cfg.trajectory = presets::protocol("standard").statics;
  }
  cfg.sample_rate = 100.0;
  cfg.seed = 99;
  return cfg;
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("payload presets carry the bundled ground truth") {
  const PayloadModel a = presets::payload("a");
  a.validate();
  CHECK(a.mass == 11.672);
  CHECK((a.com_frame.translation - Vec3(0.537, 0.156, 0.072)).norm() == 0.0);
  CHECK((a.principal_inertia - Vec3(2.318, 3.215, 5.524)).norm() == 0.0);
  REQUIRE(a.robot_count() == 3);
  CHECK((a.grasp_transforms[1].translation - Vec3(0.647, 0.533, 0)).norm() == 0.0);
  CHECK(rotation_error_deg(a.grasp_transforms[1].rotation, Rotation::identity()) <
        1e-12);
  // T_13 composed from T_12 * T_23; closes against the CAD T_31 to ~1 mm
  CHECK((a.grasp_transforms[2].translation - Vec3(1.104, -0.305, 0)).norm() < 2e-3);
  CHECK(rotation_error_deg(a.grasp_transforms[2].rotation,
                           Rotation::about_z(-M_PI / 2)) < 1e-9);

  for (const char* name : {"b", "c", "d"}) {
    presets::payload(name).validate();
  }
  CHECK_THROWS_AS(presets::payload("z"), ConfigError);
}

TEST_CASE("payload validation rejects unphysical inertia") {
  PayloadModel p = presets::payload("a");
  p.principal_inertia = Vec3(1.0, 1.0, 3.0);  // violates Ixx + Iyy >= Izz
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.principal_inertia = Vec3(1.0, 1.0, -0.1);
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = presets::payload("a");
  p.mass = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("static hold trajectory is stationary") {
  TrajectoryConfig t;
  t.kind = TrajectoryKind::kStaticHolds;
  t.hold_orientations = {Rotation::about_x(0.1)};
  t.hold_duration_s = 3.0;
  const auto traj = generate_payload_trajectory(t, 100.0, 1);
  REQUIRE(traj.size() == 301);
  for (const auto& s : traj) {
    CHECK(s.twist.vec().norm() == 0.0);
    CHECK(s.rate.vec().norm() == 0.0);
    CHECK(s.pose.rotation.is_approx(Rotation::about_x(0.1)));
  }
}

TEST_CASE("random via trajectory determinism and duration bounds") {
  TrajectoryConfig t = small_random_via();
  t.via_count = 80;
  const auto a = generate_payload_trajectory(t, 100.0, 42);
  const auto b = generate_payload_trajectory(t, 100.0, 42);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); k += 97) {
    CHECK((a[k].pose.matrix() - b[k].pose.matrix()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a[k].twist.vec() - b[k].twist.vec()).cwiseAbs().maxCoeff() == 0.0);
  }

  // 80 x (transit + dwell), each term in [0.5, 0.8] s x 2
  const double duration = static_cast<double>(a.size() - 1) / 100.0;
  CHECK(duration >= 80.0);
  CHECK(duration <= 128.0);

  const auto c = generate_payload_trajectory(t, 100.0, 43);
  CHECK((a[500].pose.matrix() - c[500].pose.matrix()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("trajectory twists match numerical pose derivatives") {
  // analytic twists agree with differentiated poses on every kind
  for (TrajectoryKind kind : {TrajectoryKind::kRandomVia, TrajectoryKind::kPeriodic,
                              TrajectoryKind::kStaticHolds}) {
    TrajectoryConfig t = small_random_via();
    t.kind = kind;
    t.via_count = 3;
    t.periodic_duration_s = 3.0;
    t.periodic_base_frequency_hz = 0.5;
    t.hold_orientations = {Rotation::identity(), Rotation::about_x(0.12)};
    t.hold_duration_s = 1.0;
    const double fs = 2000.0;
    const auto traj = generate_payload_trajectory(t, fs, 7);
    for (std::size_t k = 1; k + 1 < traj.size(); k += 53) {
      const Mat4 tdot =
          (traj[k + 1].pose.matrix() - traj[k - 1].pose.matrix()) * (fs / 2.0);
      const Twist v = twist_from_pose_derivative(traj[k].pose, tdot);
      CHECK((v.vec() - traj[k].twist.vec()).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
}

TEST_CASE("rigid_attach identity and stationary cases") {
  TrajectoryConfig t = small_random_via();
  t.via_count = 4;
  const auto traj = generate_payload_trajectory(t, 100.0, 5);

  const RobotKinematics same = rigid_attach(traj, Transform::identity());
  for (std::size_t k = 0; k < traj.size(); k += 31) {
    CHECK((same.twist[k].vec() - traj[k].twist.vec()).cwiseAbs().maxCoeff() == 0.0);
    // pose is re-referenced to the first sample
    const Transform expect = traj.front().pose.inverse() * traj[k].pose;
    CHECK(same.pose[k].is_approx(expect, 1e-12));
  }

  TrajectoryConfig hold;
  hold.kind = TrajectoryKind::kStaticHolds;
  hold.hold_orientations = {Rotation::about_y(0.1)};
  hold.hold_duration_s = 2.0;
  const auto still = generate_payload_trajectory(hold, 100.0, 5);
  const RobotKinematics r =
      rigid_attach(still, Transform(Rotation::about_z(1.0), Vec3(1, 2, 3)));
  for (const auto& v : r.twist) CHECK(v.vec().norm() == 0.0);
}

TEST_CASE("rigid grasp twist consistency across robots") {
  const PayloadModel payload = presets::payload("a");
  TrajectoryConfig t = small_random_via();
  t.via_count = 6;
  const auto traj = generate_payload_trajectory(t, 100.0, 8);

  std::vector<RobotKinematics> kins;
  for (const Transform& t_1i : payload.grasp_transforms) {
    kins.push_back(rigid_attach(traj, payload.com_frame.inverse() * t_1i));
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const Transform t_ij =
          payload.grasp_transforms[i].inverse() * payload.grasp_transforms[j];
      for (std::size_t k = 0; k < traj.size(); k += 17) {
        const Vec6 vi = kins[i].twist[k].vec();
        const Vec6 mapped = adjoint(t_ij) * kins[j].twist[k].vec();
        CHECK((vi - mapped).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
}

TEST_CASE("newton euler stationary payload") {
  const PayloadModel payload = presets::payload("a");
  const Wrench w = newton_euler_total_wrench(
      payload, Rotation::identity(), Twist{}, TwistRate{}, Vec3(0, 0, -9.81));
  CHECK(w.moment.norm() == 0.0);
  CHECK(w.force.norm() == doctest::Approx(11.672 * 9.81).epsilon(1e-12));
  CHECK(w.force.norm() == doctest::Approx(114.50).epsilon(1e-4));
  CHECK((w.force - Vec3(0, 0, 11.672 * 9.81)).norm() < 1e-12);
}

TEST_CASE("newton euler principal-axis spin") {
  PayloadModel p;
  p.mass = 2.0;
  p.com_frame = Transform::identity();
  p.principal_inertia = Vec3(1.0, 2.0, 2.5);
  p.grasp_transforms = {Transform::identity()};

  // steady spin about the body x-axis through the point d: twist constant in
  // the body frame, acceleration zero
  const double omega = 1.7;
  const Vec3 d(0.0, 0.3, 0.2);
  Twist v;
  v.angular = Vec3(omega, 0, 0);
  v.linear = -v.angular.cross(d);
  const Wrench w = newton_euler_total_wrench(p, Rotation::about_z(0.4), v,
                                             TwistRate{}, Vec3::Zero());
  CHECK(w.moment.norm() < 1e-14);  // principal axis: no gyroscopic torque
  const Vec3 centripetal = p.mass * v.angular.cross(v.linear);
  CHECK((w.force - centripetal).norm() < 1e-14);
  CHECK((w.force - p.mass * omega * omega * Vec3(0, 0.3, 0.2)).norm() < 1e-12);
}

TEST_CASE("newton euler gyroscopic cross term") {
  PayloadModel p;
  p.mass = 1.0;
  p.com_frame = Transform::identity();
  p.principal_inertia = Vec3(1.0, 2.0, 3.0);
  p.grasp_transforms = {Transform::identity()};

  Twist v;
  v.angular = Vec3(1, 1, 0) / std::sqrt(2.0);
  const Wrench w =
      newton_euler_total_wrench(p, Rotation::identity(), v, TwistRate{}, Vec3::Zero());
  CHECK((w.moment - Vec3(0, 0, 0.5)).norm() < 1e-14);
}

TEST_CASE("distribute_wrench single and symmetric grasps") {
  Wrench total;
  total.moment = Vec3(0.4, -0.2, 0.9);
  total.force = Vec3(1.0, 2.0, 3.0);

  const auto single = distribute_wrench(total, {Transform::identity()}, false);
  REQUIRE(single.size() == 1);
  CHECK((single[0].vec() - total.vec()).cwiseAbs().maxCoeff() < 1e-12);

  Wrench pure_z;
  pure_z.force = Vec3(0, 0, 10.0);
  const std::vector<Transform> sym = {
      Transform(Rotation::identity(), Vec3(0.5, 0, 0)),
      Transform(Rotation::identity(), Vec3(-0.5, 0, 0))};
  const auto pair = distribute_wrench(pure_z, sym, false);
  for (const Wrench& f : pair) {
    CHECK((f.force - Vec3(0, 0, 5.0)).norm() < 1e-12);
    CHECK(f.moment.norm() < 1e-12);
  }
}

TEST_CASE("distribute_wrench closure on random inputs") {
  const PayloadModel payload = presets::payload("b");
  const Transform t_1b(Rotation::identity(), payload.com_frame.translation);
  std::vector<Transform> t_bi;
  for (const auto& g : payload.grasp_transforms) t_bi.push_back(t_1b.inverse() * g);

  Rng rng(31);
  for (bool force_only : {false, true}) {
    const Eigen::MatrixXd g = grasp_map(t_bi, force_only);
    for (int k = 0; k < 50; ++k) {
      Wrench total;
      total.moment = rng.normal3(5.0);
      total.force = rng.normal3(50.0);
      const auto dist = distribute_wrench(total, t_bi, force_only);
      Vec6 sum = Vec6::Zero();
      for (std::size_t i = 0; i < t_bi.size(); ++i) {
        sum += adjoint(t_bi[i].inverse()).transpose() * dist[i].vec();
      }
      CHECK((sum - total.vec()).cwiseAbs().maxCoeff() < 1e-9);
    }
    CHECK(g.rows() == 6);
  }
}

TEST_CASE("distribute_wrench flags unrealizable moment") {
  // two force-only grasps on the x-axis cannot torque about that axis
  const std::vector<Transform> collinear = {
      Transform(Rotation::identity(), Vec3(0.5, 0, 0)),
      Transform(Rotation::identity(), Vec3(-0.5, 0, 0))};
  Wrench about_x;
  about_x.moment = Vec3(1, 0, 0);
  CHECK_THROWS_AS(distribute_wrench(about_x, collinear, true),
                  InsufficientExcitation);
  try {
    distribute_wrench(about_x, collinear, true);
  } catch (const InsufficientExcitation& e) {
    REQUIRE(!e.null_directions.empty());
    Vec6 ex = Vec6::Zero();
    ex[0] = 1.0;
    bool found = false;
    for (const auto& dir : e.null_directions) {
      if (std::abs(dir.dot(ex)) > 0.99) found = true;
    }
    CHECK(found);
  }
}

TEST_CASE("synthesize zero noise equals reference streams") {
  const auto ds = synthesize_dataset(small_scenario());
  REQUIRE(ds.robots.size() == 3);
  for (const auto& r : ds.robots) {
    for (std::size_t k = 0; k < ds.timestamps.size(); k += 29) {
      CHECK((r.pose_raw[k].matrix() - r.pose_ref[k].matrix()).cwiseAbs().maxCoeff() ==
            0.0);
      CHECK((r.wrench_raw[k].vec() - r.wrench_ref[k].vec()).cwiseAbs().maxCoeff() ==
            0.0);
    }
  }
}

TEST_CASE("synthesize determinism") {
  ScenarioConfig cfg = small_scenario();
  cfg.noise.pose_rotation_sigma = 0.01;
  cfg.noise.pose_position_sigma = 0.002;
  cfg.noise.wrench_force_sigma = 0.05;
  cfg.noise.internal_force_amplitude = 1.0;
  const auto a = synthesize_dataset(cfg);
  const auto b = synthesize_dataset(cfg);
  REQUIRE(a.timestamps.size() == b.timestamps.size());
  for (std::size_t k = 0; k < a.timestamps.size(); k += 13) {
    for (int i = 0; i < 3; ++i) {
      CHECK((a.robots[i].pose_raw[k].matrix() - b.robots[i].pose_raw[k].matrix())
                .cwiseAbs()
                .maxCoeff() == 0.0);
      CHECK((a.robots[i].wrench_raw[k].vec() - b.robots[i].wrench_raw[k].vec())
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("wrench closure holds at every synthesized timestep") {
  for (bool internal : {false, true}) {
    ScenarioConfig cfg = small_scenario();
    cfg.noise.internal_force_amplitude = internal ? 3.0 : 0.0;
    const auto ds = synthesize_dataset(cfg);

    const Transform t_1b(Rotation::identity(), cfg.payload.com_frame.translation);
    std::vector<Transform> t_bi;
    for (const auto& g : cfg.payload.grasp_transforms) {
      t_bi.push_back(t_1b.inverse() * g);
    }
    for (std::size_t k = 0; k < ds.timestamps.size(); ++k) {
      Vec6 sum = Vec6::Zero();
      for (int i = 0; i < 3; ++i) {
        sum += adjoint(t_bi[i].inverse()).transpose() * ds.robots[i].wrench_ref[k].vec();
      }
      CHECK((sum - ds.total_wrench_b[k].vec()).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("internal forces change robot wrenches but not closure") {
  ScenarioConfig plain = small_scenario();
  ScenarioConfig squeezed = plain;
  squeezed.noise.internal_force_amplitude = 5.0;
  const auto a = synthesize_dataset(plain);
  const auto b = synthesize_dataset(squeezed);
  double max_wrench_delta = 0.0;
  for (std::size_t k = 0; k < a.timestamps.size(); k += 7) {
    max_wrench_delta = std::max(
        max_wrench_delta,
        (a.robots[0].wrench_ref[k].vec() - b.robots[0].wrench_ref[k].vec()).norm());
    CHECK((a.total_wrench_b[k].vec() - b.total_wrench_b[k].vec()).cwiseAbs().maxCoeff() <
          1e-9);
  }
  CHECK(max_wrench_delta > 0.5);
}

TEST_CASE("static equilibrium matches gravity") {
  ScenarioConfig cfg = small_scenario(TrajectoryKind::kStaticHolds);
  const auto ds = synthesize_dataset(cfg);
  const Vec3 g_s0(0, 0, -cfg.gravity.norm());

  int checked = 0;
  for (std::size_t k = 0; k < ds.timestamps.size(); k += 50) {
    bool at_rest = true;
    for (const auto& r : ds.robots) {
      if (r.twist_ref[k].vec().norm() > 1e-12) at_rest = false;
    }
    if (!at_rest) continue;
    Vec3 sum = Vec3::Zero();
    for (const auto& r : ds.robots) {
      const Rotation r_s0_i =
          r.home_orientation_s0 * r.pose_ref[k].rotation;
      sum += r_s0_i * r.wrench_ref[k].force;
    }
    CHECK((cfg.payload.mass * g_s0 + sum).norm() < 1e-9);
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("energy balance on zero-gravity trajectory") {
  ScenarioConfig cfg = small_scenario(TrajectoryKind::kPeriodic);
  cfg.gravity = Vec3::Zero();
  cfg.sample_rate = 2000.0;
  cfg.trajectory.periodic_duration_s = 10.0;
  const auto ds = synthesize_dataset(cfg);

  const Transform t_bc =
      Transform(Rotation::identity(), cfg.payload.com_frame.translation).inverse() *
      cfg.payload.com_frame;
  const Mat3 inertia = cfg.payload.inertia_in_b();

  const std::size_t n = ds.timestamps.size();
  std::vector<double> ke(n), power(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Twist v_b = transform_twist(t_bc, ds.payload_world[k].twist);
    ke[k] = 0.5 * cfg.payload.mass * v_b.linear.squaredNorm() +
            0.5 * v_b.angular.dot(inertia * v_b.angular);
    power[k] = ds.total_wrench_b[k].vec().dot(v_b.vec());
  }
  const double dt = 1.0 / cfg.sample_rate;
  double integral = 0.0;
  double worst = 0.0;
  const double scale =
      *std::max_element(ke.begin(), ke.end()) - *std::min_element(ke.begin(), ke.end());
  for (std::size_t k = 1; k < n; ++k) {
    integral += 0.5 * (power[k] + power[k - 1]) * dt;
    worst = std::max(worst, std::abs(ke[k] - ke[0] - integral));
  }
  CHECK(worst / scale < 1e-6);
}

TEST_CASE("quantization and noise reach the raw streams") {
  ScenarioConfig cfg = small_scenario();
  cfg.noise.encoder_quantization = 0.01;
  const auto ds = synthesize_dataset(cfg);
  // quantized coordinates are integer multiples of the step
  const Vec3 p = ds.robots[1].pose_raw[200].translation;
  for (int i = 0; i < 3; ++i) {
    const double steps = p[i] / 0.01;
    CHECK(std::abs(steps - std::round(steps)) < 1e-9);
  }
}

}  // TEST_SUITE
