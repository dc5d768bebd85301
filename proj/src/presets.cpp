// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#include "copest/presets.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace copest::presets {

using geom::Rotation;
using geom::Transform;
using geom::Vec3;
using json = nlohmann::json;

namespace {

Rotation rot_from_aa_deg(const Vec3& aa_deg) {
  return geom::rot_exp(aa_deg * M_PI / 180.0);
}

struct PayloadSpec {
  double mass;
  Vec3 aa12_deg, p12;
  Vec3 aa23_deg, p23;
  Vec3 p1c, aa1c_deg;
  Vec3 inertia;
};

// CAD-derived ground truth for the four bundled payloads. T_13 is composed
// from T_12 and T_23 (the CAD values close the loop only to about a
// millimeter, so one pair is treated as derived).
const PayloadSpec& payload_spec(const std::string& name) {
  static const PayloadSpec a{11.672,
                             {0, 0, 0},    {0.647, 0.533, 0},
                             {0, 0, -90},  {0.457, -0.838, 0},
                             {0.537, 0.156, 0.072},
                             {0.043, 0.085, -84.787},
                             {2.318, 3.215, 5.524}};
  static const PayloadSpec b{11.672,
                             {0, 0, 45},   {-0.686, 0.572, 0},
                             {0, 0, 90},   {0.916, -0.647, 0},
                             {0.034, 0.535, 0.072},
                             {0.115, -0.115, 2.465},
                             {2.153, 3.390, 5.535}};
  static const PayloadSpec c{10.478,
                             {0, 0, -90},  {-0.115, -1.143, 0},
                             {0, 0, 45},   {-0.229, 0.800, 0},
                             {0.547, -0.670, 0.057},
                             {-1.034, 0.355, -24.643},
                             {1.824, 2.438, 4.208}};
  static const PayloadSpec d{10.478,
                             {0, 0, -135}, {-0.382, 0.800, -0.038},
                             {0, 0, 45},   {-0.485, 0.862, 0.038},
                             {0.089, 0.593, 0.055},
                             {-1.662, -0.702, 68.937},
                             {1.711, 2.122, 3.772}};
  if (name == "a") return a;
  if (name == "b") return b;
  if (name == "c") return c;
  if (name == "d") return d;
  throw ConfigError("unknown payload preset '" + name + "' (expected a..d)");
}

std::vector<Rotation> default_hold_orientations() {
  std::vector<Rotation> holds;
  for (const Vec3& aa : {Vec3(0, 0, 0), Vec3(8, 0, 0), Vec3(-8, 0, 0),
                         Vec3(0, 8, 0), Vec3(0, -8, 0), Vec3(5, 5, 0)}) {
    holds.push_back(rot_from_aa_deg(aa));
  }
  return holds;
}

}  // namespace

sim::PayloadModel payload(const std::string& name) {
  const PayloadSpec& spec = payload_spec(name);
  sim::PayloadModel p;
  p.mass = spec.mass;
  p.com_frame = Transform(rot_from_aa_deg(spec.aa1c_deg), spec.p1c);
  p.principal_inertia = spec.inertia;

  const Transform t12(rot_from_aa_deg(spec.aa12_deg), spec.p12);
  const Transform t23(rot_from_aa_deg(spec.aa23_deg), spec.p23);
  p.grasp_transforms = {Transform::identity(), t12, t12 * t23};
  return p;
}

Protocol protocol(const std::string& name) {
  Protocol proto;
  if (name == "standard") {
    proto.kinematics.kind = sim::TrajectoryKind::kRandomVia;
    proto.kinematics.via_count = 80;
    proto.kinematics.transit_time_range = {0.5, 0.8};
    proto.kinematics.dwell_time_range = {0.5, 0.8};
    proto.kinematics.rotation_amplitude_deg = 10.0;
    proto.kinematics.translation_amplitude_m = 0.1;

    proto.statics.kind = sim::TrajectoryKind::kStaticHolds;
    proto.statics.hold_orientations = default_hold_orientations();
    proto.statics.hold_duration_s = 12.0;
    proto.statics.transit_time_range = {2.0, 3.0};

    proto.inertia.kind = sim::TrajectoryKind::kPeriodic;
    proto.inertia.periodic_duration_s = 60.0;
    proto.inertia.periodic_base_frequency_hz = 0.3;
    proto.inertia.rotation_amplitude_deg = 8.0;
    proto.inertia.translation_amplitude_m = 0.05;
    return proto;
  }
  if (name == "validation") {
    // Gentle excitation: with noise-free data the only error sources left
    // are discretization of the differencing chain (scales with
    // (frequency * dt)^2) and the coupling of upstream grasp/CoM errors
    // into the inertia regression through the static gravity load. Slow,
    // densely sampled kinematics pin the grasp graph and CoM; the inertia
    // phase then runs fast enough that its dynamic moments dominate the
    // residual coupling.
    proto.kinematics.kind = sim::TrajectoryKind::kRandomVia;
    proto.kinematics.via_count = 12;
    proto.kinematics.transit_time_range = {10.0, 14.0};
    proto.kinematics.dwell_time_range = {0.5, 1.0};
    proto.kinematics.rotation_amplitude_deg = 10.0;
    proto.kinematics.translation_amplitude_m = 0.1;
    proto.kinematics_rate = 200.0;

    proto.statics.kind = sim::TrajectoryKind::kStaticHolds;
    proto.statics.hold_orientations = default_hold_orientations();
    proto.statics.hold_duration_s = 12.0;
    proto.statics.transit_time_range = {2.0, 3.0};

    proto.inertia.kind = sim::TrajectoryKind::kPeriodic;
    proto.inertia.periodic_duration_s = 30.0;
    proto.inertia.periodic_base_frequency_hz = 0.2;
    proto.inertia.rotation_amplitude_deg = 8.0;
    proto.inertia.translation_amplitude_m = 0.03;
    proto.inertia_rate = 2000.0;
    return proto;
  }
  throw ConfigError("unknown protocol '" + name + "' (expected standard|validation)");
}

NoiseProfile noise_profile(const std::string& name) {
  NoiseProfile profile;
  if (name == "none") {
    // Noise-free data: the only in-window force variation left is the tail
    // of the low-pass transient after each reorientation. A tight window
    // tolerance keeps those tails out of the hold averages.
    profile.static_tolerance_n = 1e-7;
    profile.provenance = "zero noise";
    return profile;
  }
  if (name == "calibrated") {
    // Sized with `copest calibrate` against the standard-protocol pipeline.
    // The principal moments are the binding metric: white grasp-frame noise
    // feeds the twice-differenced angular acceleration, and least-squares
    // shrinkage degrades the inertia fit long before the kinematic fits
    // reach the reference hardware error magnitudes. The profile places the
    // worst moment error mean at the reference ~4% level; the kinematic
    // errors then land below their reference counterparts.
    // (see scenarios/noise_calibrated.json for the provenance record)
    profile.noise.pose_rotation_sigma = 0.00052;
    profile.noise.pose_position_sigma = 0.00026;
    profile.noise.wrench_force_sigma = 0.03;
    profile.noise.wrench_moment_sigma = 0.0;
    profile.noise.encoder_quantization = 0.0005;
    profile.noise.internal_force_amplitude = 2.0;
    profile.static_tolerance_n = 0.25;
    profile.static_twist_tolerance = 1.0;
    profile.provenance =
        "sized with `copest calibrate` (seed 42, bisection on the pose-noise "
        "scale, verified over scenarios a-d with 6 trials each): worst "
        "principal-moment error mean ~4% (reference hardware worst 4.4%); "
        "with white grasp-frame noise the reference rotation-error "
        "magnitudes are unreachable without degrading the inertia regression "
        "far past its reference accuracy, so the kinematic error means land "
        "below the hardware values";
    return profile;
  }
  throw ConfigError("unknown noise profile '" + name + "' (expected none|calibrated)");
}

Scenario scenario(const std::string& name) {
  Scenario sc;
  sc.name = name;
  sc.payload = payload(name);
  return sc;
}

sim::ScenarioConfig phase_scenario(const Scenario& sc, const Protocol& proto,
                                   Phase phase, const sim::NoiseConfig& noise,
                                   std::uint64_t seed) {
  sim::ScenarioConfig cfg;
  cfg.payload = sc.payload;
  cfg.gravity = sc.gravity;
  cfg.noise = noise;
  cfg.seed = seed;
  cfg.force_only_wrenches = sc.force_only_wrenches;
  switch (phase) {
    case Phase::kKinematics:
      cfg.trajectory = proto.kinematics;
      cfg.sample_rate = proto.kinematics_rate;
      break;
    case Phase::kStatics:
      cfg.trajectory = proto.statics;
      cfg.sample_rate = proto.statics_rate;
      break;
    case Phase::kInertia:
      cfg.trajectory = proto.inertia;
      cfg.sample_rate = proto.inertia_rate;
      break;
  }
  return cfg;
}

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json transform_to_json(const Transform& t) {
  return json{{"aa_deg", vec3_to_json(geom::rot_log(t.rotation) * 180.0 / M_PI)},
              {"p", vec3_to_json(t.translation)}};
}

Transform transform_from_json(const json& j) {
  return Transform(rot_from_aa_deg(vec3_from_json(j.at("aa_deg"))),
                   vec3_from_json(j.at("p")));
}

}  // namespace

std::string scenario_to_json(const Scenario& sc) {
  json grasps = json::array();
  for (const Transform& t : sc.payload.grasp_transforms) {
    grasps.push_back(transform_to_json(t));
  }
  json j{{"name", sc.name},
         {"gravity_w", vec3_to_json(sc.gravity)},
         {"force_only_wrenches", sc.force_only_wrenches},
         {"payload",
          {{"mass_kg", sc.payload.mass},
           {"com_frame", transform_to_json(sc.payload.com_frame)},
           {"principal_inertia", vec3_to_json(sc.payload.principal_inertia)},
           {"grasp_transforms", grasps}}}};
  return j.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario file is not valid JSON: ") + e.what());
  }
  Scenario sc;
  try {
    sc.name = j.at("name").get<std::string>();
    sc.gravity = vec3_from_json(j.at("gravity_w"));
    sc.force_only_wrenches = j.value("force_only_wrenches", true);
    const json& p = j.at("payload");
    sc.payload.mass = p.at("mass_kg").get<double>();
    sc.payload.com_frame = transform_from_json(p.at("com_frame"));
    sc.payload.principal_inertia = vec3_from_json(p.at("principal_inertia"));
    for (const json& g : p.at("grasp_transforms")) {
      sc.payload.grasp_transforms.push_back(transform_from_json(g));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario file missing fields: ") + e.what());
  }
  sc.payload.validate();
  return sc;
}

std::string noise_to_json(const NoiseProfile& profile) {
  json j{{"provenance", profile.provenance},
         {"pose_position_sigma_m", profile.noise.pose_position_sigma},
         {"pose_rotation_sigma_rad", profile.noise.pose_rotation_sigma},
         {"wrench_force_sigma_n", profile.noise.wrench_force_sigma},
         {"wrench_moment_sigma_nm", profile.noise.wrench_moment_sigma},
         {"encoder_quantization", profile.noise.encoder_quantization},
         {"internal_force_amplitude_n", profile.noise.internal_force_amplitude},
         {"static_tolerance_n", profile.static_tolerance_n},
         {"static_twist_tolerance", profile.static_twist_tolerance}};
  return j.dump(2) + "\n";
}

NoiseProfile noise_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("noise file is not valid JSON: ") + e.what());
  }
  NoiseProfile p;
  try {
    p.provenance = j.value("provenance", "");
    p.noise.pose_position_sigma = j.at("pose_position_sigma_m").get<double>();
    p.noise.pose_rotation_sigma = j.at("pose_rotation_sigma_rad").get<double>();
    p.noise.wrench_force_sigma = j.at("wrench_force_sigma_n").get<double>();
    p.noise.wrench_moment_sigma = j.at("wrench_moment_sigma_nm").get<double>();
    p.noise.encoder_quantization = j.at("encoder_quantization").get<double>();
    p.noise.internal_force_amplitude =
        j.at("internal_force_amplitude_n").get<double>();
    p.static_tolerance_n = j.value("static_tolerance_n", 0.01);
    p.static_twist_tolerance = j.value("static_twist_tolerance", 0.05);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("noise file missing fields: ") + e.what());
  }
  p.noise.validate();
  return p;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Scenario resolve_scenario(const std::string& name_or_path) {
  if (name_or_path == "a" || name_or_path == "b" || name_or_path == "c" ||
      name_or_path == "d") {
    return scenario(name_or_path);
  }
  if (name_or_path.size() <= 2) {
    throw ConfigError("unknown scenario '" + name_or_path +
                      "' (expected a|b|c|d or a scenario file path)");
  }
  return scenario_from_json(read_file(name_or_path));
}

NoiseProfile resolve_noise(const std::string& name_or_path) {
  if (name_or_path == "none" || name_or_path == "calibrated") {
    return noise_profile(name_or_path);
  }
  return noise_from_json(read_file(name_or_path));
}

}  // namespace copest::presets
