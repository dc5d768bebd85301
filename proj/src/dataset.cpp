// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#include "copest/dataset.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace copest::pipeline {

using geom::Rotation;
using geom::Transform;
using geom::Twist;
using geom::TwistRate;
using geom::Vec3;
using geom::Wrench;
using json = nlohmann::json;

geom::Transform QuatPose::transform() const {
  const Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
  return Transform(Rotation::from_quaternion(quat), p);
}

QuatPose QuatPose::from(const Transform& t) {
  const Eigen::Quaterniond quat = t.rotation.quaternion();
  QuatPose out;
  out.q = {quat.w(), quat.x(), quat.y(), quat.z()};
  out.p = t.translation;
  return out;
}

sim::PayloadModel GroundTruthBlock::payload() const {
  sim::PayloadModel p;
  p.mass = mass;
  p.com_frame = com_frame.transform();
  p.principal_inertia = principal_inertia;
  for (const QuatPose& g : grasps) p.grasp_transforms.push_back(g.transform());
  return p;
}

GroundTruthBlock GroundTruthBlock::from(const sim::PayloadModel& payload) {
  GroundTruthBlock b;
  b.mass = payload.mass;
  b.com_frame = QuatPose::from(payload.com_frame);
  b.principal_inertia = payload.principal_inertia;
  for (const Transform& g : payload.grasp_transforms) {
    b.grasps.push_back(QuatPose::from(g));
  }
  return b;
}

void Dataset::validate() const {
  const std::size_t n = timestamps.size();
  if (header.robot_count <= 0) throw ConfigError("dataset: no robots");
  if (poses.size() != static_cast<std::size_t>(header.robot_count) ||
      wrenches.size() != poses.size()) {
    throw ConfigError("dataset: stream count does not match robot count");
  }
  for (const auto& stream : poses) {
    if (stream.size() != n) throw ConfigError("dataset: pose stream length mismatch");
  }
  for (const auto& stream : wrenches) {
    if (stream.size() != n) throw ConfigError("dataset: wrench stream length mismatch");
  }
  for (std::size_t k = 1; k < n; ++k) {
    if (!(timestamps[k] > timestamps[k - 1])) {
      throw ConfigError("dataset: timestamps must be strictly increasing");
    }
  }
  for (const auto& stream : poses) {
    for (const QuatPose& qp : stream) {
      const double norm = std::sqrt(qp.q[0] * qp.q[0] + qp.q[1] * qp.q[1] +
                                    qp.q[2] * qp.q[2] + qp.q[3] * qp.q[3]);
      if (std::abs(norm - 1.0) > 1e-9) {
        throw ConfigError("dataset: quaternion norm deviates by more than 1e-9");
      }
    }
  }
}

Dataset from_simulation(const sim::GroundTruthDataset& ds) {
  Dataset out;
  out.header.robot_count = static_cast<int>(ds.robots.size());
  out.header.sample_rate = ds.scenario.sample_rate;
  out.header.scenario_hash = scenario_fingerprint(ds.scenario);
  out.header.gravity_w = ds.scenario.gravity;
  out.header.ground_truth = GroundTruthBlock::from(ds.scenario.payload);
  out.timestamps = ds.timestamps;
  for (const auto& r : ds.robots) {
    const Eigen::Quaterniond q = r.home_orientation_s0.quaternion();
    out.header.home_orientation_s0.push_back({q.w(), q.x(), q.y(), q.z()});
    std::vector<QuatPose> poses;
    poses.reserve(r.pose_raw.size());
    for (const Transform& t : r.pose_raw) poses.push_back(QuatPose::from(t));
    out.poses.push_back(std::move(poses));
    out.wrenches.push_back(r.wrench_raw);
  }
  out.validate();
  return out;
}

namespace {

void put_double(std::string& s, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  s += buf;
}

void put_vec3(std::string& s, const Vec3& v) {
  s += '[';
  put_double(s, v.x());
  s += ',';
  put_double(s, v.y());
  s += ',';
  put_double(s, v.z());
  s += ']';
}

void put_quat(std::string& s, const std::array<double, 4>& q) {
  s += '[';
  for (int i = 0; i < 4; ++i) {
    if (i) s += ',';
    put_double(s, q[i]);
  }
  s += ']';
}

Vec3 get_vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("dataset: bad 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::array<double, 4> get_quat(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ConfigError("dataset: bad quaternion");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
          j[3].get<double>()};
}

std::string gt_to_string(const GroundTruthBlock& gt) {
  std::string s = "{\"mass_kg\":";
  put_double(s, gt.mass);
  s += ",\"com\":{\"q\":";
  put_quat(s, gt.com_frame.q);
  s += ",\"p\":";
  put_vec3(s, gt.com_frame.p);
  s += "},\"principal_inertia\":";
  put_vec3(s, gt.principal_inertia);
  s += ",\"grasps\":[";
  for (std::size_t i = 0; i < gt.grasps.size(); ++i) {
    if (i) s += ',';
    s += "{\"q\":";
    put_quat(s, gt.grasps[i].q);
    s += ",\"p\":";
    put_vec3(s, gt.grasps[i].p);
    s += '}';
  }
  s += "]}";
  return s;
}

GroundTruthBlock gt_from_json(const json& j) {
  GroundTruthBlock gt;
  gt.mass = j.at("mass_kg").get<double>();
  gt.com_frame.q = get_quat(j.at("com").at("q"));
  gt.com_frame.p = get_vec3(j.at("com").at("p"));
  gt.principal_inertia = get_vec3(j.at("principal_inertia"));
  for (const json& g : j.at("grasps")) {
    QuatPose qp;
    qp.q = get_quat(g.at("q"));
    qp.p = get_vec3(g.at("p"));
    gt.grasps.push_back(qp);
  }
  return gt;
}

}  // namespace

void write_dataset(const Dataset& ds, std::ostream& out) {
  ds.validate();
  std::string line = "{\"schema\":\"copest.dataset/1\",\"robots\":";
  line += std::to_string(ds.header.robot_count);
  line += ",\"sample_rate\":";
  put_double(line, ds.header.sample_rate);
  line += ",\"scenario_hash\":\"" + ds.header.scenario_hash + "\"";
  line += ",\"gravity_w\":";
  put_vec3(line, ds.header.gravity_w);
  line += ",\"home_orientation_s0\":[";
  for (std::size_t i = 0; i < ds.header.home_orientation_s0.size(); ++i) {
    if (i) line += ',';
    put_quat(line, ds.header.home_orientation_s0[i]);
  }
  line += ']';
  if (ds.header.ground_truth) {
    line += ",\"ground_truth\":" + gt_to_string(*ds.header.ground_truth);
  }
  line += '}';
  out << line << '\n';

  const int robots = ds.header.robot_count;
  for (std::size_t k = 0; k < ds.timestamps.size(); ++k) {
    for (int i = 0; i < robots; ++i) {
      std::string rec = "{\"t\":";
      put_double(rec, ds.timestamps[k]);
      rec += ",\"robot\":" + std::to_string(i + 1);
      rec += ",\"q\":";
      put_quat(rec, ds.poses[i][k].q);
      rec += ",\"p\":";
      put_vec3(rec, ds.poses[i][k].p);
      rec += ",\"m\":";
      put_vec3(rec, ds.wrenches[i][k].moment);
      rec += ",\"f\":";
      put_vec3(rec, ds.wrenches[i][k].force);
      rec += '}';
      out << rec << '\n';
    }
  }

  if (ds.derived) {
    const DerivedBlock& d = *ds.derived;
    std::string marker = "{\"derived_block\":{\"cutoff_hz\":";
    put_double(marker, d.cutoff_hz);
    marker += ",\"filter_order\":" + std::to_string(d.filter_order);
    marker += ",\"trim_seconds\":";
    put_double(marker, d.trim_seconds);
    marker += ",\"start_index\":" + std::to_string(d.start_index);
    marker += "}}";
    out << marker << '\n';
    for (std::size_t k = 0; k < d.timestamps.size(); ++k) {
      for (int i = 0; i < robots; ++i) {
        std::string rec = "{\"t\":";
        put_double(rec, d.timestamps[k]);
        rec += ",\"robot\":" + std::to_string(i + 1);
        rec += ",\"w\":";
        put_vec3(rec, d.twist[i][k].angular);
        rec += ",\"v\":";
        put_vec3(rec, d.twist[i][k].linear);
        rec += ",\"dw\":";
        put_vec3(rec, d.rate[i][k].angular_accel);
        rec += ",\"dv\":";
        put_vec3(rec, d.rate[i][k].linear_accel);
        rec += ",\"fm\":";
        put_vec3(rec, d.wrench_filtered[i][k].moment);
        rec += ",\"ff\":";
        put_vec3(rec, d.wrench_filtered[i][k].force);
        rec += '}';
        out << rec << '\n';
      }
    }
  }
}

void write_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("write_dataset: cannot open " + path);
  write_dataset(ds, out);
  if (!out) throw ConfigError("write_dataset: write failed for " + path);
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("read_dataset: empty input");

  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("read_dataset: bad header: ") + e.what());
  }
  if (header.value("schema", "") != "copest.dataset/1") {
    throw ConfigError("read_dataset: unknown schema '" +
                      header.value("schema", "") + "'");
  }

  Dataset ds;
  ds.header.robot_count = header.at("robots").get<int>();
  ds.header.sample_rate = header.at("sample_rate").get<double>();
  ds.header.scenario_hash = header.value("scenario_hash", "");
  ds.header.gravity_w = get_vec3(header.at("gravity_w"));
  for (const json& q : header.at("home_orientation_s0")) {
    ds.header.home_orientation_s0.push_back(get_quat(q));
  }
  if (header.contains("ground_truth")) {
    ds.header.ground_truth = gt_from_json(header.at("ground_truth"));
  }

  const int robots = ds.header.robot_count;
  ds.poses.resize(robots);
  ds.wrenches.resize(robots);

  bool in_derived = false;
  DerivedBlock derived;
  int expected_robot = 1;
  double group_time = 0.0;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("read_dataset: bad record: ") + e.what());
    }

    if (rec.contains("derived_block")) {
      const json& d = rec.at("derived_block");
      derived.cutoff_hz = d.at("cutoff_hz").get<double>();
      derived.filter_order = d.at("filter_order").get<int>();
      derived.trim_seconds = d.at("trim_seconds").get<double>();
      derived.start_index = d.at("start_index").get<Eigen::Index>();
      derived.twist.resize(robots);
      derived.rate.resize(robots);
      derived.wrench_filtered.resize(robots);
      in_derived = true;
      expected_robot = 1;
      continue;
    }

    const int robot = rec.at("robot").get<int>();
    const double t = rec.at("t").get<double>();
    if (robot != expected_robot) {
      throw ConfigError("read_dataset: records not grouped by timestep "
                        "(expected robot " + std::to_string(expected_robot) +
                        ", got " + std::to_string(robot) + ")");
    }
    if (robot == 1) {
      group_time = t;
    } else if (t != group_time) {
      throw ConfigError("read_dataset: timestamps differ across robots at one "
                        "index (synchronous sampling violated)");
    }
    expected_robot = robot == robots ? 1 : robot + 1;

    if (!in_derived) {
      if (robot == 1) ds.timestamps.push_back(t);
      QuatPose qp;
      qp.q = get_quat(rec.at("q"));
      qp.p = get_vec3(rec.at("p"));
      ds.poses[robot - 1].push_back(qp);
      Wrench w;
      w.moment = get_vec3(rec.at("m"));
      w.force = get_vec3(rec.at("f"));
      ds.wrenches[robot - 1].push_back(w);
    } else {
      if (robot == 1) derived.timestamps.push_back(t);
      Twist tw;
      tw.angular = get_vec3(rec.at("w"));
      tw.linear = get_vec3(rec.at("v"));
      derived.twist[robot - 1].push_back(tw);
      TwistRate rate;
      rate.angular_accel = get_vec3(rec.at("dw"));
      rate.linear_accel = get_vec3(rec.at("dv"));
      derived.rate[robot - 1].push_back(rate);
      Wrench w;
      w.moment = get_vec3(rec.at("fm"));
      w.force = get_vec3(rec.at("ff"));
      derived.wrench_filtered[robot - 1].push_back(w);
    }
  }

  if (in_derived) ds.derived = std::move(derived);
  ds.validate();
  return ds;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("read_dataset: cannot open " + path);
  return read_dataset(in);
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string scenario_fingerprint(const sim::ScenarioConfig& cfg) {
  std::string s;
  put_double(s, cfg.payload.mass);
  put_vec3(s, cfg.payload.com_frame.translation);
  put_vec3(s, geom::rot_log(cfg.payload.com_frame.rotation));
  put_vec3(s, cfg.payload.principal_inertia);
  for (const Transform& g : cfg.payload.grasp_transforms) {
    put_vec3(s, g.translation);
    put_vec3(s, geom::rot_log(g.rotation));
  }
  put_vec3(s, cfg.gravity);
  put_double(s, cfg.sample_rate);
  put_double(s, cfg.noise.pose_position_sigma);
  put_double(s, cfg.noise.pose_rotation_sigma);
  put_double(s, cfg.noise.wrench_force_sigma);
  put_double(s, cfg.noise.wrench_moment_sigma);
  put_double(s, cfg.noise.encoder_quantization);
  put_double(s, cfg.noise.internal_force_amplitude);
  s += std::to_string(static_cast<int>(cfg.trajectory.kind));
  s += std::to_string(cfg.trajectory.via_count);
  put_double(s, cfg.trajectory.transit_time_range.first);
  put_double(s, cfg.trajectory.transit_time_range.second);
  put_double(s, cfg.trajectory.dwell_time_range.first);
  put_double(s, cfg.trajectory.dwell_time_range.second);
  put_double(s, cfg.trajectory.rotation_amplitude_deg);
  put_double(s, cfg.trajectory.translation_amplitude_m);
  for (const Rotation& r : cfg.trajectory.hold_orientations) {
    put_vec3(s, geom::rot_log(r));
  }
  put_double(s, cfg.trajectory.hold_duration_s);
  put_double(s, cfg.trajectory.periodic_duration_s);
  put_double(s, cfg.trajectory.periodic_base_frequency_hz);
  s += std::to_string(cfg.seed);
  s += cfg.force_only_wrenches ? "F" : "W";
  return fnv1a_hex(s);
}

}  // namespace copest::pipeline
