// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "copest/geom.hpp"
#include "copest/sim.hpp"

namespace copest::pipeline {

/// Pose as serialized: unit quaternion (w, x, y, z) plus translation.
/// Stored verbatim so a written file parses back bit-identically.
struct QuatPose {
  std::array<double, 4> q{1.0, 0.0, 0.0, 0.0};
  geom::Vec3 p = geom::Vec3::Zero();

  geom::Transform transform() const;
  static QuatPose from(const geom::Transform& t);
};

struct GroundTruthBlock {
  double mass = 0.0;
  QuatPose com_frame;
  geom::Vec3 principal_inertia = geom::Vec3::Zero();
  std::vector<QuatPose> grasps;

  sim::PayloadModel payload() const;
  static GroundTruthBlock from(const sim::PayloadModel& payload);
};

struct DatasetHeader {
  int schema_version = 1;
  int robot_count = 0;
  double sample_rate = 0.0;
  std::string scenario_hash;
  geom::Vec3 gravity_w{0.0, 0.0, -9.81};
  std::vector<std::array<double, 4>> home_orientation_s0;  // per robot
  std::optional<GroundTruthBlock> ground_truth;
};

/// Preprocessor output: twists, twist rates, and filtered wrenches on the
/// trimmed timeline.
struct DerivedBlock {
  double cutoff_hz = 0.0;  // 0 = filtering was disabled
  int filter_order = 3;
  double trim_seconds = 0.0;
  Eigen::Index start_index = 0;  // offset of the trimmed window in the raw streams
  std::vector<double> timestamps;
  std::vector<std::vector<geom::Twist>> twist;            // [robot][k]
  std::vector<std::vector<geom::TwistRate>> rate;         // [robot][k]
  std::vector<std::vector<geom::Wrench>> wrench_filtered; // [robot][k]
};

struct Dataset {
  DatasetHeader header;
  std::vector<double> timestamps;
  std::vector<std::vector<QuatPose>> poses;      // [robot][k]
  std::vector<std::vector<geom::Wrench>> wrenches;  // [robot][k]
  std::optional<DerivedBlock> derived;

  void validate() const;
};

/// Raw measurement streams plus ground truth from a synthesized dataset.
Dataset from_simulation(const sim::GroundTruthDataset& ds);

/// Line-delimited text format: one JSON header line, then one record per
/// robot per timestep (grouped by timestep), then an optional derived block.
/// Doubles are serialized with 17 significant digits (bit-exact round trip).
void write_dataset(const Dataset& ds, std::ostream& out);
void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::string& path);

/// FNV-1a hash used for the header's scenario fingerprint.
std::string fnv1a_hex(const std::string& text);
std::string scenario_fingerprint(const sim::ScenarioConfig& cfg);

}  // namespace copest::pipeline
