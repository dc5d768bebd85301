// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "copest/geom.hpp"

namespace copest::pipeline {

struct RunConfig {
  double cutoff_hz = 5.0;  // 0 disables filtering
  int filter_order = 3;
  double trim_seconds = 2.0;
  double static_tolerance_n = 0.01;
  double static_duration_s = 6.0;
  double static_twist_tolerance = 0.05;
  bool loop_refinement = true;
  enum class PsdPolicy { kProject, kDiscard };
  PsdPolicy psd_policy = PsdPolicy::kProject;
  std::uint64_t seed = 0;
  int trials = 1;

  void validate() const;
};

struct StageStatus {
  bool attempted = false;
  bool succeeded = false;
  std::string message;
};

/// Errors of one estimated pair transform against ground truth.
struct PairRow {
  int frame_i = 0;
  int frame_j = 0;
  double rotation_error_deg = 0.0;
  double position_error_m = 0.0;
  double position_error_pct = 0.0;  // vs |p_true|
};

struct TrialReport {
  int trial = 0;
  std::uint64_t seed = 0;
  StageStatus kinematics, statics, inertia;

  std::vector<PairRow> pairs;

  double mass_estimate = 0.0;
  double mass_error_kg = 0.0;
  double mass_error_pct = 0.0;
  geom::Vec3 com_estimate = geom::Vec3::Zero();
  double com_error_m = 0.0;
  double com_error_pct = 0.0;
  geom::Vec3 moments_estimate = geom::Vec3::Zero();  // ascending
  geom::Vec3 moment_error_abs = geom::Vec3::Zero();
  geom::Vec3 moment_error_pct = geom::Vec3::Zero();

  // diagnostics
  double refine_initial_cost = 0.0;
  double refine_final_cost = 0.0;
  int refine_iterations = 0;
  double statics_residual = 0.0;
  int static_sample_count = 0;
  double inertia_residual = 0.0;
  double inertia_condition = 0.0;
  bool psd_projected = false;
};

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)
  int count = 0;
};

MetricStats stats(const std::vector<double>& values);

struct EstimationReport {
  std::string scenario_name;
  std::string protocol_name;
  std::string noise_name;
  RunConfig config;
  std::vector<TrialReport> trials;
};

/// Aggregates over trials whose relevant stage succeeded.
MetricStats rotation_stats(const EstimationReport& r, int frame_i, int frame_j);
MetricStats position_abs_stats(const EstimationReport& r, int frame_i, int frame_j);
MetricStats position_pct_stats(const EstimationReport& r, int frame_i, int frame_j);
MetricStats mass_abs_stats(const EstimationReport& r);
MetricStats mass_pct_stats(const EstimationReport& r);
MetricStats com_abs_stats(const EstimationReport& r);
MetricStats com_pct_stats(const EstimationReport& r);
MetricStats moment_abs_stats(const EstimationReport& r, int axis);
MetricStats moment_pct_stats(const EstimationReport& r, int axis);
std::vector<std::pair<int, int>> report_pairs(const EstimationReport& r);

std::string report_to_json(const EstimationReport& r);
EstimationReport report_from_json(const std::string& text);

/// Human-readable tables (means and standard deviations per parameter).
std::string render_human(const EstimationReport& r);

}  // namespace copest::pipeline
