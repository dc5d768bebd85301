// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#include "copest/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "copest/signal.hpp"

namespace copest::pipeline {

using geom::Mat4;
using geom::Rotation;
using geom::Transform;
using geom::Twist;
using geom::TwistRate;
using geom::Vec3;
using geom::Wrench;

namespace {

Eigen::VectorXd maybe_filter(const Eigen::VectorXd& x, double fs,
                             const RunConfig& cfg) {
  if (cfg.cutoff_hz <= 0.0) return x;
  return signal::butterworth_lowpass(x, fs, cfg.cutoff_hz, cfg.filter_order);
}

}  // namespace

Dataset preprocess(const Dataset& raw, const RunConfig& cfg) {
  cfg.validate();
  raw.validate();
  const auto n = static_cast<Eigen::Index>(raw.timestamps.size());
  if (n < 3) throw ConfigError("preprocess: dataset too short");
  const double fs = raw.header.sample_rate;
  const Eigen::Index n_trim = signal::trim_count(cfg.trim_seconds, fs, n);

  Dataset out = raw;
  DerivedBlock derived;
  derived.cutoff_hz = cfg.cutoff_hz;
  derived.filter_order = cfg.filter_order;
  derived.trim_seconds = cfg.trim_seconds;
  derived.start_index = n_trim;
  derived.timestamps.assign(raw.timestamps.begin() + n_trim,
                            raw.timestamps.end() - n_trim);

  for (int robot = 0; robot < raw.header.robot_count; ++robot) {
    // Pose channels: translation plus exponential-coordinate rotation,
    // re-centered on the window's midpoint rotation to stay off the log
    // branch cut.
    std::vector<Transform> pose(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      pose[k] = raw.poses[robot][k].transform();
    }
    const Rotation center = pose[n / 2].rotation;
    const Rotation center_inv = center.inverse();

    Eigen::MatrixXd chan(6, n);  // wx wy wz px py pz
    for (Eigen::Index k = 0; k < n; ++k) {
      chan.col(k).head<3>() = geom::rot_log(center_inv * pose[k].rotation);
      chan.col(k).tail<3>() = pose[k].translation;
    }
    for (int c = 0; c < 6; ++c) {
      chan.row(c) = maybe_filter(chan.row(c).transpose(), fs, cfg).transpose();
    }

    std::vector<Mat4> pose_mat(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      Transform t(center * geom::rot_exp(chan.col(k).head<3>()),
                  chan.col(k).tail<3>());
      pose_mat[k] = t.matrix();
      pose[k] = std::move(t);
    }

    // twist from central-differenced poses
    std::vector<Twist> twist(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      Mat4 tdot;
      if (k == 0) {
        tdot = (pose_mat[1] - pose_mat[0]) * fs;
      } else if (k == n - 1) {
        tdot = (pose_mat[n - 1] - pose_mat[n - 2]) * fs;
      } else {
        tdot = (pose_mat[k + 1] - pose_mat[k - 1]) * (fs / 2.0);
      }
      twist[k] = geom::twist_from_pose_derivative(pose[k], tdot);
    }

    // twist rate from central-differenced twists
    Eigen::MatrixXd twist_chan(6, n);
    for (Eigen::Index k = 0; k < n; ++k) twist_chan.col(k) = twist[k].vec();
    Eigen::MatrixXd rate_chan(6, n);
    for (int c = 0; c < 6; ++c) {
      rate_chan.row(c) =
          signal::central_difference(twist_chan.row(c).transpose(), fs).transpose();
    }

    // wrench channels get the same low-pass treatment
    Eigen::MatrixXd wrench_chan(6, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      wrench_chan.col(k) = raw.wrenches[robot][k].vec();
    }
    for (int c = 0; c < 6; ++c) {
      wrench_chan.row(c) = maybe_filter(wrench_chan.row(c).transpose(), fs, cfg)
                               .transpose();
    }

    std::vector<Twist> twist_out;
    std::vector<TwistRate> rate_out;
    std::vector<Wrench> wrench_out;
    twist_out.reserve(n - 2 * n_trim);
    for (Eigen::Index k = n_trim; k < n - n_trim; ++k) {
      Twist tw = twist[k];
      tw.frame = std::to_string(robot + 1);
      twist_out.push_back(std::move(tw));
      TwistRate tr = TwistRate::from_vec(rate_chan.col(k), std::to_string(robot + 1));
      rate_out.push_back(std::move(tr));
      wrench_out.push_back(
          Wrench::from_vec(wrench_chan.col(k), std::to_string(robot + 1)));
    }
    derived.twist.push_back(std::move(twist_out));
    derived.rate.push_back(std::move(rate_out));
    derived.wrench_filtered.push_back(std::move(wrench_out));
  }

  out.derived = std::move(derived);
  return out;
}

namespace {

const DerivedBlock& require_derived(const Dataset& ds, const char* stage) {
  if (!ds.derived) {
    throw ConfigError(std::string(stage) +
                      ": dataset has no derived block; run preprocess first");
  }
  return *ds.derived;
}

}  // namespace

KinStageResult run_kinematics(const Dataset& ds, const RunConfig& cfg) {
  const DerivedBlock& d = require_derived(ds, "kinematics");
  const int robots = ds.header.robot_count;
  if (robots < 2) throw ConfigError("kinematics: need at least two robots");

  std::vector<kin::TwistBatch> batches;
  for (int i = 0; i < robots; ++i) {
    batches.push_back(kin::make_batch(i + 1, d.timestamps, d.twist[i]));
  }

  KinStageResult out;
  for (int i = 0; i < robots; ++i) {
    for (int j = i + 1; j < robots; ++j) {
      out.pairwise.push_back(kin::estimate_pairwise(batches[i], batches[j]));
    }
  }
  out.graph = kin::chain_estimates(out.pairwise, 1);
  if (cfg.loop_refinement) {
    out.graph = kin::refine_loop_closure(out.graph, batches);
  } else {
    out.graph.initial_cost = out.graph.final_cost =
        kin::loop_closure_cost(out.graph, batches);
  }
  return out;
}

StaticsStageResult run_statics(const Dataset& ds, const kin::GraspGraph& graph,
                               const RunConfig& cfg) {
  const DerivedBlock& d = require_derived(ds, "statics");
  const int robots = ds.header.robot_count;

  std::vector<statics::RobotStaticStreams> streams(robots);
  const std::size_t len = d.timestamps.size();
  for (int i = 0; i < robots; ++i) {
    auto& s = streams[i];
    s.wrench = d.wrench_filtered[i];
    s.twist = d.twist[i];
    s.pose.reserve(len);
    for (std::size_t k = 0; k < len; ++k) {
      s.pose.push_back(
          ds.poses[i][static_cast<std::size_t>(d.start_index) + k].transform());
    }
    const auto& q = ds.header.home_orientation_s0.at(i);
    s.home_orientation_s0 =
        Rotation::from_quaternion(Eigen::Quaterniond(q[0], q[1], q[2], q[3]));
  }

  const auto samples = statics::detect_static_windows(
      streams, d.timestamps, cfg.static_tolerance_n, cfg.static_duration_s,
      cfg.static_twist_tolerance);
  if (samples.empty()) {
    throw ConfigError("statics: no static windows detected");
  }

  StaticsStageResult out;
  out.sample_count = static_cast<int>(samples.size());
  out.mass = statics::estimate_mass(samples, ds.header.gravity_w);
  if (!out.mass.valid) {
    throw ConfigError("statics: non-positive mass estimate");
  }
  out.com = statics::estimate_com(samples, out.mass.mass, graph,
                                  ds.header.gravity_w);
  return out;
}

InertiaStageResult run_inertia(const Dataset& ds, const kin::GraspGraph& graph,
                               const Vec3& p_sc, const RunConfig& cfg) {
  const DerivedBlock& d = require_derived(ds, "inertia");
  const int robots = ds.header.robot_count;

  // Angular state of {b} (at the estimated CoM, axes of {s}) comes from
  // robot 1's twists mapped through the adjoint of T_b1.
  const Transform t_1b(Rotation::identity(), p_sc);
  const Transform t_b1 = t_1b.inverse() * graph.at(1);

  const std::size_t len = d.timestamps.size();
  std::vector<inertia::DynamicSample> samples(len);
  std::vector<Wrench> wrenches(robots);
  for (std::size_t k = 0; k < len; ++k) {
    const Twist v_b = geom::transform_twist(t_b1, d.twist[0][k]);
    const TwistRate a_b = geom::transform_twist_rate(t_b1, d.rate[0][k]);
    samples[k].omega_b = v_b.angular;
    samples[k].alpha_b = a_b.angular_accel;
    for (int i = 0; i < robots; ++i) wrenches[i] = d.wrench_filtered[i][k];
    samples[k].moment_b = inertia::moment_rhs(wrenches, graph, p_sc);
  }

  InertiaStageResult out;
  out.estimate = inertia::estimate_inertia(samples);

  const inertia::PsdResult psd = inertia::psd_project(out.estimate.inertia_b);
  if (psd.projected && cfg.psd_policy == RunConfig::PsdPolicy::kDiscard) {
    throw ConfigError("inertia: estimate has a negative eigenvalue of "
                      "magnitude " + std::to_string(psd.negative_magnitude) +
                      " and the policy is to discard");
  }
  out.principal = inertia::principal_axes(psd.matrix);
  out.principal.psd_projected = psd.projected;
  out.principal.negative_eigenvalue_magnitude = psd.negative_magnitude;
  return out;
}

namespace {

void fill_errors(TrialReport& trial, const GroundTruthBlock& gt,
                 const kin::GraspGraph* graph, const StaticsStageResult* statics,
                 const InertiaStageResult* inertia_result) {
  const sim::PayloadModel payload = gt.payload();
  const int robots = payload.robot_count();

  if (graph) {
    for (int i = 0; i < robots; ++i) {
      const int j = (i + 1) % robots;
      const Transform truth =
          payload.grasp_transforms[i].inverse() * payload.grasp_transforms[j];
      const Transform est = graph->pair(i + 1, j + 1);
      PairRow row;
      row.frame_i = i + 1;
      row.frame_j = j + 1;
      row.rotation_error_deg =
          geom::rotation_error_deg(truth.rotation, est.rotation);
      row.position_error_m = (est.translation - truth.translation).norm();
      row.position_error_pct =
          100.0 * row.position_error_m / truth.translation.norm();
      trial.pairs.push_back(row);
    }
  }
  if (statics) {
    trial.mass_error_kg = std::abs(statics->mass.mass - payload.mass);
    trial.mass_error_pct = 100.0 * trial.mass_error_kg / payload.mass;
    const Vec3 com_truth = payload.com_frame.translation;
    trial.com_error_m = (statics->com.p_sc - com_truth).norm();
    trial.com_error_pct = 100.0 * trial.com_error_m / com_truth.norm();
  }
  if (inertia_result) {
    const Vec3 truth = payload.principal_inertia;  // ascending by convention
    for (int axis = 0; axis < 3; ++axis) {
      trial.moment_error_abs[axis] =
          std::abs(inertia_result->principal.moments[axis] - truth[axis]);
      trial.moment_error_pct[axis] =
          100.0 * trial.moment_error_abs[axis] / truth[axis];
    }
  }
}

}  // namespace

TrialReport run_trial(const PhaseDatasets& raw, const RunConfig& cfg) {
  TrialReport trial;
  trial.seed = cfg.seed;

  std::optional<KinStageResult> kin_result;
  std::optional<StaticsStageResult> statics_result;
  std::optional<InertiaStageResult> inertia_result;

  trial.kinematics.attempted = true;
  try {
    const Dataset pre = preprocess(raw.kinematics, cfg);
    kin_result = run_kinematics(pre, cfg);
    trial.kinematics.succeeded = true;
    trial.refine_initial_cost = kin_result->graph.initial_cost;
    trial.refine_final_cost = kin_result->graph.final_cost;
    trial.refine_iterations = kin_result->graph.refine_iterations;
  } catch (const std::exception& e) {
    trial.kinematics.message = std::string("kinematics: ") + e.what();
  }

  trial.statics.attempted = true;
  if (kin_result) {
    try {
      const Dataset pre = preprocess(raw.statics, cfg);
      statics_result = run_statics(pre, kin_result->graph, cfg);
      trial.statics.succeeded = true;
      trial.mass_estimate = statics_result->mass.mass;
      trial.com_estimate = statics_result->com.p_sc;
      trial.statics_residual = statics_result->com.residual_norm;
      trial.static_sample_count = statics_result->sample_count;
    } catch (const std::exception& e) {
      trial.statics.message = std::string("statics: ") + e.what();
    }
  } else {
    trial.statics.message = "statics: skipped (kinematics failed)";
  }

  trial.inertia.attempted = true;
  if (kin_result && statics_result) {
    try {
      const Dataset pre = preprocess(raw.inertia, cfg);
      inertia_result =
          run_inertia(pre, kin_result->graph, statics_result->com.p_sc, cfg);
      trial.inertia.succeeded = true;
      trial.moments_estimate = inertia_result->principal.moments;
      trial.inertia_residual = inertia_result->estimate.residual_norm;
      trial.inertia_condition = inertia_result->estimate.singular_values(0) /
                                inertia_result->estimate.singular_values(5);
      trial.psd_projected = inertia_result->principal.psd_projected;
    } catch (const std::exception& e) {
      trial.inertia.message = std::string("inertia: ") + e.what();
    }
  } else {
    trial.inertia.message = "inertia: skipped (upstream stage failed)";
  }

  if (raw.kinematics.header.ground_truth) {
    fill_errors(trial, *raw.kinematics.header.ground_truth,
                kin_result ? &kin_result->graph : nullptr,
                statics_result ? &*statics_result : nullptr,
                inertia_result ? &*inertia_result : nullptr);
  }
  return trial;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial,
                          std::uint64_t phase) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(base ^ mix(trial + 1) ^ mix((phase + 1) << 20));
}

PhaseDatasets synthesize_trial(const presets::Scenario& scenario,
                               const presets::Protocol& protocol,
                               const sim::NoiseConfig& noise,
                               std::uint64_t run_seed, int trial_index) {
  PhaseDatasets out;
  const auto t = static_cast<std::uint64_t>(trial_index);

  sim::ScenarioConfig kin_cfg = presets::phase_scenario(
      scenario, protocol, presets::Phase::kKinematics, noise,
      derive_seed(run_seed, t, 0));
  out.kinematics = from_simulation(sim::synthesize_dataset(kin_cfg));

  sim::ScenarioConfig statics_cfg = presets::phase_scenario(
      scenario, protocol, presets::Phase::kStatics, noise,
      derive_seed(run_seed, t, 1));
  out.statics = from_simulation(sim::synthesize_dataset(statics_cfg));

  sim::ScenarioConfig inertia_cfg = presets::phase_scenario(
      scenario, protocol, presets::Phase::kInertia, noise,
      derive_seed(run_seed, t, 2));
  out.inertia = from_simulation(sim::synthesize_dataset(inertia_cfg));
  return out;
}

EstimationReport run_full_pipeline(const presets::Scenario& scenario,
                                   const presets::Protocol& protocol,
                                   const sim::NoiseConfig& noise,
                                   const RunConfig& cfg,
                                   const std::string& protocol_name,
                                   const std::string& noise_name) {
  cfg.validate();
  EstimationReport report;
  report.scenario_name = scenario.name;
  report.protocol_name = protocol_name;
  report.noise_name = noise_name;
  report.config = cfg;

  for (int t = 0; t < cfg.trials; ++t) {
    const PhaseDatasets phases =
        synthesize_trial(scenario, protocol, noise, cfg.seed, t);
    RunConfig trial_cfg = cfg;
    trial_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(t), 99);
    TrialReport trial = run_trial(phases, trial_cfg);
    trial.trial = t;
    report.trials.push_back(std::move(trial));
  }
  return report;
}

}  // namespace copest::pipeline
