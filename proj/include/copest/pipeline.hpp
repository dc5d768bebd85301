// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "copest/dataset.hpp"
#include "copest/inertia_est.hpp"
#include "copest/kin_est.hpp"
#include "copest/presets.hpp"
#include "copest/report.hpp"
#include "copest/statics_est.hpp"

namespace copest::pipeline {

/// Filters pose/wrench channels (exponential-coordinate rotation channels
/// re-centered to avoid wraparound), derives twists from central-differenced
/// poses and twist rates from central-differenced twists, trims the edges,
/// and appends the derived block.
Dataset preprocess(const Dataset& raw, const RunConfig& config);

struct KinStageResult {
  kin::GraspGraph graph;
  std::vector<kin::PairwiseEstimate> pairwise;
};

/// Pairwise estimates over all robot pairs, chained from frame 1, optionally
/// refined. Consumes only the derived twist streams.
KinStageResult run_kinematics(const Dataset& preprocessed, const RunConfig& config);

struct StaticsStageResult {
  statics::MassEstimate mass;
  statics::ComEstimate com;
  int sample_count = 0;
};

StaticsStageResult run_statics(const Dataset& preprocessed,
                               const kin::GraspGraph& graph,
                               const RunConfig& config);

struct InertiaStageResult {
  inertia::InertiaEstimate estimate;
  inertia::PrincipalInertia principal;
};

InertiaStageResult run_inertia(const Dataset& preprocessed,
                               const kin::GraspGraph& graph,
                               const geom::Vec3& p_sc, const RunConfig& config);

struct PhaseDatasets {
  Dataset kinematics;
  Dataset statics;
  Dataset inertia;
};

/// Preprocess + kinematics -> statics -> inertia over one trial's phase
/// datasets. Stage failures are recorded in the report rather than thrown;
/// error metrics are computed against the ground-truth block when present.
TrialReport run_trial(const PhaseDatasets& raw, const RunConfig& config);

/// Simulate `config.trials` sessions of the scenario under the protocol and
/// the given measurement noise, run every trial, and collect the report.
EstimationReport run_full_pipeline(const presets::Scenario& scenario,
                                   const presets::Protocol& protocol,
                                   const sim::NoiseConfig& noise,
                                   const RunConfig& config,
                                   const std::string& protocol_name,
                                   const std::string& noise_name);

/// Phase datasets for one trial, exposed so callers can persist them.
PhaseDatasets synthesize_trial(const presets::Scenario& scenario,
                               const presets::Protocol& protocol,
                               const sim::NoiseConfig& noise,
                               std::uint64_t run_seed, int trial_index);

/// Deterministic per-trial, per-phase seed derivation.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial,
                          std::uint64_t phase);

}  // namespace copest::pipeline
