// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <map>
#include <vector>

#include "copest/geom.hpp"

namespace copest::kin {

/// Synchronized angular/linear velocity columns for one robot.
struct TwistBatch {
  Eigen::Matrix3Xd angular;  // rad/s
  Eigen::Matrix3Xd linear;   // m/s
  int robot = 0;
  std::vector<double> timestamps;

  Eigen::Index size() const { return angular.cols(); }
  void validate() const;
};

TwistBatch make_batch(int robot, const std::vector<double>& timestamps,
                      const std::vector<geom::Twist>& twists);

struct RotationDiagnostics {
  geom::Vec3 singular_values = geom::Vec3::Zero();  // of X = w_j w_i^T
  double frobenius_cost = 0.0;                      // |R w_j - w_i|_F^2
};

/// Wahba fit of R_ij from paired angular velocities (Kabsch-Umeyama SVD).
/// Throws InsufficientExcitation when the data spans fewer than 3 axes.
geom::Rotation estimate_rotation(const Eigen::Matrix3Xd& omega_i,
                                 const Eigen::Matrix3Xd& omega_j,
                                 RotationDiagnostics* diag = nullptr);

struct PositionDiagnostics {
  geom::Vec3 singular_values = geom::Vec3::Zero();  // of the stacked skew matrix
  double residual_norm = 0.0;
};

/// Linear least-squares fit of p_ij given R_ij, from the linear-velocity
/// relation v_i = -[R w_j] p + R v_j. Solved by orthogonal decomposition.
/// Throws InsufficientExcitation when all angular velocities are parallel
/// (the component of p along that axis is unobservable).
geom::Vec3 estimate_position(const geom::Rotation& r_hat,
                             const Eigen::Matrix3Xd& omega_j,
                             const Eigen::Matrix3Xd& v_i,
                             const Eigen::Matrix3Xd& v_j,
                             PositionDiagnostics* diag = nullptr);

struct PairwiseEstimate {
  int frame_i = 0;
  int frame_j = 0;
  geom::Rotation rotation;                      // R_ij
  geom::Vec3 translation = geom::Vec3::Zero();  // p_ij
  double rotation_residual = 0.0;
  double position_residual = 0.0;
  geom::Vec3 x_singular_values = geom::Vec3::Zero();
  geom::Vec3 stacked_singular_values = geom::Vec3::Zero();

  geom::Transform transform() const {
    return geom::Transform(rotation, translation);
  }
};

/// Rotation then position fit for one robot pair; batches must share
/// timestamps.
PairwiseEstimate estimate_pairwise(const TwistBatch& batch_i,
                                   const TwistBatch& batch_j);

/// Consistent set of frame poses relative to one reference frame.
struct GraspGraph {
  int reference = 1;
  std::map<int, geom::Transform> transforms;  // frame -> T_ref_frame

  int refine_iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool refine_failed = false;

  const geom::Transform& at(int frame) const;
  geom::Transform pair(int i, int j) const;  // T_ij
  std::vector<int> frames() const;
};

/// Composes pairwise estimates along a spanning tree rooted at `reference`.
/// Throws ConfigError listing unreachable frames when disconnected.
GraspGraph chain_estimates(const std::vector<PairwiseEstimate>& pairwise,
                           int reference);

struct RefineOptions {
  double w_pair = 1.0;
  double w_loop = -1.0;  // < 0: use the batch length Q
  double relative_tolerance = 1e-10;
  int max_iterations = 200;
  double gradient_step = 1e-6;
};

/// Quasi-Newton refinement over exponential-coordinate perturbations of
/// each non-reference frame. Cost: all ordered-pair twist residuals plus
/// all 3-cycle loop-closure residuals. Never increases the cost; on a
/// non-finite cost returns the input graph with refine_failed set.
GraspGraph refine_loop_closure(const GraspGraph& graph,
                               const std::vector<TwistBatch>& batches,
                               const RefineOptions& options = {});

/// The refinement objective, exposed for monotonicity checks.
double loop_closure_cost(const GraspGraph& graph,
                         const std::vector<TwistBatch>& batches,
                         const RefineOptions& options = {});

}  // namespace copest::kin
