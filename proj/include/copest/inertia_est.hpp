// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "copest/geom.hpp"
#include "copest/kin_est.hpp"

namespace copest::inertia {

/// Unique elements (Ixx, Ixy, Ixz, Iyy, Iyz, Izz).
using InertiaVector = Eigen::Matrix<double, 6, 1>;

geom::Mat3 to_matrix(const InertiaVector& v);
InertiaVector to_vector(const geom::Mat3& symmetric);

/// Regressor block A_q + B_q with (A_q + B_q) vec(I) = I alpha + w x I w.
Eigen::Matrix<double, 3, 6> build_regressor_row(const geom::Vec3& alpha_b,
                                                const geom::Vec3& omega_b);

/// Net applied moment about the center of mass, expressed in {b} ({b} sits
/// at p_sc with the axes of {s}); gravity contributes no moment about the
/// CoM and is correctly absent.
geom::Vec3 moment_rhs(const std::vector<geom::Wrench>& wrenches,
                      const kin::GraspGraph& graph, const geom::Vec3& p_sc);

struct DynamicSample {
  geom::Vec3 omega_b = geom::Vec3::Zero();
  geom::Vec3 alpha_b = geom::Vec3::Zero();
  geom::Vec3 moment_b = geom::Vec3::Zero();  // y_q
};

struct InertiaEstimate {
  geom::Mat3 inertia_b = geom::Mat3::Zero();
  double residual_norm = 0.0;
  Eigen::Matrix<double, 6, 1> singular_values;
};

/// Stacked least squares X I_reg = y over all samples (orthogonal
/// decomposition). Throws InsufficientExcitation listing the regressor's
/// null-space directions when rotational excitation spans fewer than three
/// independent axes.
InertiaEstimate estimate_inertia(const std::vector<DynamicSample>& samples);

struct PsdResult {
  geom::Mat3 matrix = geom::Mat3::Zero();
  bool projected = false;
  double negative_magnitude = 0.0;
};

/// Clamps negative eigenvalues to zero (Frobenius-nearest PSD matrix);
/// PSD inputs pass through unchanged.
PsdResult psd_project(const geom::Mat3& symmetric);

struct PrincipalInertia {
  geom::Rotation r_bc;
  geom::Vec3 moments = geom::Vec3::Zero();  // ascending
  bool psd_projected = false;
  double negative_eigenvalue_magnitude = 0.0;
  bool degenerate = false;  // eigenvalue gap below 1e-6 relative
};

/// Eigenvectors ordered by ascending moment, sign-normalized, det +1.
/// Repeated eigenvalues: the eigenspace basis closest to the identity axes
/// is chosen (deterministic) and the degenerate flag raised.
PrincipalInertia principal_axes(const geom::Mat3& inertia_b);

}  // namespace copest::inertia
