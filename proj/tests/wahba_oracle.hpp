// Test-only brute-force Wahba solver: Davenport's q-method (quaternion
// eigenvector), independent of the library's SVD route.
#pragma once

#include <Eigen/Dense>

#include "copest/geom.hpp"

namespace copest::testing {

/// Returns the rotation maximizing sum_q w_i[q]^T R w_j[q] via the largest
/// eigenvector of Davenport's K matrix.
inline geom::Rotation davenport_wahba(const Eigen::Matrix3Xd& omega_i,
                                      const Eigen::Matrix3Xd& omega_j) {
  const Eigen::Matrix3d b = omega_i * omega_j.transpose();
  const double sigma = b.trace();
  const Eigen::Vector3d z(b(1, 2) - b(2, 1), b(2, 0) - b(0, 2),
                          b(0, 1) - b(1, 0));

  Eigen::Matrix4d k;
  k(0, 0) = sigma;
  k.block<1, 3>(0, 1) = z.transpose();
  k.block<3, 1>(1, 0) = z;
  k.block<3, 3>(1, 1) =
      b + b.transpose() - sigma * Eigen::Matrix3d::Identity();

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(k);
  const Eigen::Vector4d q = eig.eigenvectors().col(3);  // largest eigenvalue
  // Davenport's eigenvector is the conjugate of the quaternion that Eigen's
  // Hamilton convention maps to R with w_i = R w_j.
  const Eigen::Quaterniond quat(q(0), -q(1), -q(2), -q(3));
  return geom::Rotation::from_quaternion(quat);
}

}  // namespace copest::testing
