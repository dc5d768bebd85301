// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#include "copest/inertia_est.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace copest::inertia {

using geom::Mat3;
using geom::Rotation;
using geom::Vec3;

Mat3 to_matrix(const InertiaVector& v) {
  Mat3 m;
  // clang-format off
  m << v[0], v[1], v[2],
       v[1], v[3], v[4],
       v[2], v[4], v[5];
  // clang-format on
  return m;
}

InertiaVector to_vector(const Mat3& s) {
  InertiaVector v;
  v << s(0, 0), s(0, 1), s(0, 2), s(1, 1), s(1, 2), s(2, 2);
  return v;
}

Eigen::Matrix<double, 3, 6> build_regressor_row(const Vec3& alpha_b,
                                                const Vec3& omega_b) {
  const double ax = alpha_b.x(), ay = alpha_b.y(), az = alpha_b.z();
  const double wx = omega_b.x(), wy = omega_b.y(), wz = omega_b.z();

  Eigen::Matrix<double, 3, 6> a;
  // clang-format off
  a << ax, ay, az,  0,  0,  0,
        0, ax,  0, ay, az,  0,
        0,  0, ax,  0, ay, az;
  // clang-format on

  Eigen::Matrix<double, 3, 6> b;
  // clang-format off
  b <<        0.0, -wx * wz,           wx * wy,  -wy * wz, -wz * wz + wy * wy,  wy * wz,
          wx * wz,  wy * wz, wz * wz - wx * wx,       0.0,           -wx * wy, -wx * wz,
         -wx * wy, -wy * wy + wx * wx, -wy * wz,  wx * wy,            wx * wz,      0.0;
  // clang-format on
  return a + b;
}

Vec3 moment_rhs(const std::vector<geom::Wrench>& wrenches,
                const kin::GraspGraph& graph, const Vec3& p_sc) {
  Vec3 y = Vec3::Zero();
  for (std::size_t i = 0; i < wrenches.size(); ++i) {
    const geom::Transform& t_si = graph.at(static_cast<int>(i) + 1);
    const Vec3 p_bi = t_si.translation - p_sc;
    const Vec3 rotated_force = t_si.rotation * wrenches[i].force;
    y += p_bi.cross(rotated_force) + t_si.rotation * wrenches[i].moment;
  }
  return y;
}

InertiaEstimate estimate_inertia(const std::vector<DynamicSample>& samples) {
  if (samples.size() < 2) {
    throw ConfigError("estimate_inertia: need at least 2 samples");
  }
  const auto q = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd x(3 * q, 6);
  Eigen::VectorXd y(3 * q);
  for (Eigen::Index k = 0; k < q; ++k) {
    const DynamicSample& s = samples[static_cast<std::size_t>(k)];
    x.middleRows<3>(3 * k) = build_regressor_row(s.alpha_b, s.omega_b);
    y.segment<3>(3 * k) = s.moment_b;
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::Matrix<double, 6, 1> sv = svd.singularValues();
  if (sv(5) <= 1e-8 * sv(0)) {
    std::vector<Eigen::VectorXd> dirs;
    for (int k = 5; k >= 0; --k) {
      if (sv(k) <= 1e-8 * sv(0)) dirs.push_back(svd.matrixV().col(k));
    }
    throw InsufficientExcitation(
        "estimate_inertia: rotational excitation spans fewer than three "
        "independent axes; null-space directions of the regressor attached "
        "(coordinates Ixx, Ixy, Ixz, Iyy, Iyz, Izz)",
        std::move(dirs));
  }

  const InertiaVector reg = svd.solve(y);
  InertiaEstimate out;
  out.inertia_b = to_matrix(reg);
  out.residual_norm = (x * reg - y).norm();
  out.singular_values = sv;
  return out;
}

PsdResult psd_project(const Mat3& symmetric) {
  Eigen::SelfAdjointEigenSolver<Mat3> eig(symmetric);
  const Vec3 values = eig.eigenvalues();
  PsdResult out;
  if (values(0) >= 0.0) {
    out.matrix = symmetric;
    return out;
  }
  Vec3 clamped = values.cwiseMax(0.0);
  out.matrix = eig.eigenvectors() * clamped.asDiagonal() *
               eig.eigenvectors().transpose();
  out.projected = true;
  out.negative_magnitude = -values(0);
  return out;
}

PrincipalInertia principal_axes(const Mat3& inertia_b) {
  Eigen::SelfAdjointEigenSolver<Mat3> eig(inertia_b);
  Vec3 moments = eig.eigenvalues();  // ascending
  Mat3 axes = eig.eigenvectors();

  PrincipalInertia out;
  const double scale = std::max(1.0, moments.cwiseAbs().maxCoeff());

  // Repeated moments leave the eigenvectors free inside the eigenspace;
  // align each degenerate block with the nearest identity axes so the
  // output is deterministic.
  int lo = 0;
  while (lo < 3) {
    int hi = lo + 1;
    while (hi < 3 && std::abs(moments(hi) - moments(hi - 1)) < 1e-6 * scale) ++hi;
    const int dim = hi - lo;
    if (dim > 1) {
      out.degenerate = true;
      const Eigen::MatrixXd block = axes.middleCols(lo, dim);
      Eigen::MatrixXd target = Eigen::MatrixXd::Zero(3, dim);
      for (int k = 0; k < dim; ++k) target(lo + k, k) = 1.0;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(block.transpose() * target,
                                            Eigen::ComputeFullU | Eigen::ComputeFullV);
      axes.middleCols(lo, dim) =
          block * (svd.matrixU() * svd.matrixV().transpose());
    }
    lo = hi;
  }

  // Deterministic signs: dominant entry of each axis positive, then det +1.
  for (int c = 0; c < 3; ++c) {
    int idx = 0;
    axes.col(c).cwiseAbs().maxCoeff(&idx);
    if (axes(idx, c) < 0.0) axes.col(c) = -axes.col(c);
  }
  if (axes.determinant() < 0.0) axes.col(2) = -axes.col(2);

  out.r_bc = Rotation::project(axes);
  out.moments = moments;
  return out;
}

}  // namespace copest::inertia
