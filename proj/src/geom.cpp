// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#include "copest/geom.hpp"

#include <cmath>

namespace copest::geom {

namespace {

void check_frames(const std::string& a, const std::string& b,
                  const char* what) {
  if (!a.empty() && !b.empty() && a != b) {
    throw FrameMismatch(std::string(what) + ": frame tag '" + b +
                        "' does not match expected '" + a + "'");
  }
}


}  // namespace

Mat3 skew(const Vec3& v) {
  Mat3 s;
  // clang-format off
  s <<    0.0, -v.z(),  v.y(),
        v.z(),    0.0, -v.x(),
       -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

Vec3 unskew(const Mat3& s) { return {s(2, 1), s(0, 2), s(1, 0)}; }

Rotation Rotation::from_matrix(const Mat3& m, double tol) {
  const double orth = (m * m.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = m.determinant();
  if (orth > tol || std::abs(det - 1.0) > tol) {
    throw Error("Rotation::from_matrix: matrix is not a proper rotation "
                "(orthonormality residual " +
                std::to_string(orth) + ", det " + std::to_string(det) + ")");
  }
  return Rotation(m, Trusted{});
}

Rotation Rotation::project(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return Rotation(u * d * v.transpose(), Trusted{});
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  return Rotation(q.normalized().toRotationMatrix(), Trusted{});
}

Rotation Rotation::about_x(double rad) {
  return rot_exp(Vec3(rad, 0.0, 0.0));
}
Rotation Rotation::about_y(double rad) {
  return rot_exp(Vec3(0.0, rad, 0.0));
}
Rotation Rotation::about_z(double rad) {
  return rot_exp(Vec3(0.0, 0.0, rad));
}

Eigen::Quaterniond Rotation::quaternion() const {
  Eigen::Quaterniond q(m_);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

Mat4 Transform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.block<3, 3>(0, 0) = rotation.matrix();
  m.block<3, 1>(0, 3) = translation;
  return m;
}

Transform Transform::from_matrix(const Mat4& m, double tol) {
  Transform t(Rotation::from_matrix(m.block<3, 3>(0, 0), tol),
              m.block<3, 1>(0, 3));
  return t;
}

Transform Transform::inverse() const {
  Transform t(rotation.inverse(), -(rotation.inverse() * translation));
  t.to_frame = from_frame;
  t.from_frame = to_frame;
  return t;
}

Transform Transform::operator*(const Transform& o) const {
  check_frames(from_frame, o.to_frame, "Transform composition");
  Transform t(rotation * o.rotation,
              rotation * o.translation + translation);
  t.to_frame = to_frame;
  t.from_frame = o.from_frame;
  return t;
}

Mat6 adjoint(const Transform& t) {
  Mat6 a = Mat6::Zero();
  const Mat3& r = t.rotation.matrix();
  a.block<3, 3>(0, 0) = r;
  a.block<3, 3>(3, 3) = r;
  a.block<3, 3>(3, 0) = skew(t.translation) * r;
  return a;
}

Mat6 ad(const Vec6& twist) {
  Mat6 a = Mat6::Zero();
  const Mat3 w = skew(twist.head<3>());
  a.block<3, 3>(0, 0) = w;
  a.block<3, 3>(3, 3) = w;
  a.block<3, 3>(3, 0) = skew(twist.tail<3>());
  return a;
}

Twist transform_twist(const Transform& t_ij, const Twist& v_j) {
  check_frames(t_ij.from_frame, v_j.frame, "transform_twist");
  const Mat3& r = t_ij.rotation.matrix();
  Twist v_i;
  v_i.angular = r * v_j.angular;
  v_i.linear = skew(t_ij.translation) * (r * v_j.angular) + r * v_j.linear;
  v_i.frame = t_ij.to_frame;
  return v_i;
}

TwistRate transform_twist_rate(const Transform& t_ij, const TwistRate& a_j) {
  check_frames(t_ij.from_frame, a_j.frame, "transform_twist_rate");
  Twist as_twist{a_j.angular_accel, a_j.linear_accel, {}};
  Twist out = transform_twist(Transform(t_ij.rotation, t_ij.translation), as_twist);
  return {out.angular, out.linear, t_ij.to_frame};
}

Wrench transform_wrench(const Transform& t_ij, const Wrench& f_j) {
  check_frames(t_ij.from_frame, f_j.frame, "transform_wrench");
  const Mat3& r = t_ij.rotation.matrix();
  Wrench f_i;
  f_i.force = r * f_j.force;
  f_i.moment = r * f_j.moment + skew(t_ij.translation) * (r * f_j.force);
  f_i.frame = t_ij.to_frame;
  return f_i;
}

Vec3 rot_log(const Rotation& rot, LogBranch* branch, double pi_tol) {
  const Mat3& r = rot.matrix();
  const Vec3 sin_axis = unskew(r - r.transpose()) * 0.5;  // sin(theta) * axis
  const double s = sin_axis.norm();
  const double c = (r.trace() - 1.0) * 0.5;
  const double theta = std::atan2(s, c);  // stable through theta = pi

  if (theta < kSmallAngleTol) {
    if (branch) *branch = LogBranch::kSmallAngle;
    return sin_axis;
  }

  // The antisymmetric part degenerates as theta -> pi, so switch to the
  // pi-branch well before the mandated 1e-9 window: near pi the symmetrized
  // (R + I)/2 equals axis*axis^T up to O((pi-theta)^2) and the axis is read
  // off the column with the dominant diagonal entry.
  const double pi_switch = std::max(pi_tol, 1e-6);
  if (M_PI - theta < pi_switch) {
    if (branch) *branch = LogBranch::kPi;
    const Mat3 b_raw = (r + Mat3::Identity()) * 0.5;
    const Mat3 b = (b_raw + b_raw.transpose()) * 0.5;
    int k = 0;
    b.diagonal().maxCoeff(&k);
    Vec3 axis = b.col(k) / std::sqrt(b(k, k));
    axis.normalize();
    if (s > 1e-12 && axis.dot(sin_axis) < 0.0) axis = -axis;
    return axis * theta;
  }

  if (branch) *branch = LogBranch::kGeneric;
  return sin_axis * (theta / s);
}

Rotation rot_exp(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 s = skew(w);
  double a, b;  // R = I + a*[w] + b*[w]^2
  if (theta < 1e-4) {
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  Mat3 r = Mat3::Identity() + a * s + b * (s * s);
  return Rotation(r, Rotation::Trusted{});
}

namespace {

// Left Jacobian of SO(3) and its inverse, with series branches near zero.
Mat3 left_jacobian(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 s = skew(w);
  double b, c;  // J = I + b*[w] + c*[w]^2
  if (theta < 1e-4) {
    b = 0.5 - theta2 / 24.0;
    c = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    b = (1.0 - std::cos(theta)) / theta2;
    c = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Mat3::Identity() + b * s + c * (s * s);
}

Mat3 left_jacobian_inverse(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 s = skew(w);
  double c;  // J^-1 = I - [w]/2 + c*[w]^2
  if (theta < 1e-4) {
    c = 1.0 / 12.0 + theta2 / 720.0;
  } else {
    const double a = std::sin(theta) / theta;
    const double b = (1.0 - std::cos(theta)) / theta2;
    c = (1.0 - 0.5 * a / b) / theta2;
  }
  return Mat3::Identity() - 0.5 * s + c * (s * s);
}

}  // namespace

Transform se3_exp(const Vec6& xi) {
  const Vec3 w = xi.head<3>();
  const Vec3 v = xi.tail<3>();
  return Transform(rot_exp(w), left_jacobian(w) * v);
}

Vec6 se3_log(const Transform& t) {
  const Vec3 w = rot_log(t.rotation);
  Vec6 xi;
  xi << w, left_jacobian_inverse(w) * t.translation;
  return xi;
}

Twist twist_from_pose_derivative(const Transform& t, const Mat4& tdot) {
  const Mat3 rt = t.rotation.matrix().transpose();
  const Mat3 omega_raw = rt * tdot.block<3, 3>(0, 0);
  const Vec3 v = rt * tdot.block<3, 1>(0, 3);
  const Mat3 omega_asym = (omega_raw - omega_raw.transpose()) * 0.5;
  Twist out;
  out.angular = unskew(omega_asym);
  out.linear = v;
  out.frame = t.from_frame;
  return out;
}

double rotation_error_deg(const Rotation& r_true, const Rotation& r_est) {
  const Rotation rel = r_true.inverse() * r_est;
  return rot_log(rel).norm() * 180.0 / M_PI;
}

}  // namespace copest::geom
