// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <string>

#include "copest/errors.hpp"

namespace copest::geom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Default tolerances. Functions that validate take these as defaulted
/// parameters so callers can override per use.
inline constexpr double kOrthonormalityTol = 1e-12;
inline constexpr double kPiBranchTol = 1e-9;
inline constexpr double kSmallAngleTol = 1e-10;

/// Skew-symmetric matrix S with S*w = v x w.
Mat3 skew(const Vec3& v);

/// Inverse of skew for antisymmetric matrices.
Vec3 unskew(const Mat3& s);

/// Proper rotation matrix. Guaranteed orthonormal with det +1; raw data
/// enters through project() which re-orthonormalizes via SVD.
class Rotation {
 public:
  Rotation() = default;

  static Rotation identity() { return {}; }

  /// Validates orthonormality and det within `tol`; throws Error otherwise.
  static Rotation from_matrix(const Mat3& m, double tol = kOrthonormalityTol);

  /// Nearest rotation in the Frobenius sense (SVD projection).
  static Rotation project(const Mat3& m);

  static Rotation from_quaternion(const Eigen::Quaterniond& q);

  static Rotation about_x(double rad);
  static Rotation about_y(double rad);
  static Rotation about_z(double rad);

  const Mat3& matrix() const { return m_; }
  Rotation inverse() const { return Rotation(m_.transpose(), Trusted{}); }

  Rotation operator*(const Rotation& o) const {
    return Rotation(m_ * o.m_, Trusted{});
  }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  /// Unit quaternion with w >= 0 (canonical sign, stable serialization).
  Eigen::Quaterniond quaternion() const;

  bool is_approx(const Rotation& o, double tol = 1e-12) const {
    return (m_ - o.m_).cwiseAbs().maxCoeff() <= tol;
  }

 private:
  struct Trusted {};
  Rotation(const Mat3& m, Trusted) : m_(m) {}

  Mat3 m_ = Mat3::Identity();

  friend Rotation rot_exp(const Vec3&);
};

/// Rigid transform T_ij = (R_ij, p_ij): configuration of frame {j} in {i}.
/// Frame tags are optional; when both sides of an operation are tagged they
/// must agree, otherwise FrameMismatch is thrown.
struct Transform {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();
  std::string to_frame;    // {i}
  std::string from_frame;  // {j}

  Transform() = default;
  Transform(Rotation r, Vec3 p) : rotation(std::move(r)), translation(std::move(p)) {}
  Transform(Rotation r, Vec3 p, std::string to, std::string from)
      : rotation(std::move(r)),
        translation(std::move(p)),
        to_frame(std::move(to)),
        from_frame(std::move(from)) {}

  static Transform identity() { return {}; }

  Mat4 matrix() const;
  static Transform from_matrix(const Mat4& m, double tol = kOrthonormalityTol);

  Transform inverse() const;
  Transform operator*(const Transform& o) const;

  bool is_approx(const Transform& o, double tol = 1e-12) const {
    return rotation.is_approx(o.rotation, tol) &&
           (translation - o.translation).cwiseAbs().maxCoeff() <= tol;
  }
};

/// Body twist (omega, v) expressed in `frame`.
struct Twist {
  Vec3 angular = Vec3::Zero();
  Vec3 linear = Vec3::Zero();
  std::string frame;

  Vec6 vec() const {
    Vec6 x;
    x << angular, linear;
    return x;
  }
  static Twist from_vec(const Vec6& x, std::string frame = {}) {
    return {x.head<3>(), x.tail<3>(), std::move(frame)};
  }
};

/// Elementwise time derivative of a twist, expressed in `frame`.
struct TwistRate {
  Vec3 angular_accel = Vec3::Zero();
  Vec3 linear_accel = Vec3::Zero();
  std::string frame;

  Vec6 vec() const {
    Vec6 x;
    x << angular_accel, linear_accel;
    return x;
  }
  static TwistRate from_vec(const Vec6& x, std::string frame = {}) {
    return {x.head<3>(), x.tail<3>(), std::move(frame)};
  }
};

/// Wrench (moment, force) expressed in `frame`.
struct Wrench {
  Vec3 moment = Vec3::Zero();
  Vec3 force = Vec3::Zero();
  std::string frame;

  Vec6 vec() const {
    Vec6 x;
    x << moment, force;
    return x;
  }
  static Wrench from_vec(const Vec6& x, std::string frame = {}) {
    return {x.head<3>(), x.tail<3>(), std::move(frame)};
  }
};

/// 6x6 adjoint of T = (R, p): [[R, 0], [skew(p) R, R]].
Mat6 adjoint(const Transform& t);

/// Lie-bracket matrix of a twist: ad_V = [[skew(w), 0], [skew(v), skew(w)]].
Mat6 ad(const Vec6& twist);

/// Change of frame for a twist: V_i = Ad(T_ij) V_j.
Twist transform_twist(const Transform& t_ij, const Twist& v_j);

/// Change of frame for a twist rate; valid when T_ij is constant in time.
TwistRate transform_twist_rate(const Transform& t_ij, const TwistRate& a_j);

/// Change of frame for a wrench: F_i = Ad(T_ji)^T F_j.
Wrench transform_wrench(const Transform& t_ij, const Wrench& f_j);

enum class LogBranch { kGeneric, kSmallAngle, kPi };

/// Exponential coordinates w with rot_exp(w) = R and |w| in [0, pi].
/// Reports which formula branch was taken through `branch` when non-null.
Vec3 rot_log(const Rotation& r, LogBranch* branch = nullptr,
             double pi_tol = kPiBranchTol);

/// Rodrigues formula with a series branch near zero.
Rotation rot_exp(const Vec3& w);

/// Exponential map of a twist xi = (omega, v) over unit time.
Transform se3_exp(const Vec6& xi);

/// Inverse of se3_exp; rotation part in [0, pi].
Vec6 se3_log(const Transform& t);

/// Extracts the body twist from T^{-1} * Tdot. The rotational block is
/// antisymmetrized before extraction to absorb numerical asymmetry.
Twist twist_from_pose_derivative(const Transform& t, const Mat4& tdot);

/// Rotation angle in degrees of log(R_true^T R_est), in [0, 180].
double rotation_error_deg(const Rotation& r_true, const Rotation& r_est);

}  // namespace copest::geom
