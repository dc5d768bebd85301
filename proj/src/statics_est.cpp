// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#include "copest/statics_est.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <deque>

namespace copest::statics {

using geom::Mat3;
using geom::Rotation;
using geom::Vec3;
using geom::Wrench;

namespace {

// Sliding peak-to-peak tracker (monotonic deques) for one scalar channel.
class RangeTracker {
 public:
  void push(std::size_t idx, double v) {
    while (!max_.empty() && max_.back().second <= v) max_.pop_back();
    max_.emplace_back(idx, v);
    while (!min_.empty() && min_.back().second >= v) min_.pop_back();
    min_.emplace_back(idx, v);
  }
  void drop_before(std::size_t left) {
    while (!max_.empty() && max_.front().first < left) max_.pop_front();
    while (!min_.empty() && min_.front().first < left) min_.pop_front();
  }
  double range() const {
    if (max_.empty()) return 0.0;
    return max_.front().second - min_.front().second;
  }

 private:
  std::deque<std::pair<std::size_t, double>> max_, min_;
};

Rotation mean_rotation(const std::vector<geom::Transform>& poses,
                       std::size_t lo, std::size_t hi) {
  Mat3 sum = Mat3::Zero();
  for (std::size_t k = lo; k < hi; ++k) sum += poses[k].rotation.matrix();
  return Rotation::project(sum);
}

}  // namespace

std::vector<StaticSample> detect_static_windows(
    const std::vector<RobotStaticStreams>& robots,
    const std::vector<double>& timestamps, double force_tolerance_n,
    double min_duration_s, double twist_tolerance) {
  if (robots.empty()) throw ConfigError("detect_static_windows: no robots");
  const std::size_t n = timestamps.size();
  for (const auto& r : robots) {
    if (r.wrench.size() != n || r.pose.size() != n) {
      throw ConfigError("detect_static_windows: stream lengths differ from "
                        "timestamp count");
    }
  }
  if (n < 2) return {};
  const double dt = timestamps[1] - timestamps[0];
  const auto min_len = static_cast<std::size_t>(std::ceil(min_duration_s / dt));

  const std::size_t channels = robots.size() * 3;
  std::vector<RangeTracker> trackers(channels);
  auto channel_value = [&](std::size_t ch, std::size_t k) {
    return robots[ch / 3].wrench[k].force[static_cast<int>(ch % 3)];
  };

  std::vector<StaticSample> samples;
  auto emit = [&](std::size_t lo, std::size_t hi) {
    if (hi - lo < min_len) return;
    for (const auto& r : robots) {
      for (std::size_t k = lo; k < hi && k < r.twist.size(); ++k) {
        if (r.twist[k].vec().norm() > twist_tolerance) return;
      }
    }
    StaticSample s;
    s.hold_id = static_cast<int>(samples.size());
    s.start_time = timestamps[lo];
    s.duration = static_cast<double>(hi - lo) * dt;
    for (const auto& r : robots) {
      geom::Vec6 acc = geom::Vec6::Zero();
      for (std::size_t k = lo; k < hi; ++k) acc += r.wrench[k].vec();
      acc /= static_cast<double>(hi - lo);
      s.wrench.push_back(Wrench::from_vec(acc));
      s.r_s0_i.push_back(r.home_orientation_s0 * mean_rotation(r.pose, lo, hi));
    }
    s.r_s_s0 = s.r_s0_i.front().inverse();
    samples.push_back(std::move(s));
  };

  std::size_t left = 0;
  for (std::size_t right = 0; right < n; ++right) {
    for (std::size_t ch = 0; ch < channels; ++ch) {
      trackers[ch].push(right, channel_value(ch, right));
    }
    std::size_t new_left = left;
    auto violated = [&]() {
      for (std::size_t ch = 0; ch < channels; ++ch) {
        if (trackers[ch].range() > force_tolerance_n) return true;
      }
      return false;
    };
    while (violated()) {
      ++new_left;
      for (std::size_t ch = 0; ch < channels; ++ch) trackers[ch].drop_before(new_left);
    }
    if (new_left != left) {
      emit(left, right);  // the window ending just before `right` was maximal
      left = new_left;
    }
  }
  emit(left, n);
  return samples;
}

MassEstimate estimate_mass(const std::vector<StaticSample>& samples,
                           const Vec3& gravity_w) {
  if (samples.empty()) throw ConfigError("estimate_mass: no static samples");
  const double g = gravity_w.norm();
  if (g <= 0.0) {
    throw ConfigError("estimate_mass: mass is unobservable without gravity");
  }

  // A_q m = b_q with A_q = [0,0,1] . (0,0,-g) = -g for every hold.
  const auto q = static_cast<Eigen::Index>(samples.size());
  Eigen::VectorXd a = Eigen::VectorXd::Constant(q, -g);
  Eigen::VectorXd b(q);
  Eigen::Matrix2Xd xy(2, q);
  for (Eigen::Index k = 0; k < q; ++k) {
    Vec3 sum = Vec3::Zero();
    const StaticSample& s = samples[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < s.wrench.size(); ++i) {
      sum += s.r_s0_i[i] * s.wrench[i].force;
    }
    b[k] = -sum.z();
    xy.col(k) = sum.head<2>();
  }

  MassEstimate out;
  out.mass = a.dot(b) / a.dot(a);
  out.residual_norm = (a * out.mass - b).norm();
  out.valid = out.mass > 0.0;
  // x,y equilibrium rows carry no mass information (gravity is z in {s0});
  // report their magnitude as a data-consistency diagnostic
  out.xy_residual_rms.head<2>() =
      (xy.rowwise().squaredNorm() / static_cast<double>(q)).cwiseSqrt();
  return out;
}

ComEstimate estimate_com(const std::vector<StaticSample>& samples, double mass,
                         const kin::GraspGraph& graph, const Vec3& gravity_w) {
  if (samples.size() < 2) {
    throw InsufficientOrientations(
        "estimate_com: need at least two static holds (a single skew matrix "
        "is rank 2; the gravity-parallel component stays unobservable)",
        samples.empty() ? Vec3(0, 0, 1)
                        : Vec3(samples[0].r_s_s0 * Vec3(0, 0, -1)));
  }
  const double g = gravity_w.norm();
  if (g <= 0.0) {
    throw ConfigError("estimate_com: unobservable without gravity");
  }
  const Vec3 gravity_s0(0.0, 0.0, -g);

  const auto q = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd a(3 * q, 3);
  Eigen::VectorXd b(3 * q);
  for (Eigen::Index k = 0; k < q; ++k) {
    const StaticSample& s = samples[static_cast<std::size_t>(k)];
    a.middleRows<3>(3 * k) = geom::skew(s.r_s_s0 * (mass * gravity_s0));
    Vec3 rhs = Vec3::Zero();
    for (std::size_t i = 0; i < s.wrench.size(); ++i) {
      const geom::Transform& t_si = graph.at(static_cast<int>(i) + 1);
      const Vec3 rotated_force = t_si.rotation * s.wrench[i].force;
      rhs += t_si.translation.cross(rotated_force) +
             t_si.rotation * s.wrench[i].moment;
    }
    b.segment<3>(3 * k) = rhs;
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec3 sv = svd.singularValues();
  if (sv(2) <= 1e-8 * sv(0)) {
    throw InsufficientOrientations(
        "estimate_com: hold orientations differ only by rotation about "
        "gravity; the attached direction of p_sc is unobservable",
        Vec3(svd.matrixV().col(2)));
  }

  ComEstimate out;
  out.p_sc = svd.solve(b);
  out.residual_norm = (a * out.p_sc - b).norm();
  out.singular_values = sv;
  return out;
}

}  // namespace copest::statics
