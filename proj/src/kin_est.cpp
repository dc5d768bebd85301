// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#include "copest/kin_est.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

namespace copest::kin {

using geom::Mat3;
using geom::Mat6;
using geom::Rotation;
using geom::Transform;
using geom::Vec3;
using geom::Vec6;

namespace {
constexpr double kRankRatio = 1e-8;  // singular value below this x max counts as zero
}

void TwistBatch::validate() const {
  if (angular.cols() != linear.cols()) {
    throw ConfigError("TwistBatch: angular/linear column counts differ");
  }
  if (!timestamps.empty() &&
      static_cast<Eigen::Index>(timestamps.size()) != angular.cols()) {
    throw ConfigError("TwistBatch: timestamp count does not match columns");
  }
}

TwistBatch make_batch(int robot, const std::vector<double>& timestamps,
                      const std::vector<geom::Twist>& twists) {
  TwistBatch b;
  b.robot = robot;
  b.timestamps = timestamps;
  b.angular.resize(3, static_cast<Eigen::Index>(twists.size()));
  b.linear.resize(3, static_cast<Eigen::Index>(twists.size()));
  for (std::size_t q = 0; q < twists.size(); ++q) {
    b.angular.col(static_cast<Eigen::Index>(q)) = twists[q].angular;
    b.linear.col(static_cast<Eigen::Index>(q)) = twists[q].linear;
  }
  b.validate();
  return b;
}

Rotation estimate_rotation(const Eigen::Matrix3Xd& omega_i,
                           const Eigen::Matrix3Xd& omega_j,
                           RotationDiagnostics* diag) {
  if (omega_i.cols() != omega_j.cols()) {
    throw ConfigError("estimate_rotation: column counts differ");
  }
  if (omega_i.cols() < 3) {
    throw ConfigError("estimate_rotation: need at least 3 angular velocity "
                      "pairs, got " + std::to_string(omega_i.cols()));
  }

  const Mat3 x = omega_j * omega_i.transpose();
  Eigen::JacobiSVD<Mat3> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();

  if (sv(2) <= kRankRatio * sv(0)) {
    std::vector<Eigen::VectorXd> dirs;
    for (int k = 2; k >= 0; --k) {
      if (sv(k) <= kRankRatio * sv(0)) dirs.push_back(svd.matrixU().col(k));
    }
    throw InsufficientExcitation(
        "estimate_rotation: angular velocity data is rank deficient; "
        "unexcited rotation axes attached (frame of the second batch)",
        std::move(dirs));
  }

  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  Mat3 s = Mat3::Identity();
  s(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Rotation r_ij = Rotation::project(v * s * u.transpose());

  if (diag) {
    diag->singular_values = sv;
    diag->frobenius_cost =
        (r_ij.matrix() * omega_j - omega_i).squaredNorm();
  }
  return r_ij;
}

Vec3 estimate_position(const Rotation& r_hat, const Eigen::Matrix3Xd& omega_j,
                       const Eigen::Matrix3Xd& v_i, const Eigen::Matrix3Xd& v_j,
                       PositionDiagnostics* diag) {
  const Eigen::Index q = omega_j.cols();
  if (v_i.cols() != q || v_j.cols() != q) {
    throw ConfigError("estimate_position: column counts differ");
  }
  if (q < 2) {
    throw ConfigError("estimate_position: need at least 2 samples");
  }

  // v_i = -[R w_j] p + R v_j  ->  [R w_j] p = R v_j - v_i
  Eigen::MatrixXd a(3 * q, 3);
  Eigen::VectorXd b(3 * q);
  for (Eigen::Index k = 0; k < q; ++k) {
    const Vec3 w = r_hat.matrix() * omega_j.col(k);
    a.middleRows<3>(3 * k) = geom::skew(w);
    b.segment<3>(3 * k) = r_hat.matrix() * v_j.col(k) - v_i.col(k);
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec3 sv = svd.singularValues();
  if (sv(2) <= kRankRatio * sv(0)) {
    std::vector<Eigen::VectorXd> dirs;
    for (int k = 2; k >= 0; --k) {
      if (sv(k) <= kRankRatio * sv(0)) dirs.push_back(svd.matrixV().col(k));
    }
    throw InsufficientExcitation(
        "estimate_position: angular velocities do not span two directions; "
        "the attached components of p are unobservable",
        std::move(dirs));
  }

  const Vec3 p = svd.solve(b);
  if (diag) {
    diag->singular_values = sv;
    diag->residual_norm = (a * p - b).norm();
  }
  return p;
}

PairwiseEstimate estimate_pairwise(const TwistBatch& batch_i,
                                   const TwistBatch& batch_j) {
  batch_i.validate();
  batch_j.validate();
  if (batch_i.size() != batch_j.size()) {
    throw ConfigError("estimate_pairwise: batches are not the same length");
  }
  if (!batch_i.timestamps.empty() && !batch_j.timestamps.empty()) {
    for (std::size_t k = 0; k < batch_i.timestamps.size(); ++k) {
      if (batch_i.timestamps[k] != batch_j.timestamps[k]) {
        throw ConfigError("estimate_pairwise: batches are not synchronized");
      }
    }
  }

  PairwiseEstimate est;
  est.frame_i = batch_i.robot;
  est.frame_j = batch_j.robot;

  RotationDiagnostics rd;
  est.rotation = estimate_rotation(batch_i.angular, batch_j.angular, &rd);
  est.rotation_residual = rd.frobenius_cost;
  est.x_singular_values = rd.singular_values;

  PositionDiagnostics pd;
  est.translation = estimate_position(est.rotation, batch_j.angular,
                                      batch_i.linear, batch_j.linear, &pd);
  est.position_residual = pd.residual_norm;
  est.stacked_singular_values = pd.singular_values;
  return est;
}

const Transform& GraspGraph::at(int frame) const {
  const auto it = transforms.find(frame);
  if (it == transforms.end()) {
    throw ConfigError("GraspGraph: frame " + std::to_string(frame) +
                      " not present");
  }
  return it->second;
}

Transform GraspGraph::pair(int i, int j) const {
  return at(i).inverse() * at(j);
}

std::vector<int> GraspGraph::frames() const {
  std::vector<int> out;
  for (const auto& [frame, t] : transforms) out.push_back(frame);
  return out;
}

GraspGraph chain_estimates(const std::vector<PairwiseEstimate>& pairwise,
                           int reference) {
  GraspGraph graph;
  graph.reference = reference;
  graph.transforms[reference] = Transform::identity();

  std::set<int> all_frames{reference};
  for (const auto& est : pairwise) {
    all_frames.insert(est.frame_i);
    all_frames.insert(est.frame_j);
  }

  std::deque<int> queue{reference};
  while (!queue.empty()) {
    const int current = queue.front();
    queue.pop_front();
    for (const auto& est : pairwise) {
      if (est.frame_i == current && !graph.transforms.count(est.frame_j)) {
        graph.transforms[est.frame_j] = graph.transforms[current] * est.transform();
        queue.push_back(est.frame_j);
      } else if (est.frame_j == current && !graph.transforms.count(est.frame_i)) {
        graph.transforms[est.frame_i] =
            graph.transforms[current] * est.transform().inverse();
        queue.push_back(est.frame_i);
      }
    }
  }

  std::vector<int> unreachable;
  for (int f : all_frames) {
    if (!graph.transforms.count(f)) unreachable.push_back(f);
  }
  if (!unreachable.empty()) {
    std::ostringstream msg;
    msg << "chain_estimates: frames unreachable from reference "
        << reference << ":";
    for (int f : unreachable) msg << " " << f;
    throw ConfigError(msg.str());
  }
  return graph;
}

namespace {

struct PairData {
  int i, j;              // frame ids
  Mat6 gram_jj;          // sum V_j V_j^T
  Mat6 gram_ji;          // sum V_j V_i^T
  double trace_ii;       // sum |V_i|^2
};

struct CostModel {
  std::vector<int> frames;          // sorted, frames[0..]; reference excluded from params
  int reference;
  std::vector<Transform> base;      // initial T_ref_frame per frame (aligned with `frames`)
  std::vector<PairData> pairs;      // all ordered pairs
  double w_pair;
  double w_loop;

  int param_count() const { return 6 * (static_cast<int>(frames.size()) - 1); }

  std::vector<Transform> assemble(const Eigen::VectorXd& x) const {
    std::vector<Transform> t(frames.size());
    int slot = 0;
    for (std::size_t k = 0; k < frames.size(); ++k) {
      if (frames[k] == reference) {
        t[k] = base[k];
      } else {
        t[k] = base[k] * geom::se3_exp(x.segment<6>(6 * slot));
        ++slot;
      }
    }
    return t;
  }

  double eval(const Eigen::VectorXd& x) const {
    const std::vector<Transform> t = assemble(x);
    auto index_of = [&](int frame) {
      return static_cast<std::size_t>(
          std::lower_bound(frames.begin(), frames.end(), frame) - frames.begin());
    };

    double cost = 0.0;
    for (const PairData& pd : pairs) {
      const Transform t_ij = t[index_of(pd.i)].inverse() * t[index_of(pd.j)];
      const Mat6 a = geom::adjoint(t_ij);
      cost += w_pair * ((a.transpose() * a * pd.gram_jj).trace() -
                        2.0 * (a * pd.gram_ji).trace() + pd.trace_ii);
    }
    // 3-cycle loop closures (identically satisfied under this
    // parameterization; kept as a guard on the assembled transforms)
    const std::size_t n = frames.size();
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        for (std::size_t c = b + 1; c < n; ++c) {
          const Transform loop = (t[a].inverse() * t[b]) * (t[b].inverse() * t[c]) *
                                 (t[c].inverse() * t[a]);
          cost += w_loop * geom::se3_log(loop).squaredNorm();
        }
      }
    }
    return cost;
  }
};

Eigen::VectorXd numerical_gradient(const CostModel& model,
                                   const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    xp[k] = x[k] + h;
    const double fp = model.eval(xp);
    xp[k] = x[k] - h;
    const double fm = model.eval(xp);
    xp[k] = x[k];
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace

double loop_closure_cost(const GraspGraph& graph,
                         const std::vector<TwistBatch>& batches,
                         const RefineOptions& options) {
  // Delegate to the same model as the optimizer, evaluated at zero offset.
  GraspGraph g = graph;
  RefineOptions opts = options;
  opts.max_iterations = 0;
  const GraspGraph out = refine_loop_closure(g, batches, opts);
  return out.initial_cost;
}

GraspGraph refine_loop_closure(const GraspGraph& graph,
                               const std::vector<TwistBatch>& batches,
                               const RefineOptions& options) {
  CostModel model;
  model.reference = graph.reference;
  model.frames = graph.frames();
  std::sort(model.frames.begin(), model.frames.end());
  model.base.reserve(model.frames.size());
  for (int f : model.frames) model.base.push_back(graph.at(f));

  // Gram matrices over the twist data, one pass over the samples.
  std::map<int, const TwistBatch*> by_robot;
  Eigen::Index q = -1;
  for (const TwistBatch& b : batches) {
    b.validate();
    by_robot[b.robot] = &b;
    if (q < 0) q = b.size();
    if (b.size() != q) {
      throw ConfigError("refine_loop_closure: batch lengths differ");
    }
  }
  model.w_pair = options.w_pair;
  model.w_loop = options.w_loop < 0.0 ? static_cast<double>(q) : options.w_loop;

  auto stack6 = [](const TwistBatch& b) {
    Eigen::MatrixXd m(6, b.size());
    m.topRows<3>() = b.angular;
    m.bottomRows<3>() = b.linear;
    return m;
  };
  std::map<int, Eigen::MatrixXd> stacked;
  for (int f : model.frames) {
    const auto it = by_robot.find(f);
    if (it == by_robot.end()) {
      throw ConfigError("refine_loop_closure: no twist batch for frame " +
                        std::to_string(f));
    }
    stacked[f] = stack6(*it->second);
  }
  for (int i : model.frames) {
    for (int j : model.frames) {
      if (i == j) continue;
      PairData pd;
      pd.i = i;
      pd.j = j;
      pd.gram_jj = stacked[j] * stacked[j].transpose();
      pd.gram_ji = stacked[j] * stacked[i].transpose();
      pd.trace_ii = stacked[i].squaredNorm();
      model.pairs.push_back(pd);
    }
  }

  GraspGraph out = graph;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(model.param_count());
  double f = model.eval(x);
  out.initial_cost = f;
  if (!std::isfinite(f)) {
    out.refine_failed = true;
    out.final_cost = f;
    return out;
  }

  Eigen::VectorXd best_x = x;
  double best_f = f;
  int iterations = 0;

  if (model.param_count() > 0 && options.max_iterations > 0) {
    Eigen::MatrixXd h_inv =
        Eigen::MatrixXd::Identity(model.param_count(), model.param_count());
    Eigen::VectorXd g = numerical_gradient(model, x, options.gradient_step);

    for (int it = 0; it < options.max_iterations; ++it) {
      Eigen::VectorXd d = -h_inv * g;
      if (d.dot(g) >= 0.0) {  // not a descent direction: reset
        h_inv.setIdentity();
        d = -g;
      }
      // Armijo backtracking line search
      double step = 1.0;
      const double slope = d.dot(g);
      double f_new = f;
      Eigen::VectorXd x_new = x;
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls) {
        x_new = x + step * d;
        f_new = model.eval(x_new);
        if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
      ++iterations;

      const Eigen::VectorXd g_new =
          numerical_gradient(model, x_new, options.gradient_step);
      const Eigen::VectorXd s = x_new - x;
      const Eigen::VectorXd y = g_new - g;
      const double sy = s.dot(y);
      if (sy > 1e-14) {
        const Eigen::MatrixXd eye =
            Eigen::MatrixXd::Identity(model.param_count(), model.param_count());
        const Eigen::MatrixXd v = eye - (s * y.transpose()) / sy;
        h_inv = v * h_inv * v.transpose() + (s * s.transpose()) / sy;
      }

      const double decrease = f - f_new;
      x = x_new;
      g = g_new;
      f = f_new;
      if (f < best_f) {
        best_f = f;
        best_x = x;
      }
      if (decrease < options.relative_tolerance * f) break;
      if (g.norm() < 1e-14) break;
    }
  }

  const std::vector<Transform> final_t = model.assemble(best_x);
  for (std::size_t k = 0; k < model.frames.size(); ++k) {
    out.transforms[model.frames[k]] = final_t[k];
  }
  out.refine_iterations = iterations;
  out.final_cost = best_f;
  return out;
}

}  // namespace copest::kin
