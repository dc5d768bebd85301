#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "copest/kin_est.hpp"
#include "copest/presets.hpp"
#include "copest/rng.hpp"
#include "copest/sim.hpp"
#include "wahba_oracle.hpp"

using namespace copest;
using namespace copest::geom;
using namespace copest::kin;

namespace {

// Twist batches for every robot from a simulated dataset's noise-free
// reference streams.
std::vector<TwistBatch> reference_batches(const sim::GroundTruthDataset& ds) {
  std::vector<TwistBatch> out;
  for (std::size_t i = 0; i < ds.robots.size(); ++i) {
    out.push_back(make_batch(static_cast<int>(i) + 1, ds.timestamps,
                             ds.robots[i].twist_ref));
  }
  return out;
}

sim::GroundTruthDataset small_dataset(std::uint64_t seed, int vias = 8) {
  sim::ScenarioConfig cfg;
  cfg.payload = presets::payload("a");
  cfg.trajectory.kind = sim::TrajectoryKind::kRandomVia;
  cfg.trajectory.via_count = vias;
  cfg.trajectory.transit_time_range = {0.5, 0.8};
  cfg.trajectory.dwell_time_range = {0.5, 0.8};
  cfg.seed = seed;
  return sim::synthesize_dataset(cfg);
}

// Batches whose twists come from a known rigid relation plus optional noise.
std::pair<TwistBatch, TwistBatch> rigid_pair(const Transform& t_ij, int q,
                                             Rng& rng, double noise = 0.0) {
  TwistBatch bi, bj;
  bi.robot = 1;
  bj.robot = 2;
  bi.angular.resize(3, q);
  bi.linear.resize(3, q);
  bj.angular.resize(3, q);
  bj.linear.resize(3, q);
  for (int k = 0; k < q; ++k) {
    Twist vj;
    vj.angular = rng.normal3(0.5);
    vj.linear = rng.normal3(0.4);
    const Twist vi = transform_twist(t_ij, vj);
    bj.angular.col(k) = vj.angular + rng.normal3(noise);
    bj.linear.col(k) = vj.linear + rng.normal3(noise);
    bi.angular.col(k) = vi.angular + rng.normal3(noise);
    bi.linear.col(k) = vi.linear + rng.normal3(noise);
  }
  return {bi, bj};
}

}  // namespace

TEST_SUITE("kin_est") {

TEST_CASE("estimate_rotation identity and axis permutation") {
  Eigen::Matrix3Xd wj(3, 3);
  wj << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  const Rotation same = estimate_rotation(wj, wj);
  CHECK(rotation_error_deg(Rotation::identity(), same) < 1e-12);

  // w_i columns e2, -e1, e3 from w_j columns e1, e2, e3 -> Rz(90)
  Eigen::Matrix3Xd wi(3, 3);
  wi << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Rotation r = estimate_rotation(wi, wj);
  CHECK(rotation_error_deg(Rotation::about_z(M_PI / 2), r) < 1e-12);
}

TEST_CASE("estimate_rotation monte carlo with noise") {
  Rng rng(41);
  const Rotation r_true = rot_exp(rng.unit_vector() * 1.1);
  Eigen::Matrix3Xd wj(3, 500), wi(3, 500);
  for (int k = 0; k < 500; ++k) {
    const Vec3 w = rng.unit_vector();
    wj.col(k) = w;
    wi.col(k) = r_true * w + rng.normal3(0.01);
  }
  RotationDiagnostics diag;
  const Rotation r = estimate_rotation(wi, wj, &diag);
  CHECK(rotation_error_deg(r_true, r) < 0.2);
  CHECK(diag.singular_values(0) > 0.0);
}

TEST_CASE("estimate_rotation agrees with Davenport oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const Rotation r_true = rot_exp(rng.unit_vector() * rng.uniform(0.0, 3.0));
    Eigen::Matrix3Xd wj(3, 40), wi(3, 40);
    for (int k = 0; k < 40; ++k) {
      wj.col(k) = rng.normal3(1.0);
      wi.col(k) = r_true * Vec3(wj.col(k));
    }
    const Rotation svd_route = estimate_rotation(wi, wj);
    const Rotation oracle = testing::davenport_wahba(wi, wj);
    CHECK(rotation_error_deg(svd_route, oracle) < 1e-9);
    CHECK(rotation_error_deg(svd_route, r_true) < 1e-9);
  }
}

TEST_CASE("estimate_rotation rank deficiency names the missing axis") {
  Rng rng(43);
  // all angular velocities in the x-y plane
  Eigen::Matrix3Xd wj(3, 100), wi(3, 100);
  const Rotation r = Rotation::about_z(0.7);
  for (int k = 0; k < 100; ++k) {
    Vec3 w(rng.normal(), rng.normal(), 0.0);
    wj.col(k) = w;
    wi.col(k) = r * w;
  }
  CHECK_THROWS_AS(estimate_rotation(wi, wj), InsufficientExcitation);
  try {
    estimate_rotation(wi, wj);
  } catch (const InsufficientExcitation& e) {
    REQUIRE(e.null_directions.size() == 1);
    CHECK(std::abs(e.null_directions[0].dot(Eigen::Vector3d(0, 0, 1))) > 0.999);
  }

  Eigen::Matrix3Xd two(3, 2);
  two.setRandom();
  CHECK_THROWS_AS(estimate_rotation(two, two), ConfigError);
}

TEST_CASE("estimate_rotation invariances") {
  Rng rng(44);
  const auto [bi, bj] = rigid_pair(
      Transform(rot_exp(rng.unit_vector() * 0.8), Vec3(0.3, -0.2, 0.5)), 60, rng,
      0.02);

  // symmetric role swap
  const Rotation r_ij = estimate_rotation(bi.angular, bj.angular);
  const Rotation r_ji = estimate_rotation(bj.angular, bi.angular);
  CHECK((r_ij.matrix() - r_ji.matrix().transpose()).cwiseAbs().maxCoeff() < 1e-10);

  // simultaneous column permutation
  std::vector<int> perm(60);
  for (int k = 0; k < 60; ++k) perm[k] = k;
  std::shuffle(perm.begin(), perm.end(), std::mt19937(7));
  Eigen::Matrix3Xd wi_p(3, 60), wj_p(3, 60);
  for (int k = 0; k < 60; ++k) {
    wi_p.col(k) = bi.angular.col(perm[k]);
    wj_p.col(k) = bj.angular.col(perm[k]);
  }
  const Rotation r_perm = estimate_rotation(wi_p, wj_p);
  CHECK(rotation_error_deg(r_ij, r_perm) < 1e-10);

  // global minimum spot check against random rotations
  RotationDiagnostics diag;
  estimate_rotation(bi.angular, bj.angular, &diag);
  for (int k = 0; k < 50; ++k) {
    const Rotation rand_rot = rot_exp(rng.unit_vector() * rng.uniform(0.0, M_PI));
    const double cost = (rand_rot.matrix() * bj.angular - bi.angular).squaredNorm();
    CHECK(diag.frobenius_cost <= cost + 1e-12);
  }
}

TEST_CASE("estimate_position recovers the offset") {
  Rng rng(45);
  const Transform t_ij(rot_exp(rng.unit_vector() * 0.9), Vec3(1.2, -0.4, 0.8));
  const auto [bi, bj] = rigid_pair(t_ij, 50, rng);

  // coincident frames
  const Vec3 zero = estimate_position(Rotation::identity(), bj.angular,
                                      bj.linear, bj.linear);
  CHECK(zero.norm() < 1e-12);

  const Rotation r_hat = estimate_rotation(bi.angular, bj.angular);
  PositionDiagnostics diag;
  const Vec3 p = estimate_position(r_hat, bj.angular, bi.linear, bj.linear, &diag);
  CHECK((p - t_ij.translation).norm() < 1e-9);

  // least-squares orthogonality of the residual
  Eigen::MatrixXd a(3 * 50, 3);
  Eigen::VectorXd b(3 * 50);
  for (int k = 0; k < 50; ++k) {
    const Vec3 w = r_hat.matrix() * bj.angular.col(k);
    a.middleRows<3>(3 * k) = skew(w);
    b.segment<3>(3 * k) = r_hat.matrix() * bj.linear.col(k) - bi.linear.col(k);
  }
  CHECK((a.transpose() * (a * p - b)).norm() < 1e-8);
}

TEST_CASE("estimate_position unobservable along parallel axis") {
  Rng rng(46);
  const Vec3 axis = Vec3(1, 2, 0.5).normalized();
  const Transform t_ij(Rotation::identity(), Vec3(0.7, -0.3, 0.4));

  TwistBatch bi, bj;
  bi.angular.resize(3, 40);
  bi.linear.resize(3, 40);
  bj.angular.resize(3, 40);
  bj.linear.resize(3, 40);
  for (int k = 0; k < 40; ++k) {
    Twist vj;
    vj.angular = axis * rng.uniform(-1.0, 1.0);
    vj.linear = rng.normal3(0.3);
    const Twist vi = transform_twist(t_ij, vj);
    bj.angular.col(k) = vj.angular;
    bj.linear.col(k) = vj.linear;
    bi.angular.col(k) = vi.angular;
    bi.linear.col(k) = vi.linear;
  }

  CHECK_THROWS_AS(
      estimate_position(Rotation::identity(), bj.angular, bi.linear, bj.linear),
      InsufficientExcitation);
  try {
    estimate_position(Rotation::identity(), bj.angular, bi.linear, bj.linear);
  } catch (const InsufficientExcitation& e) {
    REQUIRE(e.null_directions.size() == 1);
    CHECK(std::abs(e.null_directions[0].dot(axis)) > 0.999);

    // reduced problem: project out the unobservable axis and re-solve
    Eigen::MatrixXd a(3 * 40, 3);
    Eigen::VectorXd b(3 * 40);
    for (int k = 0; k < 40; ++k) {
      a.middleRows<3>(3 * k) = skew(Vec3(bj.angular.col(k)));
      b.segment<3>(3 * k) = bj.linear.col(k) - bi.linear.col(k);
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd inv = svd.singularValues();
    for (int k = 0; k < 3; ++k) {
      inv[k] = inv[k] > 1e-8 * svd.singularValues()(0) ? 1.0 / inv[k] : 0.0;
    }
    const Vec3 p_reduced = svd.matrixV() * inv.asDiagonal() *
                           svd.matrixU().transpose() * b;
    const Vec3 p_true_reduced =
        t_ij.translation - axis * axis.dot(t_ij.translation);
    CHECK((p_reduced - p_true_reduced).norm() < 1e-9);
  }
}

TEST_CASE("pairwise estimate on noise-free simulated payload") {
  const auto ds = small_dataset(5);
  const auto batches = reference_batches(ds);
  const PairwiseEstimate est = estimate_pairwise(batches[0], batches[1]);

  const Transform truth = ds.scenario.payload.grasp_transforms[0].inverse() *
                          ds.scenario.payload.grasp_transforms[1];
  CHECK(rotation_error_deg(truth.rotation, est.rotation) < 1e-6);
  CHECK((est.translation - truth.translation).norm() < 1e-9);
  CHECK((est.translation - Vec3(0.647, 0.533, 0.0)).norm() < 1e-9);

  const PairwiseEstimate self = estimate_pairwise(batches[0], batches[0]);
  CHECK(rotation_error_deg(Rotation::identity(), self.rotation) < 1e-9);
  CHECK(self.translation.norm() < 1e-9);
}

TEST_CASE("chain_estimates composes and reports unreachable frames") {
  const auto ds = small_dataset(6);
  const auto batches = reference_batches(ds);
  const PairwiseEstimate e12 = estimate_pairwise(batches[0], batches[1]);
  const PairwiseEstimate e13 = estimate_pairwise(batches[0], batches[2]);
  const PairwiseEstimate e23 = estimate_pairwise(batches[1], batches[2]);

  const GraspGraph graph = chain_estimates({e12, e13}, 1);
  CHECK(graph.at(1).is_approx(Transform::identity()));
  // derived pair matches the direct estimate on exact data
  const Transform t23 = graph.pair(2, 3);
  CHECK(rotation_error_deg(t23.rotation, e23.rotation) < 1e-8);
  CHECK((t23.translation - e23.translation).norm() < 1e-8);

  PairwiseEstimate island;
  island.frame_i = 7;
  island.frame_j = 8;
  CHECK_THROWS_AS(chain_estimates({e12, island}, 1), ConfigError);
}

TEST_CASE("refinement is a fixed point on exact data") {
  const auto ds = small_dataset(7);
  const auto batches = reference_batches(ds);
  const GraspGraph init = chain_estimates(
      {estimate_pairwise(batches[0], batches[1]),
       estimate_pairwise(batches[0], batches[2])},
      1);

  const GraspGraph refined = refine_loop_closure(init, batches);
  CHECK(refined.initial_cost < 1e-12);
  CHECK(refined.final_cost <= refined.initial_cost);
  CHECK_FALSE(refined.refine_failed);
  for (int f : {1, 2, 3}) {
    CHECK(rotation_error_deg(init.at(f).rotation, refined.at(f).rotation) < 1e-6);
  }
}

TEST_CASE("refinement recovers from a perturbed start") {
  const auto ds = small_dataset(8, 10);
  const auto batches = reference_batches(ds);
  GraspGraph graph;
  graph.reference = 1;
  graph.transforms[1] = Transform::identity();
  Rng rng(9);
  for (int f : {2, 3}) {
    const Transform truth = ds.scenario.payload.grasp_transforms[0].inverse() *
                            ds.scenario.payload.grasp_transforms[f - 1];
    const Rotation bump = rot_exp(rng.unit_vector() * (5.0 * M_PI / 180.0));
    graph.transforms[f] = Transform(bump * truth.rotation,
                                    truth.translation + rng.unit_vector() * 0.05);
  }

  const GraspGraph refined = refine_loop_closure(graph, batches);
  CHECK(refined.final_cost <= refined.initial_cost);
  for (int f : {2, 3}) {
    const Transform truth = ds.scenario.payload.grasp_transforms[0].inverse() *
                            ds.scenario.payload.grasp_transforms[f - 1];
    CHECK(rotation_error_deg(truth.rotation, refined.at(f).rotation) < 1e-4);
    CHECK((refined.at(f).translation - truth.translation).norm() < 1e-4);
  }
}

TEST_CASE("refinement improves noisy estimates on average") {
  double unrefined_sum = 0.0;
  double refined_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    sim::ScenarioConfig cfg;
    cfg.payload = presets::payload("a");
    cfg.trajectory.kind = sim::TrajectoryKind::kRandomVia;
    cfg.trajectory.via_count = 15;
    cfg.seed = seed;
    cfg.noise.pose_rotation_sigma = 0.0;  // noise injected on twists below
    const auto ds = sim::synthesize_dataset(cfg);

    Rng noise(seed * 17 + 3);
    std::vector<TwistBatch> batches = reference_batches(ds);
    for (auto& b : batches) {
      for (Eigen::Index k = 0; k < b.size(); ++k) {
        b.angular.col(k) += noise.normal3(0.01);
        b.linear.col(k) += noise.normal3(0.01);
      }
    }

    const GraspGraph chained = chain_estimates(
        {estimate_pairwise(batches[0], batches[1]),
         estimate_pairwise(batches[0], batches[2])},
        1);
    const GraspGraph refined = refine_loop_closure(chained, batches);
    CHECK(refined.final_cost <= refined.initial_cost + 1e-12);

    for (int i = 0; i < 3; ++i) {
      const int j = (i + 1) % 3;
      const Transform truth = ds.scenario.payload.grasp_transforms[i].inverse() *
                              ds.scenario.payload.grasp_transforms[j];
      unrefined_sum += rotation_error_deg(
          truth.rotation, chained.pair(i + 1, j + 1).rotation);
      refined_sum += rotation_error_deg(
          truth.rotation, refined.pair(i + 1, j + 1).rotation);
      unrefined_sum += (chained.pair(i + 1, j + 1).translation - truth.translation).norm();
      refined_sum += (refined.pair(i + 1, j + 1).translation - truth.translation).norm();
    }
  }
  CHECK(refined_sum <= unrefined_sum * (1.0 + 1e-9));
}

TEST_CASE("refinement aborts cleanly on non-finite input") {
  const auto ds = small_dataset(11, 4);
  const auto batches = reference_batches(ds);
  GraspGraph graph;
  graph.reference = 1;
  graph.transforms[1] = Transform::identity();
  graph.transforms[2] = Transform(Rotation::identity(),
                                  Vec3(std::nan(""), 0.0, 0.0));
  graph.transforms[3] = Transform::identity();
  const GraspGraph out = refine_loop_closure(graph, batches);
  CHECK(out.refine_failed);
}

}  // TEST_SUITE
