#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "satrack/estimation/ekf.hpp"
#include "satrack/estimation/estimators.hpp"
#include "satrack/estimation/window.hpp"
#include "satrack/rng.hpp"
#include "satrack/sim/episode.hpp"
#include "satrack/sim/montecarlo.hpp"

#include <Eigen/Geometry>

using namespace satrack;

namespace {

SimConfig test_cfg() {
  SimConfig cfg;
  cfg.dt = 0.05;
  cfg.window_size = 20;
  return cfg;
}

UavState uav_at(const Vec3& p, const Rotation3& rot = {}) {
  UavState u;
  u.state = {p, Vec3::Zero()};
  u.pose_rotation = rot;
  return u;
}

Mat6 random_spd6(RngStream& rng) {
  Mat6 m;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) m(i, j) = rng.normal();
  return m * m.transpose() + 0.5 * Mat6::Identity();
}

}  // namespace

TEST_CASE("cauchy loss and weight") {
  CHECK(cauchy_loss(0.0, 1.0) == 0.0);
  CHECK(cauchy_loss(1.0, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(cauchy_loss(1e8, 1.0) / 1e8 < 1e-5);  // sublinear growth
  CHECK(cauchy_weight(0.0, 2.0) == 1.0);
  CHECK(cauchy_weight(3.0, 1.0) == doctest::Approx(0.25).epsilon(1e-14));

  for (double c : {1.0, 2.0}) {
    for (double s : {0.5, 1.0, 3.0, 10.0}) {
      const double h = 1e-5;
      const double fd = (cauchy_loss(s + h, c) - cauchy_loss(s - h, c)) / (2.0 * h);
      CHECK(std::abs(fd - cauchy_weight(s, c)) < 1e-6);
    }
  }
}

TEST_CASE("factor residuals vanish at consistent states") {
  std::vector<Vec6> means(2);
  means[0] << 1, 2, 3, 0.1, 0.2, 0.3;
  const auto [a, b] = make_transition_matrices(0.05);
  (void)b;
  means[1] = a * means[0];

  const auto prior = evaluate_factor(PriorFactor{0, means[0], Mat6::Identity()}, means);
  REQUIRE(prior.has_value());
  CHECK(prior->residual.norm() == 0.0);

  const auto dyn = evaluate_factor(DynamicsFactor{0, a, Mat6::Identity()}, means);
  REQUIRE(dyn.has_value());
  CHECK(dyn->residual.norm() < 1e-15);
}

TEST_CASE("degenerate range factor excluded") {
  std::vector<Vec6> means(1);
  means[0] << 1, 2, 3, 0, 0, 0;
  RangeFactor f{0, 2.0, 0.05, PoseSnapshot{Vec3(1, 2, 3), Rotation3()}};
  CHECK(!evaluate_factor(Factor(f), means).has_value());
}

TEST_CASE("factor jacobians match central finite differences") {
  RngStream rng(200, 0);
  const auto [a, bmat] = make_transition_matrices(0.05);
  (void)bmat;
  const double tol = 1e-5;
  int configs = 0;

  const auto rel_err = [](const MatX& jac, const MatX& fd) {
    return (jac - fd).cwiseAbs().maxCoeff() / std::max(1.0, jac.cwiseAbs().maxCoeff());
  };

  while (configs < 1000) {
    std::vector<Vec6> means(2);
    for (auto& m : means) m << 3.0 * rng.normal3(), rng.normal3();
    const Vec3 p_r = 3.0 * rng.normal3();
    if ((means[0].head<3>() - p_r).norm() < 0.3) continue;
    const Rotation3 rot = Rotation3::from_matrix(
        Eigen::AngleAxisd(2.0 * M_PI * rng.uniform(), rng.normal3().normalized())
            .toRotationMatrix());
    const PoseSnapshot snap{p_r, rot};
    const int kind = configs % 4;

    if (kind == 0) {
      const RangeFactor f{0, 1.0 + 4.0 * rng.uniform(), 0.05, snap};
      const auto ev = evaluate_factor(Factor(f), means);
      REQUIRE(ev.has_value());
      const auto fd = oracles::finite_difference(
          [&](const Vec6& x) {
            std::vector<Vec6> m2(means);
            m2[0] = x;
            return VecX(evaluate_factor(Factor(f), m2)->residual);
          },
          means[0]);
      CHECK(rel_err(ev->jac_a, fd) < tol);
    } else if (kind == 1) {
      // Bearing: finite differences hold the tangent basis fixed at the
      // unperturbed prediction, exactly like the analytic Jacobian.
      const UnitBearing z = UnitBearing::normalized(
          (rot * (means[0].head<3>() - p_r)).normalized() + 0.3 * rng.normal3());
      const BearingFactor f{0, z, Mat2::Identity(), snap, true};
      const auto ev = evaluate_factor(Factor(f), means);
      REQUIRE(ev.has_value());
      const UnitBearing h0 =
          UnitBearing::normalized(rot * (means[0].head<3>() - p_r));
      const TangentBasis basis0 = tangent_basis(h0);
      const auto frozen = [&](const Vec6& x) {
        const UnitBearing h = UnitBearing::normalized(rot * (x.head<3>() - p_r));
        return VecX(Vec2(basis0.b.transpose() * *sphere_log(h, z)));
      };
      const auto fd = oracles::finite_difference(frozen, means[0]);
      CHECK(rel_err(ev->jac_a, fd) < tol);
    } else if (kind == 2) {
      const DynamicsFactor f{0, a, Mat6::Identity()};
      const auto ev = evaluate_factor(Factor(f), means);
      REQUIRE(ev.has_value());
      for (int node = 0; node < 2; ++node) {
        const auto fd = oracles::finite_difference(
            [&](const Vec6& x) {
              std::vector<Vec6> m2(means);
              m2[node] = x;
              return VecX(evaluate_factor(Factor(f), m2)->residual);
            },
            means[node]);
        CHECK(rel_err(node == 0 ? MatX(ev->jac_a) : MatX(ev->jac_b), fd) < tol);
      }
    } else {
      const PriorFactor f{0, means[1], Mat6::Identity()};
      const auto ev = evaluate_factor(Factor(f), means);
      const auto fd = oracles::finite_difference(
          [&](const Vec6& x) {
            std::vector<Vec6> m2(means);
            m2[0] = x;
            return VecX(evaluate_factor(Factor(f), m2)->residual);
          },
          means[0]);
      CHECK(rel_err(ev->jac_a, fd) < tol);
    }
    ++configs;
  }
}

TEST_CASE("push_timestep initialization and windowing") {
  SimConfig cfg = test_cfg();
  cfg.window_size = 10;
  FactorGraphWindow window(cfg);
  CHECK(window.empty());

  const UavState pose = uav_at(Vec3::Zero());
  RangeMeasurement z_r{5.0, 0.05};
  BearingMeasurement z_b{0.0, 0.0, SymMatrix2::diagonal(Vec2(1e-4, 1e-4))};
  window.push_timestep(pose, z_r, z_b);
  CHECK(window.size() == 1);
  REQUIRE(window.factors().size() == 1);
  CHECK(factor_kind(window.factors()[0]) == FactorKind::prior);
  CHECK(window.node_means()[0].head<3>().isApprox(Vec3(5, 0, 0), 1e-12));

  for (int k = 1; k < 15; ++k) window.push_timestep(pose, z_r, z_b);
  CHECK(window.size() == 10);
  int priors = 0, dynamics = 0;
  for (const auto& f : window.factors()) {
    if (factor_kind(f) == FactorKind::prior) ++priors;
    if (factor_kind(f) == FactorKind::dynamics) ++dynamics;
  }
  CHECK(priors == 1);
  CHECK(dynamics == 9);
  CHECK(window.first_step_index() == 5);
}

TEST_CASE("antipodal bearing degrades to a range-only timestep") {
  SimConfig cfg = test_cfg();
  FactorGraphWindow window(cfg);
  const UavState pose = uav_at(Vec3::Zero());
  window.push_timestep(pose, {5.0, 0.05},
                       BearingMeasurement{0.0, 0.0, SymMatrix2::diagonal(Vec2(1e-4, 1e-4))});
  // Prediction points along +x; a measurement pointing along -x is antipodal.
  window.push_timestep(pose, {5.0, 0.05},
                       BearingMeasurement{M_PI, 0.0, SymMatrix2::diagonal(Vec2(1e-4, 1e-4))});
  CHECK(window.size() == 2);
  int bearings = 0, ranges = 0;
  for (const auto& f : window.factors()) {
    if (factor_kind(f) == FactorKind::bearing) ++bearings;
    if (factor_kind(f) == FactorKind::range) ++ranges;
  }
  CHECK(bearings == 0);
  CHECK(ranges == 1);
}

TEST_CASE("sliding-window MAP equals the RTS smoother on linear-Gaussian data") {
  SimConfig cfg = test_cfg();
  cfg.dt = 0.1;
  cfg.window_size = 6;
  const auto [a, bmat] = make_transition_matrices(cfg.dt);
  (void)bmat;
  const Mat6 q = default_target_process_cov();
  const Mat3 r_meas = 0.01 * Mat3::Identity();

  RngStream rng(300, 0);
  Vec6 x0;
  x0 << 1, -2, 0.5, 0.2, 0.1, -0.3;
  Mat6 p0 = random_spd6(rng);
  p0 *= 0.1;

  const int n_meas = 14;
  std::vector<Vec3> z;
  for (int k = 0; k < n_meas; ++k) z.push_back(Vec3(1, -2, 0.5) + 0.5 * rng.normal3());

  FactorGraphWindow window(cfg, false);
  GaussianBelief prior;
  prior.mean = State6::from_vec(x0);
  prior.cov = SymMatrix6::from(p0);
  window.initialize_with_prior(prior);
  for (const auto& zk : z) window.push_timestep_linear(zk, SymMatrix3::from(r_meas));
  const auto beliefs = window.optimize(false);

  const auto rts = oracles::rts_smoother(x0, p0, a, q, z, r_meas);
  REQUIRE(window.size() == cfg.window_size);
  const long first = window.first_step_index();
  for (int k = 0; k < window.size(); ++k) {
    const auto& belief = beliefs[k];
    const Vec6 rts_mean = rts.mean[first + k];
    const Mat6 rts_cov = rts.cov[first + k];
    CHECK((belief.mean.to_vec() - rts_mean).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK((belief.cov.dense() - rts_cov).lpNorm<Eigen::Infinity>() < 1e-8);
  }

  // Windowed-equals-batch directly: a window large enough to never marginalize.
  SimConfig batch_cfg = cfg;
  batch_cfg.window_size = 100;
  FactorGraphWindow batch(batch_cfg, false);
  batch.initialize_with_prior(prior);
  for (const auto& zk : z) batch.push_timestep_linear(zk, SymMatrix3::from(r_meas));
  const auto batch_beliefs = batch.optimize(false);
  for (int k = 0; k < window.size(); ++k) {
    const auto& windowed = beliefs[k];
    const auto& full = batch_beliefs[first + k];
    CHECK((windowed.mean.to_vec() - full.mean.to_vec()).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK((windowed.cov.dense() - full.cov.dense()).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("zero-noise measurements with exact initialization recover truth") {
  SimConfig cfg = test_cfg();
  cfg.window_size = 30;
  FactorGraphWindow window(cfg);

  Vec6 truth;
  truth << 3.0, 1.0, 1.2, 0.1, -0.05, 0.0;
  GaussianBelief prior;
  prior.mean = State6::from_vec(truth);
  prior.cov = SymMatrix6::from(Mat6(0.01 * Mat6::Identity()));
  window.initialize_with_prior(prior);

  const auto [a, bmat] = make_transition_matrices(cfg.dt);
  (void)bmat;
  Vec6 x = truth;
  const UavState pose = uav_at(Vec3::Zero());
  for (int k = 1; k < 15; ++k) {
    x = a * x;
    const Vec3 p = x.head<3>();
    const auto angles = true_bearing_angles(pose.pose_rotation, Vec3::Zero(), p);
    window.push_timestep(pose, {p.norm(), 0.05},
                         BearingMeasurement{angles.first, angles.second,
                                            SymMatrix2::diagonal(Vec2(1e-4, 1e-4))});
  }
  const auto beliefs = window.optimize(true);
  CHECK((beliefs.back().mean.to_vec() - x).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("robust loss beats plain quadratic under a single bearing outlier") {
  SimConfig cfg = test_cfg();
  cfg.window_size = 25;
  const auto [a, bmat] = make_transition_matrices(cfg.dt);
  (void)bmat;
  const double sigma_ang = cfg.sigma_az;

  int robust_wins = 0;
  const int n_seeds = 100;
  for (int seed = 0; seed < n_seeds; ++seed) {
    RngStream rng(400 + seed, 0);
    Vec6 truth;
    truth << 4.0, 1.0, 1.0, -0.2, 0.15, 0.05;
    const UavState pose = uav_at(Vec3::Zero());

    FactorGraphWindow w_robust(cfg, true);
    FactorGraphWindow w_plain(cfg, false);
    Vec6 x = truth;
    for (int k = 0; k < 20; ++k) {
      if (k > 0) x = a * x;
      const Vec3 p = x.head<3>();
      const auto angles = true_bearing_angles(pose.pose_rotation, Vec3::Zero(), p);
      const double az_noise = (k == 10) ? 25.0 * M_PI / 180.0 : sigma_ang * rng.normal();
      const double el_noise = (k == 10) ? 0.0 : sigma_ang * rng.normal();
      const BearingMeasurement z_b{wrap_angle(angles.first + az_noise),
                                   angles.second + el_noise,
                                   SymMatrix2::diagonal(Vec2(sigma_ang * sigma_ang,
                                                             sigma_ang * sigma_ang))};
      const RangeMeasurement z_r{p.norm() + 0.05 * rng.normal(), 0.05};
      w_robust.push_timestep(pose, z_r, z_b);
      w_plain.push_timestep(pose, z_r, z_b);
    }
    const double err_robust =
        (w_robust.optimize(true).back().mean.position - x.head<3>()).norm();
    const double err_plain =
        (w_plain.optimize(false).back().mean.position - x.head<3>()).norm();
    if (err_robust < err_plain) ++robust_wins;
  }
  // One-sided sign test at p < 0.01.
  CHECK(oracles::binomial_tail_half(n_seeds, robust_wins) < 0.01);
}

TEST_CASE("ekf matches a scalar Kalman filter on the axis-aligned reduction") {
  SimConfig cfg = test_cfg();
  const UavState pose = uav_at(Vec3::Zero());

  GaussianBelief belief;
  belief.mean = {Vec3(5.0, 0, 0), Vec3(0.4, 0, 0)};
  Mat6 p0 = Mat6::Identity();
  p0(0, 0) = 0.25;
  p0(3, 3) = 0.5;
  belief.cov = SymMatrix6::from(p0);

  oracles::Kf1d kf;
  kf.x << 5.0, 0.4;
  kf.p << 0.25, 0.0, 0.0, 0.5;
  const Mat6 q = default_target_process_cov();
  Eigen::Matrix2d q1;
  q1 << q(0, 0), 0.0, 0.0, q(3, 3);

  RngStream rng(500, 0);
  double x_true = 5.0;
  const double v_true = 0.4;
  for (int k = 0; k < 30; ++k) {
    x_true += v_true * cfg.dt;
    const double z = x_true + 0.05 * rng.normal();
    const RangeMeasurement z_r{z, 0.05};
    const BearingMeasurement z_b{0.0, 0.0, SymMatrix2::diagonal(Vec2(1e-4, 1e-4))};
    belief = ekf_step(belief, pose, z_r, z_b, cfg);
    kf.predict(cfg.dt, q1);
    kf.update(z, 0.05 * 0.05);

    CHECK(std::abs(belief.mean.position.x() - kf.x(0)) < 1e-10);
    CHECK(std::abs(belief.mean.velocity.x() - kf.x(1)) < 1e-10);
    CHECK(std::abs(belief.cov(0, 0) - kf.p(0, 0)) < 1e-10);
    CHECK(std::abs(belief.cov(3, 3) - kf.p(1, 1)) < 1e-10);
    CHECK(std::abs(belief.cov(0, 3) - kf.p(0, 1)) < 1e-10);
    CHECK(std::abs(belief.mean.position.y()) < 1e-12);
    CHECK(std::abs(belief.mean.position.z()) < 1e-12);
  }
}

TEST_CASE("ekf noiseless consistency and update contraction") {
  SimConfig cfg = test_cfg();
  const UavState pose = uav_at(Vec3::Zero());
  const auto [a, bmat] = make_transition_matrices(cfg.dt);
  (void)bmat;

  Vec6 truth;
  truth << 3.0, 2.0, 1.0, 0.1, -0.1, 0.05;
  GaussianBelief belief;
  belief.mean = State6::from_vec(truth);
  belief.cov = SymMatrix6::from(Mat6(0.1 * Mat6::Identity()));

  for (int k = 0; k < 10; ++k) {
    truth = a * truth;
    const Vec3 p = truth.head<3>();
    const auto angles = true_bearing_angles(pose.pose_rotation, Vec3::Zero(), p);
    const Mat6 p_pred = a * belief.cov.dense() * a.transpose() + default_target_process_cov();
    belief = ekf_step(belief, pose, {p.norm(), 0.0},
                      BearingMeasurement{angles.first, angles.second,
                                         SymMatrix2::diagonal(Vec2(0.0, 0.0))},
                      cfg);
    CHECK((belief.mean.to_vec() - truth).lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK(belief.cov.dense().trace() <= p_pred.trace() + 1e-12);
  }
}

TEST_CASE("initialize_belief geometry and covariance structure") {
  SimConfig cfg = test_cfg();
  const UavState pose = uav_at(Vec3::Zero());
  const BearingMeasurement boresight{0.0, 0.0, SymMatrix2::diagonal(Vec2(1e-4, 1e-4))};
  const auto belief = initialize_belief(pose, {5.0, 0.05}, boresight, cfg);
  CHECK((belief.mean.position - Vec3(5, 0, 0)).norm() < 1e-12);
  CHECK(belief.mean.velocity.norm() == 0.0);

  // Angular position uncertainty scales with range squared.
  const auto near = initialize_belief(pose, {5.0, 0.05}, boresight, cfg);
  const auto far = initialize_belief(pose, {10.0, 0.05}, boresight, cfg);
  CHECK(far.cov(1, 1) == doctest::Approx(4.0 * near.cov(1, 1)).epsilon(1e-6));
  CHECK(far.cov(2, 2) == doctest::Approx(4.0 * near.cov(2, 2)).epsilon(1e-6));

  // Velocity block carries no measurement information.
  CHECK(near.cov(3, 3) == doctest::Approx(1.0));
  CHECK(far.cov(3, 3) == doctest::Approx(1.0));
  CHECK(far.cov(4, 4) == near.cov(4, 4));
}

TEST_CASE("NEES calibration on inlier-only runs") {
  SimConfig cfg;
  cfg.horizon = 400;
  cfg.p_out = 0.0;
  double nees_sum = 0.0;
  long count = 0;
  for (int run = 0; run < 6; ++run) {
    const Scenario sc = scenario_estimation(cfg);
    const auto trace = run_episode(sc, EstimatorKind::fg_robust, RunControllerKind::scripted,
                                   cfg, episode_seed(cfg.seed, 900, run));
    for (const auto& s : trace.steps) {
      const Vec3 e = s.target_truth.position - s.belief.mean.position;
      const Mat3 cov = s.belief.cov.dense().topLeftCorner<3, 3>();
      nees_sum += e.dot(cov.llt().solve(e));
      ++count;
    }
  }
  const double mean_nees = nees_sum / count;
  CHECK(mean_nees > 2.0);
  CHECK(mean_nees < 4.5);
}

TEST_CASE("robust beats plain at p_out = 0.3 (smoke)") {
  SimConfig cfg;
  cfg.horizon = 400;
  cfg.p_out = 0.3;
  double rmse_robust = 0.0, rmse_plain = 0.0;
  const int runs = 8;
  for (int run = 0; run < runs; ++run) {
    const Scenario sc = scenario_estimation(cfg);
    const auto seed = episode_seed(cfg.seed, 901, run);
    rmse_robust += compute_metrics(
        run_episode(sc, EstimatorKind::fg_robust, RunControllerKind::scripted, cfg, seed), cfg)
                       .rmse_pos;
    rmse_plain += compute_metrics(
        run_episode(sc, EstimatorKind::fg_plain, RunControllerKind::scripted, cfg, seed), cfg)
                      .rmse_pos;
  }
  CHECK(rmse_robust < rmse_plain);
}
