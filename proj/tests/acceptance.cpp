// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with the measured quantities.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "satrack/control.hpp"
#include "satrack/estimation/window.hpp"
#include "satrack/io/csv.hpp"
#include "satrack/sim/montecarlo.hpp"
#include "satrack/stats.hpp"

#include <Eigen/Geometry>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

using namespace satrack;

namespace {

int accept_jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return std::max(1, std::min(8, static_cast<int>(hw)));
}

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[criterion %d] %s - %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

const ControlStudyResult& shared_control_study() {
  static const ControlStudyResult result = [] {
    SimConfig cfg;
    return control_study(50, cfg, accept_jobs());
  }();
  return result;
}

double violating_fraction(const std::vector<ControlRunSummary>& runs) {
  int v = 0;
  for (const auto& r : runs)
    if (r.metrics.violation_steps > 0) ++v;
  return static_cast<double>(v) / static_cast<double>(runs.size());
}

}  // namespace

TEST_CASE("criterion 1: RMSE ordering and monotone degradation over the outlier grid") {
  SimConfig cfg;
  const auto rows = sweep_outliers(kDefaultOutlierGrid, 50, cfg, accept_jobs());

  const auto mean_of = [&](double p, EstimatorKind est) {
    for (const auto& r : rows)
      if (r.cell.p_out == p && r.cell.estimator == est) return r.mean_rmse;
    REQUIRE(false);
    return 0.0;
  };

  bool ordering = true;
  std::ostringstream detail;
  for (const double p : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    const double ekf = mean_of(p, EstimatorKind::ekf);
    const double plain = mean_of(p, EstimatorKind::fg_plain);
    const double robust = mean_of(p, EstimatorKind::fg_robust);
    ordering = ordering && (robust < plain) && (plain < ekf);
    detail << "p=" << p << " (rob " << io::csv_num(robust) << " < plain "
           << io::csv_num(plain) << " < ekf " << io::csv_num(ekf) << ") ";
  }

  int non_strict_pairs = 0;
  for (size_t i = 0; i + 1 < kDefaultOutlierGrid.size(); ++i) {
    const double lo = mean_of(kDefaultOutlierGrid[i], EstimatorKind::fg_robust);
    const double hi = mean_of(kDefaultOutlierGrid[i + 1], EstimatorKind::fg_robust);
    if (!(hi > lo)) ++non_strict_pairs;
  }
  const bool degradation =
      mean_of(0.5, EstimatorKind::fg_robust) > mean_of(0.0, EstimatorKind::fg_robust);
  const bool monotone = non_strict_pairs <= 1;

  const bool pass = ordering && degradation && monotone;
  detail << "| non-strict pairs " << non_strict_pairs;
  report(1, pass, detail.str());
  CHECK(ordering);
  CHECK(degradation);
  CHECK(monotone);
}

TEST_CASE("criterion 2: controller violation rates over 50 seeds") {
  const auto& study = shared_control_study();
  const double rate_clf = violating_fraction(study.runs[0]);
  const double rate_fixed = violating_fraction(study.runs[1]);
  const double rate_ca = violating_fraction(study.runs[2]);

  const bool clf_violates = rate_clf >= 0.80;
  const bool ca_safe = rate_ca <= 0.05;  // zero violations in >= 95% of runs
  const bool fixed_between = rate_ca < rate_fixed && rate_fixed < rate_clf;
  const bool pass = clf_violates && ca_safe && fixed_between;

  std::ostringstream detail;
  detail << "violating-run rates: clf_only " << io::csv_num(rate_clf) << ", fixed "
         << io::csv_num(rate_fixed) << ", ca " << io::csv_num(rate_ca);
  report(2, pass, detail.str());
  CHECK(clf_violates);
  CHECK(ca_safe);
  CHECK(fixed_between);
}

TEST_CASE("criterion 3: confidence radius rises inside the degraded window") {
  const auto& study = shared_control_study();
  const auto& ca_runs = study.runs[2];
  int ok = 0;
  for (const auto& run : ca_runs)
    if (run.median_r_inside >= 1.5 * run.median_r_outside) ++ok;
  const double frac = static_cast<double>(ok) / static_cast<double>(ca_runs.size());
  const bool pass = frac >= 0.90;
  report(3, pass,
         "median-R ratio >= 1.5 in " + io::csv_num(frac) + " of runs");
  CHECK(pass);
}

TEST_CASE("criterion 4: confidence-radius coverage under nominal sensing") {
  SimConfig cfg;
  const auto runs = coverage_study(50, cfg, accept_jobs());
  long covered = 0, steps = 0;
  for (const auto& r : runs) {
    covered += r.covered;
    steps += r.steps;
  }
  const double frac = static_cast<double>(covered) / static_cast<double>(steps);
  const bool pass = frac >= 0.93;
  report(4, pass, "coverage " + io::csv_num(frac) + " over " + std::to_string(steps) + " steps");
  CHECK(pass);
}

TEST_CASE("criterion 5a: windowed MAP equals the RTS smoother (linear-Gaussian)") {
  SimConfig cfg;
  cfg.dt = 0.1;
  cfg.window_size = 8;
  const auto [a, bmat] = make_transition_matrices(cfg.dt);
  (void)bmat;
  const Mat6 q = default_target_process_cov();
  const Mat3 r_meas = 0.02 * Mat3::Identity();

  RngStream rng(42, 0);
  Vec6 x0;
  x0 << 0.5, -1.0, 2.0, 0.1, 0.0, -0.2;
  Mat6 p0 = 0.2 * Mat6::Identity();
  p0.diagonal().tail<3>().array() = 1.0;

  std::vector<Vec3> z;
  for (int k = 0; k < 30; ++k) z.push_back(Vec3(0.5, -1.0, 2.0) + 0.8 * rng.normal3());

  FactorGraphWindow window(cfg, false);
  GaussianBelief prior;
  prior.mean = State6::from_vec(x0);
  prior.cov = SymMatrix6::from(p0);
  window.initialize_with_prior(prior);
  for (const auto& zk : z) window.push_timestep_linear(zk, SymMatrix3::from(r_meas));
  const auto beliefs = window.optimize(false);
  const auto rts = oracles::rts_smoother(x0, p0, a, q, z, r_meas);

  double worst = 0.0;
  const long first = window.first_step_index();
  for (int k = 0; k < window.size(); ++k) {
    worst = std::max(worst, (beliefs[k].mean.to_vec() - rts.mean[first + k])
                                .lpNorm<Eigen::Infinity>());
    worst = std::max(worst,
                     (beliefs[k].cov.dense() - rts.cov[first + k]).lpNorm<Eigen::Infinity>());
  }
  const bool pass = worst < 1e-8;
  report(5, pass, "5a RTS max deviation " + io::csv_num(worst));
  CHECK(pass);
}

TEST_CASE("criterion 5b: QP solver matches exhaustive enumeration on 1e4 problems") {
  RngStream rng(43, 0);
  double worst = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 10'000; ++trial) {
    const int rows = 1 + static_cast<int>(rng.uniform() * 8);
    Mat3 root;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) root(i, j) = rng.normal();
    const Mat3 p = root * root.transpose() + 0.3 * Mat3::Identity();
    const Vec3 q = rng.normal3();
    Eigen::Matrix<double, Eigen::Dynamic, 3> g(rows, 3);
    VecX h(rows);
    const Vec3 interior = 0.5 * rng.normal3();
    for (int i = 0; i < rows; ++i) {
      g.row(i) = rng.normal3().transpose();
      h(i) = g.row(i).dot(interior) + 0.2 * rng.uniform();
    }
    const auto sol = solve_qp<3>(p, q, g, h);
    const auto oracle = oracles::enumerate_qp(p, q, g, h);
    REQUIRE(oracle.feasible);
    REQUIRE(sol.status == QpSolveStatus::optimal);
    worst = std::max(worst, (sol.x - oracle.x).lpNorm<Eigen::Infinity>());
    ++checked;
  }
  const bool pass = worst < 1e-6 && checked == 10'000;
  report(5, pass, "5b max |x - x_enum| = " + io::csv_num(worst) + " over 1e4 problems");
  CHECK(pass);
}

TEST_CASE("criterion 5c: factor jacobians vs central differences, 1e3 configurations") {
  RngStream rng(44, 0);
  const auto [a, bmat] = make_transition_matrices(0.05);
  (void)bmat;
  double worst = 0.0;
  int configs = 0;
  while (configs < 1000) {
    std::vector<Vec6> means(2);
    for (auto& m : means) m << 3.0 * rng.normal3(), rng.normal3();
    const Vec3 p_r = 3.0 * rng.normal3();
    if ((means[0].head<3>() - p_r).norm() < 0.3) continue;
    const Rotation3 rot = Rotation3::from_matrix(
        Eigen::AngleAxisd(2.0 * M_PI * rng.uniform(), rng.normal3().normalized())
            .toRotationMatrix());
    const PoseSnapshot snap{p_r, rot};
    const int kind = configs % 3;
    double err = 0.0;
    if (kind == 0) {
      const RangeFactor f{0, 2.0, 0.05, snap};
      const auto ev = evaluate_factor(Factor(f), means);
      const auto fd = oracles::finite_difference(
          [&](const Vec6& x) {
            std::vector<Vec6> m2(means);
            m2[0] = x;
            return VecX(evaluate_factor(Factor(f), m2)->residual);
          },
          means[0]);
      err = (MatX(ev->jac_a) - fd).cwiseAbs().maxCoeff() /
            std::max(1.0, ev->jac_a.cwiseAbs().maxCoeff());
    } else if (kind == 1) {
      const UnitBearing z = UnitBearing::normalized(
          (rot * (means[0].head<3>() - p_r)).normalized() + 0.3 * rng.normal3());
      const BearingFactor f{0, z, Mat2::Identity(), snap, true};
      const auto ev = evaluate_factor(Factor(f), means);
      if (!ev) continue;
      const UnitBearing h0 = UnitBearing::normalized(rot * (means[0].head<3>() - p_r));
      const TangentBasis basis0 = tangent_basis(h0);
      const auto fd = oracles::finite_difference(
          [&](const Vec6& x) {
            const UnitBearing h = UnitBearing::normalized(rot * (x.head<3>() - p_r));
            return VecX(Vec2(basis0.b.transpose() * *sphere_log(h, z)));
          },
          means[0]);
      err = (MatX(ev->jac_a) - fd).cwiseAbs().maxCoeff() /
            std::max(1.0, ev->jac_a.cwiseAbs().maxCoeff());
    } else {
      const DynamicsFactor f{0, a, Mat6::Identity()};
      const auto ev = evaluate_factor(Factor(f), means);
      for (int node = 0; node < 2; ++node) {
        const auto fd = oracles::finite_difference(
            [&](const Vec6& x) {
              std::vector<Vec6> m2(means);
              m2[node] = x;
              return VecX(evaluate_factor(Factor(f), m2)->residual);
            },
            means[node]);
        const MatX jac = node == 0 ? MatX(ev->jac_a) : MatX(ev->jac_b);
        err = std::max(err, (jac - fd).cwiseAbs().maxCoeff() /
                                std::max(1.0, jac.cwiseAbs().maxCoeff()));
      }
    }
    worst = std::max(worst, err);
    ++configs;
  }
  const bool pass = worst < 1e-5;
  report(5, pass, "5c max relative jacobian error " + io::csv_num(worst));
  CHECK(pass);
}

TEST_CASE("criterion 6: analytic spot values") {
  const double chi2 = chi2_quantile(3, 0.95);
  const bool chi2_ok = std::abs(chi2 - 7.81473) <= 1e-4;
  const bool cauchy_ok = std::abs(cauchy_loss(1.0, 1.0) - std::log(2.0)) <= 1e-12;

  SimConfig cfg;
  cfg.omega = 1.0;
  cfg.a_max = 1.0;
  RelativeKinematics kin;
  kin.d_hat = 2.0;
  kin.n_hat = Vec3(1, 0, 0);
  SafetyEnvelope env;
  env.d_min_eff = 1.5;
  env.h_near = 0.5;
  env.d_max_eff = 4.0;
  env.h_far = 2.0;
  const auto rows = hocbf_halfspaces(kin, env, cfg);
  const bool hocbf_ok = rows.b_near == -0.5;

  const bool pass = chi2_ok && cauchy_ok && hocbf_ok;
  report(6, pass,
         "chi2(3,.95)=" + io::csv_num(chi2) + ", cauchy(1,1)-ln2=" +
             io::csv_num(cauchy_loss(1.0, 1.0) - std::log(2.0)) +
             ", near bound=" + io::csv_num(rows.b_near));
  CHECK(chi2_ok);
  CHECK(cauchy_ok);
  CHECK(hocbf_ok);
}

TEST_CASE("criterion 7: CLI determinism, including across job counts") {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "satrack_acceptance";
  fs::remove_all(base);
  fs::create_directories(base);

  const auto run_cli = [&](const std::string& args) {
    const std::string cmd = std::string(SATRACK_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };
  const auto read_file = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  const std::string overrides = "--set horizon=100 --set runs=4 --set window_size=10 --seed 7";
  bool pass = true;
  // sweep-outliers: repeat run and jobs variation must be byte-identical.
  pass = pass && run_cli("sweep-outliers " + overrides + " --jobs 1 --out " +
                         (base / "s1").string()) == 0;
  pass = pass && run_cli("sweep-outliers " + overrides + " --jobs 1 --out " +
                         (base / "s2").string()) == 0;
  pass = pass && run_cli("sweep-outliers " + overrides + " --jobs 4 --out " +
                         (base / "s3").string()) == 0;
  const auto sweep = read_file(base / "s1" / "rmse_sweep.csv");
  pass = pass && !sweep.empty();
  pass = pass && sweep == read_file(base / "s2" / "rmse_sweep.csv");
  pass = pass && sweep == read_file(base / "s3" / "rmse_sweep.csv");
  pass = pass && read_file(base / "s1" / "summary.csv") ==
                     read_file(base / "s3" / "summary.csv");

  // sim-control with a jobs variation.
  pass = pass && run_cli("sim-control " + overrides + " --jobs 1 --out " +
                         (base / "c1").string()) == 0;
  pass = pass && run_cli("sim-control " + overrides + " --jobs 3 --out " +
                         (base / "c2").string()) == 0;
  pass = pass && read_file(base / "c1" / "control_trace.csv") ==
                     read_file(base / "c2" / "control_trace.csv");
  pass = pass && read_file(base / "c1" / "summary.csv") ==
                     read_file(base / "c2" / "summary.csv");

  // coverage twice.
  pass = pass && run_cli("coverage " + overrides + " --jobs 2 --out " +
                         (base / "v1").string()) == 0;
  pass = pass && run_cli("coverage " + overrides + " --jobs 1 --out " +
                         (base / "v2").string()) == 0;
  pass = pass && read_file(base / "v1" / "coverage.csv") ==
                     read_file(base / "v2" / "coverage.csv");

  report(7, pass, "byte-identical CSVs across reruns and --jobs {1,3,4}");
  CHECK(pass);
}
