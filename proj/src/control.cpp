#include "satrack/control.hpp"

#include "satrack/stats.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace satrack {
namespace {

constexpr double kDistanceFloor = 0.05;  // m, guards 1/d and LoS normalization
constexpr double kEnvelopeClampFraction = 0.45;
constexpr double kSlackWeight = 1e4;
constexpr double kActiveTol = 1e-7;

double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

const char* command_status_name(CommandStatus s) {
  switch (s) {
    case CommandStatus::optimal: return "optimal";
    case CommandStatus::relaxed: return "relaxed";
    case CommandStatus::fallback: return "fallback";
  }
  return "unknown";
}

const char* controller_name(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::clf_only: return "clf_only";
    case ControllerKind::fixed_clf_cbf: return "fixed_clf_cbf";
    case ControllerKind::ca_clf_cbf: return "ca_clf_cbf";
  }
  return "unknown";
}

double confidence_radius_with_quantile(const SymMatrix3& cov_pos, double chi2_q) {
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov_pos.dense());
  const double lambda_max = std::max(0.0, eig.eigenvalues().maxCoeff());
  return std::sqrt(chi2_q * lambda_max);
}

double confidence_radius(const SymMatrix3& cov_pos, double alpha_risk) {
  return confidence_radius_with_quantile(cov_pos, chi2_quantile(3, 1.0 - alpha_risk));
}

std::optional<RelativeKinematics> relative_kinematics(const GaussianBelief& belief,
                                                      const UavState& uav) {
  const Vec3 rel = belief.mean.position - uav.state.position;
  const double d = rel.norm();
  if (d <= kDistanceFloor) return std::nullopt;
  RelativeKinematics kin;
  kin.d_hat = d;
  kin.n_hat = rel / d;
  const Vec3 v_rel = belief.mean.velocity - uav.state.velocity;
  kin.v_r_hat = kin.n_hat.dot(v_rel);
  kin.v_tau_hat = v_rel - kin.v_r_hat * kin.n_hat;
  kin.e_z_hat = uav.state.position.z() - belief.mean.position.z();
  kin.v_z_hat = uav.state.velocity.z() - belief.mean.velocity.z();
  return kin;
}

DeadzoneErrors deadzone_errors(double d_hat, double e_z_hat, double r, double d_star) {
  const double er_raw = d_hat - d_star;
  DeadzoneErrors errs;
  errs.e_r = std::max(std::abs(er_raw) - r, 0.0) * sign0(er_raw);
  errs.e_z = std::max(std::abs(e_z_hat) - r, 0.0) * sign0(e_z_hat);
  return errs;
}

double clf_value(const RelativeKinematics& kin, const DeadzoneErrors& errs,
                 const SimConfig& cfg) {
  return 0.5 * (cfg.k_r * errs.e_r * errs.e_r + cfg.k_vr * kin.v_r_hat * kin.v_r_hat +
                cfg.k_z * errs.e_z * errs.e_z + cfg.k_vz * kin.v_z_hat * kin.v_z_hat +
                cfg.k_tau * kin.v_tau_hat.squaredNorm());
}

Vec3 reference_accel(const RelativeKinematics& kin, const DeadzoneErrors& errs,
                     const SimConfig& cfg) {
  return (cfg.k_r * errs.e_r + cfg.k_vr * kin.v_r_hat) * kin.n_hat +
         cfg.k_tau * kin.v_tau_hat -
         (cfg.k_z * errs.e_z + cfg.k_vz * kin.v_z_hat) * Vec3::UnitZ();
}

SafetyEnvelope safety_envelope(double d_hat, double r, const SimConfig& cfg) {
  SafetyEnvelope env;
  env.r = r;
  const double r_c = std::min(r, kEnvelopeClampFraction * (cfg.d_max - cfg.d_min));
  env.d_min_eff = cfg.d_min + r_c;
  env.d_max_eff = cfg.d_max - r_c;
  env.h_near = d_hat - env.d_min_eff;
  env.h_far = env.d_max_eff - d_hat;
  return env;
}

HocbfRows hocbf_halfspaces(const RelativeKinematics& kin, const SafetyEnvelope& env,
                           const SimConfig& cfg) {
  const double curvature = kin.v_tau_hat.squaredNorm() / kin.d_hat;
  HocbfRows rows;
  rows.a_near = kin.n_hat;
  rows.b_near = -cfg.a_max + curvature + 2.0 * cfg.omega * kin.v_r_hat +
                cfg.omega * cfg.omega * env.h_near;
  rows.a_far = -kin.n_hat;
  rows.b_far = -cfg.a_max - curvature - 2.0 * cfg.omega * kin.v_r_hat +
               cfg.omega * cfg.omega * env.h_far;
  return rows;
}

StandoffController::StandoffController(const SimConfig& cfg, ControllerKind kind)
    : cfg_(cfg), kind_(kind), chi2_q_(chi2_quantile(3, 1.0 - cfg.alpha_risk)) {}

ControlStep StandoffController::compute(const GaussianBelief& belief,
                                        const UavState& uav) const {
  ControlStep step;
  const Mat3 pos_cov = belief.cov.dense().topLeftCorner<3, 3>();
  step.r = confidence_radius_with_quantile(SymMatrix3::from(pos_cov), chi2_q_);
  // fixed_clf_cbf ignores uncertainty entirely: R = 0 in dead zones and envelope.
  const double r_used = (kind_ == ControllerKind::fixed_clf_cbf) ? 0.0 : step.r;

  const auto box_speed_clamp = [&](Vec3 u) {
    for (int i = 0; i < 3; ++i) {
      const double lo = std::max(cfg_.u_min, (-cfg_.v_max - uav.state.velocity(i)) / cfg_.dt);
      const double hi = std::min(cfg_.u_max, (cfg_.v_max - uav.state.velocity(i)) / cfg_.dt);
      if (lo <= hi)
        u(i) = std::clamp(u(i), lo, hi);
      else
        u(i) = std::clamp(u(i), cfg_.u_min, cfg_.u_max);  // box is physical, keep it
    }
    return u;
  };

  const auto kin = relative_kinematics(belief, uav);
  if (!kin) {
    step.cmd.u = box_speed_clamp(-cfg_.k_vr * uav.state.velocity);
    step.cmd.qp_status = CommandStatus::fallback;
    step.env = safety_envelope(0.0, r_used, cfg_);
    return step;
  }
  step.d_hat = kin->d_hat;
  const DeadzoneErrors errs = deadzone_errors(kin->d_hat, kin->e_z_hat, r_used, cfg_.d_star);
  step.clf = clf_value(*kin, errs, cfg_);
  const Vec3 u_ref = reference_accel(*kin, errs, cfg_);
  step.env = safety_envelope(kin->d_hat, r_used, cfg_);
  const HocbfRows cbf = hocbf_halfspaces(*kin, step.env, cfg_);

  const bool with_cbf = kind_ != ControllerKind::clf_only;
  const int rows = with_cbf ? 14 : 12;
  Eigen::Matrix<double, Eigen::Dynamic, 3> g(rows, 3);
  VecX h(rows);
  int r0 = 0;
  if (with_cbf) {
    g.row(0) = cbf.a_near.transpose();
    h(0) = cbf.b_near;
    g.row(1) = cbf.a_far.transpose();
    h(1) = cbf.b_far;
    r0 = 2;
  }
  for (int i = 0; i < 3; ++i) {
    g.row(r0 + i) = Vec3::Unit(i).transpose();
    h(r0 + i) = cfg_.u_max;
    g.row(r0 + 3 + i) = -Vec3::Unit(i).transpose();
    h(r0 + 3 + i) = -cfg_.u_min;
    g.row(r0 + 6 + i) = Vec3::Unit(i).transpose();
    h(r0 + 6 + i) = (cfg_.v_max - uav.state.velocity(i)) / cfg_.dt;
    g.row(r0 + 9 + i) = -Vec3::Unit(i).transpose();
    h(r0 + 9 + i) = (cfg_.v_max + uav.state.velocity(i)) / cfg_.dt;
  }

  const auto mark_active = [&](const Vec3& u) {
    std::uint16_t bits = 0;
    for (int i = 0; i < rows; ++i)
      if (std::abs(g.row(i).dot(u) - h(i)) <= kActiveTol) bits |= static_cast<std::uint16_t>(1u << i);
    return bits;
  };

  const auto sol = solve_qp<3>(Mat3::Identity(), Vec3(-u_ref), g, h);
  if (sol.status == QpSolveStatus::optimal) {
    step.cmd.u = box_speed_clamp(sol.x);
    step.cmd.qp_status = CommandStatus::optimal;
    step.cmd.active_constraints = mark_active(sol.x);
    return step;
  }

  if (with_cbf) {
    // Retry with a shared slack on the HOCBF rows only; the input box and
    // speed rows are physical limits and stay hard.
    using Mat4 = Eigen::Matrix<double, 4, 4>;
    using Vec4 = Eigen::Matrix<double, 4, 1>;
    Eigen::Matrix<double, Eigen::Dynamic, 4> gs(rows + 1, 4);
    VecX hs(rows + 1);
    gs.setZero();
    for (int i = 0; i < rows; ++i) {
      gs.block<1, 3>(i, 0) = g.row(i);
      hs(i) = h(i);
    }
    gs(0, 3) = -1.0;
    gs(1, 3) = -1.0;
    gs(rows, 3) = -1.0;  // s >= 0
    hs(rows) = 0.0;
    Mat4 p = Mat4::Identity();
    p(3, 3) = kSlackWeight;
    Vec4 q;
    q << -u_ref, 0.0;
    const auto rsol = solve_qp<4>(p, q, gs, hs);
    if (rsol.status == QpSolveStatus::optimal) {
      const Vec3 u = rsol.x.head<3>();
      step.cmd.u = box_speed_clamp(u);
      step.cmd.qp_status = CommandStatus::relaxed;
      step.cmd.active_constraints = mark_active(u);
      return step;
    }
  }

  step.cmd.u = box_speed_clamp(-cfg_.k_vr * uav.state.velocity);
  step.cmd.qp_status = CommandStatus::fallback;
  return step;
}

ControlCommand compute_control(const GaussianBelief& belief, const UavState& uav,
                               const SimConfig& cfg) {
  return StandoffController(cfg, ControllerKind::ca_clf_cbf).compute(belief, uav).cmd;
}

}  // namespace satrack
