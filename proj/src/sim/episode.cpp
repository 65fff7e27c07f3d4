#include "satrack/sim/episode.hpp"

#include "satrack/sensing.hpp"
#include "satrack/stats.hpp"

#include <cmath>

namespace satrack {
namespace {

// Sensor x-axis aimed at horizontal bearing psi: R_SE = Rz(psi)^T.
Rotation3 yaw_rotation(double psi) { return Rotation3::about_z(-psi); }

bool yaw_from(const Vec3& from, const Vec3& to, double& psi) {
  const double dx = to.x() - from.x(), dy = to.y() - from.y();
  if (std::hypot(dx, dy) < 1e-9) return false;
  psi = std::atan2(dy, dx);
  return true;
}

}  // namespace

const char* run_controller_name(RunControllerKind kind) {
  switch (kind) {
    case RunControllerKind::scripted: return "scripted";
    case RunControllerKind::clf_only: return "clf_only";
    case RunControllerKind::fixed_clf_cbf: return "fixed_clf_cbf";
    case RunControllerKind::ca_clf_cbf: return "ca_clf_cbf";
  }
  return "unknown";
}

EpisodeTrace run_episode(const Scenario& scenario, EstimatorKind estimator_kind,
                         RunControllerKind controller_kind, const SimConfig& cfg,
                         std::uint64_t seed) {
  RngStream rng(seed, 0);
  auto estimator = make_estimator(estimator_kind, cfg);

  std::optional<StandoffController> controller;
  if (controller_kind != RunControllerKind::scripted) {
    const ControllerKind kind = controller_kind == RunControllerKind::clf_only
                                    ? ControllerKind::clf_only
                                    : (controller_kind == RunControllerKind::fixed_clf_cbf
                                           ? ControllerKind::fixed_clf_cbf
                                           : ControllerKind::ca_clf_cbf);
    controller.emplace(cfg, kind);
  }
  const double chi2_q = chi2_quantile(3, 1.0 - cfg.alpha_risk);

  // Truth initialization from the nominal path and the scenario's UAV start.
  TargetState target;
  {
    Vec3 p, v, a;
    scenario.target_nominal(0.0, p, v, a);
    target.state = {p, v};
  }
  UavState uav;
  if (scenario.closed_loop) {
    uav.state = scenario.uav_init;
  } else {
    Vec3 p, v;
    scenario.uav_script(0.0, p, v);
    uav.state = {p, v};
  }

  const Mat6 process_cov = default_target_process_cov();
  const Vec3 pos_noise_std = process_cov.diagonal().head<3>().cwiseSqrt();
  const Vec3 vel_noise_std = process_cov.diagonal().tail<3>().cwiseSqrt();

  double psi = 0.0;
  yaw_from(uav.state.position, target.state.position, psi);  // initial aim at the true target

  EpisodeTrace trace;
  trace.steps.reserve(cfg.horizon);
  std::optional<GaussianBelief> belief;

  for (int k = 0; k < cfg.horizon; ++k) {
    const double t = k * cfg.dt;
    // Yaw policy: point the sensor x-axis at the estimated target.
    if (belief) {
      double est_psi;
      if (yaw_from(uav.state.position, belief->mean.position, est_psi)) psi = est_psi;
    }
    uav.pose_rotation = yaw_rotation(psi);

    // Sense. Measurement noise is drawn unconditionally to keep the stream
    // aligned even when the geometry degenerates.
    const double d_true = (target.state.position - uav.state.position).norm();
    const RangeMeasurement z_r =
        measure_range(std::max(d_true, 1e-12), rng, cfg.sigma_r);
    std::optional<std::pair<double, double>> angles;
    try {
      angles = true_bearing_angles(uav.pose_rotation, uav.state.position,
                                   target.state.position);
    } catch (const std::exception&) {
      angles = std::nullopt;
    }
    const double mult = scenario.noise_multiplier ? scenario.noise_multiplier(k) : 1.0;
    SimConfig step_cfg = cfg;
    step_cfg.sigma_az *= mult;
    step_cfg.sigma_el *= mult;
    step_cfg.p_out = scenario.p_out_of_step ? scenario.p_out_of_step(k) : cfg.p_out;
    const BearingMeasurement z_b_raw =
        measure_bearing(angles.value_or(std::pair<double, double>(0.0, 0.0)), rng, step_cfg);
    std::optional<BearingMeasurement> z_b;
    if (angles) z_b = z_b_raw;

    // Estimate.
    belief = estimator->step(uav, z_r, z_b);

    StepRecord rec;
    rec.step = k;
    rec.uav_truth = uav.state;
    rec.target_truth = target.state;
    rec.z_range = z_r.z_r;
    rec.z_az = z_b_raw.azimuth;
    rec.z_el = z_b_raw.elevation;
    rec.bearing_valid = z_b.has_value();
    rec.belief = *belief;
    rec.r = confidence_radius_with_quantile(
        SymMatrix3::from(belief->cov.dense().topLeftCorner<3, 3>()), chi2_q);
    rec.d_true = d_true;
    rec.d_hat = (belief->mean.position - uav.state.position).norm();

    // Control.
    Vec3 u = Vec3::Zero();
    if (controller) {
      const ControlStep cs = controller->compute(*belief, uav);
      u = cs.cmd.u;
      rec.u = u;
      rec.qp_status = cs.cmd.qp_status;
      rec.h_near = cs.env.h_near;
      rec.h_far = cs.env.h_far;
      rec.controlled = true;
    }
    trace.steps.push_back(rec);

    // Actuate.
    if (scenario.closed_loop) {
      uav = step_uav(uav, u, cfg.dt, cfg.u_min, cfg.u_max);
    } else {
      Vec3 p, v;
      scenario.uav_script(t + cfg.dt, p, v);
      uav.state = {p, v};
    }
    Vec3 p_nom, v_nom, a_nom;
    scenario.target_nominal(t, p_nom, v_nom, a_nom);
    Vec3 a_cmd = a_nom + scenario.track_kp * (p_nom - target.state.position) +
                 scenario.track_kd * (v_nom - target.state.velocity);
    const double a_norm = a_cmd.norm();
    if (a_norm > cfg.a_max) a_cmd *= cfg.a_max / a_norm;
    Vec6 noise;
    noise << pos_noise_std.cwiseProduct(rng.normal3()),
        vel_noise_std.cwiseProduct(rng.normal3());
    noise *= scenario.process_noise_scale;
    target = step_target(target, a_cmd, cfg.dt, noise, cfg.a_max);
  }
  return trace;
}

RunMetrics compute_metrics(const EpisodeTrace& trace, const SimConfig& cfg) {
  RunMetrics m;
  if (trace.steps.empty()) return m;
  double sq_sum = 0.0, r_sum = 0.0;
  m.min_d_true = trace.steps.front().d_true;
  m.max_d_true = m.min_d_true;
  for (const auto& s : trace.steps) {
    sq_sum += (s.belief.mean.position - s.target_truth.position).squaredNorm();
    if (s.d_true < cfg.d_min || s.d_true > cfg.d_max) ++m.violation_steps;
    m.min_d_true = std::min(m.min_d_true, s.d_true);
    m.max_d_true = std::max(m.max_d_true, s.d_true);
    r_sum += s.r;
    m.max_r = std::max(m.max_r, s.r);
    if (s.controlled && s.qp_status == CommandStatus::relaxed) ++m.relaxed_steps;
    if (s.controlled && s.qp_status == CommandStatus::fallback) ++m.fallback_steps;
  }
  const double n = static_cast<double>(trace.steps.size());
  m.rmse_pos = std::sqrt(sq_sum / n);
  m.mean_r = r_sum / n;
  return m;
}

double coverage_fraction(const EpisodeTrace& trace) {
  if (trace.steps.empty()) return 0.0;
  int covered = 0;
  for (const auto& s : trace.steps) {
    const double err = (s.belief.mean.position - s.target_truth.position).norm();
    if (err <= s.r) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(trace.steps.size());
}

}  // namespace satrack
