#pragma once

#include "satrack/config.hpp"
#include "satrack/estimation/belief.hpp"
#include "satrack/qp.hpp"

#include <cstdint>
#include <optional>

namespace satrack {

/// Estimator-side relative state used by the controller: standoff distance,
/// line-of-sight direction (global frame), radial/tangential relative
/// velocity split, altitude error and rate.
struct RelativeKinematics {
  double d_hat = 0.0;
  Vec3 n_hat = Vec3::UnitX();
  double v_r_hat = 0.0;
  Vec3 v_tau_hat = Vec3::Zero();
  double e_z_hat = 0.0;
  double v_z_hat = 0.0;
};

/// Uncertainty-tightened range corridor and its barrier values.
struct SafetyEnvelope {
  double r = 0.0;  // confidence radius applied (before the clamping rule)
  double d_min_eff = 0.0;
  double d_max_eff = 0.0;
  double h_near = 0.0;
  double h_far = 0.0;
};

struct DeadzoneErrors {
  double e_r = 0.0;
  double e_z = 0.0;
};

enum class CommandStatus { optimal, relaxed, fallback };

const char* command_status_name(CommandStatus s);

struct ControlCommand {
  Vec3 u = Vec3::Zero();
  CommandStatus qp_status = CommandStatus::optimal;
  std::uint16_t active_constraints = 0;  // bit per QP row, fixed row order
};

/// Spherical over-bound of the (1-alpha) position confidence ellipsoid:
/// sqrt(chi2_quantile(3, 1-alpha) * lambda_max(cov)).
double confidence_radius(const SymMatrix3& cov_pos, double alpha_risk);
double confidence_radius_with_quantile(const SymMatrix3& cov_pos, double chi2_q);

/// Relative kinematics from the current belief and UAV state. Returns
/// nullopt when the estimated distance is below the 0.05 m floor guarding
/// the 1/d terms (caller falls back to pure damping).
std::optional<RelativeKinematics> relative_kinematics(const GaussianBelief& belief,
                                                      const UavState& uav);

/// Dead-zone errors sat0(|x| - R) sign(x) for x = d_hat - d_star and e_z_hat.
DeadzoneErrors deadzone_errors(double d_hat, double e_z_hat, double r, double d_star);

/// Quadratic CLF over dead-zoned errors and relative velocities.
double clf_value(const RelativeKinematics& kin, const DeadzoneErrors& errs,
                 const SimConfig& cfg);

/// Nominal reference acceleration stabilizing the unconstrained error dynamics.
Vec3 reference_accel(const RelativeKinematics& kin, const DeadzoneErrors& errs,
                     const SimConfig& cfg);

/// Effective limits d_min + R_c, d_max - R_c with R_c = min(R, 0.45 (d_max -
/// d_min)) so the corridor never crosses, plus the barrier values at d_hat.
SafetyEnvelope safety_envelope(double d_hat, double r, const SimConfig& cfg);

/// Critically damped HOCBF halfspaces a^T u <= b for the near and far
/// barriers, with the worst-case target acceleration projection.
struct HocbfRows {
  Vec3 a_near = Vec3::Zero();
  double b_near = 0.0;
  Vec3 a_far = Vec3::Zero();
  double b_far = 0.0;
};
HocbfRows hocbf_halfspaces(const RelativeKinematics& kin, const SafetyEnvelope& env,
                           const SimConfig& cfg);

enum class ControllerKind { clf_only, fixed_clf_cbf, ca_clf_cbf };

const char* controller_name(ControllerKind kind);

/// Per-step controller output plus the quantities worth logging.
struct ControlStep {
  ControlCommand cmd;
  double r = 0.0;  // confidence radius from the belief (before any zeroing)
  SafetyEnvelope env;
  double d_hat = 0.0;
  double clf = 0.0;
};

/// CLF-CBF safety-filter controller. The covariance-aware kind feeds the
/// confidence radius into both the dead zones and the envelope;
/// fixed_clf_cbf runs the same pipeline with R frozen at zero (constant
/// bounds, no uncertainty adaptation); clf_only drops the HOCBF rows and
/// keeps the input box and speed constraints.
class StandoffController {
 public:
  StandoffController(const SimConfig& cfg, ControllerKind kind);

  ControlStep compute(const GaussianBelief& belief, const UavState& uav) const;

 private:
  SimConfig cfg_;
  ControllerKind kind_;
  double chi2_q_;  // chi-square quantile cached across steps
};

/// One-shot covariance-aware control step (convenience over StandoffController).
ControlCommand compute_control(const GaussianBelief& belief, const UavState& uav,
                               const SimConfig& cfg);

}  // namespace satrack
