#pragma once

#include "satrack/types.hpp"

#include <stdexcept>
#include <utility>

namespace satrack {

/// Discrete double-integrator transition pair (A, B) for step dt:
///   A = [I dt*I; 0 I],  B = [dt^2/2*I; dt*I].
template <typename S = double>
std::pair<Mat6T<S>, Eigen::Matrix<S, 6, 3>> make_transition_matrices(S dt) {
  if (!(dt > S(0))) throw std::invalid_argument("make_transition_matrices: dt must be positive");
  Mat6T<S> a = Mat6T<S>::Identity();
  a.template topRightCorner<3, 3>() = dt * Mat3T<S>::Identity();
  Eigen::Matrix<S, 6, 3> b = Eigen::Matrix<S, 6, 3>::Zero();
  b.template topRows<3>() = (S(0.5) * dt * dt) * Mat3T<S>::Identity();
  b.template bottomRows<3>() = dt * Mat3T<S>::Identity();
  return {a, b};
}

struct UavState {
  State6 state;
  Rotation3 pose_rotation;  // R_SE, transforms global-frame vectors into the sensor frame
};

struct TargetState {
  State6 state;
};

/// Default process-noise covariance of the target dynamics: diagonal with
/// 0.01 m position and 0.05 m/s velocity std per axis. The maneuvering
/// acceleration itself is scenario-defined and enters through B.
inline Mat6 default_target_process_cov() {
  Vec6 d;
  d << 1e-4, 1e-4, 1e-4, 2.5e-3, 2.5e-3, 2.5e-3;
  return d.asDiagonal();
}

/// One UAV step under commanded acceleration u; the caller supplies the next
/// pose rotation (yaw policy is a scenario decision).
inline UavState step_uav(const UavState& x, const Vec3& u, double dt, double u_min,
                         double u_max, const Rotation3& next_rotation) {
  if (u.minCoeff() < u_min - 1e-12 || u.maxCoeff() > u_max + 1e-12)
    throw std::invalid_argument("step_uav: input outside saturation box (controller bug)");
  const auto [a, b] = make_transition_matrices(dt == 0.0 ? 1.0 : dt);
  UavState next;
  if (dt == 0.0) {
    next.state = x.state;
  } else {
    next.state = State6::from_vec(a * x.state.to_vec() + b * u);
  }
  next.pose_rotation = next_rotation;
  return next;
}

inline UavState step_uav(const UavState& x, const Vec3& u, double dt, double u_min,
                         double u_max) {
  return step_uav(x, u, dt, u_min, u_max, x.pose_rotation);
}

/// One target step: deterministic part A*x + B*a_true, plus additive
/// 6-vector process noise (drawn outside from the process covariance).
inline TargetState step_target(const TargetState& x, const Vec3& a_true, double dt,
                               const Vec6& noise, double a_max) {
  if (a_true.norm() > a_max + 1e-12)
    throw std::invalid_argument("step_target: acceleration exceeds a_max (scenario bug)");
  if (dt == 0.0) return x;
  const auto [a, b] = make_transition_matrices(dt);
  return {State6::from_vec(a * x.state.to_vec() + b * a_true + noise)};
}

/// Altitude error z_R - z_T.
inline double altitude_error(const UavState& uav, const TargetState& target) {
  return uav.state.position.z() - target.state.position.z();
}

}  // namespace satrack
