#include "satrack/estimation/belief.hpp"

namespace satrack {

GaussianBelief initialize_belief(const UavState& pose, const RangeMeasurement& z_r,
                                 const BearingMeasurement& z_b, const SimConfig& cfg) {
  (void)cfg;
  const Mat3 r_es = pose.pose_rotation.matrix().transpose();
  const UnitBearing u_s = angles_to_unit(z_b);
  const Vec3 u_e = r_es * u_s.v;

  const double ca = std::cos(z_b.azimuth), sa = std::sin(z_b.azimuth);
  const double cb = std::cos(z_b.elevation), sb = std::sin(z_b.elevation);
  const Vec3 du_da(-cb * sa, cb * ca, 0.0);
  const Vec3 du_db(-sb * ca, -sb * sa, cb);

  // First-order propagation of (range, azimuth, elevation) noise through the
  // back-projection p = p_R + z_r * R^T u(alpha, beta).
  Mat3 jac;
  jac.col(0) = u_e;
  jac.col(1) = z_r.z_r * (r_es * du_da);
  jac.col(2) = z_r.z_r * (r_es * du_db);
  Mat3 meas_cov = Mat3::Zero();
  meas_cov(0, 0) = z_r.sigma_r * z_r.sigma_r;
  meas_cov.bottomRightCorner<2, 2>() = z_b.cov.dense();
  Mat3 pos_cov = jac * meas_cov * jac.transpose();
  pos_cov.diagonal().array() += 1e-12;

  constexpr double kInitVelStd = 1.0;  // m/s per axis; no velocity information in one epoch
  Mat6 cov = Mat6::Zero();
  cov.topLeftCorner<3, 3>() = pos_cov;
  cov.bottomRightCorner<3, 3>() = kInitVelStd * kInitVelStd * Mat3::Identity();

  GaussianBelief belief;
  belief.mean.position = pose.state.position + z_r.z_r * u_e;
  belief.mean.velocity = Vec3::Zero();
  belief.cov = SymMatrix6::from(0.5 * (cov + cov.transpose()));
  return belief;
}

}  // namespace satrack
