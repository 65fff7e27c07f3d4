#include "satrack/estimation/ekf.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace satrack {
namespace {

SymMatrix6 to_spd(Mat6 m, bool* degraded) {
  m = 0.5 * (m + m.transpose());
  Eigen::LLT<Mat6> llt(m);
  if (llt.info() != Eigen::Success) {
    if (degraded) *degraded = true;
    Eigen::SelfAdjointEigenSolver<Mat6> eig(m);
    const Vec6 vals = eig.eigenvalues().cwiseMax(1e-12);
    m = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
    m = 0.5 * (m + m.transpose());
  }
  return SymMatrix6::from(m);
}

}  // namespace

GaussianBelief ekf_step(const GaussianBelief& belief, const UavState& pose,
                        const RangeMeasurement& z_r,
                        const std::optional<BearingMeasurement>& z_b, const SimConfig& cfg) {
  const auto [a, b] = make_transition_matrices(cfg.dt);
  (void)b;
  Vec6 x = a * belief.mean.to_vec();
  Mat6 p = a * belief.cov.dense() * a.transpose() + default_target_process_cov();
  bool degraded = false;

  // Range update.
  {
    const Vec3 rel = x.head<3>() - pose.state.position;
    const double d = rel.norm();
    if (d > 1e-6) {
      Eigen::Matrix<double, 1, 6> h = Eigen::Matrix<double, 1, 6>::Zero();
      h.leftCols<3>() = (rel / d).transpose();
      const double s = (h * p * h.transpose())(0, 0) + z_r.sigma_r * z_r.sigma_r;
      if (s > 1e-300) {
        const Vec6 k = p * h.transpose() / s;
        x += k * (z_r.z_r - d);
        const Mat6 ikh = Mat6::Identity() - k * h;
        p = ikh * p * ikh.transpose() + k * (z_r.sigma_r * z_r.sigma_r) * k.transpose();
      } else {
        p *= 2.0;
        degraded = true;
      }
    }
  }

  // Bearing update.
  if (z_b) {
    const Mat3 r_se = pose.pose_rotation.matrix();
    const Vec3 r_s = r_se * (x.head<3>() - pose.state.position);
    const double rho = std::hypot(r_s.x(), r_s.y());
    const double d2 = r_s.squaredNorm();
    if (rho > 1e-9 && d2 > 1e-12) {
      const double az = std::atan2(r_s.y(), r_s.x());
      const double el = std::atan2(r_s.z(), rho);
      Eigen::Matrix<double, 2, 3> dang;
      dang << -r_s.y() / (rho * rho), r_s.x() / (rho * rho), 0.0,
          -r_s.x() * r_s.z() / (d2 * rho), -r_s.y() * r_s.z() / (d2 * rho), rho / d2;
      Eigen::Matrix<double, 2, 6> h = Eigen::Matrix<double, 2, 6>::Zero();
      h.leftCols<3>() = dang * r_se;
      const Mat2 s = h * p * h.transpose() + z_b->cov.dense();
      Eigen::LLT<Mat2> llt(s);
      if (llt.info() == Eigen::Success) {
        const Eigen::Matrix<double, 6, 2> k = llt.solve(h * p).transpose();
        Vec2 innov(wrap_angle(z_b->azimuth - az), z_b->elevation - el);
        x += k * innov;
        const Mat6 ikh = Mat6::Identity() - k * h;
        p = ikh * p * ikh.transpose() + k * z_b->cov.dense() * k.transpose();
      } else {
        p *= 2.0;
        degraded = true;
      }
    }
  }

  GaussianBelief out;
  out.mean = State6::from_vec(x);
  out.cov = to_spd(p, &degraded);
  out.degraded = degraded;
  return out;
}

}  // namespace satrack
