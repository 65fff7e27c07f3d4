#pragma once

#include "satrack/config.hpp"
#include "satrack/rng.hpp"
#include "satrack/types.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

namespace satrack {

struct RangeMeasurement {
  double z_r;      // m
  double sigma_r;  // m, > 0 when used as a noise model
};

struct BearingMeasurement {
  double azimuth;    // rad, in (-pi, pi]
  double elevation;  // rad, in [-pi/2, pi/2]
  SymMatrix2 cov;    // reported angle covariance (always the nominal one)
};

/// Unit vector on S^2, validated to 1e-12.
struct UnitBearing {
  Vec3 v;

  static UnitBearing from(const Vec3& raw) {
    const double n = raw.norm();
    if (!(std::abs(n - 1.0) <= 1e-12))
      throw std::invalid_argument("UnitBearing: vector is not unit length");
    return {raw};
  }
  static UnitBearing normalized(const Vec3& raw) {
    const double n = raw.norm();
    if (!(n > 0.0)) throw std::invalid_argument("UnitBearing: zero vector");
    return {raw / n};
  }
};

/// 3x2 orthonormal basis of the tangent plane at a point on S^2.
struct TangentBasis {
  Mat32 b;
};

inline double wrap_angle(double a) {
  if (a > -M_PI && a <= M_PI) return a;  // already in range: keep exact
  double w = std::fmod(a + M_PI, 2.0 * M_PI);
  if (w <= 0.0) w += 2.0 * M_PI;
  return w - M_PI;
}

inline double true_range(const Vec3& p_r, const Vec3& p_t) {
  const double d = (p_t - p_r).norm();
  if (!(d > 0.0)) throw std::invalid_argument("true_range: coincident points");
  return d;
}

inline RangeMeasurement measure_range(double d, RngStream& rng, double sigma_r) {
  if (!(d > 0.0)) throw std::invalid_argument("measure_range: range must be positive");
  return {d + rng.normal(0.0, sigma_r), sigma_r};
}

/// Azimuth/elevation of the target seen from the sensor frame:
/// r_S = R_SE (p_T - p_R), alpha = atan2(y_S, x_S), beta = atan2(z_S, hypot(x_S, y_S)).
inline std::pair<double, double> true_bearing_angles(const Rotation3& rotation,
                                                     const Vec3& p_r, const Vec3& p_t) {
  if ((p_t - p_r).norm() == 0.0)
    throw std::invalid_argument("true_bearing_angles: coincident points");
  const Vec3 r_s = rotation * (p_t - p_r);
  const double rho = std::hypot(r_s.x(), r_s.y());
  if (rho < 1e-12 * std::abs(r_s.z()))
    throw std::domain_error("true_bearing_angles: target on sensor z-axis, azimuth undefined");
  return {std::atan2(r_s.y(), r_s.x()), std::atan2(r_s.z(), rho)};
}

/// Noisy angle measurement with heavy-tailed outlier injection: with
/// probability p_out the nominal Gaussian noise is replaced by a
/// sigma_out-scaled one. The reported covariance is always the nominal
/// diag(sigma_az^2, sigma_el^2) -- outliers carry no label.
///
/// Draw order is fixed (one uniform, two normals) so the consumed stream is
/// identical for every p_out, which keeps sweeps seed-comparable.
inline BearingMeasurement measure_bearing(const std::pair<double, double>& truth,
                                          RngStream& rng, const SimConfig& cfg) {
  const bool outlier = rng.bernoulli(cfg.p_out);
  const double n_az = rng.normal();
  const double n_el = rng.normal();
  const double s_az = outlier ? cfg.sigma_out : cfg.sigma_az;
  const double s_el = outlier ? cfg.sigma_out : cfg.sigma_el;
  const double az = wrap_angle(truth.first + s_az * n_az);
  double el = truth.second + s_el * n_el;
  el = std::min(std::max(el, -M_PI / 2.0), M_PI / 2.0);
  Vec2 nominal_var(cfg.sigma_az * cfg.sigma_az, cfg.sigma_el * cfg.sigma_el);
  return {az, el, SymMatrix2::diagonal(nominal_var)};
}

/// Angles -> unit vector: [cos(b)cos(a), cos(b)sin(a), sin(b)].
inline UnitBearing angles_to_unit(double azimuth, double elevation) {
  const double ca = std::cos(azimuth), sa = std::sin(azimuth);
  const double cb = std::cos(elevation), sb = std::sin(elevation);
  return UnitBearing::normalized(Vec3(cb * ca, cb * sa, sb));
}

inline UnitBearing angles_to_unit(const BearingMeasurement& b) {
  return angles_to_unit(b.azimuth, b.elevation);
}

/// Inverse of angles_to_unit on the open domain.
inline std::pair<double, double> unit_to_angles(const UnitBearing& u) {
  return {std::atan2(u.v.y(), u.v.x()), std::atan2(u.v.z(), std::hypot(u.v.x(), u.v.y()))};
}

/// Predicted (noise-free) bearing: R_SE (p_T - p_R) normalized.
inline UnitBearing predicted_unit_bearing(const Rotation3& rotation, const Vec3& p_r,
                                          const Vec3& p_t) {
  const Vec3 rel = rotation * (p_t - p_r);
  if (!(rel.norm() > 0.0))
    throw std::invalid_argument("predicted_unit_bearing: coincident points");
  return UnitBearing::normalized(rel);
}

/// Deterministic orthonormal tangent basis at n: take the canonical axis
/// least aligned with n, Gram-Schmidt it against n, complete with a cross
/// product. Smooth away from axis switches.
inline TangentBasis tangent_basis(const UnitBearing& n) {
  int axis = 0;
  double best = std::abs(n.v.x());
  if (std::abs(n.v.y()) < best) {
    best = std::abs(n.v.y());
    axis = 1;
  }
  if (std::abs(n.v.z()) < best) axis = 2;
  Vec3 e = Vec3::Zero();
  e(axis) = 1.0;
  const Vec3 b1 = (e - e.dot(n.v) * n.v).normalized();
  const Vec3 b2 = n.v.cross(b1);
  TangentBasis basis;
  basis.b.col(0) = b1;
  basis.b.col(1) = b2;
  return basis;
}

/// Spherical logarithm Log_h(z): the tangent vector at h pointing toward z
/// with length equal to the geodesic angle. Below 1e-6 rad the first-order
/// form z - h is used. Antipodal inputs have no defined direction.
inline std::optional<Vec3> sphere_log(const UnitBearing& h, const UnitBearing& z) {
  const double c = std::min(std::max(h.v.dot(z.v), -1.0), 1.0);
  const Vec3 w = z.v - c * h.v;
  const double s = w.norm();
  const double theta = std::atan2(s, c);
  if (theta >= M_PI - 1e-9) return std::nullopt;  // antipodal
  if (theta < 1e-6) return z.v - h.v;
  return (theta / s) * w;
}

/// Tangent-plane bearing residual r = B^T Log_h(z). Returns nullopt for
/// antipodal (z, h), which callers treat as an outlier-reject signal.
inline std::optional<Vec2> bearing_residual(const UnitBearing& z, const UnitBearing& h,
                                            const TangentBasis& basis) {
  const auto log = sphere_log(h, z);
  if (!log) return std::nullopt;
  return Vec2(basis.b.transpose() * *log);
}

/// Derivative of Log_h(z) with respect to h (z held fixed), continuous with
/// the small-angle branch of sphere_log.
inline std::optional<Mat3> sphere_log_jacobian_wrt_h(const UnitBearing& h,
                                                     const UnitBearing& z) {
  const double c = std::min(std::max(h.v.dot(z.v), -1.0), 1.0);
  const Vec3 w = z.v - c * h.v;
  const double s = w.norm();
  const double theta = std::atan2(s, c);
  if (theta >= M_PI - 1e-9) return std::nullopt;
  if (theta < 1e-6) return -Mat3::Identity();
  const Mat3 dw = -(h.v * z.v.transpose() + c * Mat3::Identity());
  return w * ((theta * c - s) / (s * s * s)) * z.v.transpose() + (theta / s) * dw;
}

}  // namespace satrack
