#pragma once

#include "satrack/dynamics.hpp"
#include "satrack/sensing.hpp"
#include "satrack/types.hpp"

#include <optional>
#include <span>
#include <variant>

namespace satrack {

/// Cauchy robust loss rho(s) = c^2 log(1 + s/c^2) on a squared whitened
/// residual s; sublinear for large s, so outlier influence stays bounded.
inline double cauchy_loss(double s, double c) {
  return c * c * std::log1p(s / (c * c));
}

/// d rho / d s = 1/(1 + s/c^2); the IRLS weight applied inside Gauss-Newton.
inline double cauchy_weight(double s, double c) { return 1.0 / (1.0 + s / (c * c)); }

/// UAV pose snapshot entering range/bearing factors as a known input.
struct PoseSnapshot {
  Vec3 p_r = Vec3::Zero();
  Rotation3 r_se;
};

struct PriorFactor {
  int node = 0;
  Vec6 mean = Vec6::Zero();
  Mat6 sqrt_info = Mat6::Identity();  // S with S^T S = covariance^-1
};

/// Residual X_{k+1} - A X_k, whitened by the process covariance.
struct DynamicsFactor {
  int node = 0;  // k; connects k and k+1
  Mat6 a = Mat6::Identity();
  Mat6 sqrt_info = Mat6::Identity();
};

/// Residual z_r - ||p_T - p_R||.
struct RangeFactor {
  int node = 0;
  double z_r = 0.0;
  double sigma_r = 1.0;
  PoseSnapshot pose;
};

/// Tangent-space residual B^T Log_h(z) on S^2 (sensor frame).
struct BearingFactor {
  int node = 0;
  UnitBearing z{Vec3::UnitX()};
  Mat2 sqrt_info = Mat2::Identity();
  PoseSnapshot pose;
  bool robust = true;
};

/// Linear position measurement z - p_T; a diagnostic factor used to reduce
/// the window to an exactly linear-Gaussian problem.
struct PositionFactor {
  int node = 0;
  Vec3 z = Vec3::Zero();
  Mat3 sqrt_info = Mat3::Identity();
};

using Factor =
    std::variant<PriorFactor, DynamicsFactor, RangeFactor, BearingFactor, PositionFactor>;

enum class FactorKind { prior, dynamics, range, bearing, position };

FactorKind factor_kind(const Factor& f);
int factor_node(const Factor& f);

/// Unwhitened residual and analytic Jacobian blocks w.r.t. the attached
/// nodes, evaluated at the given node linearization points. Fixed-capacity
/// storage keeps evaluation allocation-free.
struct FactorEval {
  Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1> residual;
  Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor, 6, 6> jac_a;
  Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor, 6, 6> jac_b;  // dynamics only
  int node_a = -1;
  int node_b = -1;  // -1 for unary factors
};

/// Returns nullopt when the factor is invalid at this linearization
/// (degenerate geometry or an antipodal bearing); such factors are excluded
/// from the current update.
std::optional<FactorEval> evaluate_factor(const Factor& f, std::span<const Vec6> means);

/// Whitening square-root information of the factor's noise model.
Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6> factor_sqrt_info(const Factor& f);

inline bool is_robust_bearing(const Factor& f) {
  const auto* b = std::get_if<BearingFactor>(&f);
  return b != nullptr && b->robust;
}

}  // namespace satrack
