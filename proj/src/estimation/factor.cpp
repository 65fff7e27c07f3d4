#include "satrack/estimation/factor.hpp"

namespace satrack {
namespace {

constexpr double kDegenerateRange = 1e-6;

std::optional<FactorEval> eval_prior(const PriorFactor& f, std::span<const Vec6> means) {
  FactorEval e;
  e.node_a = f.node;
  e.residual = means[f.node] - f.mean;
  e.jac_a = Mat6::Identity();
  return e;
}

std::optional<FactorEval> eval_dynamics(const DynamicsFactor& f, std::span<const Vec6> means) {
  FactorEval e;
  e.node_a = f.node;
  e.node_b = f.node + 1;
  e.residual = means[f.node + 1] - f.a * means[f.node];
  e.jac_a = -f.a;
  e.jac_b = Mat6::Identity();
  return e;
}

std::optional<FactorEval> eval_range(const RangeFactor& f, std::span<const Vec6> means) {
  const Vec3 p = means[f.node].head<3>();
  const Vec3 rel = p - f.pose.p_r;
  const double d = rel.norm();
  if (d < kDegenerateRange) return std::nullopt;
  FactorEval e;
  e.node_a = f.node;
  e.residual.resize(1);
  e.residual(0) = f.z_r - d;
  e.jac_a.setZero(1, 6);
  e.jac_a.leftCols<3>() = -(rel / d).transpose();
  return e;
}

std::optional<FactorEval> eval_bearing(const BearingFactor& f, std::span<const Vec6> means) {
  const Vec3 p = means[f.node].head<3>();
  const Vec3 rel_s = f.pose.r_se * (p - f.pose.p_r);
  const double d = rel_s.norm();
  if (d < kDegenerateRange) return std::nullopt;
  const UnitBearing h{rel_s / d};
  const TangentBasis basis = tangent_basis(h);
  const auto r = bearing_residual(f.z, h, basis);
  const auto dlog = sphere_log_jacobian_wrt_h(h, f.z);
  if (!r || !dlog) return std::nullopt;  // antipodal: reject as outlier
  // d h / d p_T = (I - h h^T) R / d; the basis is held fixed per linearization.
  const Mat3 dh_dp = (Mat3::Identity() - h.v * h.v.transpose()) * f.pose.r_se.matrix() / d;
  FactorEval e;
  e.node_a = f.node;
  e.residual = *r;
  e.jac_a.setZero(2, 6);
  e.jac_a.leftCols<3>() = basis.b.transpose() * (*dlog) * dh_dp;
  return e;
}

std::optional<FactorEval> eval_position(const PositionFactor& f, std::span<const Vec6> means) {
  FactorEval e;
  e.node_a = f.node;
  e.residual = f.z - means[f.node].head<3>();
  e.jac_a.setZero(3, 6);
  e.jac_a.leftCols<3>() = -Mat3::Identity();
  return e;
}

}  // namespace

FactorKind factor_kind(const Factor& f) {
  return static_cast<FactorKind>(f.index());
}

int factor_node(const Factor& f) {
  return std::visit([](const auto& x) { return x.node; }, f);
}

std::optional<FactorEval> evaluate_factor(const Factor& f, std::span<const Vec6> means) {
  return std::visit(
      [&](const auto& x) -> std::optional<FactorEval> {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, PriorFactor>) return eval_prior(x, means);
        if constexpr (std::is_same_v<T, DynamicsFactor>) return eval_dynamics(x, means);
        if constexpr (std::is_same_v<T, RangeFactor>) return eval_range(x, means);
        if constexpr (std::is_same_v<T, BearingFactor>) return eval_bearing(x, means);
        if constexpr (std::is_same_v<T, PositionFactor>) return eval_position(x, means);
      },
      f);
}

Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6> factor_sqrt_info(
    const Factor& f) {
  using Out = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6>;
  return std::visit(
      [](const auto& x) -> Out {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, PriorFactor>) return Out(x.sqrt_info);
        if constexpr (std::is_same_v<T, DynamicsFactor>) return Out(x.sqrt_info);
        if constexpr (std::is_same_v<T, RangeFactor>) {
          Out s(1, 1);
          s(0, 0) = 1.0 / x.sigma_r;
          return s;
        }
        if constexpr (std::is_same_v<T, BearingFactor>) return Out(x.sqrt_info);
        if constexpr (std::is_same_v<T, PositionFactor>) return Out(x.sqrt_info);
      },
      f);
}

}  // namespace satrack
