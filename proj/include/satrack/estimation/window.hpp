#pragma once

#include "satrack/config.hpp"
#include "satrack/estimation/belief.hpp"
#include "satrack/estimation/block_tridiag.hpp"
#include "satrack/estimation/factor.hpp"

#include <optional>
#include <span>
#include <vector>

namespace satrack {

/// Fixed-lag sliding-window MAP smoother over target states. One prior
/// factor summarizes marginalized history; adjacent nodes are chained by
/// dynamics factors; each timestep contributes a range factor and (when
/// valid) a robust S^2 bearing factor with the UAV pose as a known input.
///
/// optimize() runs damped Gauss-Newton with IRLS reweighting for the Cauchy
/// bearing loss and reports per-node marginal covariances from the final
/// information matrix. When the window exceeds window_size the oldest node
/// is marginalized into a Gaussian prior on its successor (Schur complement
/// of the system linearized at the current estimate).
class FactorGraphWindow {
 public:
  /// `robust` fixes the weighting policy used when marginalizing; optimize()
  /// takes its own flag so robust and plain variants share the machinery.
  explicit FactorGraphWindow(const SimConfig& cfg, bool robust = true);

  bool empty() const { return nodes_.empty(); }
  int size() const { return static_cast<int>(nodes_.size()); }

  /// On an empty window, back-projects the measurement pair into the prior
  /// (window length 1, prior only). Afterwards appends a predicted node plus
  /// dynamics/range/bearing factors; an invalid bearing (antipodal or
  /// non-finite) degrades gracefully to a range-only timestep.
  void push_timestep(const UavState& pose, const RangeMeasurement& z_r,
                     const std::optional<BearingMeasurement>& z_b);

  /// Diagnostic path: start from an explicit prior and push linear position
  /// measurements, reducing the window to an exactly linear-Gaussian problem.
  void initialize_with_prior(const GaussianBelief& prior);
  void push_timestep_linear(const Vec3& z, const SymMatrix3& cov);

  std::vector<GaussianBelief> optimize(bool robust);
  std::vector<GaussianBelief> optimize() { return optimize(robust_); }

  std::span<const Vec6> node_means() const { return nodes_; }
  const std::vector<Factor>& factors() const { return factors_; }

  /// Global timestep index of the oldest retained node.
  long first_step_index() const { return pushes_ - size(); }

 private:
  void append_predicted_node();
  void marginalize_oldest();
  double accumulate(std::span<const Vec6> means, bool robust, BlockTridiag* sys) const;

  SimConfig cfg_;
  bool robust_;
  Mat6 a_;
  Mat6 dyn_sqrt_info_;
  std::vector<Vec6> nodes_;
  std::vector<Factor> factors_;
  long pushes_ = 0;
};

}  // namespace satrack
