#pragma once

#include "satrack/estimation/ekf.hpp"
#include "satrack/estimation/window.hpp"

#include <memory>
#include <optional>
#include <string>

namespace satrack {

enum class EstimatorKind { ekf, fg_plain, fg_robust };

const char* estimator_name(EstimatorKind kind);

/// Uniform per-step estimation interface used by the simulation harness.
/// The first call must carry a bearing measurement (it seeds the belief by
/// back-projection).
class TargetEstimator {
 public:
  virtual ~TargetEstimator() = default;
  virtual GaussianBelief step(const UavState& pose, const RangeMeasurement& z_r,
                              const std::optional<BearingMeasurement>& z_b) = 0;
};

std::unique_ptr<TargetEstimator> make_estimator(EstimatorKind kind, const SimConfig& cfg);

}  // namespace satrack
