#include "satrack/estimation/estimators.hpp"

#include <stdexcept>

namespace satrack {
namespace {

class EkfEstimator final : public TargetEstimator {
 public:
  explicit EkfEstimator(const SimConfig& cfg) : cfg_(cfg) {}

  GaussianBelief step(const UavState& pose, const RangeMeasurement& z_r,
                      const std::optional<BearingMeasurement>& z_b) override {
    if (!belief_) {
      if (!z_b) throw std::invalid_argument("EkfEstimator: first step needs a bearing");
      belief_ = initialize_belief(pose, z_r, *z_b, cfg_);
    } else {
      belief_ = ekf_step(*belief_, pose, z_r, z_b, cfg_);
    }
    return *belief_;
  }

 private:
  SimConfig cfg_;
  std::optional<GaussianBelief> belief_;
};

class WindowEstimator final : public TargetEstimator {
 public:
  WindowEstimator(const SimConfig& cfg, bool robust)
      : window_(cfg, robust), robust_(robust) {}

  GaussianBelief step(const UavState& pose, const RangeMeasurement& z_r,
                      const std::optional<BearingMeasurement>& z_b) override {
    window_.push_timestep(pose, z_r, z_b);
    return window_.optimize(robust_).back();
  }

 private:
  FactorGraphWindow window_;
  bool robust_;
};

}  // namespace

const char* estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::ekf: return "ekf";
    case EstimatorKind::fg_plain: return "fg_plain";
    case EstimatorKind::fg_robust: return "fg_robust";
  }
  return "unknown";
}

std::unique_ptr<TargetEstimator> make_estimator(EstimatorKind kind, const SimConfig& cfg) {
  switch (kind) {
    case EstimatorKind::ekf: return std::make_unique<EkfEstimator>(cfg);
    case EstimatorKind::fg_plain: return std::make_unique<WindowEstimator>(cfg, false);
    case EstimatorKind::fg_robust: return std::make_unique<WindowEstimator>(cfg, true);
  }
  throw std::invalid_argument("make_estimator: unknown kind");
}

}  // namespace satrack
