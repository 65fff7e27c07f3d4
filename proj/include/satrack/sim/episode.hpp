#pragma once

#include "satrack/control.hpp"
#include "satrack/estimation/estimators.hpp"
#include "satrack/sim/scenario.hpp"

#include <cstdint>
#include <vector>

namespace satrack {

enum class RunControllerKind { scripted, clf_only, fixed_clf_cbf, ca_clf_cbf };

const char* run_controller_name(RunControllerKind kind);

struct StepRecord {
  int step = 0;
  State6 uav_truth;
  State6 target_truth;
  double z_range = 0.0;
  double z_az = 0.0, z_el = 0.0;
  bool bearing_valid = false;
  GaussianBelief belief;
  double r = 0.0;  // confidence radius of the belief at cfg.alpha_risk
  double d_hat = 0.0, d_true = 0.0;
  double h_near = 0.0, h_far = 0.0;
  Vec3 u = Vec3::Zero();
  CommandStatus qp_status = CommandStatus::optimal;
  bool controlled = false;
};

struct EpisodeTrace {
  std::vector<StepRecord> steps;
};

struct RunMetrics {
  double rmse_pos = 0.0;
  int violation_steps = 0;
  double min_d_true = 0.0;
  double max_d_true = 0.0;
  double mean_r = 0.0;
  double max_r = 0.0;
  int relaxed_steps = 0;
  int fallback_steps = 0;
};

/// Synchronous closed loop: propagate truth -> sense -> estimate -> control
/// -> actuate, one record per step. The random stream consumption per step
/// is fixed (range normal, bearing uniform+2 normals, 6 process normals), so
/// traces are bit-identical for identical (scenario, cfg, seed) and the
/// measurement noise is paired across estimator/controller kinds.
EpisodeTrace run_episode(const Scenario& scenario, EstimatorKind estimator,
                         RunControllerKind controller, const SimConfig& cfg,
                         std::uint64_t seed);

RunMetrics compute_metrics(const EpisodeTrace& trace, const SimConfig& cfg);

/// Fraction of steps with true position error inside the confidence radius.
double coverage_fraction(const EpisodeTrace& trace);

}  // namespace satrack
