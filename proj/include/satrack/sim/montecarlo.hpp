#pragma once

#include "satrack/sim/episode.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace satrack {

/// Deterministic per-episode seed: hash of (base_seed, cell, run).
std::uint64_t episode_seed(std::uint64_t base_seed, std::uint64_t cell, std::uint64_t run);

/// Deterministic parallel map: fn(i) for i in [0, n), any job count, results
/// are whatever fn stores by index. Rethrows the first worker exception.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

struct McCell {
  double p_out = 0.0;
  EstimatorKind estimator = EstimatorKind::fg_robust;
};

struct McRow {
  McCell cell;
  int n_runs = 0;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;  // sample std over runs
  double mean_violation_steps = 0.0;
  double frac_violating_runs = 0.0;
  double min_d_true = 0.0;
  double max_d_true = 0.0;
  double mean_r = 0.0;
  double max_r = 0.0;
  double mean_relaxed_steps = 0.0;
  double mean_fallback_steps = 0.0;
};

/// Monte-Carlo aggregation over (cell, run) with scripted control on the
/// estimation scenario. Results are independent of `jobs`.
std::vector<McRow> monte_carlo(std::span<const McCell> cells, int n_runs,
                               const SimConfig& cfg, int jobs);

/// Fig.-5-style sweep: the given p_out grid crossed with all three estimators.
std::vector<McRow> sweep_outliers(std::span<const double> p_grid, int n_runs,
                                  const SimConfig& cfg, int jobs);

inline constexpr std::array<double, 6> kDefaultOutlierGrid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};

struct ControlRunSummary {
  RunMetrics metrics;
  double median_r_inside = 0.0;   // degraded-sensing window
  double median_r_outside = 0.0;
};

struct ControlStudyResult {
  std::array<std::vector<ControlRunSummary>, 3> runs;  // clf_only, fixed, ca
  static constexpr std::array<RunControllerKind, 3> kControllers = {
      RunControllerKind::clf_only, RunControllerKind::fixed_clf_cbf,
      RunControllerKind::ca_clf_cbf};
};

/// Three-controller comparison on the control scenario, robust-FG estimator.
ControlStudyResult control_study(int n_runs, const SimConfig& cfg, int jobs);

struct CoverageRun {
  int covered = 0;
  int steps = 0;
};

/// Confidence-radius calibration under nominal sensing (p_out forced to 0),
/// robust-FG estimator on the scripted estimation scenario.
std::vector<CoverageRun> coverage_study(int n_runs, const SimConfig& cfg, int jobs);

}  // namespace satrack
