#include "satrack/sim/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace satrack {

std::uint64_t episode_seed(std::uint64_t base_seed, std::uint64_t cell, std::uint64_t run) {
  return stream_id({base_seed, cell, run});
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<McRow> monte_carlo(std::span<const McCell> cells, int n_runs,
                               const SimConfig& cfg, int jobs) {
  const int n_cells = static_cast<int>(cells.size());
  std::vector<RunMetrics> metrics(static_cast<size_t>(n_cells) * n_runs);

  parallel_for(n_cells * n_runs, jobs, [&](int idx) {
    const int cell_idx = idx / n_runs;
    const int run_idx = idx % n_runs;
    SimConfig run_cfg = cfg;
    run_cfg.p_out = cells[cell_idx].p_out;
    const Scenario sc = scenario_estimation(run_cfg);
    const auto trace =
        run_episode(sc, cells[cell_idx].estimator, RunControllerKind::scripted, run_cfg,
                    episode_seed(cfg.seed, static_cast<std::uint64_t>(cell_idx),
                                 static_cast<std::uint64_t>(run_idx)));
    metrics[idx] = compute_metrics(trace, run_cfg);
  });

  std::vector<McRow> rows(n_cells);
  for (int c = 0; c < n_cells; ++c) {
    McRow& row = rows[c];
    row.cell = cells[c];
    row.n_runs = n_runs;
    double sum = 0.0, sq = 0.0;
    row.min_d_true = metrics[static_cast<size_t>(c) * n_runs].min_d_true;
    row.max_d_true = row.min_d_true;
    int violating_runs = 0;
    for (int r = 0; r < n_runs; ++r) {
      const RunMetrics& m = metrics[static_cast<size_t>(c) * n_runs + r];
      sum += m.rmse_pos;
      sq += m.rmse_pos * m.rmse_pos;
      row.mean_violation_steps += m.violation_steps;
      if (m.violation_steps > 0) ++violating_runs;
      row.min_d_true = std::min(row.min_d_true, m.min_d_true);
      row.max_d_true = std::max(row.max_d_true, m.max_d_true);
      row.mean_r += m.mean_r;
      row.max_r = std::max(row.max_r, m.max_r);
      row.mean_relaxed_steps += m.relaxed_steps;
      row.mean_fallback_steps += m.fallback_steps;
    }
    row.mean_rmse = sum / n_runs;
    const double var =
        n_runs > 1
            ? std::max(0.0, (sq - n_runs * row.mean_rmse * row.mean_rmse) / (n_runs - 1))
            : 0.0;
    row.std_rmse = std::sqrt(var);
    row.mean_violation_steps /= n_runs;
    row.frac_violating_runs = static_cast<double>(violating_runs) / n_runs;
    row.mean_r /= n_runs;
    row.mean_relaxed_steps /= n_runs;
    row.mean_fallback_steps /= n_runs;
  }
  return rows;
}

std::vector<McRow> sweep_outliers(std::span<const double> p_grid, int n_runs,
                                  const SimConfig& cfg, int jobs) {
  std::vector<McCell> cells;
  cells.reserve(p_grid.size() * 3);
  for (const double p : p_grid)
    for (const EstimatorKind est :
         {EstimatorKind::ekf, EstimatorKind::fg_plain, EstimatorKind::fg_robust})
      cells.push_back({p, est});
  return monte_carlo(cells, n_runs, cfg, jobs);
}

ControlStudyResult control_study(int n_runs, const SimConfig& cfg, int jobs) {
  ControlStudyResult result;
  for (auto& v : result.runs) v.resize(n_runs);
  const Scenario sc = scenario_control(cfg);

  parallel_for(3 * n_runs, jobs, [&](int idx) {
    const int ctrl_idx = idx / n_runs;
    const int run_idx = idx % n_runs;
    const auto trace = run_episode(sc, EstimatorKind::fg_robust,
                                   ControlStudyResult::kControllers[ctrl_idx], cfg,
                                   episode_seed(cfg.seed, 100 + ctrl_idx,
                                                static_cast<std::uint64_t>(run_idx)));
    ControlRunSummary summary;
    summary.metrics = compute_metrics(trace, cfg);
    std::vector<double> r_in, r_out;
    for (const auto& s : trace.steps) {
      const bool inside = s.step >= sc.degraded_begin && s.step < sc.degraded_end;
      (inside ? r_in : r_out).push_back(s.r);
    }
    summary.median_r_inside = median(std::move(r_in));
    summary.median_r_outside = median(std::move(r_out));
    result.runs[ctrl_idx][run_idx] = summary;
  });
  return result;
}

std::vector<CoverageRun> coverage_study(int n_runs, const SimConfig& cfg, int jobs) {
  std::vector<CoverageRun> runs(n_runs);
  SimConfig nominal_cfg = cfg;
  nominal_cfg.p_out = 0.0;
  const Scenario sc = scenario_estimation(nominal_cfg);

  parallel_for(n_runs, jobs, [&](int run_idx) {
    const auto trace =
        run_episode(sc, EstimatorKind::fg_robust, RunControllerKind::scripted, nominal_cfg,
                    episode_seed(cfg.seed, 200, static_cast<std::uint64_t>(run_idx)));
    CoverageRun cr;
    cr.steps = static_cast<int>(trace.steps.size());
    for (const auto& s : trace.steps) {
      const double err = (s.belief.mean.position - s.target_truth.position).norm();
      if (err <= s.r) ++cr.covered;
    }
    runs[run_idx] = cr;
  });
  return runs;
}

}  // namespace satrack
