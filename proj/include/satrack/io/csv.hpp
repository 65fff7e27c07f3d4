#pragma once

#include "satrack/sim/montecarlo.hpp"

#include <string>
#include <utility>
#include <vector>

namespace satrack::io {

/// Fixed 9-significant-digit decimal formatting; CSV artifacts are
/// byte-stable and diff-able by construction.
std::string csv_num(double x);

void write_text_file(const std::string& path, const std::string& content);

std::string rmse_sweep_csv(const std::vector<McRow>& rows);

/// One summary schema for every command; unused cells carry their natural
/// defaults (controller "scripted", p_out of the run, etc.).
struct SummaryRow {
  std::string estimator;
  std::string controller;
  double p_out = 0.0;
  int n_runs = 0;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
  double mean_violation_steps = 0.0;
  double frac_violating_runs = 0.0;
  double min_d_true = 0.0;
  double max_d_true = 0.0;
  double mean_r = 0.0;
  double max_r = 0.0;
  double mean_relaxed_steps = 0.0;
  double mean_fallback_steps = 0.0;
};

std::string summary_csv(const std::vector<SummaryRow>& rows);

std::vector<SummaryRow> summary_rows_from_sweep(const std::vector<McRow>& rows);
std::vector<SummaryRow> summary_rows_from_control(const ControlStudyResult& result);

std::string estimate_log_csv(const EpisodeTrace& trace);

std::string control_trace_csv(
    const std::vector<std::pair<std::string, const EpisodeTrace*>>& traces);

std::string coverage_csv(const std::vector<CoverageRun>& runs);

}  // namespace satrack::io
