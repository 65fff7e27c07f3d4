#include "satrack/io/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace satrack::io {

std::string csv_num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::string rmse_sweep_csv(const std::vector<McRow>& rows) {
  std::ostringstream os;
  os << "p_out,estimator,mean_rmse,std_rmse,n_runs\n";
  for (const auto& r : rows) {
    os << csv_num(r.cell.p_out) << ',' << estimator_name(r.cell.estimator) << ','
       << csv_num(r.mean_rmse) << ',' << csv_num(r.std_rmse) << ',' << r.n_runs << '\n';
  }
  return os.str();
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "estimator,controller,p_out,n_runs,mean_rmse,std_rmse,mean_violation_steps,"
        "frac_violating_runs,min_d_true,max_d_true,mean_R,max_R,mean_relaxed_steps,"
        "mean_fallback_steps\n";
  for (const auto& r : rows) {
    os << r.estimator << ',' << r.controller << ',' << csv_num(r.p_out) << ',' << r.n_runs
       << ',' << csv_num(r.mean_rmse) << ',' << csv_num(r.std_rmse) << ','
       << csv_num(r.mean_violation_steps) << ',' << csv_num(r.frac_violating_runs) << ','
       << csv_num(r.min_d_true) << ',' << csv_num(r.max_d_true) << ',' << csv_num(r.mean_r)
       << ',' << csv_num(r.max_r) << ',' << csv_num(r.mean_relaxed_steps) << ','
       << csv_num(r.mean_fallback_steps) << '\n';
  }
  return os.str();
}

std::vector<SummaryRow> summary_rows_from_sweep(const std::vector<McRow>& rows) {
  std::vector<SummaryRow> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    SummaryRow s;
    s.estimator = estimator_name(r.cell.estimator);
    s.controller = "scripted";
    s.p_out = r.cell.p_out;
    s.n_runs = r.n_runs;
    s.mean_rmse = r.mean_rmse;
    s.std_rmse = r.std_rmse;
    s.mean_violation_steps = r.mean_violation_steps;
    s.frac_violating_runs = r.frac_violating_runs;
    s.min_d_true = r.min_d_true;
    s.max_d_true = r.max_d_true;
    s.mean_r = r.mean_r;
    s.max_r = r.max_r;
    s.mean_relaxed_steps = r.mean_relaxed_steps;
    s.mean_fallback_steps = r.mean_fallback_steps;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SummaryRow> summary_rows_from_control(const ControlStudyResult& result) {
  std::vector<SummaryRow> out;
  for (size_t c = 0; c < result.runs.size(); ++c) {
    const auto& runs = result.runs[c];
    SummaryRow s;
    s.estimator = "fg_robust";
    s.controller = run_controller_name(ControlStudyResult::kControllers[c]);
    s.n_runs = static_cast<int>(runs.size());
    if (runs.empty()) {
      out.push_back(std::move(s));
      continue;
    }
    double sum = 0.0, sq = 0.0;
    int violating = 0;
    s.min_d_true = runs.front().metrics.min_d_true;
    s.max_d_true = s.min_d_true;
    for (const auto& run : runs) {
      const RunMetrics& m = run.metrics;
      sum += m.rmse_pos;
      sq += m.rmse_pos * m.rmse_pos;
      s.mean_violation_steps += m.violation_steps;
      if (m.violation_steps > 0) ++violating;
      s.min_d_true = std::min(s.min_d_true, m.min_d_true);
      s.max_d_true = std::max(s.max_d_true, m.max_d_true);
      s.mean_r += m.mean_r;
      s.max_r = std::max(s.max_r, m.max_r);
      s.mean_relaxed_steps += m.relaxed_steps;
      s.mean_fallback_steps += m.fallback_steps;
    }
    const int n = s.n_runs;
    s.mean_rmse = sum / n;
    s.std_rmse = n > 1 ? std::sqrt(std::max(0.0, (sq - n * s.mean_rmse * s.mean_rmse) / (n - 1)))
                       : 0.0;
    s.mean_violation_steps /= n;
    s.frac_violating_runs = static_cast<double>(violating) / n;
    s.mean_r /= n;
    s.mean_relaxed_steps /= n;
    s.mean_fallback_steps /= n;
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

void append_estimate_columns(std::ostringstream& os, const StepRecord& s) {
  const Vec3& ep = s.belief.mean.position;
  const Vec3& ev = s.belief.mean.velocity;
  os << s.step << ',' << csv_num(ep.x()) << ',' << csv_num(ep.y()) << ',' << csv_num(ep.z())
     << ',' << csv_num(ev.x()) << ',' << csv_num(ev.y()) << ',' << csv_num(ev.z()) << ','
     << csv_num(s.belief.cov.dense().topLeftCorner<3, 3>().trace()) << ','
     << csv_num(s.target_truth.position.x()) << ',' << csv_num(s.target_truth.position.y())
     << ',' << csv_num(s.target_truth.position.z()) << ','
     << csv_num(s.target_truth.velocity.x()) << ',' << csv_num(s.target_truth.velocity.y())
     << ',' << csv_num(s.target_truth.velocity.z());
}

}  // namespace

std::string estimate_log_csv(const EpisodeTrace& trace) {
  std::ostringstream os;
  os << "step,est_px,est_py,est_pz,est_vx,est_vy,est_vz,cov_trace_pos,"
        "true_px,true_py,true_pz,true_vx,true_vy,true_vz\n";
  for (const auto& s : trace.steps) {
    append_estimate_columns(os, s);
    os << '\n';
  }
  return os.str();
}

std::string control_trace_csv(
    const std::vector<std::pair<std::string, const EpisodeTrace*>>& traces) {
  std::ostringstream os;
  os << "controller,step,est_px,est_py,est_pz,est_vx,est_vy,est_vz,cov_trace_pos,"
        "true_px,true_py,true_pz,true_vx,true_vy,true_vz,"
        "u_x,u_y,u_z,qp_status,h_near,h_far,R,d_hat,d_true\n";
  for (const auto& [label, trace] : traces) {
    for (const auto& s : trace->steps) {
      os << label << ',';
      append_estimate_columns(os, s);
      os << ',' << csv_num(s.u.x()) << ',' << csv_num(s.u.y()) << ',' << csv_num(s.u.z())
         << ',' << (s.controlled ? command_status_name(s.qp_status) : "scripted") << ','
         << csv_num(s.h_near) << ',' << csv_num(s.h_far) << ',' << csv_num(s.r) << ','
         << csv_num(s.d_hat) << ',' << csv_num(s.d_true) << '\n';
    }
  }
  return os.str();
}

std::string coverage_csv(const std::vector<CoverageRun>& runs) {
  std::ostringstream os;
  os << "run,steps,covered_steps,coverage\n";
  long total_steps = 0, total_covered = 0;
  for (size_t i = 0; i < runs.size(); ++i) {
    total_steps += runs[i].steps;
    total_covered += runs[i].covered;
    const double frac =
        runs[i].steps > 0 ? static_cast<double>(runs[i].covered) / runs[i].steps : 0.0;
    os << i << ',' << runs[i].steps << ',' << runs[i].covered << ',' << csv_num(frac) << '\n';
  }
  const double overall =
      total_steps > 0 ? static_cast<double>(total_covered) / total_steps : 0.0;
  os << "overall," << total_steps << ',' << total_covered << ',' << csv_num(overall) << '\n';
  return os.str();
}

}  // namespace satrack::io
