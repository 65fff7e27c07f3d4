#include "satrack/config.hpp"
#include "satrack/io/csv.hpp"
#include "satrack/sim/montecarlo.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace satrack;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out;
  std::uint64_t seed = 0;
  int jobs = 0;
  int runs = 0;
  bool out_given = false, seed_given = false, jobs_given = false, runs_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "config file (key = value lines)");
  cmd->add_option("--set", args.sets, "override a config key, key=value (repeatable)");
  cmd->add_option("--out", args.out, "output directory")->each([&](const std::string&) {
    args.out_given = true;
  });
  cmd->add_option("--seed", args.seed, "base seed")->each([&](const std::string&) {
    args.seed_given = true;
  });
  cmd->add_option("--jobs", args.jobs, "worker threads")->each([&](const std::string&) {
    args.jobs_given = true;
  });
  cmd->add_option("--runs", args.runs, "Monte-Carlo runs per cell")
      ->each([&](const std::string&) { args.runs_given = true; });
}

/// defaults < config file < --set overrides < dedicated flags.
RunOptions resolve_options(const CommonArgs& args) {
  RunOptions opts;
  if (!args.config_path.empty()) opts = parse_config_file(args.config_path, opts);
  for (const auto& kv : args.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError(kv, 0, "--set expects key=value");
    apply_override(opts, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.out_given) opts.out = args.out;
  if (args.seed_given) opts.sim.seed = args.seed;
  if (args.jobs_given) opts.jobs = args.jobs;
  if (args.runs_given) opts.runs = args.runs;
  opts.validate();
  return opts;
}

std::filesystem::path prepare_out_dir(const RunOptions& opts) {
  const std::filesystem::path dir(opts.out);
  std::filesystem::create_directories(dir);
  io::write_text_file((dir / "effective_config").string(), serialize_config(opts));
  return dir;
}

int cmd_validate(const CommonArgs& args) {
  resolve_options(args);
  std::cout << "config OK\n";
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  const RunOptions opts = resolve_options(args);
  const auto dir = prepare_out_dir(opts);
  const auto rows =
      sweep_outliers(kDefaultOutlierGrid, opts.runs, opts.sim, opts.jobs);
  io::write_text_file((dir / "rmse_sweep.csv").string(), io::rmse_sweep_csv(rows));
  io::write_text_file((dir / "summary.csv").string(),
                      io::summary_csv(io::summary_rows_from_sweep(rows)));
  std::cout << "wrote " << (dir / "rmse_sweep.csv").string() << " and summary.csv\n";
  return 0;
}

int cmd_sim_control(const CommonArgs& args) {
  const RunOptions opts = resolve_options(args);
  const auto dir = prepare_out_dir(opts);
  const auto result = control_study(opts.runs, opts.sim, opts.jobs);
  io::write_text_file((dir / "summary.csv").string(),
                      io::summary_csv(io::summary_rows_from_control(result)));

  // Representative trace per controller at the first run's seed.
  const Scenario sc = scenario_control(opts.sim);
  std::vector<EpisodeTrace> traces;
  std::vector<std::pair<std::string, const EpisodeTrace*>> labeled;
  traces.reserve(3);
  for (size_t c = 0; c < ControlStudyResult::kControllers.size(); ++c) {
    const auto kind = ControlStudyResult::kControllers[c];
    traces.push_back(run_episode(sc, EstimatorKind::fg_robust, kind, opts.sim,
                                 episode_seed(opts.sim.seed, 100 + c, 0)));
  }
  for (size_t c = 0; c < traces.size(); ++c)
    labeled.emplace_back(run_controller_name(ControlStudyResult::kControllers[c]),
                         &traces[c]);
  io::write_text_file((dir / "control_trace.csv").string(), io::control_trace_csv(labeled));
  std::cout << "wrote " << (dir / "summary.csv").string() << " and control_trace.csv\n";
  return 0;
}

int cmd_sim_estimators(const CommonArgs& args) {
  const RunOptions opts = resolve_options(args);
  const auto dir = prepare_out_dir(opts);
  const Scenario sc = scenario_estimation(opts.sim);
  std::vector<McCell> cells;
  std::vector<io::SummaryRow> summary;
  for (const EstimatorKind est :
       {EstimatorKind::ekf, EstimatorKind::fg_plain, EstimatorKind::fg_robust}) {
    const auto trace = run_episode(sc, est, RunControllerKind::scripted, opts.sim,
                                   episode_seed(opts.sim.seed, 300, 0));
    io::write_text_file((dir / (std::string("est_") + estimator_name(est) + ".csv")).string(),
                        io::estimate_log_csv(trace));
    const RunMetrics m = compute_metrics(trace, opts.sim);
    io::SummaryRow row;
    row.estimator = estimator_name(est);
    row.controller = "scripted";
    row.p_out = opts.sim.p_out;
    row.n_runs = 1;
    row.mean_rmse = m.rmse_pos;
    row.mean_violation_steps = m.violation_steps;
    row.frac_violating_runs = m.violation_steps > 0 ? 1.0 : 0.0;
    row.min_d_true = m.min_d_true;
    row.max_d_true = m.max_d_true;
    row.mean_r = m.mean_r;
    row.max_r = m.max_r;
    row.mean_relaxed_steps = m.relaxed_steps;
    row.mean_fallback_steps = m.fallback_steps;
    summary.push_back(std::move(row));
  }
  io::write_text_file((dir / "summary.csv").string(), io::summary_csv(summary));
  std::cout << "wrote est_*.csv and summary.csv under " << dir.string() << "\n";
  return 0;
}

int cmd_coverage(const CommonArgs& args) {
  const RunOptions opts = resolve_options(args);
  const auto dir = prepare_out_dir(opts);
  const auto runs = coverage_study(opts.runs, opts.sim, opts.jobs);
  io::write_text_file((dir / "coverage.csv").string(), io::coverage_csv(runs));
  long covered = 0, steps = 0;
  for (const auto& r : runs) {
    covered += r.covered;
    steps += r.steps;
  }
  std::cout << "coverage " << covered << "/" << steps << " = "
            << io::csv_num(steps > 0 ? double(covered) / double(steps) : 0.0) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-anchor UWB standoff tracking: robust factor-graph estimation and "
               "covariance-aware CLF-CBF control, simulation studies"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* validate = app.add_subcommand("validate-config", "parse and validate a config");
  auto* sweep = app.add_subcommand("sweep-outliers",
                                   "RMSE vs outlier probability, three estimators");
  auto* sim_control =
      app.add_subcommand("sim-control", "three-controller closed-loop comparison");
  auto* sim_est =
      app.add_subcommand("sim-estimators", "single-run estimator traces");
  auto* coverage =
      app.add_subcommand("coverage", "confidence-radius calibration check");
  for (auto* cmd : {validate, sweep, sim_control, sim_est, coverage}) add_common(cmd, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  try {
    if (validate->parsed()) return cmd_validate(args);
    if (sweep->parsed()) return cmd_sweep(args);
    if (sim_control->parsed()) return cmd_sim_control(args);
    if (sim_est->parsed()) return cmd_sim_estimators(args);
    if (coverage->parsed()) return cmd_coverage(args);
  } catch (const satrack::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
