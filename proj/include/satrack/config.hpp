#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace satrack {

/// Raised for malformed config files, unknown keys, or invariant violations.
/// `line` is 0 when the error is not tied to a file location.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, int line, const std::string& what)
      : std::runtime_error(line > 0 ? "config error at line " + std::to_string(line) + " (" +
                                          key + "): " + what
                                    : "config error (" + key + "): " + what),
        key_(std::move(key)),
        line_(line) {}

  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

/// Flat simulation/controller configuration shared by all modules.
///
/// Defaults are implementation-chosen working values (the underlying study
/// fixes noise levels but leaves timing, gains, omega, the Cauchy scale and
/// the window policy open); they are tuned so the default scenarios run the
/// full comparison studies out of the box.
struct SimConfig {
  double dt = 0.05;          // s
  int horizon = 1200;        // steps
  double sigma_r = 0.05;     // m, range noise std
  double sigma_az = 0.05235987755982988;  // rad (3 deg), azimuth noise std
  double sigma_el = 0.05235987755982988;  // rad (3 deg), elevation noise std
  double p_out = 0.0;        // bearing outlier probability
  double sigma_out = 0.4363323129985824;  // rad (25 deg), outlier noise std
  double d_star = 2.2;       // m, desired standoff distance
  double d_min = 1.5;        // m, hard lower distance bound
  double d_max = 4.0;        // m, hard upper distance bound
  double u_min = -3.0;       // m/s^2, per-axis input lower bound
  double u_max = 3.0;        // m/s^2, per-axis input upper bound
  double v_max = 3.0;        // m/s, UAV speed bound (infinity norm)
  double a_max = 1.0;        // m/s^2, target acceleration bound
  double alpha_risk = 0.05;  // confidence-radius risk level
  double omega = 1.5;        // 1/s, HOCBF pole
  double k_r = 1.0;          // radial error gain
  double k_vr = 2.0;         // radial velocity gain
  double k_z = 1.5;          // altitude error gain
  double k_vz = 2.0;         // vertical velocity gain
  double k_tau = 0.8;        // tangential velocity gain
  double cauchy_c = 2.0;     // robust loss scale, whitened-residual units
  int window_size = 20;      // smoother window length, steps
  std::uint64_t seed = 1;

  /// Throws ConfigError on the first violated invariant.
  void validate() const;
};

/// SimConfig plus runner options; every CLI flag is also a config key.
struct RunOptions {
  SimConfig sim;
  int jobs = 1;
  int runs = 50;
  std::string out = "out";

  void validate() const;
};

/// Parse `key = value` lines ('#' comments, blank lines allowed).
/// Unknown keys and malformed values raise ConfigError with the line number.
RunOptions parse_config_text(const std::string& text, const RunOptions& base = {});
RunOptions parse_config_file(const std::string& path, const RunOptions& base = {});

/// Apply one `key=value` override (same keys as the config file).
void apply_override(RunOptions& opts, const std::string& key, const std::string& value);

/// Canonical serialization (round-trips through parse_config_text).
std::string serialize_config(const RunOptions& opts);

/// All recognized config keys, in canonical order.
std::vector<std::string> config_keys();

}  // namespace satrack
