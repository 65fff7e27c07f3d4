#pragma once

#include "satrack/config.hpp"
#include "satrack/dynamics.hpp"

#include <functional>
#include <string>

namespace satrack {

/// Episode script: analytic nominal target path (the trajectory generator
/// pulls the noisy truth back toward it, keeping every commanded
/// acceleration within a_max), UAV script or closed-loop initial state, and
/// per-step sensing-degradation / outlier schedules.
struct Scenario {
  std::string name;

  // Nominal target path (position, velocity, acceleration at time t).
  std::function<void(double t, Vec3& p, Vec3& v, Vec3& a)> target_nominal;
  double track_kp = 1.2;
  double track_kd = 1.8;
  double process_noise_scale = 1.0;  // 0 disables truth-side process noise

  bool closed_loop = false;
  std::function<void(double t, Vec3& p, Vec3& v)> uav_script;  // scripted mode
  State6 uav_init;                                             // closed-loop mode

  std::function<double(int step)> noise_multiplier;  // bearing noise scale >= 1
  std::function<double(int step)> p_out_of_step;

  // Degraded-sensing interval [begin, end) in steps; empty when equal.
  int degraded_begin = 0;
  int degraded_end = 0;
};

/// Estimator-comparison scenario: the target rides a smooth sum of
/// low-frequency sinusoids and the UAV holds a slowly orbiting offset from
/// the nominal path (the estimation study does not close the loop).
Scenario scenario_estimation(const SimConfig& cfg);

/// Controller-comparison scenario: staged 1D-dominant profile (accelerate
/// to cruise, cruise, brake at a_max, rest) with a mid-run degraded-sensing
/// window that multiplies the bearing noise (and its reported covariance).
Scenario scenario_control(const SimConfig& cfg);

}  // namespace satrack
