#include "satrack/sim/scenario.hpp"

#include <cmath>

namespace satrack {

Scenario scenario_estimation(const SimConfig& cfg) {
  Scenario sc;
  sc.name = "estimation";
  const Vec3 p0(0.0, 0.0, 1.2);
  const Vec3 amp(3.0, 2.5, 0.6);
  const Vec3 freq(0.22, 0.17, 0.28);  // rad/s; peak ||a|| ~ 0.17 m/s^2, well under a_max
  const Vec3 phase(0.0, 1.1, 0.6);

  sc.target_nominal = [=](double t, Vec3& p, Vec3& v, Vec3& a) {
    for (int i = 0; i < 3; ++i) {
      const double arg = freq(i) * t + phase(i);
      p(i) = p0(i) + amp(i) * std::sin(arg);
      v(i) = amp(i) * freq(i) * std::cos(arg);
      a(i) = -amp(i) * freq(i) * freq(i) * std::sin(arg);
    }
  };

  // Scripted offset path: slow orbit around the nominal target position.
  const double rho = 2.2, height = 0.55, theta0 = M_PI, orbit_rate = 0.15;
  sc.uav_script = [=, nominal = sc.target_nominal](double t, Vec3& p, Vec3& v) {
    Vec3 tp, tv, ta;
    nominal(t, tp, tv, ta);
    const double th = theta0 + orbit_rate * t;
    p = tp + Vec3(rho * std::cos(th), rho * std::sin(th), height);
    v = tv + Vec3(-rho * orbit_rate * std::sin(th), rho * orbit_rate * std::cos(th), 0.0);
  };
  sc.closed_loop = false;

  sc.noise_multiplier = [](int) { return 1.0; };
  const double p_out = cfg.p_out;
  sc.p_out_of_step = [p_out](int) { return p_out; };
  return sc;
}

Scenario scenario_control(const SimConfig& cfg) {
  Scenario sc;
  sc.name = "control";
  const double a = cfg.a_max;
  const double v_c = std::min(2.4, 0.8 * cfg.v_max);  // cruise speed
  const double t1 = 5.0;
  const double t2 = t1 + v_c / a;  // cruise start
  const double t3 = 38.0;         // brake start
  const double t4 = t3 + v_c / a; // stop
  const double z_t = 1.0;

  sc.target_nominal = [=](double t, Vec3& p, Vec3& v, Vec3& acc) {
    double x, vx, ax;
    if (t < t1) {
      x = 0.0;
      vx = 0.0;
      ax = 0.0;
    } else if (t < t2) {
      const double tau = t - t1;
      ax = a;
      vx = a * tau;
      x = 0.5 * a * tau * tau;
    } else if (t < t3) {
      const double x2 = 0.5 * a * (t2 - t1) * (t2 - t1);
      ax = 0.0;
      vx = v_c;
      x = x2 + v_c * (t - t2);
    } else if (t < t4) {
      const double x2 = 0.5 * a * (t2 - t1) * (t2 - t1);
      const double x3 = x2 + v_c * (t3 - t2);
      const double tau = t - t3;
      ax = -a;
      vx = v_c - a * tau;
      x = x3 + v_c * tau - 0.5 * a * tau * tau;
    } else {
      const double x2 = 0.5 * a * (t2 - t1) * (t2 - t1);
      const double x3 = x2 + v_c * (t3 - t2);
      ax = 0.0;
      vx = 0.0;
      x = x3 + v_c * (t4 - t3) - 0.5 * a * (t4 - t3) * (t4 - t3);
    }
    p = Vec3(x, 0.0, z_t);
    v = Vec3(vx, 0.0, 0.0);
    acc = Vec3(ax, 0.0, 0.0);
  };

  sc.closed_loop = true;
  sc.uav_init.position = Vec3(-cfg.d_star, 0.0, z_t + 0.25);
  sc.uav_init.velocity = Vec3::Zero();

  sc.degraded_begin = static_cast<int>(30.0 / cfg.dt);
  sc.degraded_end = static_cast<int>(44.0 / cfg.dt);
  const int db = sc.degraded_begin, de = sc.degraded_end;
  sc.noise_multiplier = [db, de](int step) {
    return (step >= db && step < de) ? 4.0 : 1.0;
  };
  sc.p_out_of_step = [](int) { return 0.0; };
  return sc;
}

}  // namespace satrack
