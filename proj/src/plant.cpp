#include "hppc/plant.hpp"

#include <cmath>

namespace hppc {

namespace {

bool all_finite(std::initializer_list<double> vs) {
  for (double v : vs)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

PidStepResult pid_step(const PidState& pid, const PidGains& gains,
                       double setpoint, double measurement, double dt) {
  require(dt > 0.0, "pid_step: dt must be positive");
  require(all_finite({setpoint, measurement, pid.integral, pid.prev_error}),
          "pid_step: non-finite input");
  require(gains.kp >= 0.0 && gains.ki >= 0.0 && gains.kd >= 0.0,
          "pid_step: gains must be non-negative");
  require(gains.command_lo < gains.command_hi,
          "pid_step: command_lo must be below command_hi");

  const double e = setpoint - measurement;
  const double deriv = (e - pid.prev_error) / dt;
  const double grown = pid.integral + e * dt;
  const double tentative = gains.kp * e + gains.ki * grown + gains.kd * deriv;

  // Freeze integration when the tentative command saturates in the error's
  // direction; otherwise commit the grown integral.
  const bool frozen = (tentative > gains.command_hi && e > 0.0) ||
                      (tentative < gains.command_lo && e < 0.0);

  PidStepResult r;
  r.state.integral = frozen ? pid.integral : grown;
  r.state.prev_error = e;
  const double raw =
      gains.kp * e + gains.ki * r.state.integral + gains.kd * deriv;
  r.command = clamp(raw, gains.command_lo, gains.command_hi);
  return r;
}

double first_order_step(double output, double command, double tau, double dt) {
  require(tau > 0.0 && dt > 0.0, "first_order_step: tau and dt must be positive");
  require(all_finite({output, command}), "first_order_step: non-finite input");
  const double a = std::exp(-dt / tau);
  return a * output + (1.0 - a) * command;
}

ComponentStepResult component_step(const ComponentState& c, double setpoint,
                                   double lo, double hi, double dt) {
  require(lo <= hi, "component_step: lo must not exceed hi");
  require(std::isfinite(setpoint), "component_step: non-finite setpoint");

  ComponentStepResult r;
  r.state = c;
  PidStepResult pid = pid_step(c.pid, c.gains, setpoint, c.output, dt);
  r.state.pid = pid.state;
  r.state.output = clamp(first_order_step(c.output, pid.command, c.tau, dt),
                         lo, hi);
  r.output = r.state.output;
  return r;
}

PlantStepResult plant_step(const PlantState& p, const PowerTriple& setpoints,
                           double avail_wind, double avail_solar) {
  require(avail_wind >= 0.0 && avail_solar >= 0.0,
          "plant_step: availability must be non-negative");

  PlantStepResult r;
  r.state = p;

  if (p.ideal_tracking) {
    r.state.wind.output = clamp(setpoints.wind, 0.0, avail_wind);
    r.state.solar.output = clamp(setpoints.solar, 0.0, avail_solar);
    r.state.battery.output =
        clamp(setpoints.battery, p.battery_min, p.battery_max);
  } else {
    const int substeps = static_cast<int>(std::lround(p.dt / p.dt_inner));
    require(substeps >= 1, "plant_step: dt must cover at least one dt_inner");
    for (int i = 0; i < substeps; ++i) {
      r.state.wind = component_step(r.state.wind, setpoints.wind, 0.0,
                                    avail_wind, p.dt_inner)
                         .state;
      r.state.solar = component_step(r.state.solar, setpoints.solar, 0.0,
                                     avail_solar, p.dt_inner)
                          .state;
      r.state.battery =
          component_step(r.state.battery, setpoints.battery, p.battery_min,
                         p.battery_max, p.dt_inner)
              .state;
    }
  }

  r.outputs.wind = r.state.wind.output;
  r.outputs.solar = r.state.solar.output;
  r.outputs.battery = r.state.battery.output;
  // Positive battery power discharges the store.
  r.state.soc_energy -= r.outputs.battery * p.dt / 3600.0;
  return r;
}

PidGains default_gains(double tau, double dt, double command_lo,
                       double command_hi) {
  // Pole placement for PI control of y+ = a*y + (1-a)*u with poles p1, p2:
  //   kp + ki*dt = (1 + a - p1 - p2) / (1 - a)
  //   ki*dt      = (1 - p1)(1 - p2) / (1 - a)
  const double p1 = 0.45;
  const double p2 = 0.85;
  const double a = std::exp(-dt / tau);
  const double b = 1.0 - a;
  const double k_total = (1.0 + a - p1 - p2) / b;
  const double k_int = (1.0 - p1) * (1.0 - p2) / b;
  PidGains g;
  g.kp = k_total - k_int;
  g.ki = k_int / dt;
  g.kd = 0.0;
  g.command_lo = command_lo;
  g.command_hi = command_hi;
  return g;
}

PlantState make_plant(const PlantConfig& cfg) {
  require(cfg.dt > 0.0 && cfg.dt_inner > 0.0, "make_plant: dt must be positive");
  require(cfg.battery_min < cfg.battery_max,
          "make_plant: battery_min must be below battery_max");
  PlantState p;
  p.dt = cfg.dt;
  p.dt_inner = cfg.dt_inner;
  p.ideal_tracking = cfg.ideal_tracking;
  p.battery_min = cfg.battery_min;
  p.battery_max = cfg.battery_max;
  p.soc_capacity = cfg.soc_capacity;
  p.soc_energy = cfg.soc_capacity / 2.0;
  p.wind.tau = cfg.tau_wind;
  p.solar.tau = cfg.tau_solar;
  p.battery.tau = cfg.tau_battery;
  p.wind.gains = default_gains(cfg.tau_wind, cfg.dt_inner, cfg.command_lo,
                               cfg.command_hi);
  p.solar.gains = default_gains(cfg.tau_solar, cfg.dt_inner, cfg.command_lo,
                                cfg.command_hi);
  p.battery.gains = default_gains(cfg.tau_battery, cfg.dt_inner,
                                  cfg.command_lo, cfg.command_hi);
  return p;
}

}  // namespace hppc
