#pragma once

#include "hppc/types.hpp"

namespace hppc {

/// Discrete PID gains. Units: kp dimensionless, ki 1/s, kd s; the command is
/// clamped to [command_lo, command_hi] MW.
struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double command_lo = -8.0;
  double command_hi = 8.0;
};

struct PidState {
  double integral = 0.0;    // MW*s
  double prev_error = 0.0;  // MW
};

struct PidStepResult {
  double command = 0.0;  // MW
  PidState state;
};

/// One first-order generation unit behind its own PID loop.
struct ComponentState {
  double output = 0.0;  // MW
  double tau = 20.0;    // s
  PidState pid;
  PidGains gains;
};

struct ComponentStepResult {
  double output = 0.0;
  ComponentState state;
};

/// Whole-plant state: three components sampled at the supervisory rate dt,
/// internally advanced at dt_inner. soc_energy is diagnostic only and never
/// constrains operation.
struct PlantState {
  ComponentState wind;
  ComponentState solar;
  ComponentState battery;
  double dt = 20.0;        // supervisory sampling interval, s
  double dt_inner = 1.0;   // PID/first-order substep, s
  bool ideal_tracking = false;
  double battery_min = -4.0;  // MW
  double battery_max = 4.0;   // MW
  double soc_energy = 2.0;        // MWh
  double soc_capacity = 4.0;      // MWh
};

struct PlantConfig {
  double dt = 20.0;
  double dt_inner = 1.0;
  bool ideal_tracking = false;
  double tau_wind = 20.0;
  double tau_solar = 20.0;
  double tau_battery = 5.0;
  double battery_min = -4.0;
  double battery_max = 4.0;
  double soc_capacity = 4.0;
  double command_lo = -8.0;
  double command_hi = 8.0;
};

struct PlantStepResult {
  PowerTriple outputs;
  PlantState state;
};

/// One PID update. The anti-windup rule freezes integration whenever the
/// pre-clamp command already exceeds the command bounds in the direction of
/// the current error, so the integral never pushes further into saturation.
PidStepResult pid_step(const PidState& pid, const PidGains& gains,
                       double setpoint, double measurement, double dt);

/// Exact zero-order-hold step of a unit-gain first-order lag:
/// returns a*output + (1-a)*command with a = exp(-dt/tau).
double first_order_step(double output, double command, double tau, double dt);

/// One inner-loop substep: PID against the current output, first-order plant,
/// then output clamped to [lo, hi].
ComponentStepResult component_step(const ComponentState& c, double setpoint,
                                   double lo, double hi, double dt);

/// Advances all three components across one supervisory interval (dt/dt_inner
/// substeps each, or a direct clamp in ideal-tracking mode) and updates the
/// diagnostic state of charge.
PlantStepResult plant_step(const PlantState& p, const PowerTriple& setpoints,
                           double avail_wind, double avail_solar);

/// PI gains placed so the closed inner loop has real poles at z = 0.45 and
/// z = 0.85 for the given lag and substep; settles well inside one 20 s
/// supervisory interval with under 2% overshoot (validated in tests).
PidGains default_gains(double tau, double dt, double command_lo,
                       double command_hi);

PlantState make_plant(const PlantConfig& cfg);

}  // namespace hppc
