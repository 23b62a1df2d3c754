#pragma once

#include <string>

#include "hppc/rng.hpp"
#include "hppc/types.hpp"

namespace hppc {

/// Synthetic day-profile parameters plus turbine/array curve constants.
struct WeatherParams {
  double wind_mean = 8.0;        // m/s
  double wind_amplitude = 2.0;   // m/s
  double wind_period_h = 24.0;   // h
  double wind_phase = 1.5707963267948966;  // rad; default peaks at midnight
  double irradiance_peak = 1000.0;         // W/m^2
  double sunrise_h = 6.0;
  double sunset_h = 18.0;
  double rated_wind = 4.0;   // MW
  double rated_solar = 4.0;  // MW
  double cut_in = 3.0;       // m/s
  double rated_speed = 12.0; // m/s
  double cut_out = 25.0;     // m/s
  double sigma_v = 0.1;      // m/s, wind-speed uncertainty
};

/// Quantile bound on available wind power: bound = clamp(mu + q*sigma, 0, rated).
struct QuantileBound {
  double mu = 0.0;     // MW
  double sigma = 0.0;  // MW
  double q = 0.0;
  double bound = 0.0;  // MW
};

struct WindPowerStats {
  double mu = 0.0;     // MW
  double sigma = 0.0;  // MW
};

void validate(const WeatherParams& p);

/// Sinusoidal wind-speed profile, floored at zero.
double wind_speed_profile(double t_h, const WeatherParams& p);

/// Cubic power curve: zero below cut-in and above cut-out, rated on the flat
/// top, cubic interpolation in between. Continuous except at cut-out.
double wind_power_curve(double v, const WeatherParams& p);

/// Half-sine irradiance between sunrise and sunset, zero at night.
double irradiance_profile(double t_h, const WeatherParams& p);

/// rated_solar * min(1, g/1000).
double solar_power_curve(double g, const WeatherParams& p);

/// Realized wind speed: max(0, v + eps), eps ~ N(0, sigma_v^2).
double perturb_wind_speed(double v, double sigma_v, Rng& rng);

/// Delta-method mean and standard deviation of available wind power for a
/// Gaussian speed perturbation: sigma = |dcurve/dv| * sigma_v.
WindPowerStats wind_power_stats(double v, double sigma_v,
                                const WeatherParams& p);

QuantileBound quantile_bound(double mu, double sigma, double q, double rated);

/// Writes the day profile (nominal and realized availability plus the
/// quantile bound) sampled every dt_s seconds over [0, hours).
void write_profile_csv(const std::string& path, const WeatherParams& p,
                       double q, double hours, double dt_s, std::uint64_t seed);

}  // namespace hppc
