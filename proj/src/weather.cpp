#include "hppc/weather.hpp"

#include <cmath>

#include "hppc/csv.hpp"

namespace hppc {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void validate(const WeatherParams& p) {
  require(p.cut_in >= 0.0 && p.cut_in < p.rated_speed &&
              p.rated_speed < p.cut_out,
          "weather: need 0 <= cut_in < rated_speed < cut_out");
  require(p.rated_wind > 0.0 && p.rated_solar > 0.0,
          "weather: rated powers must be positive");
  require(p.sigma_v >= 0.0, "weather: sigma_v must be non-negative");
  require(p.wind_period_h > 0.0, "weather: wind period must be positive");
  require(p.sunrise_h < p.sunset_h, "weather: sunrise must precede sunset");
}

double wind_speed_profile(double t_h, const WeatherParams& p) {
  const double v = p.wind_mean +
                   p.wind_amplitude *
                       std::sin(2.0 * kPi * t_h / p.wind_period_h + p.wind_phase);
  return v > 0.0 ? v : 0.0;
}

double wind_power_curve(double v, const WeatherParams& p) {
  if (v < p.cut_in || v > p.cut_out) return 0.0;
  if (v >= p.rated_speed) return p.rated_wind;
  const double c3 = p.cut_in * p.cut_in * p.cut_in;
  const double r3 = p.rated_speed * p.rated_speed * p.rated_speed;
  return p.rated_wind * (v * v * v - c3) / (r3 - c3);
}

double irradiance_profile(double t_h, const WeatherParams& p) {
  // Wrap to one day so multi-day simulations reuse the same shape.
  double t = std::fmod(t_h, 24.0);
  if (t < 0.0) t += 24.0;
  if (t <= p.sunrise_h || t >= p.sunset_h) return 0.0;
  const double phase = (t - p.sunrise_h) / (p.sunset_h - p.sunrise_h);
  return p.irradiance_peak * std::sin(kPi * phase);
}

double solar_power_curve(double g, const WeatherParams& p) {
  require(g >= 0.0, "solar_power_curve: irradiance must be non-negative");
  const double frac = g / 1000.0;
  return p.rated_solar * (frac < 1.0 ? frac : 1.0);
}

double perturb_wind_speed(double v, double sigma_v, Rng& rng) {
  require(sigma_v >= 0.0, "perturb_wind_speed: sigma_v must be non-negative");
  if (sigma_v == 0.0) return v;
  const double sample = v + rng.gaussian(0.0, sigma_v);
  return sample > 0.0 ? sample : 0.0;
}

WindPowerStats wind_power_stats(double v, double sigma_v,
                                const WeatherParams& p) {
  require(sigma_v >= 0.0, "wind_power_stats: sigma_v must be non-negative");
  WindPowerStats s;
  s.mu = wind_power_curve(v, p);
  double slope = 0.0;
  if (v > p.cut_in && v < p.rated_speed) {
    const double c3 = p.cut_in * p.cut_in * p.cut_in;
    const double r3 = p.rated_speed * p.rated_speed * p.rated_speed;
    slope = p.rated_wind * 3.0 * v * v / (r3 - c3);
  }
  s.sigma = std::abs(slope) * sigma_v;
  return s;
}

QuantileBound quantile_bound(double mu, double sigma, double q, double rated) {
  require(sigma >= 0.0, "quantile_bound: sigma must be non-negative");
  QuantileBound b;
  b.mu = mu;
  b.sigma = sigma;
  b.q = q;
  b.bound = clamp(mu + q * sigma, 0.0, rated);
  return b;
}

void write_profile_csv(const std::string& path, const WeatherParams& p,
                       double q, double hours, double dt_s,
                       std::uint64_t seed) {
  validate(p);
  require(hours > 0.0 && dt_s > 0.0, "write_profile_csv: bad sampling range");
  Rng rng(seed);
  csv::Table table({"time_h", "wind_speed", "avail_wind_mw",
                    "avail_wind_uncertain_mw", "quantile_bound_mw",
                    "avail_solar_mw"});
  const int samples = static_cast<int>(hours * 3600.0 / dt_s);
  for (int i = 0; i < samples; ++i) {
    const double t_h = i * dt_s / 3600.0;
    const double v = wind_speed_profile(t_h, p);
    const double v_real = perturb_wind_speed(v, p.sigma_v, rng);
    const WindPowerStats stats = wind_power_stats(v, p.sigma_v, p);
    const QuantileBound qb =
        quantile_bound(stats.mu, stats.sigma, q, p.rated_wind);
    const double solar = solar_power_curve(irradiance_profile(t_h, p), p);
    table.add_row({t_h, v, stats.mu, wind_power_curve(v_real, p), qb.bound,
                   solar});
  }
  table.write_file(path);
}

}  // namespace hppc
