#include "hppc/config.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "hppc/csv.hpp"

namespace hppc {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

std::string dotted(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

const json& section_of(const json& j, const std::string& name) {
  const json& s = j.at(name);
  if (!s.is_object()) fail("section \"" + name + "\" must be an object");
  return s;
}

void check_keys(const json& s, const std::string& section,
                const std::vector<std::string>& allowed) {
  for (auto it = s.begin(); it != s.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      fail("unknown key \"" + dotted(section, it.key()) + "\"");
    }
  }
}

double num(const json& s, const std::string& section, const char* key,
           double dflt) {
  if (!s.contains(key)) return dflt;
  const json& v = s.at(key);
  if (!v.is_number()) fail("key \"" + dotted(section, key) + "\" must be a number");
  return v.get<double>();
}

int integer(const json& s, const std::string& section, const char* key,
            int dflt) {
  if (!s.contains(key)) return dflt;
  const json& v = s.at(key);
  if (!v.is_number_integer()) {
    fail("key \"" + dotted(section, key) + "\" must be an integer");
  }
  return v.get<int>();
}

bool boolean(const json& s, const std::string& section, const char* key,
             bool dflt) {
  if (!s.contains(key)) return dflt;
  const json& v = s.at(key);
  if (!v.is_boolean()) {
    fail("key \"" + dotted(section, key) + "\" must be a boolean");
  }
  return v.get<bool>();
}

std::uint64_t seed_value(const json& s, const std::string& section,
                         const char* key, std::uint64_t dflt) {
  if (!s.contains(key)) return dflt;
  const json& v = s.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  fail("key \"" + dotted(section, key) + "\" must be a non-negative integer");
}

std::string text(const json& s, const std::string& section, const char* key,
                 const std::string& dflt) {
  if (!s.contains(key)) return dflt;
  const json& v = s.at(key);
  if (!v.is_string()) {
    fail("key \"" + dotted(section, key) + "\" must be a string");
  }
  return v.get<std::string>();
}

void parse_plant(const json& s, PlantConfig& p) {
  check_keys(s, "plant",
             {"dt", "dt_inner", "ideal_tracking", "tau_wind", "tau_solar",
              "tau_battery", "battery_min", "battery_max", "soc_capacity",
              "command_lo", "command_hi"});
  p.dt = num(s, "plant", "dt", p.dt);
  p.dt_inner = num(s, "plant", "dt_inner", p.dt_inner);
  p.ideal_tracking = boolean(s, "plant", "ideal_tracking", p.ideal_tracking);
  p.tau_wind = num(s, "plant", "tau_wind", p.tau_wind);
  p.tau_solar = num(s, "plant", "tau_solar", p.tau_solar);
  p.tau_battery = num(s, "plant", "tau_battery", p.tau_battery);
  p.battery_min = num(s, "plant", "battery_min", p.battery_min);
  p.battery_max = num(s, "plant", "battery_max", p.battery_max);
  p.soc_capacity = num(s, "plant", "soc_capacity", p.soc_capacity);
  p.command_lo = num(s, "plant", "command_lo", p.command_lo);
  p.command_hi = num(s, "plant", "command_hi", p.command_hi);
}

void parse_weather(const json& s, WeatherParams& w) {
  check_keys(s, "weather",
             {"wind_mean", "wind_amplitude", "wind_period_h", "wind_phase",
              "irradiance_peak", "sunrise_h", "sunset_h", "rated_wind",
              "rated_solar", "cut_in", "rated_speed", "cut_out", "sigma_v"});
  w.wind_mean = num(s, "weather", "wind_mean", w.wind_mean);
  w.wind_amplitude = num(s, "weather", "wind_amplitude", w.wind_amplitude);
  w.wind_period_h = num(s, "weather", "wind_period_h", w.wind_period_h);
  w.wind_phase = num(s, "weather", "wind_phase", w.wind_phase);
  w.irradiance_peak = num(s, "weather", "irradiance_peak", w.irradiance_peak);
  w.sunrise_h = num(s, "weather", "sunrise_h", w.sunrise_h);
  w.sunset_h = num(s, "weather", "sunset_h", w.sunset_h);
  w.rated_wind = num(s, "weather", "rated_wind", w.rated_wind);
  w.rated_solar = num(s, "weather", "rated_solar", w.rated_solar);
  w.cut_in = num(s, "weather", "cut_in", w.cut_in);
  w.rated_speed = num(s, "weather", "rated_speed", w.rated_speed);
  w.cut_out = num(s, "weather", "cut_out", w.cut_out);
  w.sigma_v = num(s, "weather", "sigma_v", w.sigma_v);
}

void parse_controller(const json& s, ControllerConfig& c) {
  check_keys(s, "controller",
             {"N", "T_ini", "Q_r", "lambda", "lambda_u", "lambda_y", "q_w",
              "qp_eps_abs", "qp_eps_rel", "qp_max_iter"});
  c.N = integer(s, "controller", "N", c.N);
  c.T_ini = integer(s, "controller", "T_ini", c.T_ini);
  c.Q_r = num(s, "controller", "Q_r", c.Q_r);
  c.lambda = num(s, "controller", "lambda", c.lambda);
  c.lambda_u = num(s, "controller", "lambda_u", c.lambda_u);
  c.lambda_y = num(s, "controller", "lambda_y", c.lambda_y);
  c.q_w = num(s, "controller", "q_w", c.q_w);
  c.qp_settings.eps_abs =
      num(s, "controller", "qp_eps_abs", c.qp_settings.eps_abs);
  c.qp_settings.eps_rel =
      num(s, "controller", "qp_eps_rel", c.qp_settings.eps_rel);
  c.qp_settings.max_iter =
      integer(s, "controller", "qp_max_iter", c.qp_settings.max_iter);
}

void parse_data(const json& s, ScenarioConfig& scn) {
  check_keys(s, "data",
             {"T", "days", "noise_ratio", "fo_alpha", "fo_dither", "mode"});
  scn.data.T = integer(s, "data", "T", scn.data.T);
  scn.data_days = integer(s, "data", "days", scn.data_days);
  scn.data.noise_ratio = num(s, "data", "noise_ratio", scn.data.noise_ratio);
  scn.data.gains.alpha = num(s, "data", "fo_alpha", scn.data.gains.alpha);
  scn.data.gains.dither_std =
      num(s, "data", "fo_dither", scn.data.gains.dither_std);
  const std::string dflt =
      scn.data.mode == ExecMode::kParallel ? "parallel" : "serial";
  const std::string mode = text(s, "data", "mode", dflt);
  if (mode == "parallel") {
    scn.data.mode = ExecMode::kParallel;
  } else if (mode == "serial") {
    scn.data.mode = ExecMode::kSerial;
  } else {
    fail("key \"data.mode\" must be \"serial\" or \"parallel\"");
  }
}

void parse_demand(const json& s, DemandProfile& d) {
  check_keys(s, "scenario.demand",
             {"peak_mw", "base", "amp1", "phase1_h", "amp2", "phase2_h"});
  d.peak_mw = num(s, "scenario.demand", "peak_mw", d.peak_mw);
  d.base = num(s, "scenario.demand", "base", d.base);
  d.amp1 = num(s, "scenario.demand", "amp1", d.amp1);
  d.phase1_h = num(s, "scenario.demand", "phase1_h", d.phase1_h);
  d.amp2 = num(s, "scenario.demand", "amp2", d.amp2);
  d.phase2_h = num(s, "scenario.demand", "phase2_h", d.phase2_h);
  d.reset_cache();
}

void parse_scenario(const json& s, ScenarioConfig& scn) {
  check_keys(s, "scenario",
             {"seed", "start_hour", "steps", "warmup_steps", "uncertainty",
              "meas_noise_ratio", "ridge", "demand"});
  scn.seed = seed_value(s, "scenario", "seed", scn.seed);
  scn.start_hour = num(s, "scenario", "start_hour", scn.start_hour);
  scn.steps = integer(s, "scenario", "steps", scn.steps);
  scn.warmup_steps = integer(s, "scenario", "warmup_steps", scn.warmup_steps);
  scn.uncertainty = boolean(s, "scenario", "uncertainty", scn.uncertainty);
  scn.meas_noise_ratio =
      num(s, "scenario", "meas_noise_ratio", scn.meas_noise_ratio);
  scn.ridge = num(s, "scenario", "ridge", scn.ridge);
  if (s.contains("demand")) {
    const json& d = s.at("demand");
    if (!d.is_object()) fail("key \"scenario.demand\" must be an object");
    parse_demand(d, scn.demand);
  }
}

void validate_experiment(const Experiment& e) {
  const ScenarioConfig& s = e.scenario;
  if (s.plant.dt <= 0.0 || s.plant.dt_inner <= 0.0) {
    fail("plant sample times must be positive");
  }
  if (s.plant.battery_max <= s.plant.battery_min) {
    fail("plant.battery_max must exceed plant.battery_min");
  }
  if (s.controller.N < 1 || s.controller.T_ini < 1) {
    fail("controller.N and controller.T_ini must be at least 1");
  }
  if (s.controller.Q_r < 0.0 || s.controller.lambda < 0.0 ||
      s.controller.lambda_u < 0.0 || s.controller.lambda_y < 0.0) {
    fail("controller weights must be non-negative");
  }
  if (s.data.T < 1 || s.data_days < 1) {
    fail("data.T and data.days must be at least 1");
  }
  if (s.data.noise_ratio < 0.0 || s.meas_noise_ratio < 0.0) {
    fail("noise ratios must be non-negative");
  }
  if (s.ridge < 0.0) fail("scenario.ridge must be non-negative");
  if (s.steps < 1) fail("scenario.steps must be at least 1");
  if (s.warmup_steps < s.controller.T_ini) {
    fail("scenario.warmup_steps must be at least controller.T_ini");
  }
  if (e.io.out_dir.empty()) fail("io.out_dir must be non-empty");
  validate(s.weather);
}

}  // namespace

Experiment default_experiment() { return Experiment{}; }

Experiment parse_experiment(const json& j) {
  if (!j.is_object()) fail("top level must be an object");
  check_keys(j, "",
             {"plant", "weather", "controller", "data", "scenario", "io"});
  Experiment e = default_experiment();
  ScenarioConfig& scn = e.scenario;
  if (j.contains("plant")) parse_plant(section_of(j, "plant"), scn.plant);
  if (j.contains("weather")) {
    parse_weather(section_of(j, "weather"), scn.weather);
  }
  if (j.contains("controller")) {
    parse_controller(section_of(j, "controller"), scn.controller);
  }
  if (j.contains("data")) parse_data(section_of(j, "data"), scn);
  if (j.contains("scenario")) parse_scenario(section_of(j, "scenario"), scn);
  if (j.contains("io")) {
    const json& s = section_of(j, "io");
    check_keys(s, "io", {"out_dir"});
    e.io.out_dir = text(s, "io", "out_dir", e.io.out_dir);
  }

  // Dependent fields have a single source of truth.
  scn.controller.sample_dt = scn.plant.dt;
  scn.controller.battery_min = scn.plant.battery_min;
  scn.controller.battery_max = scn.plant.battery_max;
  scn.data.dt_s = scn.plant.dt;
  scn.data.T_ini = scn.controller.T_ini;
  scn.data.N = scn.controller.N;

  validate_experiment(e);
  return e;
}

Experiment load_experiment(const std::string& path) {
  if (path.empty()) {
    Experiment e = default_experiment();
    validate_experiment(e);
    return e;
  }
  return parse_experiment(json::parse(csv::read_text(path)));
}

nlohmann::json echo_config(const Experiment& e) {
  const ScenarioConfig& s = e.scenario;
  json j;
  j["plant"] = {{"dt", s.plant.dt},
                {"dt_inner", s.plant.dt_inner},
                {"ideal_tracking", s.plant.ideal_tracking},
                {"tau_wind", s.plant.tau_wind},
                {"tau_solar", s.plant.tau_solar},
                {"tau_battery", s.plant.tau_battery},
                {"battery_min", s.plant.battery_min},
                {"battery_max", s.plant.battery_max},
                {"soc_capacity", s.plant.soc_capacity},
                {"command_lo", s.plant.command_lo},
                {"command_hi", s.plant.command_hi}};
  j["weather"] = {{"wind_mean", s.weather.wind_mean},
                  {"wind_amplitude", s.weather.wind_amplitude},
                  {"wind_period_h", s.weather.wind_period_h},
                  {"wind_phase", s.weather.wind_phase},
                  {"irradiance_peak", s.weather.irradiance_peak},
                  {"sunrise_h", s.weather.sunrise_h},
                  {"sunset_h", s.weather.sunset_h},
                  {"rated_wind", s.weather.rated_wind},
                  {"rated_solar", s.weather.rated_solar},
                  {"cut_in", s.weather.cut_in},
                  {"rated_speed", s.weather.rated_speed},
                  {"cut_out", s.weather.cut_out},
                  {"sigma_v", s.weather.sigma_v}};
  j["controller"] = {{"N", s.controller.N},
                     {"T_ini", s.controller.T_ini},
                     {"Q_r", s.controller.Q_r},
                     {"lambda", s.controller.lambda},
                     {"lambda_u", s.controller.lambda_u},
                     {"lambda_y", s.controller.lambda_y},
                     {"q_w", s.controller.q_w},
                     {"qp_eps_abs", s.controller.qp_settings.eps_abs},
                     {"qp_eps_rel", s.controller.qp_settings.eps_rel},
                     {"qp_max_iter", s.controller.qp_settings.max_iter}};
  j["data"] = {{"T", s.data.T},
               {"days", s.data_days},
               {"noise_ratio", s.data.noise_ratio},
               {"fo_alpha", s.data.gains.alpha},
               {"fo_dither", s.data.gains.dither_std},
               {"mode",
                s.data.mode == ExecMode::kParallel ? "parallel" : "serial"}};
  j["scenario"] = {{"seed", s.seed},
                   {"start_hour", s.start_hour},
                   {"steps", s.steps},
                   {"warmup_steps", s.warmup_steps},
                   {"uncertainty", s.uncertainty},
                   {"meas_noise_ratio", s.meas_noise_ratio},
                   {"ridge", s.ridge},
                   {"demand",
                    {{"peak_mw", s.demand.peak_mw},
                     {"base", s.demand.base},
                     {"amp1", s.demand.amp1},
                     {"phase1_h", s.demand.phase1_h},
                     {"amp2", s.demand.amp2},
                     {"phase2_h", s.demand.phase2_h}}}};
  j["io"] = {{"out_dir", e.io.out_dir}};
  return j;
}

}  // namespace hppc
