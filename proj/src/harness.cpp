#include "hppc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hppc/rng.hpp"

namespace hppc {
namespace {

// Independent random-stream ids hung off the scenario seed.
constexpr std::uint64_t kStreamDemandDays = 900;
constexpr std::uint64_t kStreamCollect = 901;
constexpr std::uint64_t kStreamRun = 902;

double nominal_wind_avail(const WeatherParams& w, double t_h) {
  return wind_power_curve(wind_speed_profile(t_h, w), w);
}

double nominal_solar_avail(const WeatherParams& w, double t_h) {
  return solar_power_curve(irradiance_profile(t_h, w), w);
}

double realized_wind_avail(const ScenarioConfig& scn, double t_h, Rng& rng) {
  const double v = wind_speed_profile(t_h, scn.weather);
  const double vr = scn.uncertainty
                        ? perturb_wind_speed(v, scn.weather.sigma_v, rng)
                        : v;
  return wind_power_curve(vr, scn.weather);
}

/// Measurement model: proportional Gaussian noise per channel when the
/// scenario is uncertain, otherwise the exact output.
PowerTriple measure(const ScenarioConfig& scn, const PowerTriple& y,
                    Rng& rng) {
  if (!scn.uncertainty || scn.meas_noise_ratio <= 0.0) return y;
  PowerTriple out = y;
  for (int ch = 0; ch < kChannels; ++ch) {
    out[ch] = y[ch] * (1.0 + rng.gaussian(0.0, scn.meas_noise_ratio));
  }
  return out;
}

struct LiveState {
  PlantState plant;
  History hist;
  PowerTriple u_prev;
  PowerTriple y_meas_prev;
  double t_s = 0.0;  // time of the most recent recorded sample
  Rng rng;

  explicit LiveState(const ScenarioConfig& scn)
      : plant(make_plant(scn.plant)),
        hist(History::zeros(scn.controller.T_ini)),
        rng(derive_seed(scn.seed, kStreamRun)) {}
};

/// Runs the reactive controller for warmup_steps supervisory samples so the
/// rolling history is filled with plant data gathered under the scenario's
/// own uncertainty settings; the last sample lands exactly at start_hour.
/// Warmup is a settling phase, not excitation, so the exploration dither is
/// disabled: the reactive controller then rides the wind availability
/// ceiling deterministically instead of random-walking around it.
LiveState warmup(const ScenarioConfig& scn) {
  require(scn.warmup_steps >= scn.controller.T_ini,
          "scenario: warmup_steps must cover T_ini samples");
  LiveState st(scn);
  const double dt = scn.controller.sample_dt;
  const double t0 = scn.start_hour * 3600.0 - scn.warmup_steps * dt;
  FoGains gains = scn.data.gains;
  gains.dither_std = 0.0;
  PowerTriple u{};
  for (int k = 0; k < scn.warmup_steps; ++k) {
    const double t_s = t0 + (k + 1) * dt;
    const double t_h = t_s / 3600.0;
    const ChannelBounds bounds{
        {0.0, nominal_wind_avail(scn.weather, t_h)},
        {0.0, nominal_solar_avail(scn.weather, t_h)},
        {scn.plant.battery_min, scn.plant.battery_max}};
    u = fo_step(u, st.y_meas_prev, scn.demand.eval(t_h), bounds, gains,
                st.rng);
    const double aw = realized_wind_avail(scn, t_h, st.rng);
    const double as = nominal_solar_avail(scn.weather, t_h);
    const PlantStepResult pr = plant_step(st.plant, u, aw, as);
    st.plant = pr.state;
    st.y_meas_prev = measure(scn, pr.outputs, st.rng);
    st.hist.push(u, st.y_meas_prev);
    st.u_prev = u;
    st.t_s = t_s;
  }
  return st;
}

/// Reference and bound traces for the N samples after t_now_s. The wind
/// bound is the q_w quantile of the forecast availability; with
/// uncertainty off it degenerates to the nominal availability.
HorizonData build_horizon(const ScenarioConfig& scn, double t_now_s) {
  const int N = scn.controller.N;
  const double dt = scn.controller.sample_dt;
  HorizonData hz;
  hz.p_ref.resize(N);
  hz.wind_bound.resize(N);
  hz.solar_bound.resize(N);
  hz.battery_min = scn.plant.battery_min;
  hz.battery_max = scn.plant.battery_max;
  const double sigma_v = scn.uncertainty ? scn.weather.sigma_v : 0.0;
  for (int k = 0; k < N; ++k) {
    const double t_h = (t_now_s + (k + 1) * dt) / 3600.0;
    hz.p_ref(k) = scn.demand.eval(t_h);
    const double v = wind_speed_profile(t_h, scn.weather);
    const WindPowerStats stats = wind_power_stats(v, sigma_v, scn.weather);
    hz.wind_bound(k) = quantile_bound(stats.mu, stats.sigma,
                                      scn.controller.q_w,
                                      scn.weather.rated_wind)
                           .bound;
    hz.solar_bound(k) = nominal_solar_avail(scn.weather, t_h);
  }
  return hz;
}

void finalize_timing(RunResult& r) {
  RunSummary& s = r.summary;
  s.steps = static_cast<int>(r.t_s.size());
  if (!r.solve_ms.empty()) {
    double sum = 0.0;
    for (double v : r.solve_ms) {
      sum += v;
      s.max_solve_ms = std::max(s.max_solve_ms, v);
    }
    s.mean_solve_ms = sum / static_cast<double>(r.solve_ms.size());
  }
  if (!r.sigma_u_fro.empty()) {
    double su = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < r.sigma_u_fro.size(); ++i) {
      su += r.sigma_u_fro[i];
      sy += r.sigma_y_fro[i];
    }
    s.mean_sigma_u_fro = su / static_cast<double>(r.sigma_u_fro.size());
    s.mean_sigma_y_fro = sy / static_cast<double>(r.sigma_y_fro.size());
  }
}

/// Structural checks shared by both run modes, evaluated on the solver's
/// own variables: the wind setpoint bound, the battery balance equality,
/// and the discharge implication on the forecast.
void tally_solution_checks(const ControlSolution& sol, const HorizonData& hz,
                           RunSummary& s) {
  const int N = static_cast<int>(sol.u_N.rows());
  for (int k = 0; k < N; ++k) {
    if (sol.u_N(k, kWind) > hz.wind_bound(k) + 1e-6) ++s.wind_bound_violations;
    const double balance = sol.u_N(k, kBattery) + sol.y_N(k, kWind) +
                           sol.y_N(k, kSolar) - hz.p_ref(k);
    if (std::abs(balance) > 1e-6) ++s.battery_eq_violations;
    const double deficit =
        hz.p_ref(k) - hz.wind_bound(k) - hz.solar_bound(k);
    if (deficit > 1e-3 && sol.u_N(k, kBattery) <= 0.0) {
      ++s.battery_implication_violations;
    }
  }
  if (sol.solver_status != qp::Status::kSolved) ++s.solver_max_iter_steps;
}

}  // namespace

double normalized_error(const std::vector<double>& pred,
                        const std::vector<double>& actual,
                        const std::vector<double>& normalizer) {
  require(!pred.empty() && pred.size() == actual.size() &&
              pred.size() == normalizer.size(),
          "normalized_error: series lengths differ or are empty");
  double mean_n = 0.0;
  double mae = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    mean_n += normalizer[i];
    mae += std::abs(pred[i] - actual[i]);
  }
  mean_n /= static_cast<double>(pred.size());
  mae /= static_cast<double>(pred.size());
  require(std::abs(mean_n) > 1e-12, "normalized_error: zero-mean normalizer");
  return 100.0 * mae / std::abs(mean_n);
}

DataSet collect_scenario_data(const ScenarioConfig& scn) {
  const std::vector<DemandProfile> days = make_reference_days(
      scn.demand, scn.data_days, derive_seed(scn.seed, kStreamDemandDays));
  return collect_trajectories(scn.plant, scn.weather, days, scn.data,
                              derive_seed(scn.seed, kStreamCollect));
}

Predictor train_predictor(const ScenarioConfig& scn) {
  require(scn.data.T_ini == scn.controller.T_ini &&
              scn.data.N == scn.controller.N,
          "scenario: data window dims must match the controller dims");
  const DataSet ds = collect_scenario_data(scn);
  const Blocks b = split_blocks(ds);
  return fit(b, {scn.data.T_ini, scn.data.N, kChannels, kChannels}, scn.ridge);
}

RunResult run_open_loop(const ScenarioConfig& scn, const Predictor& pred) {
  LiveState st = warmup(scn);
  const HorizonData hz = build_horizon(scn, st.t_s);
  const ControlSolution sol =
      control_step(scn.controller, pred, st.hist, hz, st.u_prev, nullptr);

  RunResult r;
  const int N = scn.controller.N;
  const double dt = scn.controller.sample_dt;
  std::vector<double> act_w(N), act_s(N), act_b(N), act_tot(N), pred_tot(N),
      abs_w(N), abs_s(N), abs_b(N);
  for (int k = 0; k < N; ++k) {
    const PowerTriple u{sol.u_N(k, kWind), sol.u_N(k, kSolar),
                        sol.u_N(k, kBattery)};
    const double t_s = st.t_s + (k + 1) * dt;
    const double t_h = t_s / 3600.0;
    const double aw = realized_wind_avail(scn, t_h, st.rng);
    const double as = nominal_solar_avail(scn.weather, t_h);
    const PlantStepResult pr = plant_step(st.plant, u, aw, as);
    st.plant = pr.state;
    const PowerTriple y = pr.outputs;

    r.t_s.push_back(t_s);
    r.p_ref.push_back(hz.p_ref(k));
    r.u_w.push_back(u.wind);
    r.u_s.push_back(u.solar);
    r.u_b.push_back(u.battery);
    r.y_w.push_back(y.wind);
    r.y_s.push_back(y.solar);
    r.y_b.push_back(y.battery);
    r.pred_w.push_back(sol.y_N(k, kWind));
    r.pred_s.push_back(sol.y_N(k, kSolar));
    r.pred_b.push_back(sol.y_N(k, kBattery));
    r.wind_bound.push_back(hz.wind_bound(k));
    r.solar_bound.push_back(hz.solar_bound(k));
    r.sigma_u_fro.push_back(sol.sigma_u_fro);
    r.sigma_y_fro.push_back(sol.sigma_y_fro);
    r.solve_ms.push_back(sol.solve_ms);
    r.status.push_back(qp::to_string(sol.solver_status));

    act_w[k] = y.wind;
    act_s[k] = y.solar;
    act_b[k] = y.battery;
    act_tot[k] = y.total();
    pred_tot[k] = sol.y_N(k, kWind) + sol.y_N(k, kSolar) + sol.y_N(k, kBattery);
    abs_w[k] = std::abs(r.pred_w[k]);
    abs_s[k] = std::abs(r.pred_s[k]);
    abs_b[k] = std::abs(r.pred_b[k]);
  }

  tally_solution_checks(sol, hz, r.summary);
  // A component forecast to stay near zero (a resting battery, say) has no
  // usable normalizer of its own; its error is measured against the
  // reference scale instead so the run never divides by silence.
  const auto component_error = [&](const std::vector<double>& pred_c,
                                   const std::vector<double>& act_c,
                                   const std::vector<double>& abs_c) {
    double mean_abs = 0.0;
    for (double v : abs_c) mean_abs += v;
    mean_abs /= static_cast<double>(abs_c.size());
    return normalized_error(pred_c, act_c, mean_abs > 1e-9 ? abs_c : r.p_ref);
  };
  r.summary.err_wind_pct = component_error(r.pred_w, act_w, abs_w);
  r.summary.err_solar_pct = component_error(r.pred_s, act_s, abs_s);
  r.summary.err_battery_pct = component_error(r.pred_b, act_b, abs_b);
  r.summary.err_total_pct = normalized_error(pred_tot, act_tot, r.p_ref);
  finalize_timing(r);
  return r;
}

RunResult run_open_loop(const ScenarioConfig& scn) {
  return run_open_loop(scn, train_predictor(scn));
}

RunResult run_closed_loop(const ScenarioConfig& scn, const Predictor& pred) {
  require(scn.steps >= 1, "scenario: steps must be >= 1");
  LiveState st = warmup(scn);
  RunResult r;
  r.has_fan = true;
  SolveCache cache;
  const double dt = scn.controller.sample_dt;
  double sum_sq = 0.0;
  double sum_ref = 0.0;

  for (int step = 0; step < scn.steps; ++step) {
    const HorizonData hz = build_horizon(scn, st.t_s);
    const ControlSolution sol =
        control_step(scn.controller, pred, st.hist, hz, st.u_prev, &cache);
    r.fan.append(step, st.t_s, dt, sol, hz);
    tally_solution_checks(sol, hz, r.summary);

    const PowerTriple u{sol.u_N(0, kWind), sol.u_N(0, kSolar),
                        sol.u_N(0, kBattery)};
    const double t_s = st.t_s + dt;
    const double t_h = t_s / 3600.0;
    const double aw = realized_wind_avail(scn, t_h, st.rng);
    const double as = nominal_solar_avail(scn.weather, t_h);
    const PlantStepResult pr = plant_step(st.plant, u, aw, as);
    st.plant = pr.state;
    const PowerTriple y = pr.outputs;
    st.y_meas_prev = measure(scn, y, st.rng);
    st.hist.push(u, st.y_meas_prev);
    st.u_prev = u;
    st.t_s = t_s;

    r.t_s.push_back(t_s);
    r.p_ref.push_back(hz.p_ref(0));
    r.u_w.push_back(u.wind);
    r.u_s.push_back(u.solar);
    r.u_b.push_back(u.battery);
    r.y_w.push_back(y.wind);
    r.y_s.push_back(y.solar);
    r.y_b.push_back(y.battery);
    r.pred_w.push_back(sol.y_N(0, kWind));
    r.pred_s.push_back(sol.y_N(0, kSolar));
    r.pred_b.push_back(sol.y_N(0, kBattery));
    r.wind_bound.push_back(hz.wind_bound(0));
    r.solar_bound.push_back(hz.solar_bound(0));
    r.sigma_u_fro.push_back(sol.sigma_u_fro);
    r.sigma_y_fro.push_back(sol.sigma_y_fro);
    r.solve_ms.push_back(sol.solve_ms);
    r.status.push_back(qp::to_string(sol.solver_status));

    const double err = y.total() - hz.p_ref(0);
    sum_sq += err * err;
    sum_ref += hz.p_ref(0);
  }

  const double mean_ref = sum_ref / static_cast<double>(scn.steps);
  require(std::abs(mean_ref) > 1e-12,
          "run_closed_loop: reference has zero mean");
  r.summary.tracking_error_pct =
      100.0 * std::sqrt(sum_sq / static_cast<double>(scn.steps)) /
      std::abs(mean_ref);
  finalize_timing(r);
  return r;
}

RunResult run_closed_loop(const ScenarioConfig& scn) {
  return run_closed_loop(scn, train_predictor(scn));
}

std::vector<AblationRow> ablation_table(const ScenarioConfig& base,
                                        const Predictor& pred,
                                        ExecMode mode) {
  std::vector<AblationRow> rows(5);
  rows[0] = {"no_uncertainty", false, -0.4, 10.0, 0.0, 0.0, 0.0};
  rows[1] = {"uncertainty_lambda_10", true, -0.4, 10.0, 0.0, 0.0, 0.0};
  rows[2] = {"uncertainty_lambda_1e5", true, -0.4, 1e5, 0.0, 0.0, 0.0};
  rows[3] = {"quantile_-0.4", true, -0.4, 10.0, 0.0, 0.0, 0.0};
  rows[4] = {"quantile_-1.6", true, -1.6, 10.0, 0.0, 0.0, 0.0};

  // Every row warms up from the same seed, so rows differ only in the knob
  // under study (and row 0 in the clean world it models).
  std::vector<Eigen::VectorXd> wind_out(rows.size());
  const int n_rows = static_cast<int>(rows.size());
#pragma omp parallel for schedule(dynamic) if (mode == ExecMode::kParallel)
  for (int i = 0; i < n_rows; ++i) {
    ScenarioConfig scn = base;
    scn.uncertainty = rows[i].uncertainty;
    scn.controller.q_w = rows[i].q_w;
    scn.controller.lambda_u = rows[i].lambda_slack;
    scn.controller.lambda_y = rows[i].lambda_slack;
    LiveState st = warmup(scn);
    const HorizonData hz = build_horizon(scn, st.t_s);
    const ControlSolution sol =
        control_step(scn.controller, pred, st.hist, hz, st.u_prev, nullptr);
    rows[i].sigma_u_fro = sol.sigma_u_fro;
    rows[i].sigma_y_fro = sol.sigma_y_fro;
    wind_out[i] = sol.y_N.col(kWind);
  }
  for (int i = 0; i < n_rows; ++i) {
    rows[i].delta_pw = (wind_out[i] - wind_out[0]).cwiseAbs().mean();
  }
  return rows;
}

std::vector<AblationRow> ablation_table(const ScenarioConfig& base) {
  return ablation_table(base, train_predictor(base), base.data.mode);
}

void write_run_csv(const RunResult& r, const std::string& path) {
  csv::Table table({"step", "t_s", "p_ref", "u_w", "u_s", "u_b", "y_w", "y_s",
                    "y_b", "y_total", "pred_w", "pred_s", "pred_b",
                    "pred_total", "wind_bound", "solar_bound", "sigma_u_fro",
                    "sigma_y_fro", "status"});
  for (std::size_t i = 0; i < r.t_s.size(); ++i) {
    table.add_row({csv::fmt(static_cast<double>(i)), csv::fmt(r.t_s[i]),
                   csv::fmt(r.p_ref[i]), csv::fmt(r.u_w[i]),
                   csv::fmt(r.u_s[i]), csv::fmt(r.u_b[i]), csv::fmt(r.y_w[i]),
                   csv::fmt(r.y_s[i]), csv::fmt(r.y_b[i]),
                   csv::fmt(r.y_w[i] + r.y_s[i] + r.y_b[i]),
                   csv::fmt(r.pred_w[i]), csv::fmt(r.pred_s[i]),
                   csv::fmt(r.pred_b[i]),
                   csv::fmt(r.pred_w[i] + r.pred_s[i] + r.pred_b[i]),
                   csv::fmt(r.wind_bound[i]), csv::fmt(r.solar_bound[i]),
                   csv::fmt(r.sigma_u_fro[i]), csv::fmt(r.sigma_y_fro[i]),
                   r.status[i]});
  }
  table.write_file(path);
}

void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::string& path) {
  csv::Table table({"row", "label", "uncertainty", "q_w", "lambda_slack",
                    "sigma_u_fro_mw", "sigma_y_fro_mw", "delta_pw_mw"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const AblationRow& row = rows[i];
    table.add_row({csv::fmt(static_cast<double>(i)), row.label,
                   row.uncertainty ? "1" : "0", csv::fmt(row.q_w),
                   csv::fmt(row.lambda_slack), csv::fmt(row.sigma_u_fro),
                   csv::fmt(row.sigma_y_fro), csv::fmt(row.delta_pw)});
  }
  table.write_file(path);
}

}  // namespace hppc
