#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hppc/controller.hpp"
#include "hppc/datagen.hpp"
#include "hppc/demand.hpp"
#include "hppc/predictor.hpp"

namespace hppc {

/// Everything one experiment needs: plant, weather and demand models, the
/// data-collection recipe, the controller tuning, and the run shape.
struct ScenarioConfig {
  std::uint64_t seed = 1;
  PlantConfig plant;
  WeatherParams weather;
  DemandProfile demand;  // canonical day; reference days are derived from it
  int data_days = 8;     // reference days simulated for data collection
  CollectConfig data;
  double ridge = 0.0;  // predictor regularization
  ControllerConfig controller;
  bool uncertainty = true;  // wind-speed perturbation + measurement noise
  double meas_noise_ratio = 0.02;  // runtime y-measurement noise (proportional)
  double start_hour = 11.88;
  int steps = 720;        // closed-loop supervisory steps
  int warmup_steps = 60;  // reactive-controller steps that fill the history
};

struct RunSummary {
  int steps = 0;
  double tracking_error_pct = 0.0;  // closed loop: normalized RMS of P_l-P_r
  double err_wind_pct = 0.0;        // open loop: per-component normalized
  double err_solar_pct = 0.0;
  double err_battery_pct = 0.0;
  double err_total_pct = 0.0;
  int wind_bound_violations = 0;     // u_w above its bound by > 1e-6 MW
  int battery_eq_violations = 0;     // battery balance off by > 1e-6 MW
  int battery_implication_violations = 0;  // deficit present but no discharge
  int solver_max_iter_steps = 0;
  double mean_sigma_u_fro = 0.0;  // MW
  double mean_sigma_y_fro = 0.0;  // MW
  double mean_solve_ms = 0.0;
  double max_solve_ms = 0.0;
};

/// Equal-length per-step series (closed loop: one entry per supervisory
/// step; open loop: one entry per horizon sample). pred_* hold the
/// controller's one-step-ahead predictions in closed loop and the horizon
/// predictions in open loop.
struct RunResult {
  std::vector<double> t_s, p_ref, u_w, u_s, u_b, y_w, y_s, y_b, pred_w,
      pred_s, pred_b, wind_bound, solar_bound, sigma_u_fro, sigma_y_fro,
      solve_ms;
  std::vector<std::string> status;
  FanLog fan;  // populated in closed loop only
  bool has_fan = false;
  RunSummary summary;
};

struct AblationRow {
  std::string label;
  bool uncertainty = true;
  double q_w = -0.4;
  double lambda_slack = 10.0;  // applied to both lambda_u and lambda_y
  double sigma_u_fro = 0.0;    // MW
  double sigma_y_fro = 0.0;    // MW
  double delta_pw = 0.0;       // MW, mean |wind output - baseline row|
};

/// 100 * mean(|pred - actual|) / |mean(normalizer)|. Throws when the
/// normalizer mean is zero or the lengths differ.
double normalized_error(const std::vector<double>& pred,
                        const std::vector<double>& actual,
                        const std::vector<double>& normalizer);

/// Derives the reference-day library, runs the reactive collector and
/// returns the dataset (seeded from scn.seed, independent of run streams).
DataSet collect_scenario_data(const ScenarioConfig& scn);

/// collect + split + fit with the scenario's ridge.
Predictor train_predictor(const ScenarioConfig& scn);

/// One horizon solve at start_hour after a reactive warmup, applied to the
/// plant open loop for N samples; errors are normalized per component by
/// the mean absolute prediction (falling back to the mean reference when a
/// component's forecast is essentially zero) and for the total by the mean
/// reference.
RunResult run_open_loop(const ScenarioConfig& scn, const Predictor& pred);
RunResult run_open_loop(const ScenarioConfig& scn);

/// Receding-horizon loop at the supervisory rate: solve, apply the first
/// setpoint, step the plant under (optionally perturbed) weather, feed the
/// measurement back, log every intermediate forecast.
RunResult run_closed_loop(const ScenarioConfig& scn, const Predictor& pred);
RunResult run_closed_loop(const ScenarioConfig& scn);

/// The five-row slack study: no uncertainty; uncertainty at slack weight 10
/// and 1e5; quantiles -0.4 and -1.6. Single horizon solves at start_hour
/// from identically-seeded warmups so only the studied knob varies per row.
/// Rows run in parallel under ExecMode::kParallel with order-stable output.
std::vector<AblationRow> ablation_table(const ScenarioConfig& base,
                                        const Predictor& pred,
                                        ExecMode mode = ExecMode::kParallel);
std::vector<AblationRow> ablation_table(const ScenarioConfig& base);

void write_run_csv(const RunResult& r, const std::string& path);
void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::string& path);

}  // namespace hppc
