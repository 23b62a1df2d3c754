// hppctl — command-line front end for the hybrid-plant predictive control
// toolkit. Subcommands: datagen (training data + weather profile), fit
// (subspace predictor), run (open-loop forecast, closed-loop tracking, or
// the five-row uncertainty ablation).
//
// Exit codes: 0 success; 1 configuration or I/O failure; 2 numerical
// failure (insufficient excitation, degenerate fit, or an unsolvable step).

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hppc/config.hpp"
#include "hppc/csv.hpp"
#include "hppc/datagen.hpp"
#include "hppc/harness.hpp"
#include "hppc/predictor.hpp"
#include "hppc/rng.hpp"
#include "hppc/weather.hpp"

namespace {

using nlohmann::json;

void write_summary(const json& j, const std::string& path) {
  hppc::csv::write_text(path, j.dump(2) + "\n");
}

json timing_of(const hppc::RunSummary& s) {
  return json{{"mean_solve_ms", s.mean_solve_ms},
              {"max_solve_ms", s.max_solve_ms}};
}

int run_datagen(const hppc::Experiment& exp) {
  hppc::DataSet ds;
  try {
    ds = hppc::collect_scenario_data(exp.scenario);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  hppc::ExcitationReport rank;
  int required = 0;
  try {
    const std::string& out = exp.io.out_dir;
    hppc::write_dataset(ds, out + "/dataset.csv", out + "/dataset.json");
    hppc::write_profile_csv(out + "/weather.csv", exp.scenario.weather,
                            exp.scenario.controller.q_w, 24.0,
                            exp.scenario.plant.dt,
                            hppc::derive_seed(exp.scenario.seed, 903));
    const hppc::Blocks b = hppc::split_blocks(ds);
    rank = hppc::excitation_rank(b);
    required = static_cast<int>(b.U_Tini.rows() + b.U_N.rows());
    json summary;
    summary["command"] = "datagen";
    summary["config"] = hppc::echo_config(exp);
    summary["metrics"] = {{"trajectories", ds.T()},
                          {"window_length", ds.L()},
                          {"excitation_rank", rank.rank},
                          {"excitation_sufficient", rank.is_sufficient}};
    summary["timing"] = json::object();
    write_summary(summary, out + "/summary.json");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << "wrote dataset (" << ds.T() << " windows) to "
            << exp.io.out_dir << "\n";
  std::cout << "excitation rank " << rank.rank << "/" << required
            << (rank.is_sufficient ? " (sufficient)" : " (insufficient)")
            << "\n";
  if (!rank.is_sufficient) {
    std::cerr << "error: excitation rank is insufficient; regenerate with "
                 "a larger dither\n";
    return 2;
  }
  return 0;
}

int fit_predictor_checked(const hppc::Experiment& exp, hppc::Predictor& pred) {
  try {
    pred = hppc::train_predictor(exp.scenario);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (!pred.excitation_ok) {
    std::cerr << "error: excitation rank is insufficient; the stacked data "
                 "matrix is row-rank deficient\n";
    return 2;
  }
  return 0;
}

int run_fit(const hppc::Experiment& exp, const std::string& data_dir) {
  const std::string dir = data_dir.empty() ? exp.io.out_dir : data_dir;
  hppc::DataSet ds;
  try {
    ds = hppc::read_dataset(dir + "/dataset.csv", dir + "/dataset.json");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  const hppc::ControllerConfig& ctl = exp.scenario.controller;
  if (ds.T_ini != ctl.T_ini || ds.N != ctl.N) {
    std::cerr << "error: dataset windows (T_ini=" << ds.T_ini
              << ", N=" << ds.N << ") do not match the controller (T_ini="
              << ctl.T_ini << ", N=" << ctl.N << ")\n";
    return 1;
  }
  hppc::Predictor pred;
  try {
    const hppc::Blocks b = hppc::split_blocks(ds);
    pred = hppc::fit(b, {ds.T_ini, ds.N, ds.m, ds.p}, exp.scenario.ridge);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (!pred.excitation_ok) {
    std::cerr << "error: excitation rank is insufficient; the stacked data "
                 "matrix is row-rank deficient\n";
    return 2;
  }
  try {
    const std::string& out = exp.io.out_dir;
    hppc::write_predictor(pred, out + "/predictor.csv",
                          out + "/predictor.json");
    json summary;
    summary["command"] = "fit";
    summary["config"] = hppc::echo_config(exp);
    summary["metrics"] = {{"fit_residual_fro", pred.fit_residual_fro},
                          {"ridge", pred.ridge},
                          {"excitation_ok", pred.excitation_ok},
                          {"trajectories", ds.T()},
                          {"rows", pred.S_star.rows()},
                          {"cols", pred.S_star.cols()}};
    summary["timing"] = json::object();
    write_summary(summary, out + "/summary.json");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << "fit residual " << hppc::csv::fmt(pred.fit_residual_fro)
            << " MW; wrote predictor to " << exp.io.out_dir << "\n";
  return 0;
}

json common_run_metrics(const hppc::RunSummary& s) {
  return json{{"steps", s.steps},
              {"wind_bound_violations", s.wind_bound_violations},
              {"battery_eq_violations", s.battery_eq_violations},
              {"battery_implication_violations",
               s.battery_implication_violations},
              {"solver_max_iter_steps", s.solver_max_iter_steps},
              {"constraint_violation_count",
               s.wind_bound_violations + s.battery_eq_violations +
                   s.battery_implication_violations},
              {"mean_sigma_u_fro", s.mean_sigma_u_fro},
              {"mean_sigma_y_fro", s.mean_sigma_y_fro}};
}

int run_scenario(const hppc::Experiment& exp, const std::string& mode) {
  hppc::Predictor pred;
  if (int rc = fit_predictor_checked(exp, pred); rc != 0) return rc;

  const std::string& out = exp.io.out_dir;
  json summary;
  summary["command"] = "run";
  summary["config"] = hppc::echo_config(exp);

  if (mode == "ablation") {
    std::vector<hppc::AblationRow> rows;
    try {
      rows = hppc::ablation_table(exp.scenario, pred, exp.scenario.data.mode);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
    try {
      hppc::write_ablation_csv(rows, out + "/ablation.csv");
      json jrows = json::array();
      for (const hppc::AblationRow& r : rows) {
        jrows.push_back({{"label", r.label},
                         {"uncertainty", r.uncertainty},
                         {"q_w", r.q_w},
                         {"lambda_slack", r.lambda_slack},
                         {"sigma_u_fro_mw", r.sigma_u_fro},
                         {"sigma_y_fro_mw", r.sigma_y_fro},
                         {"delta_pw_mw", r.delta_pw}});
      }
      summary["metrics"] = {{"mode", "ablation"}, {"rows", jrows}};
      summary["timing"] = json::object();
      write_summary(summary, out + "/summary.json");
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
    std::cout << "wrote ablation table (" << rows.size() << " rows) to "
              << out << "\n";
    return 0;
  }

  hppc::RunResult r;
  try {
    r = (mode == "open") ? hppc::run_open_loop(exp.scenario, pred)
                         : hppc::run_closed_loop(exp.scenario, pred);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    hppc::write_run_csv(r, out + "/run.csv");
    json metrics = common_run_metrics(r.summary);
    metrics["mode"] = mode;
    if (mode == "open") {
      metrics["err_wind_pct"] = r.summary.err_wind_pct;
      metrics["err_solar_pct"] = r.summary.err_solar_pct;
      metrics["err_battery_pct"] = r.summary.err_battery_pct;
      metrics["err_total_pct"] = r.summary.err_total_pct;
    } else {
      r.fan.write(out + "/fan.csv");
      metrics["tracking_error_pct"] = r.summary.tracking_error_pct;
    }
    summary["metrics"] = metrics;
    summary["timing"] = timing_of(r.summary);
    write_summary(summary, out + "/summary.json");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  if (mode == "open") {
    std::cout << "open-loop forecast: total error "
              << r.summary.err_total_pct << "% over " << r.summary.steps
              << " samples\n";
  } else {
    std::cout << "closed loop: tracking error "
              << r.summary.tracking_error_pct << "% over "
              << r.summary.steps << " steps\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"predictive control toolkit for a wind+solar+battery plant"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string mode = "closed";
  std::uint64_t seed = 0;
  double start_hour = 0.0;
  int steps = 0;

  CLI::Option* opt_config =
      app.add_option("--config", config_path, "JSON config file")
          ->envname("HPPC_CONFIG");
  CLI::Option* opt_out =
      app.add_option("--out", out_dir, "output directory")
          ->envname("HPPC_OUT");
  CLI::Option* opt_seed =
      app.add_option("--seed", seed, "master seed")->envname("HPPC_SEED");
  CLI::Option* opt_mode =
      app.add_option("--mode", mode, "run mode: open, closed, or ablation")
          ->envname("HPPC_MODE");
  CLI::Option* opt_start =
      app.add_option("--start-hour", start_hour, "scenario start time [h]")
          ->envname("HPPC_START_HOUR");
  CLI::Option* opt_steps =
      app.add_option("--steps", steps, "closed-loop supervisory steps")
          ->envname("HPPC_STEPS");

  CLI::App* cmd_datagen =
      app.add_subcommand("datagen", "generate training data and the weather profile");
  cmd_datagen->fallthrough();
  std::string data_dir;
  CLI::App* cmd_fit = app.add_subcommand(
      "fit", "fit the subspace predictor from a persisted dataset");
  cmd_fit->add_option("--data", data_dir,
                      "directory holding dataset.csv/dataset.json "
                      "(default: the output directory)");
  cmd_fit->fallthrough();
  CLI::App* cmd_run = app.add_subcommand("run", "run the control scenario");
  cmd_run->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  hppc::Experiment exp;
  try {
    exp = hppc::load_experiment(config_path);
    if (opt_out->count() > 0) exp.io.out_dir = out_dir;
    if (opt_seed->count() > 0) exp.scenario.seed = seed;
    if (opt_start->count() > 0) exp.scenario.start_hour = start_hour;
    if (opt_steps->count() > 0) {
      if (steps < 1) {
        throw std::invalid_argument("config: --steps must be at least 1");
      }
      exp.scenario.steps = steps;
    }
    if (mode != "open" && mode != "closed" && mode != "ablation") {
      throw std::invalid_argument(
          "config: --mode must be open, closed, or ablation");
    }
    (void)opt_config;
    (void)opt_mode;
    std::filesystem::create_directories(exp.io.out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  if (cmd_datagen->parsed()) return run_datagen(exp);
  if (cmd_fit->parsed()) return run_fit(exp, data_dir);
  return run_scenario(exp, mode);
}
