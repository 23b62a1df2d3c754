// Benchmark comparing the OpenMP-parallel kernels against their serial
// reference implementations (training-data generation and the ablation
// table), plus warm- vs cold-start timing for the QP solver. Also verifies
// that the parallel and serial paths produce bit-identical results.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include <CLI11.hpp>

#include "hppc/config.hpp"
#include "hppc/controller.hpp"
#include "hppc/harness.hpp"
#include "hppc/qp.hpp"

namespace {

double time_ms(const std::function<void()>& fn, int repeats) {
  double best = 0.0;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    const double ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    if (r == 0 || ms < best) best = ms;
  }
  return best;
}

bool datasets_equal(const hppc::DataSet& a, const hppc::DataSet& b) {
  if (a.trajectories.size() != b.trajectories.size()) return false;
  for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
    if (a.trajectories[i].u_seq != b.trajectories[i].u_seq) return false;
    if (a.trajectories[i].y_seq != b.trajectories[i].y_seq) return false;
  }
  return true;
}

bool ablations_equal(const std::vector<hppc::AblationRow>& a,
                     const std::vector<hppc::AblationRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].sigma_u_fro != b[i].sigma_u_fro) return false;
    if (a[i].sigma_y_fro != b[i].sigma_y_fro) return false;
    if (a[i].delta_pw != b[i].delta_pw) return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs parallel benchmark for the control toolkit"};
  int repeats = 1;
  app.add_option("--repeats", repeats, "timing repeats (best-of)");
  CLI11_PARSE(app, argc, argv);

  hppc::ScenarioConfig scn = hppc::default_experiment().scenario;

  hppc::ScenarioConfig serial = scn;
  serial.data.mode = hppc::ExecMode::kSerial;
  hppc::ScenarioConfig parallel = scn;
  parallel.data.mode = hppc::ExecMode::kParallel;

  hppc::DataSet ds_serial, ds_parallel;
  const double dg_serial = time_ms(
      [&] { ds_serial = hppc::collect_scenario_data(serial); }, repeats);
  const double dg_parallel = time_ms(
      [&] { ds_parallel = hppc::collect_scenario_data(parallel); }, repeats);
  std::printf("datagen   serial %8.1f ms   parallel %8.1f ms   "
              "speedup %.2fx   identical: %s\n",
              dg_serial, dg_parallel, dg_serial / dg_parallel,
              datasets_equal(ds_serial, ds_parallel) ? "yes" : "NO");

  const hppc::Predictor pred = hppc::train_predictor(scn);

  std::vector<hppc::AblationRow> ab_serial, ab_parallel;
  const double abl_serial = time_ms(
      [&] {
        ab_serial = hppc::ablation_table(scn, pred, hppc::ExecMode::kSerial);
      },
      repeats);
  const double abl_parallel = time_ms(
      [&] {
        ab_parallel =
            hppc::ablation_table(scn, pred, hppc::ExecMode::kParallel);
      },
      repeats);
  std::printf("ablation  serial %8.1f ms   parallel %8.1f ms   "
              "speedup %.2fx   identical: %s\n",
              abl_serial, abl_parallel, abl_serial / abl_parallel,
              ablations_equal(ab_serial, ab_parallel) ? "yes" : "NO");

  // Warm vs cold QP: one representative controller problem, re-solved with
  // a reused workspace and the previous solution as the starting iterate.
  const int N = scn.controller.N;
  hppc::HorizonData hz;
  hz.p_ref = Eigen::VectorXd::Constant(N, 4.0);
  hz.wind_bound = Eigen::VectorXd::Constant(N, 0.44);
  hz.solar_bound = Eigen::VectorXd::Constant(N, 3.99);
  const hppc::History hist = hppc::History::zeros(scn.controller.T_ini);
  const auto [prob, ix] = hppc::build_problem(scn.controller, pred, hist, hz,
                                              hppc::PowerTriple{});
  (void)ix;

  const double cold = time_ms(
      [&] {
        hppc::qp::Workspace ws;
        (void)hppc::qp::solve(prob, scn.controller.qp_settings, ws);
      },
      std::max(repeats, 3));

  hppc::qp::Workspace ws;
  hppc::qp::Solution first =
      hppc::qp::solve(prob, scn.controller.qp_settings, ws);
  const double warm = time_ms(
      [&] {
        (void)hppc::qp::solve(prob, scn.controller.qp_settings, ws,
                              &first.x, &first.dual);
      },
      std::max(repeats, 3));
  std::printf("qp solve  cold   %8.2f ms   warm     %8.2f ms   "
              "speedup %.2fx\n",
              cold, warm, cold / warm);
  return 0;
}
