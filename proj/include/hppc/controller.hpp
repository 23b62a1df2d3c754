#pragma once

#include <string>
#include <utility>

#include <Eigen/Core>

#include "hppc/csv.hpp"
#include "hppc/predictor.hpp"
#include "hppc/qp.hpp"
#include "hppc/types.hpp"

namespace hppc {

struct ControllerConfig {
  int N = 20;
  int T_ini = 20;
  double Q_r = 1.0;       // demand-tracking weight, 1/MW^2 scale
  double lambda = 0.1;    // wind rate-penalty weight
  double lambda_u = 10.0; // input-slack weight
  double lambda_y = 10.0; // output-slack weight
  double q_w = -0.4;      // wind-bound quantile
  double battery_min = -4.0;  // MW
  double battery_max = 4.0;   // MW
  double sample_dt = 20.0;    // s
  qp::Settings qp_settings{.eps_abs = 1e-7, .eps_rel = 1e-7};
};

/// Rolling buffers of the most recent T_ini supervisory samples, oldest
/// first, stacked sample-major/channel-minor like the data blocks.
struct History {
  Eigen::VectorXd u_ini;  // T_ini*m MW
  Eigen::VectorXd y_ini;  // T_ini*p MW

  static History zeros(int T_ini);
  void push(const PowerTriple& u, const PowerTriple& y);
  int samples() const { return static_cast<int>(u_ini.size()) / kChannels; }
  double last_y(int ch) const {
    return y_ini(y_ini.size() - kChannels + ch);
  }
};

/// Per-horizon-sample problem data: the demand reference and the admissible
/// output envelopes (the wind one already quantile-tightened).
struct HorizonData {
  Eigen::VectorXd p_ref;        // N MW
  Eigen::VectorXd wind_bound;   // N MW
  Eigen::VectorXd solar_bound;  // N MW
  double battery_min = -4.0;    // MW
  double battery_max = 4.0;     // MW
};

/// Layout of the stacked decision vector x = [u_N; y_N; sigma_u; sigma_y]
/// and of the constraint rows of the assembled QP.
struct IndexMap {
  int N = 0;
  int T_ini = 0;
  int m = kChannels;
  int p = kChannels;
  int n = 0;
  int mc = 0;
  int u0 = 0;
  int y0 = 0;
  int su0 = 0;
  int sy0 = 0;
  int behavior0 = 0;  // N*p equality rows
  int battery0 = 0;   // N equality rows
  int box0 = 0;       // 6*N box rows, grouped by family below

  enum BoxFamily { kBoxUw = 0, kBoxYw, kBoxUs, kBoxYs, kBoxUb, kBoxYb };

  int u(int k, int ch) const { return u0 + k * m + ch; }
  int y(int k, int ch) const { return y0 + k * p + ch; }
  int sigma_u(int k, int ch) const { return su0 + k * m + ch; }
  int sigma_y(int k, int ch) const { return sy0 + k * p + ch; }
  int box_row(BoxFamily f, int k) const { return box0 + f * N + k; }
};

struct ControlSolution {
  Eigen::MatrixXd u_N;      // N x m MW
  Eigen::MatrixXd y_N;      // N x p MW
  Eigen::VectorXd sigma_u;  // T_ini*m MW
  Eigen::VectorXd sigma_y;  // T_ini*p MW
  double objective = 0.0;
  Eigen::VectorXd tracking_cost_per_step;  // N MW, P_r - yhat_w - yhat_s
  qp::Status solver_status = qp::Status::kMaxIter;
  int iterations = 0;
  double solve_ms = 0.0;
  double sigma_u_fro = 0.0;
  double sigma_y_fro = 0.0;
};

struct Forecast {
  Eigen::VectorXd t_s;        // N timestamps, seconds
  Eigen::MatrixXd y_pred;     // N x p MW per-component predicted outputs
  Eigen::VectorXd total;      // N MW predicted plant output
  Eigen::VectorXd u_battery;  // N MW planned battery setpoints
};

struct RelaxationNorms {
  double sigma_u_fro = 0.0;  // MW
  double sigma_y_fro = 0.0;  // MW
};

/// Carries solver state between receding-horizon steps: the QP workspace
/// (scaling + factorization, reused because H and A are step-invariant) and
/// the previous solution used as a shifted warm start.
struct SolveCache {
  qp::Workspace ws;
  bool has_prev = false;
  Eigen::VectorXd x_prev;
  Eigen::VectorXd dual_prev;
};

/// Assembles the horizon QP over x = [u_N; y_N; sigma_u; sigma_y]:
/// tracking + rate-penalty + slack objective, the predictor consistency
/// equalities y_N = S*[y_ini + sigma_y; u_ini + sigma_u; u_N], the battery
/// balance equalities u_b = p_ref - yhat_w - yhat_s, and box constraints on
/// every setpoint and predicted output.
std::pair<qp::Problem, IndexMap> build_problem(const ControllerConfig& cfg,
                                               const Predictor& pred,
                                               const History& hist,
                                               const HorizonData& hz,
                                               const PowerTriple& u_prev);

/// Builds and solves one step. Uses the cache's previous solution as a
/// shifted warm start when available and verifies every constraint to
/// 1e-6 MW on solved problems. Throws on an infeasible report (the slacks
/// make the behavior equalities feasible by construction).
ControlSolution control_step(const ControllerConfig& cfg,
                             const Predictor& pred, const History& hist,
                             const HorizonData& hz, const PowerTriple& u_prev,
                             SolveCache* cache = nullptr);

/// Unpacks a solution into per-component output forecasts with timestamps
/// t0 + k*sample_dt for k = 1..N.
Forecast forecast(const ControlSolution& sol, double t0_s, double sample_dt);

RelaxationNorms relaxation_norms(const ControlSolution& sol);

/// Per-step forecast log; one row per (step, horizon sample).
class FanLog {
 public:
  FanLog();
  void append(int step, double t0_s, double sample_dt,
              const ControlSolution& sol, const HorizonData& hz);
  void write(const std::string& path) const { table_.write_file(path); }

 private:
  csv::Table table_;
};

}  // namespace hppc
