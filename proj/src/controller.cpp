#include "hppc/controller.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace hppc {
namespace {

IndexMap make_index_map(const ControllerConfig& cfg) {
  IndexMap ix;
  ix.N = cfg.N;
  ix.T_ini = cfg.T_ini;
  ix.u0 = 0;
  ix.y0 = cfg.N * ix.m;
  ix.su0 = ix.y0 + cfg.N * ix.p;
  ix.sy0 = ix.su0 + cfg.T_ini * ix.m;
  ix.n = ix.sy0 + cfg.T_ini * ix.p;
  ix.behavior0 = 0;
  ix.battery0 = cfg.N * ix.p;
  ix.box0 = ix.battery0 + cfg.N;
  ix.mc = ix.box0 + 6 * cfg.N;
  return ix;
}

void verify_constraints(const qp::Problem& p, const Eigen::VectorXd& x) {
  const Eigen::VectorXd Ax = p.A * x;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < Ax.size(); ++i) {
    if (p.ub(i) < qp::kInf) worst = std::max(worst, Ax(i) - p.ub(i));
    if (p.lb(i) > -qp::kInf) worst = std::max(worst, p.lb(i) - Ax(i));
  }
  if (worst > 1e-6) {
    throw std::runtime_error(
        "control_step: solved QP violates constraints by more than 1e-6 MW");
  }
}

}  // namespace

History History::zeros(int T_ini) {
  require(T_ini >= 1, "History: T_ini must be >= 1");
  History h;
  h.u_ini = Eigen::VectorXd::Zero(T_ini * kChannels);
  h.y_ini = Eigen::VectorXd::Zero(T_ini * kChannels);
  return h;
}

void History::push(const PowerTriple& u, const PowerTriple& y) {
  require(u_ini.size() >= kChannels && y_ini.size() >= kChannels,
          "History::push: empty history");
  const Eigen::Index nu = u_ini.size();
  const Eigen::Index ny = y_ini.size();
  u_ini.head(nu - kChannels) = u_ini.tail(nu - kChannels).eval();
  y_ini.head(ny - kChannels) = y_ini.tail(ny - kChannels).eval();
  for (int ch = 0; ch < kChannels; ++ch) {
    u_ini(nu - kChannels + ch) = u[ch];
    y_ini(ny - kChannels + ch) = y[ch];
  }
}

std::pair<qp::Problem, IndexMap> build_problem(const ControllerConfig& cfg,
                                               const Predictor& pred,
                                               const History& hist,
                                               const HorizonData& hz,
                                               const PowerTriple& u_prev) {
  require(cfg.N >= 1 && cfg.T_ini >= 1, "build_problem: N, T_ini must be >= 1");
  require(cfg.Q_r >= 0.0 && cfg.lambda >= 0.0 && cfg.lambda_u >= 0.0 &&
              cfg.lambda_y >= 0.0,
          "build_problem: weights must be >= 0");
  require(pred.N == cfg.N && pred.T_ini == cfg.T_ini && pred.m == kChannels &&
              pred.p == kChannels,
          "build_problem: predictor dims do not match the config");
  require(hist.u_ini.size() == cfg.T_ini * kChannels &&
              hist.y_ini.size() == cfg.T_ini * kChannels,
          "build_problem: history is empty or has the wrong length");
  require(hz.p_ref.size() == cfg.N && hz.wind_bound.size() == cfg.N &&
              hz.solar_bound.size() == cfg.N,
          "build_problem: horizon data length mismatch");
  require(hz.wind_bound.minCoeff() >= 0.0 && hz.solar_bound.minCoeff() >= 0.0,
          "build_problem: wind/solar bounds must be >= 0");
  require(hz.battery_min <= hz.battery_max,
          "build_problem: battery bounds inverted");

  const IndexMap ix = make_index_map(cfg);
  const int N = cfg.N;

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(ix.n, ix.n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(ix.n);

  // Demand tracking: sum_k 1/2 Q_r (p_ref^k - yhat_w^k - yhat_s^k)^2.
  for (int k = 0; k < N; ++k) {
    const int yw = ix.y(k, kWind);
    const int ys = ix.y(k, kSolar);
    H(yw, yw) += cfg.Q_r;
    H(ys, ys) += cfg.Q_r;
    H(yw, ys) += cfg.Q_r;
    H(ys, yw) += cfg.Q_r;
    g(yw) -= cfg.Q_r * hz.p_ref(k);
    g(ys) -= cfg.Q_r * hz.p_ref(k);
  }

  // Wind move suppression: lambda (Delta u_w)^2 + lambda (Delta yhat_w)^2,
  // first differences along the horizon; the k = 0 term is differenced
  // against the applied setpoint / last measured output.
  auto add_rate = [&](int idx_now, int idx_prev) {
    H(idx_now, idx_now) += 2.0 * cfg.lambda;
    H(idx_prev, idx_prev) += 2.0 * cfg.lambda;
    H(idx_now, idx_prev) -= 2.0 * cfg.lambda;
    H(idx_prev, idx_now) -= 2.0 * cfg.lambda;
  };
  if (cfg.lambda > 0.0) {
    const int uw0 = ix.u(0, kWind);
    const int yw0 = ix.y(0, kWind);
    H(uw0, uw0) += 2.0 * cfg.lambda;
    g(uw0) -= 2.0 * cfg.lambda * u_prev.wind;
    H(yw0, yw0) += 2.0 * cfg.lambda;
    g(yw0) -= 2.0 * cfg.lambda * hist.last_y(kWind);
    for (int k = 1; k < N; ++k) {
      add_rate(ix.u(k, kWind), ix.u(k - 1, kWind));
      add_rate(ix.y(k, kWind), ix.y(k - 1, kWind));
    }
  }

  // Slack penalties lambda_u ||sigma_u||^2 + lambda_y ||sigma_y||^2.
  for (int i = 0; i < cfg.T_ini * kChannels; ++i) {
    H(ix.su0 + i, ix.su0 + i) += 2.0 * cfg.lambda_u;
    H(ix.sy0 + i, ix.sy0 + i) += 2.0 * cfg.lambda_y;
  }

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(ix.mc, ix.n);
  Eigen::VectorXd lb = Eigen::VectorXd::Zero(ix.mc);
  Eigen::VectorXd ub = Eigen::VectorXd::Zero(ix.mc);

  // Behavior consistency: y_N - S_uN u_N - S_uini sigma_u - S_yini sigma_y
  //                       = S_yini y_ini + S_uini u_ini.
  const Eigen::MatrixXd S_yini = pred.S_yini();
  const Eigen::MatrixXd S_uini = pred.S_uini();
  const Eigen::MatrixXd S_uN = pred.S_uN();
  const Eigen::VectorXd rhs = S_yini * hist.y_ini + S_uini * hist.u_ini;
  const int ny = N * kChannels;
  for (int i = 0; i < ny; ++i) {
    const int r = ix.behavior0 + i;
    A(r, ix.y0 + i) = 1.0;
    A.block(r, ix.u0, 1, N * kChannels) = -S_uN.row(i);
    A.block(r, ix.su0, 1, cfg.T_ini * kChannels) = -S_uini.row(i);
    A.block(r, ix.sy0, 1, cfg.T_ini * kChannels) = -S_yini.row(i);
    lb(r) = rhs(i);
    ub(r) = rhs(i);
  }

  // Battery balance: u_b^k + yhat_w^k + yhat_s^k = p_ref^k, so the battery
  // setpoint autonomously absorbs or covers the tracking gap.
  for (int k = 0; k < N; ++k) {
    const int r = ix.battery0 + k;
    A(r, ix.u(k, kBattery)) = 1.0;
    A(r, ix.y(k, kWind)) = 1.0;
    A(r, ix.y(k, kSolar)) = 1.0;
    lb(r) = hz.p_ref(k);
    ub(r) = hz.p_ref(k);
  }

  // Box constraints on setpoints and predicted outputs.
  auto box = [&](IndexMap::BoxFamily f, int k, int var, double lo, double hi) {
    const int r = ix.box_row(f, k);
    A(r, var) = 1.0;
    lb(r) = lo;
    ub(r) = hi;
  };
  for (int k = 0; k < N; ++k) {
    box(IndexMap::kBoxUw, k, ix.u(k, kWind), 0.0, hz.wind_bound(k));
    box(IndexMap::kBoxYw, k, ix.y(k, kWind), 0.0, hz.wind_bound(k));
    box(IndexMap::kBoxUs, k, ix.u(k, kSolar), 0.0, hz.solar_bound(k));
    box(IndexMap::kBoxYs, k, ix.y(k, kSolar), 0.0, hz.solar_bound(k));
    box(IndexMap::kBoxUb, k, ix.u(k, kBattery), hz.battery_min,
        hz.battery_max);
    box(IndexMap::kBoxYb, k, ix.y(k, kBattery), hz.battery_min,
        hz.battery_max);
  }

  return {qp::assemble(H, g, A, lb, ub), ix};
}

ControlSolution control_step(const ControllerConfig& cfg,
                             const Predictor& pred, const History& hist,
                             const HorizonData& hz, const PowerTriple& u_prev,
                             SolveCache* cache) {
  const auto t_start = std::chrono::steady_clock::now();
  auto [problem, ix] = build_problem(cfg, pred, hist, hz, u_prev);

  // Shift the previous solution one sample forward as the warm start: drop
  // its first horizon sample, duplicate its last, keep the slacks.
  Eigen::VectorXd x_warm, dual_warm;
  const Eigen::VectorXd* xw = nullptr;
  const Eigen::VectorXd* dw = nullptr;
  if (cache != nullptr && cache->has_prev &&
      cache->x_prev.size() == ix.n && cache->dual_prev.size() == ix.mc) {
    x_warm = cache->x_prev;
    dual_warm = cache->dual_prev;
    auto shift = [](Eigen::VectorXd& v, int offset, int count, int stride) {
      if (count < 2) return;
      v.segment(offset, (count - 1) * stride) =
          v.segment(offset + stride, (count - 1) * stride).eval();
    };
    shift(x_warm, ix.u0, ix.N, kChannels);
    shift(x_warm, ix.y0, ix.N, kChannels);
    shift(dual_warm, ix.behavior0, ix.N, kChannels);
    shift(dual_warm, ix.battery0, ix.N, 1);
    for (int f = 0; f < 6; ++f) shift(dual_warm, ix.box0 + f * ix.N, ix.N, 1);
    xw = &x_warm;
    dw = &dual_warm;
  }

  qp::Workspace local_ws;
  qp::Workspace& ws = cache != nullptr ? cache->ws : local_ws;
  const qp::Solution qs = qp::solve(problem, cfg.qp_settings, ws, xw, dw);

  if (qs.status == qp::Status::kInfeasible) {
    throw std::runtime_error(
        "control_step: QP infeasible; check horizon bounds and predictor");
  }
  if (qs.status == qp::Status::kSolved) verify_constraints(problem, qs.x);

  if (cache != nullptr) {
    cache->x_prev = qs.x;
    cache->dual_prev = qs.dual;
    cache->has_prev = true;
  }

  ControlSolution sol;
  sol.solver_status = qs.status;
  sol.iterations = qs.iterations;
  sol.objective = qs.objective;
  sol.u_N.resize(cfg.N, kChannels);
  sol.y_N.resize(cfg.N, kChannels);
  for (int k = 0; k < cfg.N; ++k) {
    for (int ch = 0; ch < kChannels; ++ch) {
      sol.u_N(k, ch) = qs.x(ix.u(k, ch));
      sol.y_N(k, ch) = qs.x(ix.y(k, ch));
    }
  }
  sol.sigma_u = qs.x.segment(ix.su0, cfg.T_ini * kChannels);
  sol.sigma_y = qs.x.segment(ix.sy0, cfg.T_ini * kChannels);
  sol.sigma_u_fro = sol.sigma_u.norm();
  sol.sigma_y_fro = sol.sigma_y.norm();
  sol.tracking_cost_per_step.resize(cfg.N);
  for (int k = 0; k < cfg.N; ++k) {
    sol.tracking_cost_per_step(k) =
        hz.p_ref(k) - sol.y_N(k, kWind) - sol.y_N(k, kSolar);
  }
  sol.solve_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t_start)
                     .count();
  return sol;
}

Forecast forecast(const ControlSolution& sol, double t0_s, double sample_dt) {
  require(sol.solver_status == qp::Status::kSolved,
          "forecast: solution is not solved");
  const int N = static_cast<int>(sol.y_N.rows());
  Forecast f;
  f.t_s.resize(N);
  f.y_pred = sol.y_N;
  f.total.resize(N);
  f.u_battery.resize(N);
  for (int k = 0; k < N; ++k) {
    f.t_s(k) = t0_s + (k + 1) * sample_dt;
    f.total(k) = sol.y_N(k, kWind) + sol.y_N(k, kSolar) + sol.y_N(k, kBattery);
    f.u_battery(k) = sol.u_N(k, kBattery);
  }
  return f;
}

RelaxationNorms relaxation_norms(const ControlSolution& sol) {
  return {sol.sigma_u.norm(), sol.sigma_y.norm()};
}

FanLog::FanLog()
    : table_({"step", "k", "t_s", "u_w", "u_s", "u_b", "yhat_w", "yhat_s",
              "yhat_b", "yhat_total", "p_ref", "wind_bound", "sigma_u_fro",
              "sigma_y_fro", "solve_ms"}) {}

void FanLog::append(int step, double t0_s, double sample_dt,
                    const ControlSolution& sol, const HorizonData& hz) {
  const int N = static_cast<int>(sol.u_N.rows());
  for (int k = 0; k < N; ++k) {
    const double total =
        sol.y_N(k, kWind) + sol.y_N(k, kSolar) + sol.y_N(k, kBattery);
    table_.add_row(
        {csv::fmt(step), csv::fmt(k + 1), csv::fmt(t0_s + (k + 1) * sample_dt),
         csv::fmt(sol.u_N(k, kWind)), csv::fmt(sol.u_N(k, kSolar)),
         csv::fmt(sol.u_N(k, kBattery)), csv::fmt(sol.y_N(k, kWind)),
         csv::fmt(sol.y_N(k, kSolar)), csv::fmt(sol.y_N(k, kBattery)),
         csv::fmt(total), csv::fmt(hz.p_ref(k)), csv::fmt(hz.wind_bound(k)),
         csv::fmt(sol.sigma_u_fro), csv::fmt(sol.sigma_y_fro),
         csv::fmt(sol.solve_ms)});
  }
}

}  // namespace hppc
