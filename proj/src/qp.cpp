#include "hppc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <Eigen/LU>

#include "hppc/csv.hpp"
#include "hppc/types.hpp"

namespace hppc::qp {
namespace {

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

void check_settings(const Settings& s) {
  require(s.eps_abs > 0.0 && s.eps_rel >= 0.0, "qp: bad tolerances");
  require(s.max_iter >= 1, "qp: max_iter must be >= 1");
  require(s.sigma > 0.0, "qp: sigma must be positive");
  require(s.rho > 0.0, "qp: rho must be positive");
  require(s.alpha > 0.0 && s.alpha < 2.0, "qp: alpha must lie in (0, 2)");
  require(s.check_every >= 1, "qp: check_every must be >= 1");
  require(s.scaling_iters >= 0, "qp: scaling_iters must be >= 0");
  require(s.eps_infeas > 0.0, "qp: eps_infeas must be positive");
}

/// Modified Ruiz equilibration of the stacked matrix [H Aᵀ; A 0]: iterates
/// toward unit row/column infinity norms. Writes the diagonal scalings and
/// the scaled data into the workspace.
void ruiz_equilibrate(const Problem& p, int iters, Workspace& ws) {
  const Eigen::Index n = p.H.rows();
  const Eigen::Index mc = p.A.rows();
  ws.D = Eigen::VectorXd::Ones(n);
  ws.E = Eigen::VectorXd::Ones(mc);
  ws.Hs = p.H;
  ws.As = p.A;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd dx(n), de(mc);
    for (Eigen::Index j = 0; j < n; ++j) {
      double mx = ws.Hs.col(j).cwiseAbs().maxCoeff();
      if (mc > 0) mx = std::max(mx, ws.As.col(j).cwiseAbs().maxCoeff());
      dx(j) = mx > 0.0 ? 1.0 / std::sqrt(clamp(mx, 1e-8, 1e8)) : 1.0;
    }
    for (Eigen::Index i = 0; i < mc; ++i) {
      const double mx = ws.As.row(i).cwiseAbs().maxCoeff();
      de(i) = mx > 0.0 ? 1.0 / std::sqrt(clamp(mx, 1e-8, 1e8)) : 1.0;
    }
    ws.Hs = dx.asDiagonal() * ws.Hs * dx.asDiagonal();
    if (mc > 0) ws.As = de.asDiagonal() * ws.As * dx.asDiagonal();
    ws.D = ws.D.cwiseProduct(dx);
    ws.E = ws.E.cwiseProduct(de);
  }
}

void factorize(Workspace& ws) {
  Eigen::MatrixXd K = ws.Hs;
  K.diagonal().array() += ws.sigma;
  if (ws.As.rows() > 0) {
    K.noalias() += ws.As.transpose() * ws.rho.asDiagonal() * ws.As;
  }
  ws.llt.compute(K);
  if (ws.llt.info() != Eigen::Success) {
    throw std::runtime_error("qp: x-update factorization failed");
  }
}

void setup_workspace(const Problem& p, const Settings& s, Workspace& ws) {
  const Eigen::Index n = p.H.rows();
  const Eigen::Index mc = p.A.rows();
  ws.sigma = s.sigma;
  ws.rho_base = s.rho;
  ws.scaling_iters = s.scaling ? s.scaling_iters : 0;
  ws.H_key = p.H;
  ws.A_key = p.A;
  if (ws.scaling_iters > 0) {
    ruiz_equilibrate(p, ws.scaling_iters, ws);
  } else {
    ws.D = Eigen::VectorXd::Ones(n);
    ws.E = Eigen::VectorXd::Ones(mc);
    ws.Hs = p.H;
    ws.As = p.A;
  }
  ws.eq_row.assign(static_cast<std::size_t>(mc), false);
  ws.rho.resize(mc);
  for (Eigen::Index i = 0; i < mc; ++i) {
    const bool eq = p.lb(i) == p.ub(i);
    ws.eq_row[static_cast<std::size_t>(i)] = eq;
    ws.rho(i) = eq ? s.rho * 1e3 : s.rho;
  }
  factorize(ws);
  ws.ready = true;
}

bool cache_valid(const Problem& p, const Settings& s, const Workspace& ws) {
  if (!ws.ready || ws.sigma != s.sigma || ws.rho_base != s.rho ||
      ws.scaling_iters != (s.scaling ? s.scaling_iters : 0)) {
    return false;
  }
  if (ws.H_key.rows() != p.H.rows() || ws.H_key.cols() != p.H.cols() ||
      ws.A_key.rows() != p.A.rows() || ws.A_key.cols() != p.A.cols()) {
    return false;
  }
  const std::size_t hb = sizeof(double) * static_cast<std::size_t>(p.H.size());
  const std::size_t ab = sizeof(double) * static_cast<std::size_t>(p.A.size());
  if (hb > 0 && std::memcmp(ws.H_key.data(), p.H.data(), hb) != 0) return false;
  if (ab > 0 && std::memcmp(ws.A_key.data(), p.A.data(), ab) != 0) return false;
  return true;
}

double objective_of(const Problem& p, const Eigen::VectorXd& x) {
  return 0.5 * x.dot(p.H * x) + p.g.dot(x);
}

/// Base step currently carried by the non-equality rows (the adapted rho).
double current_rho_base(const Workspace& ws, const Settings& s) {
  for (std::size_t i = 0; i < ws.eq_row.size(); ++i) {
    if (!ws.eq_row[i]) return ws.rho(static_cast<Eigen::Index>(i));
  }
  if (!ws.eq_row.empty()) return ws.rho(0) / 1e3;
  return s.rho;
}

/// Unconstrained problems reduce to one regularized Newton solve plus
/// iterative refinement.
Solution solve_unconstrained(const Problem& p, const Settings& s) {
  Eigen::MatrixXd K = p.H;
  K.diagonal().array() += s.sigma;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("qp: factorization failed");
  }
  Eigen::VectorXd x = llt.solve(-p.g);
  for (int r = 0; r < 10; ++r) {
    const Eigen::VectorXd resid = -p.g - p.H * x;
    if (inf_norm(resid) <= 0.1 * s.eps_abs) break;
    x += llt.solve(resid);
  }
  Solution sol;
  sol.x = x;
  sol.dual = Eigen::VectorXd(0);
  sol.iterations = 1;
  sol.primal_residual = 0.0;
  sol.dual_residual = inf_norm(p.H * x + p.g);
  const double eps_d =
      s.eps_abs + s.eps_rel * std::max(inf_norm(p.H * x), inf_norm(p.g));
  sol.status = sol.dual_residual <= eps_d ? Status::kSolved : Status::kMaxIter;
  sol.objective = objective_of(p, x);
  return sol;
}

struct ActiveRow {
  int row = 0;
  int side = 0;  // -1 lower, +1 upper, 0 equality
  double b = 0.0;
};

/// Solves the equality-constrained KKT system of a trial active set with
/// static regularization and iterative refinement against the exact system.
/// Returns false when the refinement fails to produce finite numbers.
bool kkt_solve(const Problem& p, const std::vector<ActiveRow>& act,
               Eigen::VectorXd& x_out, Eigen::VectorXd& nu_out) {
  const Eigen::Index n = p.H.rows();
  const Eigen::Index ma = static_cast<Eigen::Index>(act.size());
  constexpr double kDelta = 1e-9;

  Eigen::MatrixXd A_act(ma, n);
  Eigen::VectorXd rhs(n + ma);
  rhs.head(n) = -p.g;
  for (Eigen::Index k = 0; k < ma; ++k) {
    A_act.row(k) = p.A.row(act[static_cast<std::size_t>(k)].row);
    rhs(n + k) = act[static_cast<std::size_t>(k)].b;
  }

  Eigen::MatrixXd K0 = Eigen::MatrixXd::Zero(n + ma, n + ma);
  K0.topLeftCorner(n, n) = p.H;
  K0.topRightCorner(n, ma) = A_act.transpose();
  K0.bottomLeftCorner(ma, n) = A_act;

  Eigen::MatrixXd Kreg = K0;
  Kreg.topLeftCorner(n, n).diagonal().array() += kDelta;
  Kreg.bottomRightCorner(ma, ma).diagonal().array() -= kDelta;

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(Kreg);
  Eigen::VectorXd sol = lu.solve(rhs);
  for (int r = 0; r < 4; ++r) {
    sol += lu.solve(rhs - K0 * sol);
  }
  if (!sol.allFinite()) return false;
  x_out = sol.head(n);
  nu_out = sol.tail(ma);
  return true;
}

KktResiduals residuals_of(const Problem& p, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& dual) {
  KktResiduals k;
  const Eigen::VectorXd Ax = p.A * x;
  Eigen::VectorXd stat = p.H * x + p.g;
  if (p.A.rows() > 0) stat.noalias() += p.A.transpose() * dual;
  k.stationarity = inf_norm(stat);
  for (Eigen::Index i = 0; i < p.A.rows(); ++i) {
    const double yp = std::max(dual(i), 0.0);
    const double yn = std::min(dual(i), 0.0);
    if (p.ub(i) < kInf) {
      k.primal_feas = std::max(k.primal_feas, Ax(i) - p.ub(i));
      k.complementarity = std::max(k.complementarity, yp * (p.ub(i) - Ax(i)));
    } else {
      k.complementarity = std::max(k.complementarity, yp);
    }
    if (p.lb(i) > -kInf) {
      k.primal_feas = std::max(k.primal_feas, p.lb(i) - Ax(i));
      k.complementarity = std::max(k.complementarity, -yn * (Ax(i) - p.lb(i)));
    } else {
      k.complementarity = std::max(k.complementarity, -yn);
    }
  }
  k.primal_feas = std::max(k.primal_feas, 0.0);
  k.complementarity = std::abs(k.complementarity);
  return k;
}

/// Active-set polish: detects the active rows from the ADMM iterate, solves
/// the corresponding KKT system, re-adds any rows the candidate violates
/// (up to 5 rounds) and accepts the candidate only when it improves the
/// unscaled KKT residuals without flipping multiplier signs.
void polish(const Problem& p, const Workspace& ws, Solution& sol) {
  const Eigen::Index mc = p.A.rows();
  const Eigen::VectorXd Ax = p.A * sol.x;

  std::vector<ActiveRow> act;
  std::vector<char> in_set(static_cast<std::size_t>(mc), 0);
  auto push = [&](int row, int side) {
    if (in_set[static_cast<std::size_t>(row)]) return;
    in_set[static_cast<std::size_t>(row)] = 1;
    ActiveRow a;
    a.row = row;
    a.side = side;
    a.b = side > 0 ? p.ub(row) : p.lb(row);
    act.push_back(a);
  };
  for (Eigen::Index i = 0; i < mc; ++i) {
    if (ws.eq_row[static_cast<std::size_t>(i)]) {
      push(static_cast<int>(i), 0);
      continue;
    }
    const double y = sol.dual(i);
    if (p.lb(i) > -kInf &&
        (y < -1e-10 || Ax(i) <= p.lb(i) + 1e-7 * (1.0 + std::abs(p.lb(i))))) {
      push(static_cast<int>(i), -1);
    } else if (p.ub(i) < kInf && (y > 1e-10 ||
                                  Ax(i) >=
                                      p.ub(i) - 1e-7 * (1.0 + std::abs(p.ub(i))))) {
      push(static_cast<int>(i), +1);
    }
  }

  Eigen::VectorXd xhat, nu;
  for (int round = 0; round < 5; ++round) {
    if (!kkt_solve(p, act, xhat, nu)) return;
    const Eigen::VectorXd Axh = p.A * xhat;
    bool added = false;
    for (Eigen::Index i = 0; i < mc; ++i) {
      if (in_set[static_cast<std::size_t>(i)]) continue;
      if (p.ub(i) < kInf && Axh(i) > p.ub(i) + 1e-9) {
        push(static_cast<int>(i), +1);
        added = true;
      } else if (p.lb(i) > -kInf && Axh(i) < p.lb(i) - 1e-9) {
        push(static_cast<int>(i), -1);
        added = true;
      }
    }
    if (!added) break;
  }
  if (xhat.size() == 0) return;

  Eigen::VectorXd dual_hat = Eigen::VectorXd::Zero(mc);
  for (std::size_t k = 0; k < act.size(); ++k) {
    const double v = nu(static_cast<Eigen::Index>(k));
    if (act[k].side > 0 && v < -1e-8) return;  // wrong sign: keep ADMM iterate
    if (act[k].side < 0 && v > 1e-8) return;
    dual_hat(act[k].row) = v;
  }

  const KktResiduals before = residuals_of(p, sol.x, sol.dual);
  const KktResiduals after = residuals_of(p, xhat, dual_hat);
  if (std::max(after.stationarity, after.primal_feas) <=
      std::max(before.stationarity, before.primal_feas)) {
    sol.x = xhat;
    sol.dual = dual_hat;
    sol.primal_residual = after.primal_feas;
    sol.dual_residual = after.stationarity;
    sol.objective = objective_of(p, sol.x);
    sol.polished = true;
  }
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::kSolved: return "solved";
    case Status::kMaxIter: return "max_iter";
    default: return "infeasible";
  }
}

Problem assemble(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                 const Eigen::MatrixXd& A, const Eigen::VectorXd& lb,
                 const Eigen::VectorXd& ub) {
  const Eigen::Index n = H.rows();
  require(n >= 1, "assemble: empty problem");
  require(H.cols() == n, "assemble: H must be square");
  require(g.size() == n, "assemble: g length mismatch");
  require(A.rows() == 0 || A.cols() == n, "assemble: A column count mismatch");
  require(lb.size() == A.rows() && ub.size() == A.rows(),
          "assemble: bound length mismatch");
  require(H.allFinite(), "assemble: H has non-finite entries");
  require(g.allFinite(), "assemble: g has non-finite entries");
  require(A.size() == 0 || A.allFinite(), "assemble: A has non-finite entries");
  for (Eigen::Index i = 0; i < lb.size(); ++i) {
    require(!std::isnan(lb(i)) && !std::isnan(ub(i)), "assemble: NaN bound");
    require(lb(i) <= ub(i), "assemble: lb exceeds ub");
    require(lb(i) < kInf && ub(i) > -kInf, "assemble: empty bound interval");
    if (lb(i) == ub(i)) {
      require(std::isfinite(lb(i)), "assemble: equality row must be finite");
    }
  }
  const double skew =
      n > 0 ? (H - H.transpose()).cwiseAbs().maxCoeff() : 0.0;
  require(skew < 1e-12, "assemble: H asymmetric beyond tolerance");

  Problem p;
  p.H = 0.5 * (H + H.transpose());
  p.g = g;
  p.A = A.rows() > 0 ? A : Eigen::MatrixXd(0, n);
  p.lb = lb;
  p.ub = ub;
  return p;
}

Solution solve(const Problem& p, const Settings& s) {
  Workspace ws;
  return solve(p, s, ws, nullptr, nullptr);
}

Solution solve(const Problem& p, const Settings& s, Workspace& ws,
               const Eigen::VectorXd* x_warm,
               const Eigen::VectorXd* dual_warm) {
  check_settings(s);
  const Eigen::Index n = p.H.rows();
  const Eigen::Index mc = p.A.rows();
  require(n >= 1, "qp: empty problem");

  if (mc == 0) return solve_unconstrained(p, s);

  if (!cache_valid(p, s, ws)) setup_workspace(p, s, ws);

  const Eigen::VectorXd gs = ws.D.cwiseProduct(p.g);
  const Eigen::VectorXd lbs = ws.E.cwiseProduct(p.lb);
  const Eigen::VectorXd ubs = ws.E.cwiseProduct(p.ub);

  // Scaled iterates: x = D xs, z = E^-1 zs, dual = E ys.
  Eigen::VectorXd xs = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd ys = Eigen::VectorXd::Zero(mc);
  if (x_warm != nullptr) {
    require(x_warm->size() == n, "qp: warm-start x length mismatch");
    xs = x_warm->cwiseQuotient(ws.D);
  }
  if (dual_warm != nullptr) {
    require(dual_warm->size() == mc, "qp: warm-start dual length mismatch");
    ys = dual_warm->cwiseQuotient(ws.E);
  }
  Eigen::VectorXd zs = (ws.As * xs).cwiseMax(lbs).cwiseMin(ubs);

  Solution sol;
  sol.status = Status::kMaxIter;
  Eigen::VectorXd dy_unscaled = Eigen::VectorXd::Zero(mc);
  int infeas_streak = 0;

  for (int iter = 1; iter <= s.max_iter; ++iter) {
    const Eigen::VectorXd rhs =
        s.sigma * xs - gs +
        ws.As.transpose() * (ws.rho.cwiseProduct(zs) - ys);
    const Eigen::VectorXd xt = ws.llt.solve(rhs);
    const Eigen::VectorXd zt = ws.As * xt;
    const Eigen::VectorXd z_relax = s.alpha * zt + (1.0 - s.alpha) * zs;
    const Eigen::VectorXd z_next =
        (z_relax + ys.cwiseQuotient(ws.rho)).cwiseMax(lbs).cwiseMin(ubs);
    const Eigen::VectorXd y_next = ys + ws.rho.cwiseProduct(z_relax - z_next);
    dy_unscaled = ws.E.cwiseProduct(y_next - ys);
    xs = s.alpha * xt + (1.0 - s.alpha) * xs;
    zs = z_next;
    ys = y_next;

    if (iter % s.check_every != 0 && iter != s.max_iter) continue;

    const Eigen::VectorXd x = ws.D.cwiseProduct(xs);
    const Eigen::VectorXd z = zs.cwiseQuotient(ws.E);
    const Eigen::VectorXd y = ws.E.cwiseProduct(ys);
    const Eigen::VectorXd Ax = p.A * x;
    const Eigen::VectorXd Hx = p.H * x;
    const Eigen::VectorXd Aty = p.A.transpose() * y;

    const double r_p = inf_norm(Ax - z);
    const double r_d = inf_norm(Hx + p.g + Aty);
    const double scale_p = std::max(inf_norm(Ax), inf_norm(z));
    const double scale_d =
        std::max({inf_norm(Hx), inf_norm(Aty), inf_norm(p.g)});
    sol.x = x;
    sol.dual = y;
    sol.iterations = iter;
    sol.primal_residual = r_p;
    sol.dual_residual = r_d;

    if (r_p <= s.eps_abs + s.eps_rel * scale_p &&
        r_d <= s.eps_abs + s.eps_rel * scale_d) {
      sol.status = Status::kSolved;
      break;
    }

    // Primal-infeasibility certificate from the dual update direction; only
    // declared after it persists across three consecutive checks.
    const double ndy = inf_norm(dy_unscaled);
    bool cert = false;
    if (ndy > 1e-14 &&
        inf_norm(p.A.transpose() * dy_unscaled) <= s.eps_infeas * ndy) {
      cert = true;
      double support = 0.0;
      for (Eigen::Index i = 0; i < mc; ++i) {
        const double v = dy_unscaled(i);
        if (v > s.eps_infeas * ndy) {
          if (!(p.ub(i) < kInf)) {
            cert = false;
            break;
          }
          support += p.ub(i) * v;
        } else if (v < -s.eps_infeas * ndy) {
          if (!(p.lb(i) > -kInf)) {
            cert = false;
            break;
          }
          support += p.lb(i) * v;
        }
      }
      cert = cert && support <= -s.eps_infeas * ndy;
    }
    infeas_streak = cert ? infeas_streak + 1 : 0;
    if (infeas_streak >= 3) {
      sol.status = Status::kInfeasible;
      break;
    }

    if (s.adaptive_rho && iter != s.max_iter) {
      const double rp_rel = r_p / std::max(scale_p, 1e-10);
      const double rd_rel = r_d / std::max(scale_d, 1e-10);
      const double base = current_rho_base(ws, s);
      const double target =
          clamp(base * std::sqrt(rp_rel / std::max(rd_rel, 1e-16)), 1e-6, 1e6);
      if (target > 5.0 * base || target < base / 5.0) {
        for (Eigen::Index i = 0; i < mc; ++i) {
          ws.rho(i) =
              ws.eq_row[static_cast<std::size_t>(i)] ? target * 1e3 : target;
        }
        factorize(ws);
      }
    }
  }

  sol.objective = objective_of(p, sol.x);
  if (sol.status == Status::kSolved && s.polish) polish(p, ws, sol);
  return sol;
}

KktResiduals kkt_residuals(const Problem& p, const Solution& s) {
  return residuals_of(p, s.x, s.dual);
}

void dump_csv(const Problem& p, const std::string& prefix) {
  auto matrix = [](const Eigen::MatrixXd& mat) {
    std::vector<std::string> header(static_cast<std::size_t>(mat.cols()));
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
      header[static_cast<std::size_t>(c)] = "c" + std::to_string(c);
    }
    csv::Table table(header);
    std::vector<std::string> row(static_cast<std::size_t>(mat.cols()));
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
      for (Eigen::Index c = 0; c < mat.cols(); ++c) {
        row[static_cast<std::size_t>(c)] = csv::fmt_exact(mat(r, c));
      }
      table.add_row(row);
    }
    return table;
  };
  matrix(p.H).write_file(prefix + "_H.csv");
  matrix(p.A).write_file(prefix + "_A.csv");

  csv::Table gt({"g"});
  for (Eigen::Index i = 0; i < p.g.size(); ++i) {
    gt.add_row({csv::fmt_exact(p.g(i))});
  }
  gt.write_file(prefix + "_g.csv");

  csv::Table bt({"lb", "ub"});
  for (Eigen::Index i = 0; i < p.lb.size(); ++i) {
    bt.add_row({csv::fmt_exact(p.lb(i)), csv::fmt_exact(p.ub(i))});
  }
  bt.write_file(prefix + "_bounds.csv");
}

}  // namespace hppc::qp
