#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace hppc::qp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// minimize ½xᵀHx + gᵀx subject to lb ≤ Ax ≤ ub. Equality rows are encoded
/// as lb = ub; one-sided rows use ±kInf.
struct Problem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  int n() const { return static_cast<int>(H.rows()); }
  int mc() const { return static_cast<int>(A.rows()); }
};

enum class Status { kSolved, kMaxIter, kInfeasible };

const char* to_string(Status s);

struct Settings {
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  int max_iter = 20000;
  double sigma = 1e-6;   // proximal regularization on x
  double rho = 0.1;      // base ADMM step; equality rows use rho*1e3
  double alpha = 1.6;    // over-relaxation
  int check_every = 25;  // iterations between convergence checks
  bool adaptive_rho = true;
  bool polish = true;
  bool scaling = true;  // Ruiz equilibration of [H Aᵀ; A 0]
  int scaling_iters = 10;
  double eps_infeas = 1e-8;
};

struct Solution {
  Eigen::VectorXd x;
  Eigen::VectorXd dual;  // one multiplier per constraint row
  Status status = Status::kMaxIter;
  int iterations = 0;
  double primal_residual = 0.0;  // unscaled infinity norms
  double dual_residual = 0.0;
  double objective = 0.0;
  bool polished = false;
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal_feas = 0.0;
  double complementarity = 0.0;
};

/// Validates shapes and bounds and symmetrizes H. An absolute skew component
/// above 1e-12 (or any NaN, or lb > ub) is an error.
Problem assemble(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                 const Eigen::MatrixXd& A, const Eigen::VectorXd& lb,
                 const Eigen::VectorXd& ub);

/// Reusable solver state for sequences of related problems. Caches the Ruiz
/// scaling and the x-update factorization, which stay valid while H, A and
/// the step parameters are unchanged (g, lb, ub may vary freely); the cache
/// key is a bytewise comparison of H and A. Treat the members as internal.
struct Workspace {
  bool ready = false;
  double sigma = 0.0;
  double rho_base = 0.0;
  int scaling_iters = -1;
  Eigen::MatrixXd H_key;  // unscaled copies backing the cache check
  Eigen::MatrixXd A_key;
  Eigen::VectorXd D;  // variable scaling
  Eigen::VectorXd E;  // constraint scaling
  Eigen::MatrixXd Hs;  // scaled H
  Eigen::MatrixXd As;  // scaled A
  Eigen::VectorXd rho;  // per-row step
  Eigen::LLT<Eigen::MatrixXd> llt;
  std::vector<bool> eq_row;

  void reset() { ready = false; }
};

/// One-shot solve with a cold start.
Solution solve(const Problem& p, const Settings& s = Settings());

/// Solve with a reusable workspace and an optional warm start (unscaled
/// primal/dual iterates, e.g. the previous receding-horizon solution).
Solution solve(const Problem& p, const Settings& s, Workspace& ws,
               const Eigen::VectorXd* x_warm = nullptr,
               const Eigen::VectorXd* dual_warm = nullptr);

/// Unscaled KKT diagnostics of a solution: infinity norms of the
/// stationarity residual, the bound violations, and the elementwise
/// complementary-slackness products.
KktResiduals kkt_residuals(const Problem& p, const Solution& s);

/// Writes <prefix>_H.csv, _g.csv, _A.csv and _bounds.csv for offline
/// inspection of a problem instance.
void dump_csv(const Problem& p, const std::string& prefix);

}  // namespace hppc::qp
