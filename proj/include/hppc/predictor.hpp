#pragma once

#include <string>

#include <Eigen/Core>

#include "hppc/datagen.hpp"

namespace hppc {

/// Multi-step subspace predictor: y_N = S_star [y_ini; u_ini; u_future].
/// Column layout of S_star follows the M row stack [Y_Tini; U_Tini; U_N].
struct Predictor {
  Eigen::MatrixXd S_star;  // N*p x (T_ini*p + T_ini*m + N*m)
  int T_ini = 0;
  int N = 0;
  int m = 0;
  int p = 0;
  double fit_residual_fro = 0.0;  // ||S_star*M - Y_N||_F at fit time, MW
  double ridge = 0.0;
  bool excitation_ok = true;  // false when fit proceeded on deficient data

  Eigen::MatrixXd S_yini() const { return S_star.leftCols(T_ini * p); }
  Eigen::MatrixXd S_uini() const {
    return S_star.middleCols(T_ini * p, T_ini * m);
  }
  Eigen::MatrixXd S_uN() const { return S_star.rightCols(N * m); }
};

struct PredictorDims {
  int T_ini = 20;
  int N = 20;
  int m = kChannels;
  int p = kChannels;
};

/// Minimum-Frobenius-norm least-squares fit of S_star via an SVD of M with
/// relative singular-value cutoff 1e-10. ridge > 0 switches to the Tikhonov
/// solution Y_N Mᵀ(MMᵀ + ridge·I)⁻¹ for noisy data; the default is the plain
/// pseudo-inverse. Throws when M is degenerate (all singular values at zero).
Predictor fit(const Blocks& b, const PredictorDims& dims, double ridge = 0.0);

/// Applies the predictor to one stacked initial window and a candidate input
/// sequence. Lengths must be T_ini*p, T_ini*m and N*m; errors name the block
/// that mismatches. Stacking is sample-major, channel-minor like the blocks.
Eigen::VectorXd predict(const Predictor& pred, const Eigen::VectorXd& y_ini,
                        const Eigen::VectorXd& u_ini,
                        const Eigen::VectorXd& u_future);

struct ResidualReport {
  double fro_residual = 0.0;         // ||S_star*M - Y_N||_F, MW
  Eigen::VectorXd per_channel_rms;   // p entries, MW
};

/// Training-set residual statistics, per output channel.
ResidualReport residual_report(const Predictor& pred, const Blocks& b);

/// Full-precision persistence; reading back reproduces S_star bit-exactly.
void write_predictor(const Predictor& pred, const std::string& csv_path,
                     const std::string& json_path);
Predictor read_predictor(const std::string& csv_path,
                         const std::string& json_path);

}  // namespace hppc
