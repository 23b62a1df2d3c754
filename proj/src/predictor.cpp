#include "hppc/predictor.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>
#include <json.hpp>

#include "hppc/csv.hpp"

namespace hppc {

Predictor fit(const Blocks& b, const PredictorDims& dims, double ridge) {
  require(dims.T_ini >= 1 && dims.N >= 1 && dims.m >= 1 && dims.p >= 1,
          "fit: dims must be positive");
  require(ridge >= 0.0, "fit: ridge must be >= 0");
  require(b.Y_Tini.rows() == dims.T_ini * dims.p &&
              b.U_Tini.rows() == dims.T_ini * dims.m &&
              b.U_N.rows() == dims.N * dims.m &&
              b.Y_N.rows() == dims.N * dims.p,
          "fit: block shapes inconsistent with dims");
  require(b.M.rows() == b.Y_Tini.rows() + b.U_Tini.rows() + b.U_N.rows() &&
              b.M.cols() == b.Y_N.cols(),
          "fit: M shape inconsistent");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(
      b.M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) < 1e-12) {
    throw std::runtime_error("fit: data matrix M is degenerate");
  }

  // Pseudo-inverse factors. With ridge = 0 this is 1/sigma above the cutoff;
  // otherwise the Tikhonov shrinkage sigma/(sigma^2 + ridge).
  const double cutoff = sv(0) * 1e-10;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) inv(i) = sv(i) / (sv(i) * sv(i) + ridge);
  }

  Predictor pred;
  pred.T_ini = dims.T_ini;
  pred.N = dims.N;
  pred.m = dims.m;
  pred.p = dims.p;
  pred.ridge = ridge;
  pred.excitation_ok = excitation_rank(b).is_sufficient;
  pred.S_star =
      b.Y_N * (svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose());
  pred.fit_residual_fro = (pred.S_star * b.M - b.Y_N).norm();
  return pred;
}

Eigen::VectorXd predict(const Predictor& pred, const Eigen::VectorXd& y_ini,
                        const Eigen::VectorXd& u_ini,
                        const Eigen::VectorXd& u_future) {
  if (y_ini.size() != pred.T_ini * pred.p) {
    throw std::invalid_argument("predict: y_ini length mismatch");
  }
  if (u_ini.size() != pred.T_ini * pred.m) {
    throw std::invalid_argument("predict: u_ini length mismatch");
  }
  if (u_future.size() != pred.N * pred.m) {
    throw std::invalid_argument("predict: u_future length mismatch");
  }
  Eigen::VectorXd z(y_ini.size() + u_ini.size() + u_future.size());
  z << y_ini, u_ini, u_future;
  return pred.S_star * z;
}

ResidualReport residual_report(const Predictor& pred, const Blocks& b) {
  require(b.M.rows() == pred.S_star.cols() &&
              b.Y_N.rows() == pred.S_star.rows(),
          "residual_report: dims mismatch");
  const Eigen::MatrixXd R = pred.S_star * b.M - b.Y_N;

  ResidualReport rep;
  rep.fro_residual = R.norm();
  rep.per_channel_rms = Eigen::VectorXd::Zero(pred.p);
  const double count = static_cast<double>(pred.N) * R.cols();
  for (int ch = 0; ch < pred.p; ++ch) {
    double ss = 0.0;
    for (int k = 0; k < pred.N; ++k) ss += R.row(k * pred.p + ch).squaredNorm();
    rep.per_channel_rms(ch) = std::sqrt(ss / count);
  }
  return rep;
}

void write_predictor(const Predictor& pred, const std::string& csv_path,
                     const std::string& json_path) {
  std::vector<std::string> header(pred.S_star.cols());
  for (Eigen::Index c = 0; c < pred.S_star.cols(); ++c) {
    header[c] = "c" + std::to_string(c);
  }
  csv::Table table(header);
  std::vector<std::string> row(pred.S_star.cols());
  for (Eigen::Index r = 0; r < pred.S_star.rows(); ++r) {
    for (Eigen::Index c = 0; c < pred.S_star.cols(); ++c) {
      row[c] = csv::fmt_exact(pred.S_star(r, c));
    }
    table.add_row(row);
  }
  table.write_file(csv_path);

  nlohmann::json meta;
  meta["T_ini"] = pred.T_ini;
  meta["N"] = pred.N;
  meta["m"] = pred.m;
  meta["p"] = pred.p;
  meta["fit_residual_fro"] = pred.fit_residual_fro;
  meta["ridge"] = pred.ridge;
  meta["excitation_ok"] = pred.excitation_ok;
  csv::write_text(json_path, meta.dump(2) + "\n");
}

Predictor read_predictor(const std::string& csv_path,
                         const std::string& json_path) {
  const nlohmann::json meta = nlohmann::json::parse(csv::read_text(json_path));
  Predictor pred;
  pred.T_ini = meta.at("T_ini").get<int>();
  pred.N = meta.at("N").get<int>();
  pred.m = meta.at("m").get<int>();
  pred.p = meta.at("p").get<int>();
  pred.fit_residual_fro = meta.at("fit_residual_fro").get<double>();
  pred.ridge = meta.at("ridge").get<double>();
  pred.excitation_ok = meta.at("excitation_ok").get<bool>();

  const csv::Parsed parsed = csv::read_file(csv_path);
  const Eigen::Index rows = static_cast<Eigen::Index>(parsed.rows.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(parsed.header.size());
  require(rows == pred.N * pred.p &&
              cols == pred.T_ini * pred.p + pred.T_ini * pred.m +
                          pred.N * pred.m,
          "read_predictor: matrix shape inconsistent with sidecar dims");
  pred.S_star.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      pred.S_star(r, c) = parsed.rows[r][c];
    }
  }
  return pred;
}

}  // namespace hppc
