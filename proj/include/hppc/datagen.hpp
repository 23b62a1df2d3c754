#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hppc/demand.hpp"
#include "hppc/plant.hpp"
#include "hppc/rng.hpp"
#include "hppc/types.hpp"
#include "hppc/weather.hpp"

namespace hppc {

/// Gains of the reactive feedback-optimization (FO) setpoint controller used
/// to generate behavior data. Each supervisory step it nudges the wind/solar
/// setpoints along the tracking error and lets the battery absorb the
/// residual, with Gaussian dither for excitation.
struct FoGains {
  double alpha = 0.5;        // step size on the power tracking error
  // Exploration noise per channel, MW. Must comfortably exceed the recording
  // noise floor (~0.02 of channel RMS) or the input-to-output gains are
  // poorly identified; the battery residual rule absorbs the dither, so
  // demand tracking during collection is unaffected.
  double dither_std = 0.3;
  Eigen::Vector3d weights = Eigen::Vector3d(0.5, 0.5, 0.0);
};

/// One length-L input/output window sampled at the supervisory rate.
/// Row k is sample k; columns are the wind/solar/battery channels.
struct Trajectory {
  Eigen::MatrixXd u_seq;  // L x m, MW
  Eigen::MatrixXd y_seq;  // L x p, MW
};

struct DataSet {
  std::vector<Trajectory> trajectories;
  int T_ini = 20;
  int N = 20;
  int m = kChannels;
  int p = kChannels;
  std::uint64_t seed = 0;

  int L() const { return T_ini + N; }
  int T() const { return static_cast<int>(trajectories.size()); }
};

/// Column-per-trajectory block matrices. Stacked rows are sample-major,
/// channel-minor: row index k*channels + ch.
struct Blocks {
  Eigen::MatrixXd U_Tini;  // T_ini*m x T
  Eigen::MatrixXd U_N;     // N*m x T
  Eigen::MatrixXd Y_Tini;  // T_ini*p x T
  Eigen::MatrixXd Y_N;     // N*p x T
  Eigen::MatrixXd M;       // [Y_Tini; U_Tini; U_N]
};

enum class ExecMode { kSerial, kParallel };

struct CollectConfig {
  int T = 1000;  // trajectories to return
  int T_ini = 20;
  int N = 20;
  double noise_ratio = 0.02;  // measurement noise-to-signal ratio
  double dt_s = 20.0;         // supervisory sampling interval
  double day_hours = 24.0;
  FoGains gains;
  ExecMode mode = ExecMode::kParallel;
};

struct ExcitationReport {
  int rank = 0;
  bool is_sufficient = false;
};

/// One FO update: u = clamp(u_prev + alpha*e*w + dither) per channel with
/// e = p_ref - sum(y_meas), then the battery setpoint is overwritten by the
/// clamped residual p_ref - u_wind - u_solar so the battery covers whatever
/// the variable sources do not.
PowerTriple fo_step(const PowerTriple& u_prev, const PowerTriple& y_meas,
                    double p_ref, const ChannelBounds& bounds,
                    const FoGains& gains, Rng& rng);

/// Runs the FO loop against an ideal-tracking plant for every reference day
/// under nominal weather, records (u, y) at the supervisory rate, adds
/// measurement noise to each day-long recording, then cuts maximally
/// overlapping length-L windows and keeps cfg.T of them, evenly spaced over
/// the pooled windows of all days. Deterministic for a fixed seed in both
/// execution modes: each day draws from its own derived random stream.
DataSet collect_trajectories(const PlantConfig& plant_cfg,
                             const WeatherParams& weather,
                             const std::vector<DemandProfile>& references,
                             const CollectConfig& cfg, std::uint64_t seed);

/// Adds i.i.d. N(0, (ratio*rms)^2) noise per channel, where rms is that
/// channel's root-mean-square over the trajectory; zero-rms channels are
/// left untouched.
Trajectory add_measurement_noise(const Trajectory& traj, double ratio,
                                 Rng& rng);

Blocks split_blocks(const DataSet& ds);

/// Numerical rank of the stacked input block [U_Tini; U_N]; sufficient iff
/// it equals (T_ini + N)*m, the persistent-excitation requirement for the
/// predictor fit.
ExcitationReport excitation_rank(const Blocks& b);

/// CSV rows: traj_id, k, u_w, u_s, u_b, y_w, y_s, y_b (full double
/// precision); the JSON sidecar records T, L, T_ini, N, m, p, seed.
void write_dataset(const DataSet& ds, const std::string& csv_path,
                   const std::string& json_path);
DataSet read_dataset(const std::string& csv_path,
                     const std::string& json_path);

}  // namespace hppc
