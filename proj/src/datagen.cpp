#include "hppc/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>

#include <Eigen/SVD>
#include <json.hpp>

#include "hppc/csv.hpp"

namespace hppc {
namespace {

/// Simulates one reference day in closed loop and appends measurement noise
/// draws from the same per-day stream, so the result only depends on the day
/// seed, never on which thread ran it.
Trajectory record_day(const PlantConfig& plant_cfg, const WeatherParams& weather,
                      const DemandProfile& day, const CollectConfig& cfg,
                      std::uint64_t day_seed) {
  const int steps =
      static_cast<int>(std::lround(cfg.day_hours * 3600.0 / cfg.dt_s));
  Rng rng(day_seed);

  PlantConfig pc = plant_cfg;
  pc.ideal_tracking = true;  // behavior data assumes perfect inner tracking
  pc.dt = cfg.dt_s;
  PlantState plant = make_plant(pc);

  Trajectory rec;
  rec.u_seq.resize(steps, kChannels);
  rec.y_seq.resize(steps, kChannels);

  PowerTriple u{};
  PowerTriple y{};
  for (int k = 0; k < steps; ++k) {
    const double t_h = k * cfg.dt_s / 3600.0;
    const double avail_wind =
        wind_power_curve(wind_speed_profile(t_h, weather), weather);
    const double avail_solar =
        solar_power_curve(irradiance_profile(t_h, weather), weather);
    const ChannelBounds bounds{{0.0, avail_wind},
                               {0.0, avail_solar},
                               {plant.battery_min, plant.battery_max}};
    u = fo_step(u, y, day.eval(t_h), bounds, cfg.gains, rng);
    PlantStepResult res = plant_step(plant, u, avail_wind, avail_solar);
    plant = res.state;
    y = res.outputs;
    for (int ch = 0; ch < kChannels; ++ch) {
      rec.u_seq(k, ch) = u[ch];
      rec.y_seq(k, ch) = y[ch];
    }
  }
  return cfg.noise_ratio > 0.0
             ? add_measurement_noise(rec, cfg.noise_ratio, rng)
             : rec;
}

}  // namespace

PowerTriple fo_step(const PowerTriple& u_prev, const PowerTriple& y_meas,
                    double p_ref, const ChannelBounds& bounds,
                    const FoGains& gains, Rng& rng) {
  require(gains.alpha > 0.0, "fo_step: alpha must be positive");
  require(gains.dither_std >= 0.0, "fo_step: dither_std must be >= 0");
  for (int ch = 0; ch < kChannels; ++ch) {
    require(bounds[ch].lo <= bounds[ch].hi, "fo_step: bound lo exceeds hi");
    require(gains.weights[ch] >= 0.0, "fo_step: weights must be >= 0");
  }
  const double e = p_ref - y_meas.total();
  PowerTriple u;
  for (int ch = 0; ch < kChannels; ++ch) {
    const double dither =
        gains.dither_std > 0.0 ? rng.gaussian(0.0, gains.dither_std) : 0.0;
    u[ch] = bounds[ch].clamp(u_prev[ch] + gains.alpha * e * gains.weights[ch] +
                             dither);
  }
  u.battery = bounds.battery.clamp(p_ref - u.wind - u.solar);
  return u;
}

Trajectory add_measurement_noise(const Trajectory& traj, double ratio,
                                 Rng& rng) {
  require(ratio >= 0.0, "add_measurement_noise: ratio must be >= 0");
  Trajectory out = traj;
  auto corrupt = [&](Eigen::MatrixXd& mat) {
    for (int ch = 0; ch < mat.cols(); ++ch) {
      const double rms = std::sqrt(mat.col(ch).squaredNorm() / mat.rows());
      if (ratio == 0.0 || rms == 0.0) continue;
      for (Eigen::Index k = 0; k < mat.rows(); ++k) {
        mat(k, ch) += rng.gaussian(0.0, ratio * rms);
      }
    }
  };
  corrupt(out.u_seq);
  corrupt(out.y_seq);
  return out;
}

DataSet collect_trajectories(const PlantConfig& plant_cfg,
                             const WeatherParams& weather,
                             const std::vector<DemandProfile>& references,
                             const CollectConfig& cfg, std::uint64_t seed) {
  require(cfg.T >= 1, "collect_trajectories: T must be >= 1");
  require(cfg.T_ini >= 1 && cfg.N >= 1,
          "collect_trajectories: T_ini and N must be >= 1");
  require(cfg.dt_s > 0.0 && cfg.day_hours > 0.0,
          "collect_trajectories: dt_s and day_hours must be positive");
  require(!references.empty(),
          "collect_trajectories: need at least one reference day");
  validate(weather);

  const int steps =
      static_cast<int>(std::lround(cfg.day_hours * 3600.0 / cfg.dt_s));
  const int L = cfg.T_ini + cfg.N;
  const int per_day = steps - L + 1;
  const int n_days = static_cast<int>(references.size());
  const long long pool = static_cast<long long>(per_day) * n_days;
  if (per_day < 1 || pool < cfg.T) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "collect_trajectories: need %d windows of length %d but only "
                  "%lld are available (%d days x %d samples)",
                  cfg.T, L, pool < 0 ? 0LL : pool, n_days, steps);
    throw std::invalid_argument(msg);
  }

  // Simulate the days. Each one is independent and owns a derived stream, so
  // the parallel lane is bit-identical to the serial one.
  std::vector<Trajectory> days(references.size());
  if (cfg.mode == ExecMode::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (int d = 0; d < n_days; ++d) {
      days[d] = record_day(plant_cfg, weather, references[d], cfg,
                           derive_seed(seed, static_cast<std::uint64_t>(d)));
    }
  } else {
    for (int d = 0; d < n_days; ++d) {
      days[d] = record_day(plant_cfg, weather, references[d], cfg,
                           derive_seed(seed, static_cast<std::uint64_t>(d)));
    }
  }

  // Keep T windows evenly spaced over the pooled (day, start) windows so the
  // data covers every day and every time of day.
  DataSet ds;
  ds.T_ini = cfg.T_ini;
  ds.N = cfg.N;
  ds.seed = seed;
  ds.trajectories.reserve(cfg.T);
  for (int i = 0; i < cfg.T; ++i) {
    const long long g = static_cast<long long>(i) * pool / cfg.T;
    const int d = static_cast<int>(g / per_day);
    const int s = static_cast<int>(g % per_day);
    Trajectory w;
    w.u_seq = days[d].u_seq.middleRows(s, L);
    w.y_seq = days[d].y_seq.middleRows(s, L);
    ds.trajectories.push_back(std::move(w));
  }
  return ds;
}

Blocks split_blocks(const DataSet& ds) {
  require(!ds.trajectories.empty(), "split_blocks: empty dataset");
  const int T = ds.T();
  const int L = ds.L();

  Blocks b;
  b.U_Tini.resize(ds.T_ini * ds.m, T);
  b.U_N.resize(ds.N * ds.m, T);
  b.Y_Tini.resize(ds.T_ini * ds.p, T);
  b.Y_N.resize(ds.N * ds.p, T);

  for (int j = 0; j < T; ++j) {
    const Trajectory& tr = ds.trajectories[j];
    require(tr.u_seq.rows() == L && tr.u_seq.cols() == ds.m &&
                tr.y_seq.rows() == L && tr.y_seq.cols() == ds.p,
            "split_blocks: trajectory shape mismatch");
    require(tr.u_seq.allFinite() && tr.y_seq.allFinite(),
            "split_blocks: non-finite trajectory entry");
    for (int k = 0; k < ds.T_ini; ++k) {
      for (int ch = 0; ch < ds.m; ++ch)
        b.U_Tini(k * ds.m + ch, j) = tr.u_seq(k, ch);
      for (int ch = 0; ch < ds.p; ++ch)
        b.Y_Tini(k * ds.p + ch, j) = tr.y_seq(k, ch);
    }
    for (int k = 0; k < ds.N; ++k) {
      for (int ch = 0; ch < ds.m; ++ch)
        b.U_N(k * ds.m + ch, j) = tr.u_seq(ds.T_ini + k, ch);
      for (int ch = 0; ch < ds.p; ++ch)
        b.Y_N(k * ds.p + ch, j) = tr.y_seq(ds.T_ini + k, ch);
    }
  }

  b.M.resize(b.Y_Tini.rows() + b.U_Tini.rows() + b.U_N.rows(), T);
  b.M << b.Y_Tini, b.U_Tini, b.U_N;
  return b;
}

ExcitationReport excitation_rank(const Blocks& b) {
  ExcitationReport rep;
  const Eigen::Index rows = b.U_Tini.rows() + b.U_N.rows();
  const Eigen::Index cols = b.U_Tini.cols();
  if (rows == 0 || cols == 0) return rep;

  Eigen::MatrixXd stacked(rows, cols);
  stacked << b.U_Tini, b.U_N;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(stacked);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return rep;

  const double tol = sv(0) * std::numeric_limits<double>::epsilon() *
                     static_cast<double>(std::max(rows, cols));
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) ++rep.rank;
  }
  rep.is_sufficient = rep.rank == static_cast<int>(rows);
  return rep;
}

void write_dataset(const DataSet& ds, const std::string& csv_path,
                   const std::string& json_path) {
  csv::Table table({"traj_id", "k", "u_w", "u_s", "u_b", "y_w", "y_s", "y_b"});
  for (int j = 0; j < ds.T(); ++j) {
    const Trajectory& tr = ds.trajectories[j];
    for (int k = 0; k < ds.L(); ++k) {
      table.add_row({csv::fmt_exact(j), csv::fmt_exact(k),
                     csv::fmt_exact(tr.u_seq(k, kWind)),
                     csv::fmt_exact(tr.u_seq(k, kSolar)),
                     csv::fmt_exact(tr.u_seq(k, kBattery)),
                     csv::fmt_exact(tr.y_seq(k, kWind)),
                     csv::fmt_exact(tr.y_seq(k, kSolar)),
                     csv::fmt_exact(tr.y_seq(k, kBattery))});
    }
  }
  table.write_file(csv_path);

  nlohmann::json meta;
  meta["T"] = ds.T();
  meta["L"] = ds.L();
  meta["T_ini"] = ds.T_ini;
  meta["N"] = ds.N;
  meta["m"] = ds.m;
  meta["p"] = ds.p;
  meta["seed"] = ds.seed;
  csv::write_text(json_path, meta.dump(2) + "\n");
}

DataSet read_dataset(const std::string& csv_path,
                     const std::string& json_path) {
  const nlohmann::json meta = nlohmann::json::parse(csv::read_text(json_path));
  DataSet ds;
  ds.T_ini = meta.at("T_ini").get<int>();
  ds.N = meta.at("N").get<int>();
  ds.m = meta.at("m").get<int>();
  ds.p = meta.at("p").get<int>();
  ds.seed = meta.at("seed").get<std::uint64_t>();
  const int T = meta.at("T").get<int>();
  const int L = meta.at("L").get<int>();
  require(L == ds.T_ini + ds.N, "read_dataset: sidecar L != T_ini + N");
  require(ds.m == kChannels && ds.p == kChannels,
          "read_dataset: unsupported channel count");

  const csv::Parsed parsed = csv::read_file(csv_path);
  const std::vector<std::string> expect = {"traj_id", "k",   "u_w", "u_s",
                                           "u_b",     "y_w", "y_s", "y_b"};
  require(parsed.header == expect, "read_dataset: unexpected csv header");
  require(static_cast<long long>(parsed.rows.size()) ==
              static_cast<long long>(T) * L,
          "read_dataset: row count does not match sidecar T*L");

  ds.trajectories.assign(T, Trajectory{});
  for (int j = 0; j < T; ++j) {
    Trajectory& tr = ds.trajectories[j];
    tr.u_seq.resize(L, kChannels);
    tr.y_seq.resize(L, kChannels);
    for (int k = 0; k < L; ++k) {
      const auto& row = parsed.rows[static_cast<std::size_t>(j) * L + k];
      require(static_cast<int>(row[0]) == j && static_cast<int>(row[1]) == k,
              "read_dataset: rows out of order");
      for (int ch = 0; ch < kChannels; ++ch) {
        tr.u_seq(k, ch) = row[2 + ch];
        tr.y_seq(k, ch) = row[5 + ch];
      }
    }
  }
  return ds;
}

}  // namespace hppc
