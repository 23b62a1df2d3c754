#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "hppc/datagen.hpp"
#include "hppc/plant.hpp"
#include "test_helpers.hpp"

using namespace hppc;

namespace {

ChannelBounds default_bounds() {
  return {{0.0, 4.0}, {0.0, 4.0}, {-4.0, 4.0}};
}

bool exact_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

bool datasets_identical(const DataSet& a, const DataSet& b) {
  if (a.T() != b.T() || a.T_ini != b.T_ini || a.N != b.N) return false;
  for (int j = 0; j < a.T(); ++j) {
    if (!exact_equal(a.trajectories[j].u_seq, b.trajectories[j].u_seq))
      return false;
    if (!exact_equal(a.trajectories[j].y_seq, b.trajectories[j].y_seq))
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("fo_step: zero error without dither leaves wind and solar alone") {
  Rng rng(1);
  FoGains g;
  g.dither_std = 0.0;
  const PowerTriple u{1.0, 2.0, 0.0};
  const PowerTriple y{1.0, 1.5, 0.5};  // totals 3.0
  const PowerTriple next = fo_step(u, y, 3.0, default_bounds(), g, rng);
  CHECK(next.wind == doctest::Approx(1.0));
  CHECK(next.solar == doctest::Approx(2.0));
  // The battery setpoint is always the clamped residual of the reference.
  CHECK(next.battery == doctest::Approx(3.0 - 1.0 - 2.0));
}

TEST_CASE("fo_step: projection pins saturated setpoints") {
  Rng rng(1);
  FoGains g;
  g.dither_std = 0.0;
  const PowerTriple u{4.0, 4.0, 0.0};
  const PowerTriple y{3.0, 3.0, 0.0};  // positive error pushes upward
  const PowerTriple next = fo_step(u, y, 9.0, default_bounds(), g, rng);
  CHECK(next.wind == doctest::Approx(4.0));
  CHECK(next.solar == doctest::Approx(4.0));
  CHECK(next.battery == doctest::Approx(1.0));  // residual 9 - 4 - 4
}

TEST_CASE("fo_step: battery residual rule clamps to the battery limits") {
  Rng rng(1);
  FoGains g;
  g.dither_std = 0.0;
  const PowerTriple y{0.0, 0.0, 0.0};
  // e = 12: wind/solar move up by 0.5*12*0.5 = 3, residual 12-3-3 = 6 -> 4.
  const PowerTriple up =
      fo_step(PowerTriple{0.0, 0.0, 0.0}, y, 12.0, default_bounds(), g, rng);
  CHECK(up.wind == doctest::Approx(3.0));
  CHECK(up.solar == doctest::Approx(3.0));
  CHECK(up.battery == doctest::Approx(4.0));
  // e = -9 from (4, 4): both drop to 1.75, residual -12.5 -> -4.
  const PowerTriple down =
      fo_step(PowerTriple{4.0, 4.0, 0.0}, y, -9.0, default_bounds(), g, rng);
  CHECK(down.wind == doctest::Approx(1.75));
  CHECK(down.solar == doctest::Approx(1.75));
  CHECK(down.battery == doctest::Approx(-4.0));
}

TEST_CASE("fo_step: validates gains and bounds") {
  Rng rng(1);
  FoGains bad_alpha;
  bad_alpha.alpha = 0.0;
  CHECK_THROWS_AS(fo_step(PowerTriple{}, PowerTriple{}, 1.0, default_bounds(),
                          bad_alpha, rng),
                  std::invalid_argument);
  FoGains bad_weight;
  bad_weight.weights(0) = -1.0;
  CHECK_THROWS_AS(fo_step(PowerTriple{}, PowerTriple{}, 1.0, default_bounds(),
                          bad_weight, rng),
                  std::invalid_argument);
  FoGains bad_dither;
  bad_dither.dither_std = -0.1;
  CHECK_THROWS_AS(fo_step(PowerTriple{}, PowerTriple{}, 1.0, default_bounds(),
                          bad_dither, rng),
                  std::invalid_argument);
  const FoGains ok;
  ChannelBounds inverted = default_bounds();
  inverted.wind = {2.0, 1.0};
  CHECK_THROWS_AS(fo_step(PowerTriple{}, PowerTriple{}, 1.0, inverted, ok, rng),
                  std::invalid_argument);
}

TEST_CASE("fo_step: closed loop over a constant reference converges") {
  // Oracle simulation of the collection loop: dynamic plant, no dither.
  // The error must fall below 5% of the reference within 50 steps and stay.
  Rng rng(2);
  FoGains g;
  g.dither_std = 0.0;
  PlantState plant = make_plant(PlantConfig{});
  const double p_ref = 3.0;
  PowerTriple u{};
  PowerTriple y{};
  int settled_at = -1;
  for (int k = 0; k < 80; ++k) {
    u = fo_step(u, y, p_ref, default_bounds(), g, rng);
    const PlantStepResult r = plant_step(plant, u, 4.0, 4.0);
    plant = r.state;
    y = r.outputs;
    const double e = std::abs(p_ref - y.total());
    if (settled_at < 0 && e < 0.05 * p_ref) settled_at = k;
    if (settled_at >= 0) CHECK(e < 0.05 * p_ref);
  }
  REQUIRE(settled_at >= 0);
  CHECK(settled_at < 50);
}

TEST_CASE("add_measurement_noise: zero ratio and zero-rms channels are identity") {
  Rng rng(3);
  Trajectory tr;
  tr.u_seq = Eigen::MatrixXd::Random(40, 3);
  tr.y_seq = Eigen::MatrixXd::Random(40, 3);
  tr.y_seq.col(2).setZero();  // silent channel must stay silent
  const Trajectory same = add_measurement_noise(tr, 0.0, rng);
  CHECK(exact_equal(same.u_seq, tr.u_seq));
  CHECK(exact_equal(same.y_seq, tr.y_seq));
  const Trajectory noisy = add_measurement_noise(tr, 0.02, rng);
  CHECK(noisy.y_seq.col(2).isZero(0.0));
  // Both the recorded inputs and outputs carry noise.
  CHECK_FALSE(exact_equal(noisy.u_seq, tr.u_seq));
  CHECK_FALSE((noisy.y_seq.col(0).array() == tr.y_seq.col(0).array()).all());
  CHECK_THROWS_AS(add_measurement_noise(tr, -0.5, rng), std::invalid_argument);
}

TEST_CASE("add_measurement_noise: empirical spread matches ratio times rms") {
  const int n = 10000;
  Trajectory tr;
  tr.u_seq = Eigen::MatrixXd::Constant(n, 3, 2.0);  // rms exactly 2
  tr.y_seq = Eigen::MatrixXd::Constant(n, 3, 2.0);
  Rng rng(7);
  const Trajectory noisy = add_measurement_noise(tr, 0.02, rng);
  for (int ch = 0; ch < 3; ++ch) {
    const Eigen::VectorXd d = noisy.y_seq.col(ch) - tr.y_seq.col(ch);
    const double sd = std::sqrt(d.squaredNorm() / n);
    CHECK(sd == doctest::Approx(0.02 * 2.0).epsilon(0.05));
    CHECK(std::abs(d.mean()) < 5.0 * 0.04 / std::sqrt(double(n)));
  }
}

TEST_CASE("collect_trajectories: single-window shape") {
  CollectConfig cfg;
  cfg.T = 1;
  cfg.noise_ratio = 0.0;
  const auto days = make_reference_days(DemandProfile{}, 1, 5);
  const DataSet ds =
      collect_trajectories(PlantConfig{}, WeatherParams{}, days, cfg, 5);
  REQUIRE(ds.T() == 1);
  CHECK(ds.L() == 40);
  CHECK(ds.trajectories[0].u_seq.rows() == 40);
  CHECK(ds.trajectories[0].u_seq.cols() == 3);
  CHECK(ds.trajectories[0].y_seq.rows() == 40);
  CHECK(ds.trajectories[0].y_seq.allFinite());
}

TEST_CASE("collect_trajectories: noiseless recordings satisfy y == u exactly") {
  // Collection assumes perfect inner-loop tracking, and the reactive
  // controller projects its setpoints into the same availability intervals
  // the plant clamps with, so without recording noise the output samples
  // must equal the input samples bit for bit.
  CollectConfig cfg;
  cfg.T = 50;
  cfg.noise_ratio = 0.0;
  const auto days = make_reference_days(DemandProfile{}, 1, 9);
  const DataSet ds =
      collect_trajectories(PlantConfig{}, WeatherParams{}, days, cfg, 9);
  for (const Trajectory& tr : ds.trajectories)
    CHECK(exact_equal(tr.u_seq, tr.y_seq));
}

TEST_CASE("collect_trajectories: deterministic and schedule-independent") {
  CollectConfig cfg;
  cfg.T = 120;
  const auto days = make_reference_days(DemandProfile{}, 3, 11);

  cfg.mode = ExecMode::kSerial;
  const DataSet serial =
      collect_trajectories(PlantConfig{}, WeatherParams{}, days, cfg, 11);
  const DataSet serial2 =
      collect_trajectories(PlantConfig{}, WeatherParams{}, days, cfg, 11);
  cfg.mode = ExecMode::kParallel;
  const DataSet parallel =
      collect_trajectories(PlantConfig{}, WeatherParams{}, days, cfg, 11);

  CHECK(datasets_identical(serial, serial2));
  CHECK(datasets_identical(serial, parallel));

  const DataSet other =
      collect_trajectories(PlantConfig{}, WeatherParams{}, days, cfg, 12);
  CHECK_FALSE(datasets_identical(serial, other));
}

TEST_CASE("collect_trajectories: names required and available window counts") {
  CollectConfig cfg;
  cfg.T = 100000;  // far more windows than one day can provide
  const auto days = make_reference_days(DemandProfile{}, 1, 2);
  try {
    collect_trajectories(PlantConfig{}, WeatherParams{}, days, cfg, 2);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("100000") != std::string::npos);  // requested windows
    CHECK(msg.find("40") != std::string::npos);      // window length
  }
  CHECK_THROWS_AS(
      collect_trajectories(PlantConfig{}, WeatherParams{}, {}, cfg, 2),
      std::invalid_argument);
}

TEST_CASE("split_blocks: hand-computed single-channel stacking") {
  // T_ini = N = 1, m = p = 1, u = [a, b], y = [c, d]:
  // the M column must read [c, a, b]^T and Y_N must hold [d].
  DataSet ds;
  ds.T_ini = 1;
  ds.N = 1;
  ds.m = 1;
  ds.p = 1;
  Trajectory tr;
  tr.u_seq.resize(2, 1);
  tr.y_seq.resize(2, 1);
  tr.u_seq << 1.25, -0.5;  // a, b
  tr.y_seq << 3.0, 7.0;    // c, d
  ds.trajectories.push_back(tr);
  const Blocks b = split_blocks(ds);
  REQUIRE(b.M.rows() == 3);
  REQUIRE(b.M.cols() == 1);
  CHECK(b.M(0, 0) == 3.0);
  CHECK(b.M(1, 0) == 1.25);
  CHECK(b.M(2, 0) == -0.5);
  REQUIRE(b.Y_N.rows() == 1);
  CHECK(b.Y_N(0, 0) == 7.0);
}

TEST_CASE("split_blocks: round trip recovers the trajectories") {
  const DataSet ds = testutil::lti_dataset(testutil::LtiSpec{}, 7, 4, 3, 21);
  const Blocks b = split_blocks(ds);
  for (int j = 0; j < ds.T(); ++j) {
    const Trajectory& tr = ds.trajectories[j];
    for (int k = 0; k < ds.T_ini; ++k)
      for (int ch = 0; ch < 3; ++ch) {
        CHECK(b.U_Tini(k * 3 + ch, j) == tr.u_seq(k, ch));
        CHECK(b.Y_Tini(k * 3 + ch, j) == tr.y_seq(k, ch));
      }
    for (int k = 0; k < ds.N; ++k)
      for (int ch = 0; ch < 3; ++ch) {
        CHECK(b.U_N(k * 3 + ch, j) == tr.u_seq(ds.T_ini + k, ch));
        CHECK(b.Y_N(k * 3 + ch, j) == tr.y_seq(ds.T_ini + k, ch));
      }
  }
  // M is exactly the row stack [Y_Tini; U_Tini; U_N].
  CHECK(exact_equal(b.M.topRows(12), b.Y_Tini));
  CHECK(exact_equal(b.M.middleRows(12, 12), b.U_Tini));
  CHECK(exact_equal(b.M.bottomRows(9), b.U_N));
}

TEST_CASE("split_blocks: default dimensions give the 180 x 1000 regressor") {
  const DataSet ds = testutil::lti_dataset(testutil::LtiSpec{}, 1000, 20, 20, 4);
  const Blocks b = split_blocks(ds);
  CHECK(b.M.rows() == 180);
  CHECK(b.M.cols() == 1000);
  CHECK(b.U_Tini.rows() == 60);
  CHECK(b.U_N.rows() == 60);
  CHECK(b.Y_Tini.rows() == 60);
  CHECK(b.Y_N.rows() == 60);
}

TEST_CASE("split_blocks: rejects empty and misshapen datasets") {
  CHECK_THROWS_AS(split_blocks(DataSet{}), std::invalid_argument);
  DataSet ds;
  ds.T_ini = 2;
  ds.N = 2;
  Trajectory tr;
  tr.u_seq = Eigen::MatrixXd::Zero(3, 3);  // should be L = 4 rows
  tr.y_seq = Eigen::MatrixXd::Zero(4, 3);
  ds.trajectories.push_back(tr);
  CHECK_THROWS_AS(split_blocks(ds), std::invalid_argument);
}

TEST_CASE("excitation_rank: zero, duplicated, and well-excited inputs") {
  DataSet zeros;
  zeros.T_ini = 2;
  zeros.N = 2;
  Trajectory z;
  z.u_seq = Eigen::MatrixXd::Zero(4, 3);
  z.y_seq = Eigen::MatrixXd::Zero(4, 3);
  for (int j = 0; j < 30; ++j) zeros.trajectories.push_back(z);
  const ExcitationReport zr = excitation_rank(split_blocks(zeros));
  CHECK(zr.rank == 0);
  CHECK_FALSE(zr.is_sufficient);

  // One trajectory duplicated: the input column space is one-dimensional.
  Rng rng(31);
  DataSet dup;
  dup.T_ini = 2;
  dup.N = 2;
  const Trajectory one = testutil::lti_window(testutil::LtiSpec{}, 4, rng);
  for (int j = 0; j < 30; ++j) dup.trajectories.push_back(one);
  const ExcitationReport dr = excitation_rank(split_blocks(dup));
  CHECK(dr.rank == 1);
  CHECK_FALSE(dr.is_sufficient);

  // Independent random inputs with T far above (T_ini+N)*m reach full rank.
  const DataSet rich = testutil::lti_dataset(testutil::LtiSpec{}, 500, 20, 20, 6);
  const ExcitationReport rr = excitation_rank(split_blocks(rich));
  CHECK(rr.rank == 120);
  CHECK(rr.is_sufficient);
}

TEST_CASE("excitation_rank: the reactive collector with dither is sufficient") {
  CollectConfig cfg;
  cfg.T = 300;
  const auto days = make_reference_days(DemandProfile{}, 2, 13);
  const DataSet ds =
      collect_trajectories(PlantConfig{}, WeatherParams{}, days, cfg, 13);
  const ExcitationReport rep = excitation_rank(split_blocks(ds));
  CHECK(rep.rank == 120);
  CHECK(rep.is_sufficient);
}

TEST_CASE("dataset persistence: bit-exact round trip") {
  testutil::TempDir tmp("hppc-dataset");
  CollectConfig cfg;
  cfg.T = 40;
  const auto days = make_reference_days(DemandProfile{}, 1, 17);
  const DataSet ds =
      collect_trajectories(PlantConfig{}, WeatherParams{}, days, cfg, 17);
  const std::string csv = tmp.file("d.csv");
  const std::string json = tmp.file("d.json");
  write_dataset(ds, csv, json);
  const DataSet back = read_dataset(csv, json);
  CHECK(back.T_ini == ds.T_ini);
  CHECK(back.N == ds.N);
  CHECK(back.seed == ds.seed);
  CHECK(datasets_identical(ds, back));

  // Writing the reloaded set again reproduces the files byte for byte.
  const std::string csv2 = tmp.file("d2.csv");
  const std::string json2 = tmp.file("d2.json");
  write_dataset(back, csv2, json2);
  CHECK(testutil::slurp(csv) == testutil::slurp(csv2));
  CHECK(testutil::slurp(json) == testutil::slurp(json2));

  CHECK_THROWS(read_dataset(tmp.file("missing.csv"), json));
}
