// End-to-end checks of the hppctl binary: exit codes, artifacts on disk,
// environment-variable overrides, and byte-level determinism. The binary
// path arrives through HPPCTL_BIN (set by the test harness).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <string>

#include <json.hpp>

#include "hppc/csv.hpp"
#include "test_helpers.hpp"

using nlohmann::json;

namespace {

std::string bin() {
  const char* b = std::getenv("HPPCTL_BIN");
  REQUIRE_MESSAGE(b != nullptr, "HPPCTL_BIN must point at the hppctl binary");
  return std::string(b);
}

// Small-but-healthy experiment: short windows keep the QP tiny and one day
// of data keeps collection fast while the excitation stays full rank.
const char* kSmallConfig = R"({
  "controller": {"N": 5, "T_ini": 5},
  "data": {"T": 60, "days": 1},
  "scenario": {"warmup_steps": 5, "steps": 6}
})";

std::size_t count_data_rows(const std::string& text) {
  std::size_t rows = 0;
  bool header = true;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) {
      if (header) {
        header = false;
      } else {
        ++rows;
      }
    }
    start = end + 1;
  }
  return rows;
}

struct CliCase {
  testutil::TempDir tmp{"hppc-cli"};
  std::string config_path;

  explicit CliCase(const char* config_text = kSmallConfig) {
    config_path = tmp.file("config.json");
    hppc::csv::write_text(config_path, config_text);
  }

  std::string cmd(const std::string& rest) const {
    return "'" + bin() + "' " + rest;
  }
};

}  // namespace

TEST_CASE("hppctl --help exits 0 and lists the subcommands") {
  std::string out;
  CHECK(testutil::run_cmd(bin() + " --help", &out) == 0);
  CHECK(out.find("datagen") != std::string::npos);
  CHECK(out.find("fit") != std::string::npos);
  CHECK(out.find("run") != std::string::npos);
}

TEST_CASE("hppctl rejects a config with an unknown key") {
  CliCase c(R"({"plant": {"dtx": 1.0}})");
  std::string out;
  const int rc = testutil::run_cmd(
      c.cmd("datagen --config '" + c.config_path + "' --out '" +
            c.tmp.file("out") + "'"),
      &out);
  CHECK(rc == 1);
  CHECK(out.find("plant.dtx") != std::string::npos);
}

TEST_CASE("hppctl rejects bad --steps and --mode values") {
  CliCase c;
  std::string out;
  CHECK(testutil::run_cmd(c.cmd("run --config '" + c.config_path +
                                "' --out '" + c.tmp.file("o1") +
                                "' --steps 0"),
                          &out) == 1);
  CHECK(out.find("--steps") != std::string::npos);
  CHECK(testutil::run_cmd(c.cmd("run --config '" + c.config_path +
                                "' --out '" + c.tmp.file("o2") +
                                "' --mode sideways"),
                          &out) == 1);
  CHECK(out.find("--mode") != std::string::npos);
}

TEST_CASE("hppctl fails cleanly when the output directory cannot be made") {
  CliCase c;
  std::string out;
  const int rc = testutil::run_cmd(
      c.cmd("datagen --config '" + c.config_path +
            "' --out /proc/version/nested"),
      &out);
  CHECK(rc == 1);
  CHECK(out.find("error:") != std::string::npos);
}

TEST_CASE("hppctl datagen writes artifacts and reports the excitation rank") {
  CliCase c;
  const std::string out_dir = c.tmp.file("out");
  std::string out;
  const int rc = testutil::run_cmd(
      c.cmd("datagen --config '" + c.config_path + "' --out '" + out_dir +
            "'"),
      &out);
  CHECK(rc == 0);
  CHECK(out.find("excitation rank 30/30 (sufficient)") != std::string::npos);

  CHECK_FALSE(testutil::slurp(out_dir + "/dataset.csv").empty());
  CHECK_FALSE(testutil::slurp(out_dir + "/dataset.json").empty());
  CHECK_FALSE(testutil::slurp(out_dir + "/weather.csv").empty());
  const json summary = json::parse(testutil::slurp(out_dir + "/summary.json"));
  CHECK(summary.at("command") == "datagen");
  CHECK(summary.at("metrics").at("excitation_rank").get<int>() == 30);
  CHECK(summary.at("metrics").at("excitation_sufficient").get<bool>());
  CHECK(summary.at("config").at("controller").at("N").get<int>() == 5);
}

TEST_CASE("hppctl datagen: --seed and HPPC_SEED produce identical bytes") {
  CliCase c;
  const std::string dir_a = c.tmp.file("a");
  const std::string dir_b = c.tmp.file("b");
  CHECK(testutil::run_cmd(c.cmd("datagen --config '" + c.config_path +
                                "' --out '" + dir_a + "' --seed 7")) == 0);
  CHECK(testutil::run_cmd("HPPC_SEED=7 " +
                          c.cmd("datagen --config '" + c.config_path +
                                "' --out '" + dir_b + "'")) == 0);
  const std::string ds_a = testutil::slurp(dir_a + "/dataset.csv");
  CHECK_FALSE(ds_a.empty());
  CHECK(ds_a == testutil::slurp(dir_b + "/dataset.csv"));
  CHECK(testutil::slurp(dir_a + "/weather.csv") ==
        testutil::slurp(dir_b + "/weather.csv"));
}

TEST_CASE("hppctl datagen exits 2 when the excitation rank is insufficient") {
  CliCase c(R"({
    "controller": {"N": 5, "T_ini": 5},
    "data": {"T": 20, "days": 1},
    "scenario": {"warmup_steps": 5, "steps": 6}
  })");
  const std::string out_dir = c.tmp.file("out");
  std::string out;
  const int rc = testutil::run_cmd(
      c.cmd("datagen --config '" + c.config_path + "' --out '" + out_dir +
            "'"),
      &out);
  CHECK(rc == 2);
  CHECK(out.find("(insufficient)") != std::string::npos);
  // The dataset is still persisted so the failure can be inspected.
  CHECK_FALSE(testutil::slurp(out_dir + "/dataset.csv").empty());
}

TEST_CASE("hppctl fit: reads the persisted dataset, refits identically") {
  CliCase c;
  const std::string out_dir = c.tmp.file("out");
  REQUIRE(testutil::run_cmd(c.cmd("datagen --config '" + c.config_path +
                                  "' --out '" + out_dir + "'")) == 0);

  std::string out;
  CHECK(testutil::run_cmd(c.cmd("fit --config '" + c.config_path +
                                "' --out '" + out_dir + "'"),
                          &out) == 0);
  CHECK(out.find("fit residual") != std::string::npos);
  const std::string first = testutil::slurp(out_dir + "/predictor.csv");
  CHECK_FALSE(first.empty());
  const json summary = json::parse(testutil::slurp(out_dir + "/summary.json"));
  CHECK(summary.at("command") == "fit");
  CHECK(summary.at("metrics").at("excitation_ok").get<bool>());
  CHECK(summary.at("metrics").at("rows").get<int>() == 15);
  CHECK(summary.at("metrics").at("cols").get<int>() == 45);

  // A second fit from the same dataset reproduces the file byte for byte.
  CHECK(testutil::run_cmd(c.cmd("fit --config '" + c.config_path +
                                "' --out '" + out_dir + "'")) == 0);
  CHECK(testutil::slurp(out_dir + "/predictor.csv") == first);

  // --data decouples the dataset directory from the output directory.
  const std::string alt = c.tmp.file("alt");
  CHECK(testutil::run_cmd(c.cmd("fit --config '" + c.config_path +
                                "' --out '" + alt + "' --data '" + out_dir +
                                "'")) == 0);
  CHECK(testutil::slurp(alt + "/predictor.csv") == first);
}

TEST_CASE("hppctl fit: missing dataset and window mismatches exit 1") {
  CliCase c;
  std::string out;
  CHECK(testutil::run_cmd(c.cmd("fit --config '" + c.config_path +
                                "' --out '" + c.tmp.file("empty") + "'"),
                          &out) == 1);
  CHECK(out.find("error:") != std::string::npos);

  const std::string data_dir = c.tmp.file("data");
  REQUIRE(testutil::run_cmd(c.cmd("datagen --config '" + c.config_path +
                                  "' --out '" + data_dir + "'")) == 0);
  const std::string other_cfg = c.tmp.file("other.json");
  hppc::csv::write_text(other_cfg, R"({
    "controller": {"N": 5, "T_ini": 4},
    "data": {"T": 60, "days": 1},
    "scenario": {"warmup_steps": 5, "steps": 6}
  })");
  const int rc = testutil::run_cmd(
      c.cmd("fit --config '" + other_cfg + "' --out '" + c.tmp.file("o") +
            "' --data '" + data_dir + "'"),
      &out);
  CHECK(rc == 1);
  CHECK(out.find("T_ini=5") != std::string::npos);
  CHECK(out.find("T_ini=4") != std::string::npos);
}

TEST_CASE("hppctl run (closed loop) writes run.csv, fan.csv, summary.json") {
  CliCase c;
  const std::string out_dir = c.tmp.file("out");
  std::string out;
  const int rc = testutil::run_cmd(
      c.cmd("run --config '" + c.config_path + "' --out '" + out_dir + "'"),
      &out);
  CHECK(rc == 0);
  CHECK(out.find("closed loop: tracking error") != std::string::npos);

  CHECK(count_data_rows(testutil::slurp(out_dir + "/run.csv")) == 6);
  CHECK(count_data_rows(testutil::slurp(out_dir + "/fan.csv")) == 6 * 5);
  const json summary = json::parse(testutil::slurp(out_dir + "/summary.json"));
  CHECK(summary.at("metrics").at("mode") == "closed");
  CHECK(summary.at("metrics").at("steps").get<int>() == 6);
  CHECK(summary.at("metrics").at("constraint_violation_count").get<int>() ==
        0);
  CHECK(summary.at("metrics").contains("tracking_error_pct"));
  CHECK(summary.at("timing").contains("mean_solve_ms"));
}

TEST_CASE("hppctl run --mode open reports per-channel forecast errors") {
  CliCase c;
  const std::string out_dir = c.tmp.file("out");
  std::string out;
  const int rc = testutil::run_cmd(
      c.cmd("run --config '" + c.config_path + "' --out '" + out_dir +
            "' --mode open"),
      &out);
  CHECK(rc == 0);
  CHECK(out.find("open-loop forecast") != std::string::npos);
  // One row per horizon sample.
  CHECK(count_data_rows(testutil::slurp(out_dir + "/run.csv")) == 5);
  const json summary = json::parse(testutil::slurp(out_dir + "/summary.json"));
  CHECK(summary.at("metrics").at("mode") == "open");
  CHECK(summary.at("metrics").contains("err_wind_pct"));
  CHECK(summary.at("metrics").contains("err_solar_pct"));
  CHECK(summary.at("metrics").contains("err_battery_pct"));
  CHECK(summary.at("metrics").contains("err_total_pct"));
}

TEST_CASE("hppctl run --mode ablation writes the five-row table") {
  CliCase c;
  const std::string out_dir = c.tmp.file("out");
  std::string out;
  const int rc = testutil::run_cmd(
      c.cmd("run --config '" + c.config_path + "' --out '" + out_dir +
            "' --mode ablation --steps 4"),
      &out);
  CHECK(rc == 0);
  CHECK(out.find("ablation table (5 rows)") != std::string::npos);
  CHECK(count_data_rows(testutil::slurp(out_dir + "/ablation.csv")) == 5);
  const json summary = json::parse(testutil::slurp(out_dir + "/summary.json"));
  const json rows = summary.at("metrics").at("rows");
  REQUIRE(rows.size() == 5);
  CHECK(rows.at(0).at("label") == "no_uncertainty");
  CHECK(rows.at(0).at("delta_pw_mw").get<double>() == 0.0);
  CHECK(rows.at(4).at("q_w").get<double>() == -1.6);
}
