#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hppc/demand.hpp"
#include "test_helpers.hpp"

using namespace hppc;

TEST_CASE("synthetic profile: normalized to the configured peak, never negative") {
  DemandProfile d;
  double peak = 0.0;
  for (int i = 0; i < 2880; ++i) {
    const double v = d.eval(i * 24.0 / 2880.0);
    CHECK(v >= 0.0);
    peak = std::max(peak, v);
  }
  CHECK(peak == doctest::Approx(d.peak_mw).epsilon(1e-9));
}

TEST_CASE("synthetic profile: 24-hour periodic") {
  DemandProfile d;
  for (double t : {0.0, 5.3, 11.88, 20.25})
    CHECK(d.eval(t) == doctest::Approx(d.eval(t + 24.0)));
}

TEST_CASE("synthetic profile: reset_cache picks up parameter edits") {
  DemandProfile d;
  const double before = d.eval(12.0);
  d.peak_mw = 10.0;
  d.reset_cache();
  CHECK(d.eval(12.0) == doctest::Approx(2.0 * before));
}

TEST_CASE("csv profile: linear interpolation rescaled to the peak") {
  testutil::TempDir tmp("hppc-demand");
  const std::string path = tmp.file("demand.csv");
  {
    std::ofstream out(path);
    out << "time_h,demand_mw\n0,2\n6,4\n12,8\n18,4\n";
  }
  const DemandProfile d = load_demand_csv(path, 5.0);
  // The raw peak 8 MW maps to 5 MW, so every sample scales by 5/8.
  CHECK(d.eval(12.0) == doctest::Approx(5.0));
  CHECK(d.eval(0.0) == doctest::Approx(2.0 * 5.0 / 8.0));
  CHECK(d.eval(3.0) == doctest::Approx(3.0 * 5.0 / 8.0));   // midpoint 0-6
  CHECK(d.eval(9.0) == doctest::Approx(6.0 * 5.0 / 8.0));   // midpoint 6-12
  // Wraps around midnight: 21 h sits midway between 18 h and 24 h (=0 h).
  CHECK(d.eval(21.0) == doctest::Approx(3.0 * 5.0 / 8.0));
}

TEST_CASE("csv profile: missing file raises") {
  CHECK_THROWS(load_demand_csv("/nonexistent/nope.csv", 5.0));
}

TEST_CASE("make_reference_days: deterministic spread around the canonical day") {
  DemandProfile canonical;
  const auto days = make_reference_days(canonical, 6, 123);
  REQUIRE(days.size() == 6);
  const auto again = make_reference_days(canonical, 6, 123);
  int differing_from_canonical = 0;
  for (std::size_t i = 0; i < days.size(); ++i) {
    // Bit-identical across calls with the same seed.
    CHECK(days[i].eval(7.0) == again[i].eval(7.0));
    CHECK(days[i].eval(19.0) == again[i].eval(19.0));
    if (std::abs(days[i].eval(12.0) - canonical.eval(12.0)) > 1e-9)
      ++differing_from_canonical;
    for (int s = 0; s < 96; ++s) CHECK(days[i].eval(s * 0.25) >= 0.0);
    // Peaks stay within the documented +-15% seasonal spread.
    double peak = 0.0;
    for (int s = 0; s < 960; ++s)
      peak = std::max(peak, days[i].eval(s * 0.025));
    CHECK(peak >= 0.85 * canonical.peak_mw - 1e-9);
    CHECK(peak <= 1.15 * canonical.peak_mw + 1e-9);
  }
  CHECK(differing_from_canonical == 6);

  const auto other = make_reference_days(canonical, 6, 124);
  CHECK(other[0].eval(12.0) != days[0].eval(12.0));
}
