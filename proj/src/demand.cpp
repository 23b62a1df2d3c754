#include "hppc/demand.hpp"

#include <algorithm>
#include <cmath>

#include "hppc/csv.hpp"
#include "hppc/rng.hpp"

namespace hppc {

namespace {
constexpr double kPi = 3.14159265358979323846;

double shape(const DemandProfile& d, double t_h) {
  return d.base + d.amp1 * std::sin(2.0 * kPi * (t_h - d.phase1_h) / 24.0) +
         d.amp2 * std::sin(4.0 * kPi * (t_h - d.phase2_h) / 24.0);
}

double shape_peak(const DemandProfile& d) {
  double peak = 0.0;
  for (int i = 0; i < 2880; ++i)
    peak = std::max(peak, shape(d, i * 24.0 / 2880.0));
  return peak;
}
}  // namespace

double DemandProfile::eval(double t_h) const {
  if (!sample_t_h.empty()) {
    double t = std::fmod(t_h, 24.0);
    if (t < 0.0) t += 24.0;
    const auto it =
        std::upper_bound(sample_t_h.begin(), sample_t_h.end(), t);
    if (it == sample_t_h.begin() || it == sample_t_h.end()) {
      // Between the last sample and the first one of the next day: wrap the
      // interpolation segment across midnight.
      const double span = 24.0 - sample_t_h.back() + sample_t_h.front();
      const double dist = (it == sample_t_h.end())
                              ? t - sample_t_h.back()
                              : t + 24.0 - sample_t_h.back();
      const double w = span > 0.0 ? dist / span : 0.0;
      return sample_mw.back() + w * (sample_mw.front() - sample_mw.back());
    }
    const std::size_t hi = static_cast<std::size_t>(it - sample_t_h.begin());
    const std::size_t lo = hi - 1;
    const double span = sample_t_h[hi] - sample_t_h[lo];
    const double w = span > 0.0 ? (t - sample_t_h[lo]) / span : 0.0;
    return sample_mw[lo] + w * (sample_mw[hi] - sample_mw[lo]);
  }
  if (cached_peak_ < 0.0) cached_peak_ = shape_peak(*this);
  require(cached_peak_ > 0.0, "demand: synthetic shape must have a positive peak");
  const double value = peak_mw * shape(*this, t_h) / cached_peak_;
  return value > 0.0 ? value : 0.0;
}

DemandProfile load_demand_csv(const std::string& path, double peak_mw) {
  const csv::Parsed parsed = csv::read_file(path);
  require(parsed.header.size() == 2 && parsed.header[0] == "time_h" &&
              parsed.header[1] == "demand_mw",
          "demand csv: expected header time_h,demand_mw");
  require(!parsed.rows.empty(), "demand csv: no samples");
  DemandProfile d;
  d.peak_mw = peak_mw;
  double raw_peak = 0.0;
  for (const auto& row : parsed.rows) {
    d.sample_t_h.push_back(row[0]);
    d.sample_mw.push_back(row[1]);
    raw_peak = std::max(raw_peak, row[1]);
  }
  require(std::is_sorted(d.sample_t_h.begin(), d.sample_t_h.end()),
          "demand csv: time_h must be sorted");
  require(raw_peak > 0.0, "demand csv: peak must be positive");
  for (double& v : d.sample_mw) v *= peak_mw / raw_peak;
  return d;
}

std::vector<DemandProfile> make_reference_days(const DemandProfile& canonical,
                                               int days, std::uint64_t seed) {
  require(days >= 1, "make_reference_days: need at least one day");
  std::vector<DemandProfile> out;
  out.reserve(static_cast<std::size_t>(days));
  for (int d = 0; d < days; ++d) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(d)));
    DemandProfile day = canonical;
    day.peak_mw = canonical.peak_mw * rng.uniform(0.85, 1.15);
    day.amp1 = canonical.amp1 * rng.uniform(0.7, 1.3);
    day.amp2 = canonical.amp2 * rng.uniform(0.7, 1.3);
    day.phase1_h = canonical.phase1_h + rng.uniform(-2.0, 2.0);
    day.phase2_h = canonical.phase2_h + rng.uniform(-2.0, 2.0);
    day.reset_cache();
    out.push_back(day);
  }
  return out;
}

}  // namespace hppc
