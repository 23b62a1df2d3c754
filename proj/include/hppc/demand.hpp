#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hppc/types.hpp"

namespace hppc {

/// Day-long load reference in MW. Either a two-harmonic synthetic shape or a
/// sampled curve loaded from CSV (linearly interpolated, wrapped over 24 h).
struct DemandProfile {
  // Synthetic shape: peak_mw * s(t) / max(s), with
  // s(t) = base + amp1*sin(2*pi*(t - phase1_h)/24) + amp2*sin(4*pi*(t - phase2_h)/24).
  // The default shape has an evening peak (~20.3 h) and a near-stationary
  // midday plateau chosen so the noon reference sits between the plant's
  // q=-1.6 and q=-0.4 wind-curtailment envelopes (the second harmonic's
  // phase cancels the first harmonic's slope around noon); the worst-case
  // evening deficit stays inside the battery's 4 MW rating.
  double peak_mw = 5.0;
  double base = 1.0;
  double amp1 = 0.0743;
  double phase1_h = 13.2;
  double amp2 = 0.0351;
  double phase2_h = 5.94;

  // Sampled curve; when non-empty it replaces the synthetic shape.
  std::vector<double> sample_t_h;
  std::vector<double> sample_mw;

  double eval(double t_h) const;

  /// Call after changing synthetic shape parameters.
  void reset_cache() { cached_peak_ = -1.0; }

 private:
  // Normalization peak of the synthetic shape, found once per parameter set.
  mutable double cached_peak_ = -1.0;
};

/// Loads columns time_h, demand_mw and rescales so the curve's peak is peak_mw.
DemandProfile load_demand_csv(const std::string& path, double peak_mw);

/// Deterministic per-day variations of the synthetic shape (seasonal spread of
/// amplitude, phase, and peak) for multi-day training-data generation.
std::vector<DemandProfile> make_reference_days(const DemandProfile& canonical,
                                               int days, std::uint64_t seed);

}  // namespace hppc
