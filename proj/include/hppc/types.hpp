#pragma once

#include <cmath>
#include <stdexcept>

namespace hppc {

// Channel order used for every stacked vector in the project:
// sample-major, channel-minor, channels ordered wind, solar, battery.
inline constexpr int kChannels = 3;
inline constexpr int kWind = 0;
inline constexpr int kSolar = 1;
inline constexpr int kBattery = 2;

/// One (wind, solar, battery) power triple in MW. Battery sign convention:
/// positive = discharging into the plant bus, negative = charging.
struct PowerTriple {
  double wind = 0.0;
  double solar = 0.0;
  double battery = 0.0;

  double total() const { return wind + solar + battery; }

  double& operator[](int ch) {
    switch (ch) {
      case kWind: return wind;
      case kSolar: return solar;
      default: return battery;
    }
  }
  double operator[](int ch) const {
    switch (ch) {
      case kWind: return wind;
      case kSolar: return solar;
      default: return battery;
    }
  }
};

/// Closed interval [lo, hi] used for setpoint projection and output clamps.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
};

/// Per-channel admissible setpoint intervals.
struct ChannelBounds {
  Interval wind;
  Interval solar;
  Interval battery;

  const Interval& operator[](int ch) const {
    switch (ch) {
      case kWind: return wind;
      case kSolar: return solar;
      default: return battery;
    }
  }
};

inline double clamp(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

inline void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace hppc
