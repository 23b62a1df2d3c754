#pragma once

#include <string>

#include <json.hpp>

#include "hppc/harness.hpp"

namespace hppc {

struct IoConfig {
  std::string out_dir = "out";
};

/// A fully-resolved experiment: scenario plus output locations.
struct Experiment {
  ScenarioConfig scenario;
  IoConfig io;
};

Experiment default_experiment();

/// Parses a config document. Sections: plant, weather, controller, data,
/// scenario, io — all optional, all keys optional. Unknown sections or keys
/// are rejected by full dotted name. After parsing, dependent fields are
/// synchronized (sample times, window sizes, battery bounds) so the plant
/// and controller sections cannot drift apart.
Experiment parse_experiment(const nlohmann::json& j);

/// Reads and parses a JSON config file; an empty path yields the defaults.
Experiment load_experiment(const std::string& path);

/// Echo of every accepted key with its resolved value; parsing the echo
/// reproduces the experiment exactly.
nlohmann::json echo_config(const Experiment& e);

}  // namespace hppc
