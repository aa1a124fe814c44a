#pragma once

#include "logcvx/common.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace logcvx {

struct ExperimentInfo {
  std::string id;
  std::string title;
  std::string checks;
};

/// The experiment registry, in listing order.
std::vector<ExperimentInfo> list_experiments();
nlohmann::json list_experiments_json();

/// Registry id for an id or alias ("backward-uniqueness" and "grönwall" map to "gronwall").
std::string canonical_experiment(std::string_view id);

/// Documented config keys with their global defaults.
const std::map<std::string, std::string>& config_defaults();

/// Raw key/value configuration. Unknown keys raise ConfigError naming the key.
class Config {
 public:
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// "key = value" lines; '#' starts a comment. Errors name the line and key.
Config parse_config(std::string_view text);
Config load_config_file(const std::string& path);

struct ExperimentConfig {
  std::string experiment;
  std::string preset;
  double amplitude = 0.1;
  double twist = 0.1;
  int dim = 1;
  int n = 32;
  double length = 2.0 * kPi;
  int band = 0;
  int fiber_m = 0;
  int order = 2;
  double C0 = 0.3;
  std::string coupling;
  double omega = 0.1;
  double dt = 1e-3;
  int samples = 1;
  double Bw = 1.0;
  double L1 = 0.0;
  double V0 = 0.0;
  std::vector<double> R_list;
  int smoothness = 2;
  std::vector<double> epsilon_list;
  double tol_identity = 0.0;
  double tol_sandwich = 0.0;
  std::string output_dir;
  std::vector<std::string> formats;
  std::uint64_t seed = 1;

  /// Every resolved key with its value as a string (sorted by key).
  std::map<std::string, std::string> resolved;
};

/// Applies experiment and preset defaults and validates every value.
ExperimentConfig resolve(const Config& cfg);

struct RunResult {
  int exit_code = 0;  // 0 pass, 1 certificate failure
  bool pass = false;
  std::string summary;
  std::string worst;  // pointer to the worst sample when failing
  nlohmann::json report;
  std::vector<std::string> files;
};

/// Runs the experiment and writes its artifacts into cfg.output_dir.
/// Configuration problems throw ConfigError.
RunResult run(const ExperimentConfig& cfg);

/// %.17g, or an empty string for non-finite values.
std::string format_number(double v);

}  // namespace logcvx
