#include "logcvx/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace logcvx;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int report(const RunResult& r) {
  std::printf("%s: %s\n", r.pass ? "PASS" : "FAIL", r.summary.c_str());
  if (!r.pass && !r.worst.empty()) std::printf("worst: %s\n", r.worst.c_str());
  for (const auto& f : r.files) std::printf("wrote %s\n", f.c_str());
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"logcvx: frequency-function and log-convexity experiments"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run one experiment");
  std::string experiment, preset, config_path, out_dir, epsilon;
  int n = 0;
  long long seed = -1;
  std::vector<std::string> overrides;
  run_cmd->add_option("--experiment,-e", experiment, "experiment id (see `list`)");
  run_cmd->add_option("--preset", preset, "geometry preset");
  run_cmd->add_option("--n", n, "grid points per axis");
  run_cmd->add_option("--epsilon", epsilon, "comma-separated epsilon sweep");
  run_cmd->add_option("--config,-c", config_path, "key = value config file");
  run_cmd->add_option("--set", overrides, "override key=value (repeatable)");
  run_cmd->add_option("--out,-o", out_dir, "output directory");
  run_cmd->add_option("--seed", seed, "random seed");

  auto* list_cmd = app.add_subcommand("list", "print the experiment registry");
  bool as_json = false;
  list_cmd->add_flag("--json", as_json, "machine-readable output");

  auto* validate_cmd = app.add_subcommand("validate-config", "check a config file and print the resolved values");
  std::string validate_path;
  validate_cmd->add_option("config", validate_path, "config file")->required();

  auto* replay_cmd = app.add_subcommand("replay", "re-run a stored report and compare its outputs byte for byte");
  std::string replay_dir, replay_out;
  replay_cmd->add_option("dir", replay_dir, "directory holding report.json and trace.csv")->required();
  replay_cmd->add_option("--out,-o", replay_out, "where to write the replayed outputs (default: <dir>/replay)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n\n%s", e.what(), app.help().c_str());
    return 2;
  }

  try {
    if (*list_cmd) {
      if (as_json) {
        std::printf("%s\n", list_experiments_json().dump(2).c_str());
      } else {
        for (const auto& e : list_experiments()) std::printf("%-16s %s: %s\n", e.id.c_str(), e.title.c_str(), e.checks.c_str());
      }
      return 0;
    }
    if (*validate_cmd) {
      const ExperimentConfig c = resolve(load_config_file(validate_path));
      for (const auto& [k, v] : c.resolved) std::printf("%s = %s\n", k.c_str(), v.c_str());
      std::printf("output.dir = %s\n", c.output_dir.c_str());
      return 0;
    }
    if (*run_cmd) {
      Config cfg = config_path.empty() ? Config{} : load_config_file(config_path);
      if (!experiment.empty()) cfg.set("experiment", experiment);
      if (!preset.empty()) cfg.set("preset", preset);
      if (n > 0) cfg.set("grid.n", std::to_string(n));
      if (!epsilon.empty()) cfg.set("sweep.epsilon_list", epsilon);
      if (seed >= 0) cfg.set("seed", std::to_string(seed));
      if (!out_dir.empty()) cfg.set("output.dir", out_dir);
      for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      return report(run(resolve(cfg)));
    }
    if (*replay_cmd) {
      const std::filesystem::path dir(replay_dir);
      std::ifstream in(dir / "report.json");
      if (!in) throw ConfigError("replay: cannot read " + (dir / "report.json").string());
      nlohmann::json stored;
      try {
        stored = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("replay: malformed report.json: ") + e.what());
      }
      if (!stored.contains("config") || !stored["config"].is_object())
        throw ConfigError("replay: report.json has no config object");
      Config cfg;
      for (const auto& [k, v] : stored["config"].items()) cfg.set(k, v.get<std::string>());
      const std::filesystem::path out = replay_out.empty() ? dir / "replay" : std::filesystem::path(replay_out);
      cfg.set("output.dir", out.string());
      const RunResult r = run(resolve(cfg));
      bool identical = true;
      for (const char* name : {"trace.csv", "report.json"}) {
        if (!std::filesystem::exists(dir / name)) continue;
        const bool same = slurp(dir / name) == slurp(out / name);
        identical = identical && same;
        std::printf("%s: %s\n", name, same ? "identical" : "differs");
      }
      const int code = report(r);
      return identical ? code : 1;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const Refused& e) {
    std::fprintf(stderr, "refused: %s\n", e.what());
    return 1;
  } catch (const StepperFailure& e) {
    std::fprintf(stderr, "stepper failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
