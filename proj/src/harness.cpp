#include "logcvx/harness.hpp"

#include "logcvx/higher_order.hpp"
#include "logcvx/localization.hpp"
#include "logcvx/prolongation.hpp"
#include "logcvx/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace logcvx {

using nlohmann::json;

std::vector<ExperimentInfo> list_experiments() {
  return {
      {"identity-suite", "integral identities", "dE/dtau, F and dF/dtau identities along a trajectory"},
      {"sandwich-suite", "frequency sandwich", "sampled dN/dtau between the two frequency bounds"},
      {"gronwall", "frequency bound and backward uniqueness",
       "N <= N0, log-E growth bound, zero-data vanishing and epsilon sweep"},
      {"cutoff-limit", "weighted cutoff limit", "localized energies, frequency stabilization and correction decay in R"},
      {"prolong-ricci", "prolonged conformal Ricci flow", "empirical structural constant of the prolonged system"},
      {"fourth-order", "fourth-order frequency", "bi-Laplacian sandwich, frequency bound and log-convexity"},
      {"kcf", "order 2k+2 systems", "multiplier law and frequency certificates for k = 1, 2, 3"},
  };
}

json list_experiments_json() {
  json out = json::array();
  for (const auto& e : list_experiments()) out.push_back({{"id", e.id}, {"title", e.title}, {"checks", e.checks}});
  return out;
}

std::string canonical_experiment(std::string_view id) {
  if (id == "backward-uniqueness" || id == "grönwall") return "gronwall";
  for (const auto& e : list_experiments())
    if (e.id == id) return e.id;
  std::string names;
  for (const auto& e : list_experiments()) names += (names.empty() ? "" : ", ") + e.id;
  throw ConfigError("unknown experiment '" + std::string(id) + "' (valid: " + names + ")");
}

const std::map<std::string, std::string>& config_defaults() {
  static const std::map<std::string, std::string> defaults{
      {"experiment", ""},
      {"preset", "flat-static"},
      {"preset.amplitude", "0.1"},
      {"preset.twist", "0.1"},
      {"grid.dim", "1"},
      {"grid.n", "32"},
      {"grid.length", "6.283185307179586"},
      {"grid.band", "0"},
      {"fiber.m", "0"},
      {"system.order", "2"},
      {"system.C0", "0.3"},
      {"system.coupling", "standard"},
      {"time.omega", "0.1"},
      {"time.dt", "0.001"},
      {"time.samples", "1"},
      {"weight.Bw", "1"},
      {"weight.L1", "0"},
      {"weight.V0", "0"},
      {"cutoff.R_list", "4,8,16"},
      {"cutoff.smoothness", "2"},
      {"sweep.epsilon_list", "1e-2,1e-4,1e-6"},
      {"tolerances.identity", "0"},
      {"tolerances.sandwich", "0"},
      {"output.dir", ""},
      {"output.formats", "csv,json,svg"},
      {"seed", "1"},
  };
  return defaults;
}

namespace {

const std::map<std::string, std::map<std::string, std::string>>& experiment_defaults() {
  static const std::map<std::string, std::map<std::string, std::string>> d{
      {"cutoff-limit", {{"grid.n", "512"}, {"grid.length", "128"}, {"time.omega", "0.5"}, {"time.dt", "0.005"}}},
      {"prolong-ricci",
       {{"grid.dim", "2"}, {"time.omega", "0.05"}, {"time.samples", "5"}, {"sweep.epsilon_list", "1e-3,1e-4"}}},
      {"fourth-order", {{"grid.n", "16"}, {"system.order", "4"}, {"system.coupling", "fourth-standard"}}},
      {"kcf",
       {{"grid.n", "16"}, {"grid.band", "3"}, {"system.coupling", "none"}, {"time.omega", "0.02"}, {"time.dt", "1e-4"}}},
  };
  return d;
}

const std::map<std::string, std::map<std::string, std::string>>& preset_defaults() {
  static const std::map<std::string, std::map<std::string, std::string>> d{
      {"anisotropic-lambda", {{"time.omega", "0.05"}, {"time.dt", "5e-4"}}},
  };
  return d;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_real(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v))
    throw ConfigError("config key '" + key + "': expected a finite number, got '" + text + "'");
  return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size())
    throw ConfigError("config key '" + key + "': expected an integer, got '" + text + "'");
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_reals(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_real(key, item));
  if (out.empty()) throw ConfigError("config key '" + key + "': expected a comma-separated list of numbers");
  return out;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("config key '" + key + "': " + what);
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
  if (!config_defaults().count(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = trim(value);
}

std::optional<std::string> Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

Config parse_config(std::string_view text) {
  Config cfg;
  std::stringstream ss{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(number) + ": expected 'key = value', got '" + trim(line) + "'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    try {
      cfg.set(key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  return cfg;
}

Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ExperimentConfig resolve(const Config& cfg) {
  const auto exp_raw = cfg.get("experiment");
  if (!exp_raw || exp_raw->empty()) throw ConfigError("config key 'experiment' is required");
  ExperimentConfig c;
  c.experiment = canonical_experiment(*exp_raw);

  std::map<std::string, std::string> v = config_defaults();
  if (auto it = experiment_defaults().find(c.experiment); it != experiment_defaults().end())
    for (const auto& [k, val] : it->second) v[k] = val;
  const std::string preset = cfg.get("preset").value_or(v["preset"]);
  if (auto it = preset_defaults().find(preset); it != preset_defaults().end())
    for (const auto& [k, val] : it->second) v[k] = val;
  for (const auto& [k, val] : cfg.values()) v[k] = val;
  v["experiment"] = c.experiment;

  const auto names = preset_names();
  c.preset = v["preset"];
  if (std::find(names.begin(), names.end(), c.preset) == names.end()) {
    std::string all;
    for (const auto& n : names) all += (all.empty() ? "" : ", ") + n;
    throw ConfigError("config key 'preset': unknown preset '" + c.preset + "' (valid: " + all + ")");
  }
  c.amplitude = parse_real("preset.amplitude", v["preset.amplitude"]);
  c.twist = parse_real("preset.twist", v["preset.twist"]);
  c.dim = int(parse_integer("grid.dim", v["grid.dim"]));
  require(c.dim == 1 || c.dim == 2, "grid.dim", "must be 1 or 2");
  c.n = int(parse_integer("grid.n", v["grid.n"]));
  require(c.n >= 8 && c.n <= 4096 && c.n % 2 == 0, "grid.n", "must be an even integer in [8, 4096]");
  c.length = parse_real("grid.length", v["grid.length"]);
  require(c.length > 0.0, "grid.length", "must be positive");
  c.band = int(parse_integer("grid.band", v["grid.band"]));
  require(c.band >= 0 && c.band <= c.n / 2, "grid.band", "must lie in [0, n/2] (0 means n/4)");
  c.fiber_m = int(parse_integer("fiber.m", v["fiber.m"]));
  require(c.fiber_m >= 0 && c.fiber_m <= kMaxFiber, "fiber.m", "must lie in [0, 4] (0 means the preset's)");
  c.order = int(parse_integer("system.order", v["system.order"]));
  require(c.order == 2 || c.order == 4 || c.order == 6 || c.order == 8, "system.order", "must be 2, 4, 6 or 8");
  c.C0 = parse_real("system.C0", v["system.C0"]);
  require(c.C0 >= 0.0, "system.C0", "must be nonnegative");
  c.coupling = v["system.coupling"];
  const auto couplings = coupling_names();
  require(std::find(couplings.begin(), couplings.end(), c.coupling) != couplings.end(), "system.coupling",
          "must be one of none, standard, fourth-standard");
  c.omega = parse_real("time.omega", v["time.omega"]);
  require(c.omega > 0.0, "time.omega", "must be positive");
  c.dt = parse_real("time.dt", v["time.dt"]);
  require(c.dt > 0.0 && c.dt <= c.omega, "time.dt", "must lie in (0, time.omega]");
  c.samples = int(parse_integer("time.samples", v["time.samples"]));
  require(c.samples >= 1, "time.samples", "record stride must be >= 1");
  const long steps = std::lround(c.omega / c.dt);
  require(std::abs(steps * c.dt - c.omega) <= 1e-9 * c.omega, "time.dt", "time.omega must be a multiple of time.dt");
  require(steps % c.samples == 0, "time.samples", "must divide the step count time.omega / time.dt");
  require(steps / c.samples >= 8, "time.samples", "fewer than 9 recorded samples; reduce the stride or time.dt");
  c.L1 = parse_real("weight.L1", v["weight.L1"]);
  c.V0 = parse_real("weight.V0", v["weight.V0"]);
  require(c.L1 >= 0.0, "weight.L1", "must be nonnegative");
  require(c.V0 >= 0.0, "weight.V0", "must be nonnegative");
  c.Bw = parse_real("weight.Bw", v["weight.Bw"]);
  if (!cfg.has("weight.Bw") && weight_rate(c.L1, c.V0) > 0.0) {
    c.Bw = weight_rate(c.L1, c.V0);
    v["weight.Bw"] = format_number(c.Bw);
  }
  require(c.Bw > 0.0, "weight.Bw", "must be positive");
  c.R_list = parse_reals("cutoff.R_list", v["cutoff.R_list"]);
  for (double R : c.R_list) require(R > 0.0, "cutoff.R_list", "radii must be positive");
  c.smoothness = int(parse_integer("cutoff.smoothness", v["cutoff.smoothness"]));
  require(c.smoothness == 2 || c.smoothness == 4, "cutoff.smoothness", "must be 2 (quintic) or 4 (degree 9)");
  c.epsilon_list = parse_reals("sweep.epsilon_list", v["sweep.epsilon_list"]);
  for (double e : c.epsilon_list) require(e >= 0.0, "sweep.epsilon_list", "values must be nonnegative");
  c.tol_identity = parse_real("tolerances.identity", v["tolerances.identity"]);
  c.tol_sandwich = parse_real("tolerances.sandwich", v["tolerances.sandwich"]);
  require(c.tol_identity >= 0.0, "tolerances.identity", "must be nonnegative");
  require(c.tol_sandwich >= 0.0, "tolerances.sandwich", "must be nonnegative");
  c.formats = split_list(v["output.formats"]);
  for (const auto& f : c.formats)
    require(f == "csv" || f == "json" || f == "svg", "output.formats", "entries must be csv, json or svg");
  const long long seed = parse_integer("seed", v["seed"]);
  require(seed >= 0, "seed", "must be nonnegative");
  c.seed = std::uint64_t(seed);
  c.output_dir = v["output.dir"].empty() ? "out/" + c.experiment : v["output.dir"];

  if (c.experiment == "cutoff-limit") require(c.dim == 1, "grid.dim", "cutoff-limit runs on a 1D torus");
  if (c.experiment == "prolong-ricci") require(c.dim == 2, "grid.dim", "prolong-ricci runs on the 2D torus");
  if (c.experiment == "fourth-order") require(c.order == 4, "system.order", "fourth-order runs order 4");
  if (c.experiment == "fourth-order" || c.experiment == "kcf" || c.order > 2)
    require(c.preset == "flat-static", "preset", "higher-order systems run on flat-static");

  v.erase("output.dir");
  c.resolved = v;
  return c;
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// JSON numbers: non-finite values become null
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
      out += "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

struct Outcome {
  bool pass = false;
  std::string summary;
  std::string worst;
  json report = json::object();
  Table table;
  std::vector<std::pair<std::string, Plot>> plots;
};

const std::vector<std::string> kTraceColumns{"tau", "E",  "F",  "N",  "dN_numeric", "sandwich_lower", "sandwich_upper",
                                             "I1",  "I2", "Ic", "res_l2ev",  "res_h1arr1", "res_h1ev"};

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

std::vector<std::string> trace_cells(const TraceRow& row) {
  const EnergyReport& r = row.report;
  return {format_number(r.tau), format_number(r.E),          format_number(r.F),
          opt(r.N),             opt(row.dN),                 opt(row.sandwich_lower),
          opt(row.sandwich_upper), format_number(r.I1),      format_number(r.I2),
          format_number(r.Ic),  format_number(row.res_l2ev), format_number(row.res_h1arr1),
          format_number(row.res_h1ev)};
}

Table trace_table(const FrequencyTrace& tr) {
  Table t;
  t.header = kTraceColumns;
  for (const auto& row : tr.rows) t.rows.push_back(trace_cells(row));
  return t;
}

std::vector<std::pair<std::string, Plot>> trace_plots(const FrequencyTrace& tr, const std::string& label) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Series E{label, {}, {}}, logE{label, {}, {}}, N{label, {}, {}}, dN{"dN/dtau (sampled)", {}, {}};
  Band band{"sandwich bounds", {}, {}, {}};
  for (const auto& row : tr.rows) {
    const double t = row.report.tau;
    E.x.push_back(t);
    E.y.push_back(row.report.E);
    logE.x.push_back(t);
    logE.y.push_back(row.report.E > 0.0 ? std::log(row.report.E) : nan);
    N.x.push_back(t);
    N.y.push_back(row.report.N.value_or(nan));
    dN.x.push_back(t);
    dN.y.push_back(row.quality == StencilQuality::full ? row.dN.value_or(nan) : nan);
    band.x.push_back(t);
    band.lower.push_back(row.sandwich_lower.value_or(nan));
    band.upper.push_back(row.sandwich_upper.value_or(nan));
  }
  return {{"energy.svg", Plot{"energy", "tau", "E", {E}, std::nullopt}},
          {"log_energy.svg", Plot{"log energy", "tau", "log E", {logE}, std::nullopt}},
          {"frequency.svg", Plot{"frequency", "tau", "N", {N}, std::nullopt}},
          {"sandwich.svg", Plot{"frequency derivative and sandwich", "tau", "dN/dtau", {dN}, band}}};
}

json meta_json(const StepperMeta& m) {
  return {{"method", m.method},
          {"dtau", num(m.dtau)},
          {"band", m.band},
          {"explicit_rate", num(m.explicit_rate)},
          {"tail_fraction", num(m.tail_fraction)}};
}

json summary_json(const FrequencyTrace& tr) {
  const auto s = tr.summarize();
  return {{"budget", num(tr.budget)},
          {"amplification", num(tr.amplification)},
          {"max_res_l2ev", num(s.max_res_l2ev)},
          {"max_res_l2ev_forms", num(s.max_res_l2ev_forms)},
          {"max_res_h1arr1", num(s.max_res_h1arr1)},
          {"max_res_h1ev", num(s.max_res_h1ev)},
          {"min_lower_margin", num(s.min_lower_margin)},
          {"min_upper_margin", num(s.min_upper_margin)},
          {"checked_rows", s.checked_rows},
          {"sandwich_ok", s.sandwich_ok}};
}

json bound_json(const FrequencyBound& fb) {
  json j = {{"trivially_zero", fb.trivially_zero}, {"C", num(fb.C)},           {"N_omega", num(fb.N_omega)},
            {"N0", num(fb.N0)},                    {"max_N", num(fb.max_N)},   {"worst_index", fb.worst_index},
            {"certificate", fb.certificate}};
  j["split_index"] = fb.split_index ? json(*fb.split_index) : json(nullptr);
  return j;
}

json logconvexity_json(const LogConvexity& lc) {
  return {{"trivially_zero", lc.trivially_zero},
          {"C_growth", num(lc.C_growth)},
          {"min_second_difference", num(lc.min_second_difference)},
          {"worst_excess", num(lc.worst_excess)},
          {"worst_pair", {lc.worst_i, lc.worst_j}},
          {"certificate", lc.certificate}};
}

std::string at_sample(const FrequencyTrace& tr, std::size_t i) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "sample %zu (tau = %.17g)", i, tr.rows.at(i).report.tau);
  return buf;
}

TorusGrid make_grid(const ExperimentConfig& c) { return TorusGrid::make(c.dim, c.n, c.length); }

Geometry make_geometry(const ExperimentConfig& c, const TorusGrid& grid) {
  PresetOptions opts;
  opts.amplitude = c.amplitude;
  opts.twist = c.twist;
  opts.tau_max = std::max(opts.tau_max, c.omega);
  Geometry geo = build_preset(c.preset, grid, opts);
  if (c.fiber_m != 0 && c.fiber_m != geo.fiber_dim())
    throw ConfigError("config key 'fiber.m': preset '" + c.preset + "' has fiber dimension " +
                      std::to_string(geo.fiber_dim()) + ", got " + std::to_string(c.fiber_m));
  return geo;
}

int effective_band(const ExperimentConfig& c) { return c.band > 0 ? c.band : c.n / 4; }

// sum of a few low modes with seeded amplitudes and phases
Section initial_data(const TorusGrid& grid, int m, int band, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(0.5, 1.0), phase(0.0, 2.0 * kPi);
  std::vector<std::array<int, 2>> modes;
  if (grid.dim == 1) {
    for (int j = 1; j <= 3; ++j) modes.push_back({j, 0});
  } else {
    modes = {{1, 0}, {0, 1}, {1, 1}, {2, -1}};
  }
  const double w = 2.0 * kPi / grid.length;
  Mat values = Mat::Zero(grid.size(), m);
  for (int c = 0; c < m; ++c) {
    double scale = 1.0;
    for (const auto& md : modes) {
      const double a = scale * amp(rng), ph = phase(rng);
      scale *= 0.5;
      if (std::abs(md[0]) >= band || std::abs(md[1]) >= band) continue;
      for (Index p = 0; p < grid.size(); ++p) {
        const Point x = grid.point(p);
        values(p, c) += a * std::sin(w * (md[0] * x[0] + md[1] * (grid.dim == 2 ? x[1] : 0.0)) + ph);
      }
    }
  }
  return Section::from(grid, values);
}

struct Setup {
  TorusGrid grid;
  Geometry geo;
  CoupledSystem sys;
  EvolveOptions opts;
  Section X0;
};

Setup make_setup(const ExperimentConfig& c, int order) {
  Setup s{make_grid(c), {}, {}, {}, {}};
  s.geo = make_geometry(c, s.grid);
  s.sys = make_system(c.coupling, c.C0, order);
  s.opts.omega = c.omega;
  s.opts.dt = c.dt;
  s.opts.record_every = c.samples;
  s.opts.band = effective_band(c);
  s.X0 = initial_data(s.grid, s.geo.fiber_dim(), s.opts.band, c.seed);
  return s;
}

Trajectory run_trajectory(const Setup& s, double scale = 1.0) {
  try {
    return evolve(s.sys, s.geo, scale * s.X0, Section::zero(s.grid, s.geo.fiber_dim()), s.opts);
  } catch (const StepperFailure& e) {
    throw ConfigError(std::string("config key 'time.dt': ") + e.what());
  }
}

Outcome identity_suite(const ExperimentConfig& c) {
  const Setup s = make_setup(c, c.order);
  const Trajectory traj = run_trajectory(s);
  const FrequencyTrace tr = frequency_trace(traj, c.tol_sandwich);
  const double tol = c.tol_identity > 0.0 ? c.tol_identity : tr.budget;
  Outcome o;
  double worst = -1.0;
  std::size_t worst_i = 0;
  for (std::size_t i = 0; i < tr.rows.size(); ++i) {
    const TraceRow& r = tr.rows[i];
    double m = std::max(r.res_l2ev_forms, r.res_h1arr1);
    if (r.quality == StencilQuality::full) m = std::max({m, r.res_l2ev, r.res_h1ev});
    if (m > worst) worst = m, worst_i = i;
  }
  o.pass = worst <= tol;
  o.report["trace"] = summary_json(tr);
  o.report["tolerance"] = num(tol);
  o.report["max_residual"] = num(worst);
  o.report["stepper"] = meta_json(traj.meta);
  char buf[160];
  std::snprintf(buf, sizeof buf, "max identity residual %.3g (tolerance %.3g) over %zu samples", worst, tol,
                tr.rows.size());
  o.summary = buf;
  if (!o.pass) o.worst = at_sample(tr, worst_i);
  o.table = trace_table(tr);
  o.plots = trace_plots(tr, c.preset);
  return o;
}

Outcome sandwich_suite(const ExperimentConfig& c) {
  const Setup s = make_setup(c, c.order);
  const Trajectory traj = run_trajectory(s);
  const FrequencyTrace tr = frequency_trace(traj, c.tol_sandwich);
  const auto sum = tr.summarize();
  bool ordered = true;
  for (const auto& r : tr.rows)
    if (r.sandwich_lower && r.sandwich_upper && *r.sandwich_lower > *r.sandwich_upper) ordered = false;
  Outcome o;
  o.pass = sum.sandwich_ok && ordered && sum.checked_rows > 0;
  o.report["trace"] = summary_json(tr);
  o.report["bounds_ordered"] = ordered;
  o.report["stepper"] = meta_json(traj.meta);
  char buf[200];
  std::snprintf(buf, sizeof buf, "sandwich margins lower %.3g upper %.3g over %zu full-stencil samples",
                sum.min_lower_margin, sum.min_upper_margin, sum.checked_rows);
  o.summary = buf;
  if (!o.pass) o.worst = at_sample(tr, sum.worst_row);
  o.table = trace_table(tr);
  o.plots = trace_plots(tr, c.preset);
  return o;
}

Outcome gronwall(const ExperimentConfig& c) {
  const Setup s = make_setup(c, c.order);
  Outcome o;
  UniquenessReport uq;
  try {
    uq = backward_uniqueness_experiment(s.sys, s.geo, s.X0, c.epsilon_list, s.opts);
  } catch (const StepperFailure& e) {
    throw ConfigError(std::string("config key 'time.dt': ") + e.what());
  } catch (const Refused& e) {
    o.pass = false;
    o.summary = e.what();
    o.worst = "structural audit";
    o.report["refused"] = e.what();
    return o;
  }
  const Trajectory traj = run_trajectory(s, c.epsilon_list.front());
  const FrequencyTrace tr = frequency_trace(traj, c.tol_sandwich);
  const FrequencyBound fb = frequency_bound_experiment(tr);
  const LogConvexity lc = logconvexity_certificate(tr, fb);
  o.pass = uq.pass && fb.certificate && lc.certificate;
  o.report["audit"] = {{"max_ratio", num(uq.audit.max_ratio)}, {"C0", num(uq.audit.bound)}, {"pass", uq.audit.pass}};
  o.report["frequency_bound"] = bound_json(fb);
  o.report["logconvexity"] = logconvexity_json(lc);
  o.report["zero_data"] = {{"max_E", num(uq.zero_data_max_E)}, {"ok", uq.zero_data_ok}};
  json sweep = json::array();
  for (const auto& e : uq.sweep)
    sweep.push_back({{"epsilon", num(e.epsilon)},
                     {"E0", num(e.E0)},
                     {"E_omega", num(e.E_omega)},
                     {"ratio", num(e.ratio)},
                     {"K", num(e.K)},
                     {"bound_ok", e.bound_ok}});
  o.report["sweep"] = sweep;
  o.report["ratio_spread"] = num(uq.ratio_spread);
  o.report["trace"] = summary_json(tr);
  o.report["stepper"] = meta_json(traj.meta);
  if (uq.trivially_zero && fb.trivially_zero) {
    o.report["status"] = "trivially zero";
    o.summary = "trivially zero: energy vanishes on the whole interval";
  } else {
    char buf[200];
    std::snprintf(buf, sizeof buf, "N0 = %.6g (C = %.3g), C_growth = %.4g, ratio spread %.3g", fb.N0, fb.C, lc.C_growth,
                  uq.ratio_spread);
    o.summary = buf;
    o.report["status"] = o.pass ? "certified" : "failed";
  }
  if (!o.pass) {
    if (fb.split_index)
      o.worst = "energy reaches the threshold at " + at_sample(tr, *fb.split_index);
    else if (!fb.certificate)
      o.worst = at_sample(tr, fb.worst_index);
    else if (!lc.certificate)
      o.worst = "pair " + at_sample(tr, lc.worst_i) + " / " + at_sample(tr, lc.worst_j);
    else
      o.worst = "epsilon sweep";
  }
  o.table = trace_table(tr);
  o.plots = trace_plots(tr, c.preset);
  return o;
}

Outcome cutoff_limit(const ExperimentConfig& c) {
  const TorusGrid grid = make_grid(c);
  const double center = 0.5 * c.length;
  const long steps = std::lround(c.omega / c.dt);
  const Trajectory traj = heat_kernel_trajectory(grid, center, 1.0, c.omega, int(steps) + 1);
  const WeightProfile prof = build_rho(grid, center, c.Bw);
  Outcome o;
  CutoffReport rep;
  try {
    rep = cutoff_limit_experiment(traj, prof, c.R_list, c.smoothness);
  } catch (const Refused& e) {
    o.pass = false;
    o.summary = e.what();
    o.worst = "support check";
    o.report["refused"] = e.what();
    return o;
  }
  const FrequencyTrace tr = frequency_trace(traj, c.tol_sandwich);
  o.pass = rep.pass;
  json rows = json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"R", num(r.R)},
                    {"correction", num(r.correction)},
                    {"P", num(r.P)},
                    {"lhs", num(r.lhs)},
                    {"rhs", num(r.rhs)},
                    {"max_dev", num(r.max_dev)},
                    {"C3", num(r.C3)},
                    {"bound_ok", r.bound_ok}});
  o.report["rows"] = rows;
  o.report["N0"] = num(rep.N0);
  o.report["C_growth"] = num(rep.C_growth);
  o.report["weight"] = {{"Bw", num(c.Bw)}, {"L1", num(c.L1)}, {"V0", num(c.V0)}, {"C1", num(prof.C1)}, {"C2", num(prof.C2)}};
  o.report["monotone_ok"] = rep.monotone_ok;
  o.report["decay_ok"] = rep.decay_ok;
  o.report["c3_ok"] = rep.c3_ok;
  o.report["trace"] = summary_json(tr);
  if (rep.trivially_zero) o.report["status"] = "trivially zero";
  char buf[200];
  std::snprintf(buf, sizeof buf, "corrections %.3g .. %.3g over R = %g .. %g, N0 = %.6g",
                rep.rows.front().correction, rep.rows.back().correction, rep.rows.front().R, rep.rows.back().R, rep.N0);
  o.summary = buf;
  if (!o.pass) {
    if (!rep.monotone_ok) o.worst = "N_R deviations are not decreasing in R";
    else if (!rep.decay_ok) o.worst = "correction term decays slower than e^{-2 Bw dR}";
    else if (!rep.c3_ok) o.worst = "cutoff derivative bound grows with R";
    else o.worst = "localized Gronwall bound";
  }
  o.table.header = kTraceColumns;
  for (const char* col : {"R", "E_R", "F_R", "N_R", "Q_R", "correction"}) o.table.header.push_back(col);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<Series> er, nr;
  for (const auto& r : rep.rows) {
    char label[32];
    std::snprintf(label, sizeof label, "R = %g", r.R);
    Series se{label, rep.tau, {}}, sn{label, rep.tau, {}};
    for (std::size_t i = 0; i < rep.tau.size(); ++i) {
      std::vector<std::string> cells = trace_cells(tr.rows[i]);
      for (double v : {r.R, r.E[i], r.F[i], r.N[i], r.Q[i], std::exp(-2.0 * c.Bw * r.R) * r.Q[i]})
        cells.push_back(format_number(v));
      o.table.rows.push_back(cells);
      se.y.push_back(r.E[i] > 0.0 ? std::log(r.E[i]) : nan);
      sn.y.push_back(r.N[i]);
    }
    er.push_back(se);
    nr.push_back(sn);
  }
  o.plots = trace_plots(tr, "heat kernel");
  o.plots.push_back({"localized_log_energy.svg", Plot{"localized log energy", "tau", "log E_R", er, std::nullopt}});
  o.plots.push_back({"localized_frequency.svg", Plot{"localized frequency", "tau", "N_R", nr, std::nullopt}});
  return o;
}

Outcome prolong_ricci(const ExperimentConfig& c) {
  const TorusGrid grid = make_grid(c);
  const double w = 2.0 * kPi / c.length, a = c.amplitude;
  const Vec u0 = sample(grid, [&](const Point& x) {
    return a * (std::sin(w * x[0]) + 0.5 * std::cos(w * x[1]) + 0.3 * std::sin(w * (x[0] + x[1])));
  });
  const Vec v = sample(grid, [&](const Point& x) { return std::cos(w * (x[0] - x[1])) + 0.5 * std::sin(2.0 * w * x[1]); });
  ConformalFlowState ref;
  try {
    ref = solve_conformal_ricci(grid, u0, c.omega, c.dt, c.samples);
  } catch (const StepperFailure& e) {
    throw ConfigError(std::string("config key 'time.dt': ") + e.what());
  }
  Outcome o;
  const ProlongAudit zero = prolongation_audit(ref, ref, 0.0);
  std::vector<ProlongAudit> audits;
  std::vector<double> gaps;
  try {
    audits = parallel_map<ProlongAudit>(c.epsilon_list.size(), [&](std::size_t i) {
      const ConformalFlowState other = solve_conformal_ricci(grid, u0 + c.epsilon_list[i] * v, c.omega, c.dt, c.samples);
      return prolongation_audit(ref, other, c.epsilon_list[i]);
    });
    gaps = parallel_map<double>(c.epsilon_list.size(), [&](std::size_t i) {
      const ConformalFlowState other = solve_conformal_ricci(grid, u0 + c.epsilon_list[i] * v, c.omega, c.dt, c.samples);
      const std::size_t mid = ref.size() / 2;
      const Tensor3 direct = build_prolonged(ref, other, mid).Y1;
      const Tensor3 second = y1_from_metric_difference(ref, other, mid);
      // round-off is relative to the Christoffel symbols themselves, not their difference
      const Tensor3 gamma = christoffel_field(grid, ref.u[mid]);
      double gap = 0.0, size = 0.0;
      for (int k = 0; k < 8; ++k) {
        gap = std::max(gap, (direct[k] - second[k]).cwiseAbs().maxCoeff());
        size = std::max(size, gamma[k].cwiseAbs().maxCoeff());
      }
      return size > 0.0 ? gap / size : gap;
    });
  } catch (const StepperFailure& e) {
    throw ConfigError(std::string("config key 'time.dt': ") + e.what());
  } catch (const Refused& e) {
    o.pass = false;
    o.summary = e.what();
    o.worst = "time sampling";
    o.report["refused"] = e.what();
    return o;
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0, max_gap = 0.0;
  bool finite = true;
  json list = json::array();
  o.table.header = {"epsilon", "C_pde", "C_ode", "C0_empirical", "worst_x", "worst_y", "worst_time", "time_mismatch",
                    "y1_route_gap"};
  Series cs{"C0 empirical", {}, {}};
  for (std::size_t i = 0; i < audits.size(); ++i) {
    const ProlongAudit& p = audits[i];
    finite = finite && std::isfinite(p.C0_empirical);
    if (p.epsilon > 0.0) {
      lo = std::min(lo, p.C0_empirical);
      hi = std::max(hi, p.C0_empirical);
      max_gap = std::max(max_gap, gaps[i]);
      cs.x.push_back(std::log10(p.epsilon));
      cs.y.push_back(p.C0_empirical);
    }
    list.push_back({{"epsilon", num(p.epsilon)},
                    {"C0_empirical", num(p.C0_empirical)},
                    {"C_pde", num(p.C_pde)},
                    {"C_ode", num(p.C_ode)},
                    {"worst_point", {num(p.worst_point[0]), num(p.worst_point[1])}},
                    {"worst_time", num(p.worst_time)},
                    {"time_mismatch", num(p.time_mismatch)},
                    {"y1_route_gap", num(gaps[i])}});
    o.table.rows.push_back({format_number(p.epsilon), format_number(p.C_pde), format_number(p.C_ode),
                            format_number(p.C0_empirical), format_number(p.worst_point[0]),
                            format_number(p.worst_point[1]), format_number(p.worst_time),
                            format_number(p.time_mismatch), format_number(gaps[i])});
  }
  const double spread = hi > 0.0 ? hi / lo - 1.0 : 0.0;
  o.pass = finite && zero.C0_empirical == 0.0 && spread <= 0.1 && max_gap <= 1e-10;
  o.report["audits"] = list;
  o.report["identical_pair_C0"] = num(zero.C0_empirical);
  o.report["C0_spread"] = num(spread);
  o.report["max_y1_route_gap"] = num(max_gap);
  o.report["flow"] = {{"dt", num(ref.dt)}, {"cfl", num(ref.cfl)}, {"samples", ref.size()}};
  char buf[200];
  std::snprintf(buf, sizeof buf, "C0 empirical in [%.5g, %.5g] (spread %.3g), identical pair C0 = %.3g", lo, hi, spread,
                zero.C0_empirical);
  o.summary = buf;
  if (!o.pass) {
    if (zero.C0_empirical != 0.0) o.worst = "identical-pair audit";
    else if (max_gap > 1e-10) o.worst = "Y1 route comparison";
    else o.worst = "C0 spread across epsilon";
  }
  o.plots.push_back({"c0_epsilon.svg", Plot{"empirical structural constant", "log10 epsilon", "C0", {cs}, std::nullopt}});
  return o;
}

Table order_table(const FrequencyTrace& tr, int order) {
  Table t = trace_table(tr);
  t.header.push_back("order");
  for (auto& r : t.rows) r.push_back(std::to_string(order));
  return t;
}

json higher_json(const HigherOrderReport& h) {
  return {{"trace", summary_json(h.trace)},
          {"C_sandwich", num(h.C_sandwich)},
          {"sandwich_ok", h.sandwich_ok},
          {"frequency_bound", bound_json(h.bound)},
          {"logconvexity", logconvexity_json(h.logconvexity)},
          {"pass", h.pass}};
}

std::string higher_worst(const HigherOrderReport& h) {
  if (!h.sandwich_ok) return at_sample(h.trace, h.trace.summarize().worst_row);
  if (!h.bound.certificate) return at_sample(h.trace, h.bound.worst_index);
  return "pair " + at_sample(h.trace, h.logconvexity.worst_i) + " / " + at_sample(h.trace, h.logconvexity.worst_j);
}

Outcome fourth_order(const ExperimentConfig& c) {
  const Setup s = make_setup(c, 4);
  const AuditReport audit = structural_audit(s.sys, s.geo);
  Outcome o;
  o.report["audit"] = {{"max_ratio", num(audit.max_ratio)}, {"C0", num(audit.bound)}, {"pass", audit.pass}};
  if (!audit.pass) {
    o.summary = "structural audit failed";
    o.worst = "structural audit";
    return o;
  }
  const Trajectory traj = run_trajectory(s);
  const HigherOrderReport h = fourth_order_frequency_trace(traj);
  o.pass = h.pass;
  o.report["result"] = higher_json(h);
  o.report["stepper"] = meta_json(traj.meta);
  char buf[200];
  std::snprintf(buf, sizeof buf, "N0 = %.6g, C_sandwich = %.3g, C_growth = %.4g", h.bound.N0, h.C_sandwich,
                h.logconvexity.C_growth);
  o.summary = buf;
  if (!o.pass) o.worst = higher_worst(h);
  o.table = order_table(h.trace, 4);
  o.plots = trace_plots(h.trace, "order 4");
  return o;
}

Outcome kcf(const ExperimentConfig& c) {
  Outcome o;
  o.pass = true;
  o.table.header = kTraceColumns;
  o.table.header.push_back("order");
  json runs = json::array();
  std::vector<Series> logE;
  std::string summary;
  for (int k = 1; k <= 3; ++k) {
    const int order = 2 * k + 2;
    const Setup s = make_setup(c, order);
    const AuditReport audit = structural_audit(s.sys, s.geo);
    const Trajectory traj = run_trajectory(s);
    const HigherOrderReport h = higher_order_frequency_trace(traj);
    // multiplier law on a single mode
    const double w = 2.0 * kPi / c.length;
    const Section mode = Section::scalar(s.grid, sample(s.grid, [&](const Point& x) { return std::sin(2.0 * w * x[0]); }));
    const OrderFunctionals f = order_functionals(mode, Section::zero(s.grid, 1), k);
    const double expect = std::pow(2.0 * w, 2 * k + 2);
    const double law = f.N ? std::abs(*f.N - expect) / expect : std::numeric_limits<double>::infinity();
    const bool ok = h.pass && audit.pass && law <= 1e-10;
    o.pass = o.pass && ok;
    runs.push_back({{"k", k},
                    {"order", order},
                    {"audit", {{"max_ratio", num(audit.max_ratio)}, {"C0", num(audit.bound)}, {"pass", audit.pass}}},
                    {"multiplier_law_error", num(law)},
                    {"result", higher_json(h)},
                    {"stepper", meta_json(traj.meta)}});
    const Table t = order_table(h.trace, order);
    o.table.rows.insert(o.table.rows.end(), t.rows.begin(), t.rows.end());
    Series se{"order " + std::to_string(order), {}, {}};
    for (const auto& row : h.trace.rows) {
      se.x.push_back(row.report.tau);
      se.y.push_back(row.report.E > 0.0 ? std::log(row.report.E) : std::numeric_limits<double>::quiet_NaN());
    }
    logE.push_back(se);
    char buf[120];
    std::snprintf(buf, sizeof buf, "%sorder %d: N0 = %.6g", summary.empty() ? "" : "; ", order, h.bound.N0);
    summary += buf;
    if (!ok && o.worst.empty())
      o.worst = "order " + std::to_string(order) + ": " + (law > 1e-10 ? "multiplier law" : higher_worst(h));
  }
  o.report["runs"] = runs;
  o.summary = summary;
  o.plots.push_back({"log_energy.svg", Plot{"log energy by order", "tau", "log E", logE, std::nullopt}});
  return o;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("config key 'output.dir': cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("config key 'output.dir': write failed for '" + path.string() + "'");
}

}  // namespace

RunResult run(const ExperimentConfig& cfg) {
  Outcome o;
  const std::string& e = cfg.experiment;
  if (e == "identity-suite") o = identity_suite(cfg);
  else if (e == "sandwich-suite") o = sandwich_suite(cfg);
  else if (e == "gronwall") o = gronwall(cfg);
  else if (e == "cutoff-limit") o = cutoff_limit(cfg);
  else if (e == "prolong-ricci") o = prolong_ricci(cfg);
  else if (e == "fourth-order") o = fourth_order(cfg);
  else if (e == "kcf") o = kcf(cfg);
  else throw ConfigError("unknown experiment '" + e + "'");

  RunResult r;
  r.pass = o.pass;
  r.exit_code = o.pass ? 0 : 1;
  r.summary = o.summary;
  r.worst = o.worst;
  json report = o.report;
  report["experiment"] = e;
  report["pass"] = o.pass;
  report["summary"] = o.summary;
  if (!o.pass) report["worst"] = o.worst;
  report["config"] = cfg.resolved;
  r.report = report;

  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw ConfigError("config key 'output.dir': cannot create '" + cfg.output_dir + "': " + ec.message());
  const std::filesystem::path dir(cfg.output_dir);
  auto wants = [&](const char* f) { return std::find(cfg.formats.begin(), cfg.formats.end(), f) != cfg.formats.end(); };
  if (wants("csv") && !o.table.header.empty()) {
    write_text(dir / "trace.csv", o.table.csv());
    r.files.push_back((dir / "trace.csv").string());
  }
  if (wants("json")) {
    write_text(dir / "report.json", report.dump(2) + "\n");
    r.files.push_back((dir / "report.json").string());
  }
  if (wants("svg"))
    for (const auto& [name, plot] : o.plots) {
      write_text(dir / name, render_svg(plot));
      r.files.push_back((dir / name).string());
    }
  return r;
}

}  // namespace logcvx
