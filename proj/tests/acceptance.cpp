// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "logcvx/harness.hpp"
#include "logcvx/higher_order.hpp"
#include "logcvx/localization.hpp"
#include "logcvx/prolongation.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

using namespace logcvx;
using oracle::rel;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

EvolveOptions options(double omega, double dt) {
  EvolveOptions o;
  o.omega = omega;
  o.dt = dt;
  return o;
}

Section mode(const TorusGrid& g, double k) {
  return Section::scalar(g, sample(g, [&](const Point& p) { return std::sin(k * p.x()); }));
}

// preset trajectories shipped with the harness: every preset in 1D and 2D
struct PresetRun {
  std::string label;
  Trajectory traj;
};

std::vector<PresetRun> preset_runs(double C0) {
  std::vector<PresetRun> out;
  for (const auto& name : preset_names())
    for (int dim : {1, 2}) {
      const TorusGrid g = TorusGrid::make(dim, dim == 1 ? 32 : 16);
      const Geometry geo = build_preset(name, g);
      const bool slow = name == "anisotropic-lambda";
      const Section X0 = random_band_limited(g, geo.fiber_dim(), 4, 1 + dim);
      out.push_back({name + "/" + std::to_string(dim) + "d",
                     evolve(make_system("standard", C0), geo, X0, Section::zero(g, geo.fiber_dim()),
                            options(slow ? 0.05 : 0.1, slow ? 5e-4 : 1e-3))});
    }
  return out;
}

Verdict ibp() {
  Verdict v;
  oracle::FieldGen gen(1);
  double worst = 0.0;
  for (int dim : {1, 2})
    for (int m : {1, 2}) {
      const TorusGrid g = TorusGrid::make(dim, 64);
      const Geometry geo = flat_geometry(g, m);
      for (int trial = 0; trial < 5; ++trial)
        worst = std::max(worst, ibp_residual(Section::from(g, gen.fields(g, m, dim == 1 ? 16 : 8)), geo.at(0)));
    }
  v.require(worst <= 1e-10, fmt("flat residual %.3g > 1e-10", worst));
  double min_factor = 1e300;
  for (int dim : {1, 2}) {
    double r[2];
    for (int i = 0; i < 2; ++i) {
      const TorusGrid g = TorusGrid::make(dim, i == 0 ? 32 : 64);
      const Section X = Section::scalar(g, sample(g, [&](const Point& p) {
        return 1.0 / (1.2 - std::cos(p.x() + (dim == 2 ? 0.5 * std::sin(p.y()) : 0.0)));
      }));
      r[i] = ibp_residual(X, build_preset("anisotropic-lambda", g).at(0));
    }
    min_factor = std::min(min_factor, r[0] / std::max(r[1], 1e-300));
  }
  v.require(min_factor >= 1e3, fmt("refinement factor %.3g < 1e3", min_factor));
  v.detail = v.pass ? fmt("flat max %.2e; variable-Lambda 32->64 factor >= %.2e", worst, min_factor) : v.detail;
  return v;
}

Verdict identities() {
  Verdict v;
  const double dt = 1e-3;
  double worst = 0.0, worst_forms = 0.0, tol_used = 0.0;
  for (int k : {1, 2, 3}) {
    const TorusGrid g = TorusGrid::make(1, 32);
    const Trajectory t = oracle::exact_modes(g, {{k, 1.0}}, 0.05, 51);
    const FrequencyTrace tr = frequency_trace(t);
    const double tol = std::max(1e-6, 10.0 * std::pow(dt, 4) * tr.amplification);
    tol_used = std::max(tol_used, tol);
    const auto s = tr.summarize();
    const double m = std::max({s.max_res_l2ev, s.max_res_h1arr1, s.max_res_h1ev});
    worst = std::max(worst, m);
    worst_forms = std::max(worst_forms, s.max_res_l2ev_forms);
    v.require(m <= tol, fmt("mode %g: residual %.3g > %.3g", k, m, tol));
    v.require(s.max_res_l2ev_forms <= 1e-12, fmt("mode %g: l2ev forms differ by %.3g", k, s.max_res_l2ev_forms));
  }
  if (v.pass) v.detail = fmt("max residual %.2e (tol %.1e); forms %.2e", worst, tol_used, worst_forms);
  return v;
}

Verdict sandwich(const std::vector<PresetRun>& runs) {
  Verdict v;
  double margin = 1e300;
  for (const auto& r : runs) {
    const FrequencyTrace tr = frequency_trace(r.traj);
    const auto s = tr.summarize();
    margin = std::min({margin, s.min_lower_margin, s.min_upper_margin});
    v.require(s.sandwich_ok && s.checked_rows > 0, r.label + ": dN/dtau outside the sandwich");
  }
  if (v.pass) v.detail = std::to_string(runs.size()) + " preset trajectories, min margin " + fmt("%.3g", margin);
  return v;
}

Verdict two_mode() {
  Verdict v;
  const TorusGrid g = TorusGrid::make(1, 32);
  const std::vector<oracle::Mode> modes{{1, 1.0}, {2, 1.0}};
  const Trajectory t = evolve(make_system("none", 0.0), flat_geometry(g), mode(g, 1) + mode(g, 2), Section::zero(g, 1),
                              options(0.1, 1e-3));
  const FrequencyTrace tr = frequency_trace(t);
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.rows.size(); ++i) {
    const double N = *tr.rows[i].report.N;
    worst = std::max(worst, rel(N, oracle::modes_frequency(modes, tr.rows[i].report.tau)));
    if (i > 0) v.require(N >= *tr.rows[i - 1].report.N, "N decreases at sample " + std::to_string(i));
  }
  v.require(worst <= 1e-6, fmt("relative error %.3g > 1e-6", worst));
  if (v.pass) v.detail = fmt("max relative error %.2e over %g samples, monotone", worst, double(tr.rows.size()));
  return v;
}

Verdict gronwall() {
  Verdict v;
  int certified = 0;
  for (double C0 : {0.1, 0.3, 0.5})
    for (const auto& r : preset_runs(C0)) {
      const FrequencyTrace tr = frequency_trace(r.traj);
      const FrequencyBound fb = frequency_bound_experiment(tr);
      const LogConvexity lc = logconvexity_certificate(tr, fb);
      v.require(fb.certificate && lc.certificate, r.label + fmt(" C0 %.1f: certificate fails", C0));
      certified += fb.certificate && lc.certificate;
    }
  const TorusGrid g = TorusGrid::make(1, 32);
  const Trajectory t = evolve(make_system("none", 0.0), flat_geometry(g), mode(g, 1) + mode(g, 2), Section::zero(g, 1),
                              options(0.1, 1e-3));
  const FrequencyTrace tr = frequency_trace(t);
  const LogConvexity lc = logconvexity_certificate(tr, frequency_bound_experiment(tr));
  v.require(lc.min_second_difference >= -1e-8, fmt("two-mode second difference %.3g", lc.min_second_difference));
  if (v.pass)
    v.detail = std::to_string(certified) + " preset systems certified; two-mode min second difference " +
               fmt("%.3g", lc.min_second_difference);
  return v;
}

Verdict uniqueness() {
  Verdict v;
  double maxE = 0.0, spread = 0.0;
  for (const auto& name : preset_names()) {
    const TorusGrid g = TorusGrid::make(1, 32);
    const Geometry geo = build_preset(name, g);
    const bool slow = name == "anisotropic-lambda";
    const Section base = random_band_limited(g, geo.fiber_dim(), 4, 5);
    for (const char* coupling : {"none", "standard"}) {
      const UniquenessReport r = backward_uniqueness_experiment(make_system(coupling, 0.3), geo, base, {1e-2, 1e-4, 1e-6},
                                                                options(slow ? 0.05 : 0.1, slow ? 5e-4 : 1e-3));
      maxE = std::max(maxE, r.zero_data_max_E);
      spread = std::max(spread, r.ratio_spread);
      v.require(r.zero_data_max_E <= 1e-25, name + ": zero data grows");
      v.require(r.ratio_spread <= 0.01, name + fmt(": ratio spread %.3g", r.ratio_spread));
    }
  }
  {
    const TorusGrid g = TorusGrid::make(1, 16);
    EvolveOptions o = options(0.1, 1e-3);
    o.band = 4;
    const UniquenessReport r = backward_uniqueness_experiment(make_system("fourth-standard", 0.3, 4), flat_geometry(g),
                                                              random_band_limited(g, 1, 4, 5), {1e-2, 1e-4, 1e-6}, o);
    maxE = std::max(maxE, r.zero_data_max_E);
    spread = std::max(spread, r.ratio_spread);
    v.require(r.zero_data_max_E <= 1e-25 && r.ratio_spread <= 0.01, "fourth-order system");
  }
  if (v.pass) v.detail = fmt("zero-data max E %.3g; max ratio spread %.2e", maxE, spread);
  return v;
}

Verdict cutoff() {
  Verdict v;
  const TorusGrid g = TorusGrid::make(1, 512, 128.0);
  const WeightProfile prof = build_rho(g, 64.0);
  const CutoffReport r = cutoff_limit_experiment(heat_kernel_trajectory(g, 64.0, 1.0, 0.5, 101), prof, {4, 8, 16});
  v.require(r.monotone_ok, "|N_R - N| not decreasing in R");
  v.require(r.decay_ok, "correction decays slower than the weight factor");
  for (const auto& row : r.rows) v.require(row.bound_ok, fmt("localized bound fails at R = %g", row.R));
  // compact bump inside B_4: localized and global weighted energies coincide
  Vec bump = Vec::Zero(g.size());
  for (Index q = 0; q < g.size(); ++q)
    if (prof.r[q] < 3.0) bump[q] = std::exp(-1.0 / (1.0 - prof.r[q] * prof.r[q] / 9.0));
  Trajectory t;
  t.geometry = flat_geometry(g);
  for (int i = 0; i < 9; ++i) {
    TrajectorySample s;
    s.tau = 0.01 * i;
    s.X = Section::scalar(g, bump);
    s.dX = s.Y = s.dY = Section::zero(g, 1);
    t.samples.push_back(s);
  }
  const CutoffReport c = cutoff_limit_experiment(t, prof, {4, 8, 16});
  const auto global = weighted_localize(t.samples[0].X, t.samples[0].Y, prof);
  const double Eg = energy(global.first, global.second, t.geometry.at(0)).E;
  double gap = 0.0;
  for (const auto& row : c.rows) gap = std::max(gap, rel(row.E[0], Eg));
  v.require(gap <= 1e-14, fmt("localized vs global energy gap %.3g", gap));
  if (v.pass)
    v.detail = fmt("corrections %.3g, %.3g, %.3g", r.rows[0].correction, r.rows[1].correction, r.rows[2].correction) +
               fmt("; compact-support gap %.1e", gap);
  return v;
}

Verdict prolongation() {
  Verdict v;
  const TorusGrid g = TorusGrid::make(2, 32);
  const Vec u = sample(g, [](const Point& p) {
    return 0.1 * (std::sin(p.x()) + 0.5 * std::cos(p.y()) + 0.3 * std::sin(p.x() + p.y()));
  });
  const Vec w = sample(g, [](const Point& p) { return std::cos(p.x() - p.y()) + 0.5 * std::sin(2 * p.y()); });
  const ConformalFlowState a = solve_conformal_ricci(g, u, 0.05, 1e-3, 5);
  const ConformalFlowState same = solve_conformal_ricci(g, u, 0.05, 1e-3, 5);
  double zero = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const ProlongedSections s = build_prolonged(a, same, i);
    zero = std::max(zero, s.X0.cwiseAbs().maxCoeff());
    for (const Vec& c : s.X1) zero = std::max(zero, c.cwiseAbs().maxCoeff());
    for (const Vec& c : s.Y0) zero = std::max(zero, c.cwiseAbs().maxCoeff());
    for (const Vec& c : s.Y1) zero = std::max(zero, c.cwiseAbs().maxCoeff());
    for (const Vec& c : s.Y2) zero = std::max(zero, c.cwiseAbs().maxCoeff());
  }
  v.require(zero == 0.0, fmt("identical solutions give %.3g", zero));
  std::vector<double> c0;
  for (double eps : {1e-3, 1e-4}) {
    const ProlongAudit au = prolongation_audit(a, solve_conformal_ricci(g, u + eps * w, 0.05, 1e-3, 5), eps);
    v.require(std::isfinite(au.C0_empirical) && au.C0_empirical > 0.0, "non-finite structural constant");
    c0.push_back(au.C0_empirical);
  }
  const double spread = std::max(c0[0], c0[1]) / std::min(c0[0], c0[1]) - 1.0;
  v.require(spread <= 0.1, fmt("C0 spread %.3g > 10%%", spread));
  if (v.pass) v.detail = fmt("C0 = %.5g / %.5g (spread %.2e)", c0[0], c0[1], spread);
  return v;
}

Verdict fourth_order() {
  Verdict v;
  oracle::FieldGen gen(77);
  double garding = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const TorusGrid g = TorusGrid::make(trial % 2 ? 2 : 1, trial % 2 ? 16 : 64);
    const GaardingResult r = gaarding_check(Section::from(g, gen.fields(g, 1, g.dim == 1 ? 16 : 6)), flat_geometry(g), 0.1);
    garding = std::max(garding, rel(r.lap2, r.hess2));
  }
  v.require(garding <= 1e-10, fmt("flat Gaarding gap %.3g", garding));
  int interp = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const TorusGrid g = TorusGrid::make(1, 32);
    const Section X = Section::scalar(g, gen.field(g, gen.integer(1, 16)));
    for (int k = 1; k <= 3; ++k)
      for (int l = 0; l < k; ++l)
        for (double eps : {1.0, 0.1, 0.01}) {
          const bool ok = interpolation_check(X, l, k, eps).pass;
          v.require(ok, "interpolation inequality fails");
          interp += ok;
        }
  }
  const TorusGrid g = TorusGrid::make(1, 16);
  double law = 0.0;
  for (int k = 1; k <= 3; ++k) {
    const int order = 2 * k + 2;
    EvolveOptions o = options(0.02, 1e-4);
    o.band = 3;
    for (int m : {1, 2}) {
      const Trajectory t = evolve(make_system("none", 0.0, order), flat_geometry(g), mode(g, m), Section::zero(g, 1), o);
      const HigherOrderReport h = higher_order_frequency_trace(t);
      for (const auto& row : h.trace.rows) law = std::max(law, rel(*row.report.N, std::pow(double(m), order)));
      v.require(h.pass, "order " + std::to_string(order) + " certificate fails");
    }
  }
  v.require(law <= 1e-8, fmt("single-mode frequency error %.3g", law));
  if (v.pass)
    v.detail = fmt("Gaarding gap %.1e; %g interpolation checks; multiplier law error %.1e", garding, interp, law);
  return v;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict reproducibility() {
  Verdict v;
  const auto root = std::filesystem::temp_directory_path() / "logcvx_acceptance";
  std::filesystem::remove_all(root);
  int compared = 0;
  for (const auto& e : list_experiments()) {
    std::array<std::filesystem::path, 2> dirs{root / (e.id + "_a"), root / (e.id + "_b")};
    for (const auto& d : dirs) {
      Config cfg;
      cfg.set("experiment", e.id);
      cfg.set("seed", "7");
      cfg.set("output.dir", d.string());
      run(resolve(cfg));
    }
    for (const char* f : {"trace.csv", "report.json"}) {
      const std::string a = slurp(dirs[0] / f), b = slurp(dirs[1] / f);
      v.require(!a.empty() && a == b, e.id + "/" + f + " differs");
      ++compared;
    }
  }
  std::filesystem::remove_all(root);
  if (v.pass) v.detail = std::to_string(compared) + " files byte-identical across two runs";
  return v;
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<PresetRun> runs = preset_runs(0.3);
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"1 discrete integration by parts", ibp},
      {"2 integral identity suite", identities},
      {"3 frequency sandwich on preset trajectories", [&] { return sandwich(runs); }},
      {"4 two-mode frequency oracle", two_mode},
      {"5 Gronwall / log-convexity certificate", gronwall},
      {"6 backward-uniqueness vanishing", uniqueness},
      {"7 noncompact cutoff limit", cutoff},
      {"8 prolongation audit", prolongation},
      {"9 fourth-order suite", fourth_order},
      {"10 reproducibility", reproducibility},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  criterion %s: %s (%.2fs)\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(), secs);
    failed += !v.pass;
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
