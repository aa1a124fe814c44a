#include "logcvx/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace logcvx {

double weight_rate(double L1, double V0) { return std::max(L1, V0); }

std::array<double, 5> smoothstep(double t, int smoothness) {
  std::array<double, 5> out{};
  if (smoothness != 2 && smoothness != 4) throw ConfigError("smoothstep smoothness must be 2 or 4");
  if (t <= 0.0) return out;
  if (t >= 1.0) {
    out[0] = 1.0;
    return out;
  }
  // coefficients of t^j
  std::vector<double> c = smoothness == 2 ? std::vector<double>{0, 0, 0, 10, -15, 6}
                                          : std::vector<double>{0, 0, 0, 0, 0, 126, -420, 540, -315, 70};
  for (int m = 0; m < 5; ++m) {
    double v = 0.0;
    for (int j = int(c.size()) - 1; j >= 0; --j) v = v * t + c[j];
    out[m] = v;
    for (std::size_t j = 1; j < c.size(); ++j) c[j - 1] = c[j] * double(j);
    c.pop_back();
  }
  return out;
}

namespace {

double displacement(const TorusGrid& grid, double x, double center) {
  const double L = grid.length;
  double s = std::fmod(x - center, L);
  if (s < -0.5 * L) s += L;
  if (s >= 0.5 * L) s -= L;
  return s;
}

void require_1d(const TorusGrid& grid, const char* what) {
  if (grid.dim != 1) throw DimensionError(std::string(what) + " works on one-dimensional grids");
}

}  // namespace

WeightProfile build_rho(const TorusGrid& grid, double center, double Bw) {
  require_1d(grid, "build_rho");
  if (!(Bw > 0.0)) throw ConfigError("weight.Bw must be positive");
  WeightProfile w;
  w.grid = grid;
  w.center = center;
  w.Bw = Bw;
  w.safe_radius = grid.length / 4.0;
  const Index n = grid.size();
  w.r.resize(n);
  for (Vec& v : w.rho) v.resize(n);
  for (Index p = 0; p < n; ++p) {
    const double s = displacement(grid, grid.point(p)[0], center);
    const double q = std::sqrt(1.0 + s * s);
    w.r[p] = std::abs(s);
    w.rho[0][p] = q;
    w.rho[1][p] = s / q;
    w.rho[2][p] = 1.0 / std::pow(q, 3);
    w.rho[3][p] = -3.0 * s / std::pow(q, 5);
    w.rho[4][p] = (12.0 * s * s - 3.0) / std::pow(q, 7);
    if (w.r[p] <= w.safe_radius)
      for (int m = 1; m <= 4; ++m) w.C2 = std::max(w.C2, std::abs(w.rho[m][p]));
  }
  return w;
}

WeightProfile build_cutoff(const WeightProfile& profile, double R, int smoothness) {
  if (!(R > 0.0)) throw ConfigError("cutoff radius must be positive");
  if (2.0 * R > profile.safe_radius)
    throw ConfigError("cutoff.R_list: 2R = " + std::to_string(2.0 * R) + " leaves the safe region r <= " +
                      std::to_string(profile.safe_radius) + " (enlarge grid.length)");
  WeightProfile w = profile;
  w.R = R;
  w.smoothness = smoothness;
  const double rhoR = std::sqrt(1.0 + R * R);
  const double span = std::sqrt(1.0 + 4.0 * R * R) - rhoR;
  const Index n = w.grid.size();
  for (Vec& v : w.phi) v.resize(n);
  w.C3 = 0.0;
  for (Index p = 0; p < n; ++p) {
    const double t = (w.rho[0][p] - rhoR) / span;
    const std::array<double, 5> S = smoothstep(t, smoothness);
    const double t1 = w.rho[1][p] / span, t2 = w.rho[2][p] / span, t3 = w.rho[3][p] / span,
                 t4 = w.rho[4][p] / span;
    // Faa di Bruno for S(t(x)), then phi = 1 - S
    const double d1 = S[1] * t1;
    const double d2 = S[2] * t1 * t1 + S[1] * t2;
    const double d3 = S[3] * t1 * t1 * t1 + 3.0 * S[2] * t1 * t2 + S[1] * t3;
    const double d4 = S[4] * std::pow(t1, 4) + 6.0 * S[3] * t1 * t1 * t2 + 3.0 * S[2] * t2 * t2 +
                      4.0 * S[2] * t1 * t3 + S[1] * t4;
    w.phi[0][p] = 1.0 - S[0];
    w.phi[1][p] = -d1;
    w.phi[2][p] = -d2;
    w.phi[3][p] = -d3;
    w.phi[4][p] = -d4;
    w.C3 = std::max(w.C3, std::abs(d1) + std::abs(d2));
  }
  return w;
}

std::pair<Section, Section> weighted_localize(const Section& X, const Section& Y, const WeightProfile& profile) {
  require_same_grid(X.grid, profile.grid, "weighted_localize");
  require_same_grid(Y.grid, profile.grid, "weighted_localize");
  if (X.rank != 0 || Y.rank != 0) throw UnsupportedRank("weighted_localize expects rank-0 sections");
  Vec factor = (-3.0 * profile.Bw * profile.rho[0].array()).exp().matrix();
  if (profile.has_cutoff()) factor = factor.cwiseProduct(profile.phi[0]);
  Section x = X, y = Y;
  x.value() = factor.asDiagonal() * X.value();
  y.value() = factor.asDiagonal() * Y.value();
  return {x, y};
}

Trajectory heat_kernel_trajectory(const TorusGrid& grid, double center, double T, double omega, int samples) {
  require_1d(grid, "heat_kernel_trajectory");
  if (!(omega > 0.0) || !(omega < T)) throw ConfigError("heat-kernel data needs 0 < omega < T");
  if (samples < 2) throw ConfigError("heat-kernel data needs at least two samples");
  Trajectory traj;
  traj.name = "heat-kernel";
  traj.geometry = flat_geometry(grid);
  traj.order = 2;
  traj.meta.method = "closed form";
  traj.meta.dtau = omega / double(samples - 1);
  for (int i = 0; i < samples; ++i) {
    const double tau = omega * double(i) / double(samples - 1);
    const double theta = T - tau;
    Vec x(grid.size()), dx(grid.size());
    for (Index p = 0; p < grid.size(); ++p) {
      const double s = displacement(grid, grid.point(p)[0], center);
      x[p] = std::sqrt(T / theta) * std::exp(-s * s / (4.0 * theta));
      dx[p] = -x[p] * (s * s / (4.0 * theta * theta) - 1.0 / (2.0 * theta));
    }
    const Section zero = Section::zero(grid, 1);
    traj.samples.push_back({tau, Section::scalar(grid, x), zero, Section::scalar(grid, dx), zero});
  }
  return traj;
}

namespace {

struct Localized {
  double E = 0.0, F = 0.0;
};

Localized localized_energy(const TrajectorySample& s, const WeightProfile& w, const Vec& phi, const Vec& dphi) {
  const TorusGrid& grid = w.grid;
  const Spectral sp(grid);
  const Vec weight = (-3.0 * w.Bw * w.rho[0].array()).exp().matrix();
  const Vec dweight = (-3.0 * w.Bw) * w.rho[1].cwiseProduct(weight);
  const Vec f = phi.cwiseProduct(weight);
  const Vec df = dphi.cwiseProduct(weight) + phi.cwiseProduct(dweight);
  const Mat dX = sp.derivative(s.X.value(), 0);
  const Mat xt = f.asDiagonal() * s.X.value();
  const Mat yt = f.asDiagonal() * s.Y.value();
  const Mat gt = df.asDiagonal() * s.X.value() + f.asDiagonal() * dX;
  const double h = grid.cell_volume();
  return {h * (xt.squaredNorm() + yt.squaredNorm()), h * gt.squaredNorm()};
}

bool decreasing(const std::vector<double>& v, double floor) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1] || v[i] <= floor)) return false;
  return true;
}

}  // namespace

CutoffReport cutoff_limit_experiment(const Trajectory& traj, const WeightProfile& profile, std::vector<double> R_list,
                                     int smoothness) {
  traj.validate();
  require_1d(traj.geometry.grid, "cutoff_limit_experiment");
  require_same_grid(traj.geometry.grid, profile.grid, "cutoff_limit_experiment");
  if (R_list.empty()) throw ConfigError("cutoff.R_list must not be empty");
  std::sort(R_list.begin(), R_list.end());
  std::vector<WeightProfile> cut;
  for (double R : R_list) cut.push_back(build_cutoff(profile, R, smoothness));

  CutoffReport rep;
  rep.Bw = profile.Bw;
  const double outer = 2.0 * R_list.back();
  for (const auto& s : traj.samples) {
    const double peak = std::max(s.X.value().cwiseAbs().maxCoeff(), s.Y.value().cwiseAbs().maxCoeff());
    for (Index p = 0; p < profile.grid.size(); ++p)
      if (profile.r[p] >= outer &&
          std::max(s.X.value().row(p).cwiseAbs().maxCoeff(), s.Y.value().row(p).cwiseAbs().maxCoeff()) > 1e-12 * peak)
        throw Refused("cutoff experiment refused: data does not vanish outside radius " + std::to_string(outer) +
                      " at tau = " + std::to_string(s.tau));
  }

  const std::size_t count = traj.samples.size();
  rep.tau = traj.taus();
  const double threshold = energy_threshold(profile.grid);
  const Vec ones = Vec::Ones(profile.grid.size()), zeros = Vec::Zero(profile.grid.size());
  std::vector<double> E_inf(count), F_inf(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Localized l = localized_energy(traj.samples[i], profile, ones, zeros);
    E_inf[i] = l.E;
    F_inf[i] = l.F;
  }

  rep.rows = parallel_map<CutoffRow>(cut.size(), [&](std::size_t k) {
    CutoffRow row;
    row.R = cut[k].R;
    row.C3 = cut[k].C3;
    for (std::size_t i = 0; i < count; ++i) {
      const Localized l = localized_energy(traj.samples[i], cut[k], cut[k].phi[0], cut[k].phi[1]);
      row.E.push_back(l.E);
      row.F.push_back(l.F);
      row.N.push_back(l.E > threshold ? l.F / l.E : std::numeric_limits<double>::quiet_NaN());
    }
    return row;
  });

  double c3_min = rep.rows.front().C3;
  rep.c3_ok = true;
  for (const auto& row : rep.rows) rep.c3_ok = rep.c3_ok && row.C3 <= c3_min * (1.0 + 1e-9);

  bool all_zero = true;
  for (double e : E_inf) all_zero = all_zero && !(e > threshold);
  if (all_zero) {
    rep.trivially_zero = true;
    rep.N_inf.assign(count, std::numeric_limits<double>::quiet_NaN());
    for (auto& row : rep.rows) {
      row.Q.assign(count, 0.0);
      row.bound_ok = true;
    }
    rep.monotone_ok = rep.decay_ok = true;
    rep.pass = rep.c3_ok;
    return rep;
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!(E_inf[i] > threshold)) throw UndefinedFrequency("weighted energy vanishes inside the interval");
    rep.N_inf.push_back(F_inf[i] / E_inf[i]);
  }

  // frequency bound on the weighted data
  double C = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const Derivative d = sampled_derivative(rep.tau, rep.N_inf, i);
    if (d.quality == StencilQuality::full) C = std::max(C, -d.value / (rep.N_inf[i] + 1.0));
  }
  const double omega = rep.tau.back() - rep.tau.front();
  rep.N0 = std::exp(C * omega) * (rep.N_inf.back() + 1.0);

  std::vector<double> corr, dev, step;
  double nmax = 0.0;
  for (double v : rep.N_inf) nmax = std::max(nmax, std::abs(v));
  for (auto& row : rep.rows) {
    row.Q.resize(count);
    std::vector<double> inv(count);
    for (std::size_t i = 0; i < count; ++i) inv[i] = 1.0 / row.E[i];
    for (std::size_t i = 0; i < count; ++i) row.Q[i] = tail_integral(rep.tau, inv, i);
    row.correction = std::exp(-2.0 * rep.Bw * row.R) * row.Q.front();
    row.P = rep.N0 + 1.0 + row.correction;
    for (std::size_t i = 0; i < count; ++i) {
      row.max_dev = std::max(row.max_dev, std::abs(row.N[i] - rep.N_inf[i]));
      const double rate = sampled_derivative(rep.tau, row.E, i).value / row.E[i];
      rep.C_growth = std::max(rep.C_growth, rate / row.P);
    }
    corr.push_back(row.correction);
    dev.push_back(row.max_dev);
  }
  for (std::size_t k = 1; k < rep.rows.size(); ++k) {
    double d = 0.0;
    for (std::size_t i = 0; i < count; ++i) d = std::max(d, std::abs(rep.rows[k].N[i] - rep.rows[k - 1].N[i]));
    step.push_back(d);
  }
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, nmax);
  rep.monotone_ok = decreasing(dev, floor) && decreasing(step, floor);
  rep.decay_ok = true;
  for (std::size_t k = 1; k < rep.rows.size(); ++k) {
    const double allowed = std::exp(-2.0 * rep.Bw * (rep.rows[k].R - rep.rows[k - 1].R));
    rep.decay_ok = rep.decay_ok && corr[k] <= corr[k - 1] * allowed * (1.0 + 1e-9);
  }
  bool bounds = true;
  for (auto& row : rep.rows) {
    const double cp = rep.C_growth * row.P * omega;
    row.lhs = std::exp(-cp) * row.E.back();
    row.rhs = row.E.front() + std::exp(-2.0 * rep.Bw * row.R) / row.P * (1.0 - std::exp(-cp));
    row.bound_ok = row.lhs <= row.rhs * (1.0 + 1e-8);
    bounds = bounds && row.bound_ok;
  }
  rep.pass = rep.monotone_ok && rep.decay_ok && rep.c3_ok && bounds;
  return rep;
}

}  // namespace logcvx
