#include "logcvx/energetics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace logcvx {

double energy_threshold(const TorusGrid& grid) { return 1e-30 * double(grid.size()); }

EnergyParts energy(const Section& X, const Section& Y, const GeometrySample& geo) {
  EnergyParts p;
  p.X2 = norm2(X, geo);
  p.Y2 = norm2(Y, geo);
  p.E = p.X2 + p.Y2;
  return p;
}

double dirichlet(const Section& X, const GeometrySample& geo) {
  if (X.rank != 0) throw UnsupportedRank("dirichlet expects a rank-0 section");
  return lambda_energy(grad_hat(X, geo), geo);
}

double order_functional(const Section& X, int k, const GeometrySample& geo) {
  if (k < 0) throw OutOfRange("order_functional: k must be >= 0");
  if (X.rank != 0) throw UnsupportedRank("order_functional expects a rank-0 section");
  const int p = k + 1;
  const Spectral& sp = *geo.spectral;
  const Mat base = sp.laplacian_power(X.value(), p / 2);
  if (p % 2 == 0) return norm2(Section::from(X.grid, base), geo);
  double total = 0.0;
  for (int i = 0; i < geo.dim(); ++i) total += norm2(Section::from(X.grid, sp.derivative(base, i)), geo);
  return total;
}

Section flat_elliptic(const Section& X, int k) {
  if (k < 0) throw OutOfRange("flat_elliptic: k must be >= 0");
  if (X.rank != 0) throw UnsupportedRank("flat_elliptic expects a rank-0 section");
  const Spectral sp(X.grid);
  Mat v = sp.laplacian_power(X.value(), k + 1);
  if (k % 2 == 1) v = -v;
  return Section::from(X.grid, std::move(v));
}

namespace {

double pair(const Eigen::Ref<const Eigen::RowVectorXd>& u, const Eigen::Ref<const Eigen::RowVectorXd>& v,
            const FiberMat& m) {
  return (u * m * v.transpose())(0, 0);
}

double gamma_pair(const Eigen::Ref<const Eigen::RowVectorXd>& u, const Eigen::Ref<const Eigen::RowVectorXd>& v,
                  const GeometrySample& geo, Index p) {
  if (geo.gamma_identity) return u.dot(v);
  return pair(u, v, geo.gamma[p]);
}

}  // namespace

ErrorTerms error_terms(const Section& X, const Section& Y, const Section& dX_hat, const GeometrySample& geo) {
  require_same_grid(X.grid, geo.grid, "error_terms");
  require_same_grid(Y.grid, geo.grid, "error_terms");
  if (dX_hat.rank != 1) throw UnsupportedRank("error_terms: dX_hat must be the rank-1 gradient");
  const int d = geo.dim();
  const bool twisted = !geo.connection_rate.empty();
  ErrorTerms t;
  double i1 = 0.0, i2 = 0.0;
  for (Index p = 0; p < geo.size(); ++p) {
    const double B = geo.trace_rate[p];
    const auto x = X.value().row(p);
    const auto y = Y.value().row(p);
    double s1 = 0.5 * B * (gamma_pair(x, x, geo, p) + gamma_pair(y, y, geo, p));
    if (!geo.gamma_identity) s1 += pair(x, x, geo.beta[p]) + pair(y, y, geo.beta[p]);
    i1 += geo.density[p] * s1;

    const SpaceMat& lam = geo.lambda[p];
    const SpaceMat& lam_rate = geo.lambda_rate[p];
    double s2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const auto gi = dX_hat.comps[i].row(p);
      for (int j = 0; j < d; ++j) {
        const auto gj = dX_hat.comps[j].row(p);
        const double gg = gamma_pair(gi, gj, geo, p);
        s2 += lam_rate(i, j) * gg + 0.5 * B * lam(i, j) * gg;
        if (!geo.gamma_identity) s2 += lam(i, j) * pair(gi, gj, geo.beta[p]);
        if (twisted && lam(i, j) != 0.0) {
          const Eigen::RowVectorXd comm = x * geo.connection_rate[p][i].transpose();
          s2 += 2.0 * lam(i, j) * gamma_pair(comm, gj, geo, p);
        }
      }
    }
    i2 += geo.density[p] * s2;
  }
  t.I1 = i1 * geo.cell();
  t.I2 = i2 * geo.cell();
  return t;
}

EnergyReport evaluate(const TrajectorySample& s, const GeometrySample& geo, int order) {
  if (order < 2 || order % 2 != 0) throw ConfigError("operator order must be an even integer >= 2");
  EnergyReport r;
  r.tau = s.tau;
  const EnergyParts parts = energy(s.X, s.Y, geo);
  r.E = parts.E;
  r.X2 = parts.X2;
  r.Y2 = parts.Y2;
  Section ell;
  if (order == 2) {
    const Section grad = grad_hat(s.X, geo);
    r.F = lambda_energy(grad, geo);
    const ErrorTerms t = error_terms(s.X, s.Y, grad, geo);
    r.I1 = t.I1;
    r.I2 = t.I2;
    ell = elliptic_apply(s.X, geo);
  } else {
    const int k = order / 2 - 1;
    r.F = order_functional(s.X, k, geo);
    const ErrorTerms t = error_terms(s.X, s.Y, grad_hat(s.X, geo), geo);
    r.I1 = t.I1;
    r.I2 = 0.0;
    ell = flat_elliptic(s.X, k);
  }
  if (r.E > energy_threshold(geo.grid)) r.N = r.F / r.E;
  r.Ic = r.I2 * r.E - r.I1 * r.F;
  const Section LB = s.dX + ell;
  const Section LF = s.dX - ell;
  r.normLB2 = norm2(LB, geo);
  r.normLF2 = norm2(LF, geo);
  r.normdY2 = norm2(s.dY, geo);
  r.LBX_X = inner(LB, s.X, geo);
  r.LFX_X = inner(LF, s.X, geo);
  r.dY_Y = inner(s.dY, s.Y, geo);
  return r;
}

Sandwich frequency_sandwich(const EnergyReport& r) {
  if (!r.N) throw UndefinedFrequency("frequency undefined at tau = " + std::to_string(r.tau) + " (E below threshold)");
  const double E = r.E;
  return {-(r.normLB2 + r.normdY2) / (2.0 * E) + r.Ic / (E * E), (r.normLF2 + r.normdY2) / (2.0 * E) + r.Ic / (E * E)};
}

double l2ev_rhs_first(const EnergyReport& r) { return 2.0 * r.F + 2.0 * r.LBX_X + 2.0 * r.dY_Y + r.I1; }
double l2ev_rhs_second(const EnergyReport& r) { return r.LBX_X + r.LFX_X + 2.0 * r.dY_Y + r.I1; }

namespace {

double relative(double diff, double scale) {
  if (scale == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / scale;
}

template <class Get>
Derivative sampled(const std::vector<EnergyReport>& reports, std::size_t i, Get get) {
  std::vector<double> tau(reports.size()), v(reports.size());
  for (std::size_t j = 0; j < reports.size(); ++j) {
    tau[j] = reports[j].tau;
    v[j] = get(reports[j]);
  }
  return sampled_derivative(tau, v, i);
}

double l2ev_scale(const EnergyReport& r) {
  return 2.0 * r.F + 2.0 * std::abs(r.LBX_X) + 2.0 * std::abs(r.dY_Y) + std::abs(r.I1);
}

double h1ev_scale(const EnergyReport& r) { return 0.5 * (r.normLF2 + r.normLB2) + std::abs(r.I2); }

}  // namespace

double check_identity_l2ev(const std::vector<EnergyReport>& reports, std::size_t i, StencilQuality* quality) {
  const Derivative d = sampled(reports, i, [](const EnergyReport& r) { return r.E; });
  if (quality) *quality = d.quality;
  const EnergyReport& r = reports.at(i);
  return relative(std::abs(d.value - l2ev_rhs_first(r)), std::max(l2ev_scale(r), std::abs(d.value)));
}

double check_identity_l2ev_forms(const EnergyReport& r) {
  return relative(std::abs(l2ev_rhs_first(r) - l2ev_rhs_second(r)), l2ev_scale(r));
}

double check_identity_h1arr1(const EnergyReport& r) {
  const double rhs = 0.5 * (r.LFX_X - r.LBX_X);
  return relative(std::abs(r.F - rhs), std::max(r.F, 0.5 * (std::abs(r.LFX_X) + std::abs(r.LBX_X))));
}

double check_identity_h1ev(const std::vector<EnergyReport>& reports, std::size_t i, StencilQuality* quality) {
  const Derivative d = sampled(reports, i, [](const EnergyReport& r) { return r.F; });
  if (quality) *quality = d.quality;
  const EnergyReport& r = reports.at(i);
  const double rhs = 0.5 * (r.normLF2 - r.normLB2) + r.I2;
  return relative(std::abs(d.value - rhs), std::max(h1ev_scale(r), std::abs(d.value)));
}

double discretization_budget(double dtau, double amplification) {
  return std::max(1e-8, 10.0 * std::pow(dtau, 4) + 1e-12 * amplification);
}

std::vector<double> FrequencyTrace::taus() const {
  std::vector<double> out;
  for (const auto& row : rows) out.push_back(row.report.tau);
  return out;
}

std::vector<double> FrequencyTrace::energies() const {
  std::vector<double> out;
  for (const auto& row : rows) out.push_back(row.report.E);
  return out;
}

FrequencyTrace::Summary FrequencyTrace::summarize() const {
  Summary s;
  s.min_lower_margin = std::numeric_limits<double>::infinity();
  s.min_upper_margin = std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const TraceRow& row = rows[i];
    s.max_res_l2ev_forms = std::max(s.max_res_l2ev_forms, row.res_l2ev_forms);
    s.max_res_h1arr1 = std::max(s.max_res_h1arr1, row.res_h1arr1);
    if (row.quality != StencilQuality::full) continue;
    ++s.checked_rows;
    s.max_res_l2ev = std::max(s.max_res_l2ev, row.res_l2ev);
    s.max_res_h1ev = std::max(s.max_res_h1ev, row.res_h1ev);
    if (row.dN && row.sandwich_lower && row.sandwich_upper) {
      const double lo = *row.dN - *row.sandwich_lower + row.sandwich_tol;
      const double hi = *row.sandwich_upper + row.sandwich_tol - *row.dN;
      s.min_lower_margin = std::min(s.min_lower_margin, lo);
      s.min_upper_margin = std::min(s.min_upper_margin, hi);
      if (std::min(lo, hi) < worst) {
        worst = std::min(lo, hi);
        s.worst_row = i;
      }
    }
  }
  s.sandwich_ok = !(s.min_lower_margin < 0.0) && !(s.min_upper_margin < 0.0);
  return s;
}

FrequencyTrace frequency_trace(const Trajectory& traj, double budget) {
  traj.validate();
  if (traj.order > 2 && !traj.geometry.is_static)
    throw ConfigError("higher-order traces require a static geometry");
  FrequencyTrace tr;
  tr.name = traj.name;
  tr.order = traj.order;
  const std::size_t count = traj.samples.size();
  const std::vector<EnergyReport> reports = parallel_map<EnergyReport>(count, [&](std::size_t i) {
    const TrajectorySample& s = traj.samples[i];
    return evaluate(s, traj.geometry.at(s.tau), traj.order);
  });

  double emax = 0.0, emin = std::numeric_limits<double>::infinity();
  for (const auto& r : reports) {
    if (r.E > energy_threshold(traj.geometry.grid)) {
      emax = std::max(emax, r.E);
      emin = std::min(emin, r.E);
    }
  }
  tr.amplification = emax > 0.0 ? std::sqrt(emax / emin) : 1.0;
  tr.budget = budget > 0.0 ? budget : discretization_budget(traj.meta.dtau, tr.amplification);

  std::vector<double> tau(count), N(count, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < count; ++i) {
    tau[i] = reports[i].tau;
    if (reports[i].N) N[i] = *reports[i].N;
  }
  tr.rows.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    TraceRow& row = tr.rows[i];
    row.report = reports[i];
    row.res_l2ev_forms = check_identity_l2ev_forms(reports[i]);
    row.res_h1arr1 = check_identity_h1arr1(reports[i]);
    if (count < 2) continue;
    row.res_l2ev = check_identity_l2ev(reports, i, &row.quality);
    row.res_h1ev = check_identity_h1ev(reports, i);
    const double dN = sampled_derivative(tau, N, i).value;
    if (std::isfinite(dN)) row.dN = dN;
    if (reports[i].N) {
      const Sandwich sw = frequency_sandwich(reports[i]);
      row.sandwich_lower = sw.lower;
      row.sandwich_upper = sw.upper;
      row.sandwich_tol =
          tr.budget * std::max({1.0, std::abs(*reports[i].N), std::abs(sw.lower), std::abs(sw.upper)});
    }
  }
  return tr;
}

}  // namespace logcvx
