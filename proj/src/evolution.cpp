#include "logcvx/evolution.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace logcvx {

std::vector<std::string> coupling_names() { return {"none", "standard", "fourth-standard"}; }

namespace {

// (g^{-1/2}) applied to the covariant gradient: orthonormal-frame components
std::vector<Mat> frame_gradient(const Section& grad, const GeometrySample& geo) {
  const int d = geo.dim();
  std::vector<Mat> out(d, Mat::Zero(grad.points(), grad.fiber_dim));
  for (Index p = 0; p < grad.points(); ++p) {
    SpaceMat root;
    if (d == 1) {
      root = SpaceMat::Constant(1, 1, std::sqrt(geo.g_inv[p](0, 0)));
    } else {
      Eigen::SelfAdjointEigenSolver<SpaceMat> es(geo.g_inv[p]);
      root = es.operatorSqrt();
    }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (root(i, j) != 0.0) out[i].row(p) += root(i, j) * grad.comps[j].row(p);
  }
  return out;
}

}  // namespace

CoupledSystem make_system(const std::string& coupling, double C0, int order) {
  if (order < 2 || order % 2 != 0 || order > 8)
    throw ConfigError("system.order must be one of 2, 4, 6, 8 (got " + std::to_string(order) + ")");
  if (!(C0 >= 0.0) || !std::isfinite(C0)) throw ConfigError("system.C0 must be a finite nonnegative number");
  CoupledSystem sys;
  sys.order = order;
  sys.C0 = C0;
  sys.coupling = coupling;
  sys.name = coupling + "/order" + std::to_string(order);
  if (coupling == "none") {
    sys.C0 = 0.0;
    sys.source_x = [](const Section& X, const Section&, const GeometrySample&) {
      return Section::zero(X.grid, X.fiber_dim);
    };
    sys.source_y = [](const Section&, const Section& Y, const GeometrySample&) {
      return Section::zero(Y.grid, Y.fiber_dim);
    };
    return sys;
  }
  if (coupling == "standard" || coupling == "fourth-standard") {
    sys.source_x = [C0](const Section&, const Section& Y, const GeometrySample&) { return C0 * Y; };
    if (coupling == "standard") {
      sys.source_y = [C0](const Section& X, const Section&, const GeometrySample& geo) {
        const std::vector<Mat> e = frame_gradient(grad_hat(X, geo), geo);
        Mat v = X.value();
        const double w = 1.0 / std::sqrt(double(geo.dim()));
        for (const Mat& c : e) v += w * c;
        return Section::from(X.grid, C0 * v);
      };
    } else {
      sys.source_y = [C0](const Section& X, const Section&, const GeometrySample& geo) {
        Mat v = X.value();
        const double w = 1.0 / std::sqrt(double(geo.dim()));
        for (int i = 0; i < geo.dim(); ++i)
          v += w * geo.spectral->derivative(geo.spectral->derivative(X.value(), i), i);
        return Section::from(X.grid, C0 * v);
      };
    }
    return sys;
  }
  std::string names;
  for (const auto& n : coupling_names()) names += (names.empty() ? "" : ", ") + n;
  throw ConfigError("unknown system.coupling '" + coupling + "' (valid: " + names + ")");
}

Section random_band_limited(const TorusGrid& grid, int fiber_dim, int band, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double L = grid.length;
  const int ky_max = grid.dim == 1 ? 1 : band;
  Mat values = Mat::Zero(grid.size(), fiber_dim);
  for (int c = 0; c < fiber_dim; ++c)
    for (int mx = 0; mx < band; ++mx)
      for (int my = grid.dim == 1 ? 0 : -(band - 1); my < ky_max; ++my) {
        const double a = normal(rng), b = normal(rng);
        for (Index p = 0; p < grid.size(); ++p) {
          const Point x = grid.point(p);
          const double phase = 2.0 * kPi * (mx * x[0] + (grid.dim == 1 ? 0.0 : my * x[1])) / L;
          values(p, c) += a * std::cos(phase) + b * std::sin(phase);
        }
      }
  return Section::from(grid, values);
}

namespace {

struct Pair {
  Section X, Y;
};

int default_band(const TorusGrid& grid, int band) { return band > 0 ? band : grid.n / 4; }

double gauss_integral(const std::function<double(double)>& f, double a, double b) {
  static constexpr std::array<double, 4> x{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                           0.9602898564975363};
  static constexpr std::array<double, 4> w{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                           0.1012285362903763};
  const double m = 0.5 * (a + b), r = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += w[i] * (f(m - r * x[i]) + f(m + r * x[i]));
  return s * r;
}

class Stepper {
 public:
  Stepper(const CoupledSystem& sys, const Geometry& geo, int band)
      : sys_(sys), geo_(geo), band_(band), sp_(*geo.spectral) {
    if (geo.is_static) cached_ = geo.at(geo.is_static ? std::clamp(0.0, geo.tau_min, geo.tau_max) : 0.0);
  }

  GeometrySample sample(double tau) const {
    if (cached_) {
      GeometrySample s = *cached_;
      s.tau = tau;
      return s;
    }
    return geo_.at(tau);
  }

  double principal(double tau) const { return sys_.order == 2 ? geo_.coefficient.principal(tau) : 1.0; }

  // explicit part: remainder of the elliptic operator plus the coupling
  Pair explicit_part(double tau, const Pair& z) const {
    const GeometrySample s = sample(tau);
    Pair out{sys_.source_x(z.X, z.Y, s), sys_.source_y(z.X, z.Y, s)};
    if (sys_.order == 2 && !geo_.coefficient.constant_coefficient) {
      Section rem = elliptic_apply(z.X, s);
      rem.value() -= principal(tau) * sp_.laplacian_power(z.X.value(), 1);
      out.X -= rem;
    }
    project(out);
    return out;
  }

  // full tau-derivative at a state
  Pair derivative(double tau, const Pair& z) const {
    const GeometrySample s = sample(tau);
    Pair out{sys_.source_x(z.X, z.Y, s), sys_.source_y(z.X, z.Y, s)};
    if (sys_.order == 2)
      out.X -= elliptic_apply(z.X, s);
    else
      out.X -= flat_elliptic(z.X, sys_.k());
    project(out);
    return out;
  }

  void project(Pair& z) const {
    z.X.value() = sp_.project(z.X.value(), band_);
    z.Y.value() = sp_.project(z.Y.value(), band_);
  }

  // exact linear propagation of X from a to b
  Section propagate(const Section& X, double a, double b) const {
    if (a == b) return X;
    const double phi = gauss_integral([this](double t) { return principal(t); }, a, b);
    return Section::from(X.grid, sp_.exponential(X.value(), phi, sys_.order, band_));
  }

  Pair step(double tau, const Pair& z, double h) const {
    const double mid = tau + 0.5 * h, end = tau + h;
    const Pair k1 = explicit_part(tau, z);
    Pair za{propagate(z.X + 0.5 * h * k1.X, tau, mid), z.Y + 0.5 * h * k1.Y};
    const Pair k2 = explicit_part(mid, za);
    const Section xn_mid = propagate(z.X, tau, mid);
    Pair zb{xn_mid + 0.5 * h * k2.X, z.Y + 0.5 * h * k2.Y};
    const Pair k3 = explicit_part(mid, zb);
    const Section xn_end = propagate(z.X, tau, end);
    Pair zc{xn_end + h * propagate(k3.X, mid, end), z.Y + h * k3.Y};
    const Pair k4 = explicit_part(end, zc);
    Pair next{xn_end + (h / 6.0) * (propagate(k1.X, tau, end) + 2.0 * propagate(k2.X + k3.X, mid, end) + k4.X),
              z.Y + (h / 6.0) * (k1.Y + 2.0 * (k2.Y + k3.Y) + k4.Y)};
    project(next);
    return next;
  }

  double norm(double tau, const Pair& z) const {
    const GeometrySample s = sample(tau);
    return std::sqrt(norm2(z.X, s) + norm2(z.Y, s));
  }

  double max_principal(double a, double b) const {
    double m = 0.0;
    for (int i = 0; i <= 32; ++i) m = std::max(m, principal(a + (b - a) * i / 32.0));
    return m;
  }

  double geometry_rate(double a, double b) const {
    double m = 0.0;
    for (int i = 0; i <= 4; ++i) {
      const GeometrySample s = sample(a + (b - a) * i / 4.0);
      m = std::max(m, 0.5 * s.trace_rate.cwiseAbs().maxCoeff());
      if (!s.gamma_identity)
        for (const FiberMat& beta : s.beta) m = std::max(m, beta.norm());
    }
    return m;
  }

 private:
  const CoupledSystem& sys_;
  const Geometry& geo_;
  int band_;
  const Spectral& sp_;
  std::optional<GeometrySample> cached_;
};

}  // namespace

double explicit_lipschitz(const CoupledSystem& sys, const Geometry& geo, double tau, int band, std::uint64_t seed) {
  band = default_band(geo.grid, band);
  const Stepper st(sys, geo, band);
  const int m = geo.fiber_dim();
  double best = 0.0;
  auto probe = [&](const Pair& z) {
    const double n0 = st.norm(tau, z);
    if (n0 == 0.0) return;
    best = std::max(best, st.norm(tau, st.explicit_part(tau, z)) / n0);
  };
  for (int i = 0; i < 6; ++i) {
    Pair z{random_band_limited(geo.grid, m, band, seed + 2 * i), random_band_limited(geo.grid, m, band, seed + 2 * i + 1)};
    if (i % 3 == 1) z.Y *= 0.0;
    if (i % 3 == 2) z.X *= 0.0;
    st.project(z);
    probe(z);
  }
  // top-mode probes
  for (int axis = 0; axis < geo.grid.dim; ++axis) {
    const double kk = 2.0 * kPi * (band - 1) / geo.grid.length;
    const Section top = Section::from(geo.grid, sample(geo.grid, [&](const Point& x) {
                                          return std::cos(kk * x[axis]);
                                        }).replicate(1, m));
    probe({top, Section::zero(geo.grid, m)});
    probe({Section::zero(geo.grid, m), top});
  }
  return 1.5 * best;
}

AuditReport structural_audit(const CoupledSystem& sys, const Geometry& geo, std::uint64_t seed, int samples,
                             double tol) {
  AuditReport rep;
  rep.bound = sys.C0;
  rep.samples = samples;
  const int band = default_band(geo.grid, 0);
  const int depth = std::min(sys.order / 2, 2);
  for (int s = 0; s < samples; ++s) {
    const double tau = geo.tau_min + (std::min(geo.tau_max, geo.tau_min + 2.0 * kPi) - geo.tau_min) * (s + 0.5) / samples;
    const GeometrySample g = geo.at(std::clamp(tau, geo.tau_min, geo.tau_max));
    Section X = random_band_limited(geo.grid, geo.fiber_dim(), band, seed + 2 * s);
    Section Y = random_band_limited(geo.grid, geo.fiber_dim(), band, seed + 2 * s + 1);
    if (s % 4 == 1) Y *= 0.0;
    if (s % 4 == 2) X *= 0.0;
    Vec denom = pointwise_norm(X, g) + pointwise_norm(Y, g);
    Section grad = X;
    for (int p = 1; p <= depth; ++p) {
      grad = grad_hat(grad, g);
      denom += pointwise_norm(grad, g);
    }
    const Vec sx = pointwise_norm(sys.source_x(X, Y, g), g);
    const Vec sy = pointwise_norm(sys.source_y(X, Y, g), g);
    const double floor = 1e-12 * denom.maxCoeff();
    for (Index p = 0; p < denom.size(); ++p) {
      if (denom[p] <= floor) continue;
      rep.max_ratio = std::max(rep.max_ratio, std::max(sx[p], sy[p]) / denom[p]);
    }
  }
  rep.pass = rep.max_ratio <= sys.C0 * (1.0 + tol) + 1e-12;
  return rep;
}

Trajectory evolve(const CoupledSystem& sys, const Geometry& geo, const Section& X0, const Section& Y0,
                  const EvolveOptions& opts) {
  if (!(opts.dt > 0.0) || !(opts.omega > 0.0)) throw ConfigError("time.dt and time.omega must be positive");
  if (opts.record_every < 1) throw ConfigError("time.samples (record stride) must be >= 1");
  if (sys.order > 2 && !(geo.is_static && geo.flat_metric() && !geo.bundle.connection))
    throw ConfigError("higher-order systems run on flat static geometries with a trivial connection");
  geo.require_tau(opts.tau0);
  geo.require_tau(opts.tau0 + opts.omega);
  X0.validate();
  Y0.validate();
  require_same_grid(X0.grid, geo.grid, "evolve");
  require_same_grid(Y0.grid, geo.grid, "evolve");
  if (X0.rank != 0 || Y0.rank != 0 || X0.fiber_dim != geo.fiber_dim() || Y0.fiber_dim != geo.fiber_dim())
    throw DimensionError("initial data must be rank-0 sections with the bundle's fiber dimension");
  const int band = default_band(geo.grid, opts.band);
  if (band < 1 || band > geo.grid.n / 2) throw ConfigError("Galerkin band must lie in [1, n/2]");
  const Spectral& sp = *geo.spectral;
  if (sp.tail_fraction(X0.value(), band) > 1e-20 || sp.tail_fraction(Y0.value(), band) > 1e-20)
    throw ConfigError("initial data is not band-limited below mode " + std::to_string(band));

  const long steps = std::lround(opts.omega / opts.dt);
  if (steps < 1 || std::abs(steps * opts.dt - opts.omega) > 1e-9 * opts.omega)
    throw ConfigError("time.omega must be an integer multiple of time.dt");
  const double h = opts.omega / double(steps);

  const Stepper st(sys, geo, band);
  Trajectory traj;
  traj.name = sys.name + "@" + geo.name;
  traj.geometry = geo;
  traj.order = sys.order;
  traj.meta.method = "integrating-factor RK4";
  traj.meta.dtau = h * opts.record_every;
  traj.meta.band = band;

  const double t_end = opts.tau0 + opts.omega;
  const double lip = explicit_lipschitz(sys, geo, opts.tau0, band);
  traj.meta.explicit_rate = h * lip;
  if (h * lip > 2.5) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "time step too large for the explicit part: dt*L = %.3g > 2.5 (L = %.4g); use dt <= %.3g",
                  h * lip, lip, 2.5 / lip);
    throw StepperFailure(buf);
  }
  const double kmax = 2.0 * kPi * (band - 1) / geo.grid.length * std::sqrt(double(geo.grid.dim));
  const double growth = st.max_principal(opts.tau0, t_end) * std::pow(kmax, sys.order) + lip +
                        st.geometry_rate(opts.tau0, t_end);

  Pair z{X0, Y0};
  st.project(z);
  const double n0 = st.norm(opts.tau0, z);
  const int from = std::max(1, (3 * band) / 4);
  auto record = [&](double tau) {
    const Pair d = st.derivative(tau, z);
    traj.samples.push_back({tau, z.X, z.Y, d.X, d.Y});
    traj.meta.tail_fraction = std::max(traj.meta.tail_fraction, sp.tail_fraction(z.X.value(), from));
  };
  record(opts.tau0);
  for (long i = 0; i < steps; ++i) {
    const double tau = opts.tau0 + h * double(i);
    z = st.step(tau, z, h);
    const double t_next = opts.tau0 + h * double(i + 1);
    const double nz = st.norm(t_next, z);
    const double envelope = n0 * std::exp(growth * (t_next - opts.tau0));
    if (!std::isfinite(nz) || nz > 10.0 * envelope) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "instability at step %ld (tau = %.6g): norm %.4g exceeds 10x envelope %.4g", i + 1,
                    t_next, nz, envelope);
      throw StepperFailure(buf);
    }
    if ((i + 1) % opts.record_every == 0) record(t_next);
  }
  return traj;
}

FrequencyBound frequency_bound_experiment(const FrequencyTrace& trace) {
  FrequencyBound fb;
  const auto& rows = trace.rows;
  if (rows.empty()) throw ConfigError("frequency bound needs a nonempty trace");
  bool any = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].report.N) {
      any = true;
    } else if (!fb.split_index) {
      fb.split_index = i;
    }
  }
  if (!any) {
    fb.trivially_zero = true;
    fb.split_index.reset();
    fb.certificate = true;
    return fb;
  }
  if (fb.split_index) return fb;

  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const TraceRow& r = rows[i];
    const double N = *r.report.N;
    fb.max_N = std::max(fb.max_N, N);
    if (r.quality != StencilQuality::full || !r.dN) continue;
    const double need = -(*r.dN + r.sandwich_tol) / (N + 1.0);
    if (need > fb.C) fb.C = need;
    const double slack = (*r.dN + r.sandwich_tol) / (N + 1.0);
    if (slack < worst) {
      worst = slack;
      fb.worst_index = i;
    }
  }
  const double omega = rows.back().report.tau - rows.front().report.tau;
  fb.N_omega = *rows.back().report.N;
  fb.N0 = std::exp(fb.C * omega) * (fb.N_omega + 1.0);
  fb.certificate = true;
  for (const auto& r : rows)
    if (*r.report.N > fb.N0 * (1.0 + trace.budget)) fb.certificate = false;
  return fb;
}

LogConvexity logconvexity_certificate(const FrequencyTrace& trace, const FrequencyBound& bound) {
  LogConvexity lc;
  if (bound.trivially_zero) {
    lc.trivially_zero = true;
    lc.certificate = true;
    return lc;
  }
  if (!bound.certificate) return lc;
  const auto& rows = trace.rows;
  const std::size_t n = rows.size();
  std::vector<double> tau(n), logE(n), E(n);
  for (std::size_t i = 0; i < n; ++i) {
    tau[i] = rows[i].report.tau;
    E[i] = rows[i].report.E;
    logE[i] = std::log(E[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double rate = sampled_derivative(tau, E, i).value / E[i];
    lc.C_growth = std::max(lc.C_growth, rate / (*rows[i].report.N + 1.0));
  }
  lc.min_second_difference = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < n; ++i)
    lc.min_second_difference = std::min(lc.min_second_difference, second_difference(tau, logE, i));
  if (n < 3) lc.min_second_difference = 0.0;
  const double slope = lc.C_growth * (bound.N0 + 1.0);
  lc.worst_excess = -std::numeric_limits<double>::infinity();
  lc.certificate = true;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double allowed = slope * (tau[j] - tau[i]);
      const double excess = (logE[j] - logE[i]) - allowed;
      if (excess > lc.worst_excess) {
        lc.worst_excess = excess;
        lc.worst_i = i;
        lc.worst_j = j;
      }
      if (excess > trace.budget * std::max(1.0, allowed)) lc.certificate = false;
    }
  return lc;
}

UniquenessReport backward_uniqueness_experiment(const CoupledSystem& sys, const Geometry& geo, const Section& base,
                                                const std::vector<double>& eps_list, const EvolveOptions& opts) {
  UniquenessReport rep;
  rep.audit = structural_audit(sys, geo);
  if (!rep.audit.pass) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "structural audit failed: max ratio %.6g exceeds C0 = %.6g", rep.audit.max_ratio,
                  sys.C0);
    throw Refused(buf);
  }
  const Section zero = Section::zero(base.grid, base.fiber_dim);
  const Trajectory zt = evolve(sys, geo, zero, zero, opts);
  for (const auto& s : zt.samples) {
    const GeometrySample g = geo.at(s.tau);
    rep.zero_data_max_E = std::max(rep.zero_data_max_E, energy(s.X, s.Y, g).E);
  }
  rep.zero_data_ok = rep.zero_data_max_E <= 1e-25;

  rep.sweep = parallel_map<SweepEntry>(eps_list.size(), [&](std::size_t i) {
    SweepEntry e;
    e.epsilon = eps_list[i];
    const Trajectory t = evolve(sys, geo, e.epsilon * base, zero, opts);
    const FrequencyTrace tr = frequency_trace(t);
    e.E0 = tr.rows.front().report.E;
    e.E_omega = tr.rows.back().report.E;
    const FrequencyBound fb = frequency_bound_experiment(tr);
    if (fb.trivially_zero) {
      e.bound_ok = e.E_omega <= 1e-25;
      return e;
    }
    const LogConvexity lc = logconvexity_certificate(tr, fb);
    e.ratio = e.E_omega / e.E0;
    e.K = lc.C_growth * (fb.N0 + 1.0) * (t.samples.back().tau - t.samples.front().tau);
    e.bound_ok = fb.certificate && lc.certificate && std::log(e.ratio) <= e.K + tr.budget * std::max(1.0, e.K);
    return e;
  });

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  bool all_ok = true, any_nonzero = false;
  for (const auto& e : rep.sweep) {
    all_ok = all_ok && e.bound_ok;
    if (e.ratio > 0.0) {
      any_nonzero = true;
      lo = std::min(lo, e.ratio);
      hi = std::max(hi, e.ratio);
    }
  }
  rep.ratio_spread = any_nonzero ? hi / lo - 1.0 : 0.0;
  rep.trivially_zero = !any_nonzero;
  rep.pass = rep.zero_data_ok && all_ok && rep.ratio_spread <= 0.01;
  return rep;
}

}  // namespace logcvx
