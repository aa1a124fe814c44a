#include "logcvx/prolongation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace logcvx {

namespace {

void require_2d(const TorusGrid& grid) {
  if (grid.dim != 2) throw DimensionError("prolongation works on the two-dimensional torus");
}

Vec d(const Spectral& sp, const Vec& f, int axis) { return sp.derivative(f, axis).col(0); }

Vec flat_laplacian(const Spectral& sp, const Vec& f) { return sp.laplacian_power(f, 1).col(0); }

double delta(int a, int b) { return a == b ? 1.0 : 0.0; }

// (nabla_l T)^k_ij = d_l T^k_ij + Gamma^k_lm T^m_ij - Gamma^m_li T^k_mj - Gamma^m_lj T^k_im
Tensor4 covariant_derivative(const Spectral& sp, const Tensor3& T, const Tensor3& G) {
  auto at3 = [](int k, int i, int j) { return k + 2 * i + 4 * j; };
  Tensor4 out;
  for (int l = 0; l < 2; ++l)
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          Vec v = d(sp, T[at3(k, i, j)], l);
          for (int m = 0; m < 2; ++m) {
            v += G[at3(k, l, m)].cwiseProduct(T[at3(m, i, j)]);
            v -= G[at3(m, l, i)].cwiseProduct(T[at3(k, m, j)]);
            v -= G[at3(m, l, j)].cwiseProduct(T[at3(k, i, m)]);
          }
          out[l + 2 * k + 4 * i + 8 * j] = v;
        }
  return out;
}

// (nabla omega)_ab at a + 2b
Tensor2 covariant_derivative(const Spectral& sp, const std::array<Vec, 2>& w, const Tensor3& G) {
  Tensor2 out;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      Vec v = d(sp, w[b], a);
      for (int m = 0; m < 2; ++m) v -= G[m + 2 * a + 4 * b].cwiseProduct(w[m]);
      out[a + 2 * b] = v;
    }
  return out;
}

std::array<Vec, 2> rough_laplacian(const Spectral& sp, const std::array<Vec, 2>& w, const Tensor3& G, const Vec& u) {
  const Tensor2 T = covariant_derivative(sp, w, G);
  std::array<Vec, 2> out;
  for (int b = 0; b < 2; ++b) {
    Vec s = Vec::Zero(u.size());
    for (int a = 0; a < 2; ++a) {
      Vec v = d(sp, T[a + 2 * b], a);
      for (int m = 0; m < 2; ++m) {
        v -= G[m + 2 * a + 4 * a].cwiseProduct(T[m + 2 * b]);
        v -= G[m + 2 * a + 4 * b].cwiseProduct(T[a + 2 * m]);
      }
      s += v;
    }
    out[b] = (-2.0 * u.array()).exp().matrix().cwiseProduct(s);
  }
  return out;
}

template <std::size_t K>
Vec weighted_norm(const std::array<Vec, K>& comps, const Vec& weight) {
  Vec s = Vec::Zero(weight.size());
  for (const Vec& c : comps) s += c.cwiseAbs2();
  return s.cwiseProduct(weight).cwiseSqrt();
}

void require_pair(const ConformalFlowState& a, const ConformalFlowState& b, std::size_t index) {
  require_same_grid(a.grid, b.grid, "prolongation");
  if (a.size() != b.size()) throw DimensionError("prolongation: solutions use different time samplings");
  if (index >= a.size()) throw OutOfRange("prolongation: sample index out of range");
  if (std::abs(a.tau[index] - b.tau[index]) > 1e-12 * std::max(1.0, std::abs(a.tau[index])))
    throw DimensionError("prolongation: solutions use different time samplings");
}

}  // namespace

Vec gauss_curvature(const TorusGrid& grid, const Vec& u) {
  require_2d(grid);
  const Spectral sp(grid);
  return -(-2.0 * u.array()).exp().matrix().cwiseProduct(flat_laplacian(sp, u));
}

Tensor3 christoffel_field(const TorusGrid& grid, const Vec& u) {
  require_2d(grid);
  const Spectral sp(grid);
  const std::array<Vec, 2> du{d(sp, u, 0), d(sp, u, 1)};
  Tensor3 G;
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        G[k + 2 * i + 4 * j] = delta(k, i) * du[j] + delta(k, j) * du[i] - delta(i, j) * du[k];
  return G;
}

ConformalFlowState solve_conformal_ricci(const TorusGrid& grid, const Vec& u0, double omega, double dt,
                                         int record_every) {
  require_2d(grid);
  if (u0.size() != grid.size()) throw DimensionError("conformal factor does not match grid");
  if (!u0.allFinite()) throw InvariantViolation("conformal factor contains non-finite values");
  if (!(dt > 0.0) || !(omega > 0.0) || record_every < 1) throw ConfigError("conformal flow needs dt, omega > 0");
  const long steps = std::lround(omega / dt);
  if (steps < 1 || steps % record_every != 0 || std::abs(steps * dt - omega) > 1e-9 * omega)
    throw ConfigError("conformal flow: omega must be a multiple of dt * record stride");
  const Spectral sp(grid);
  const double kmax = 2.0 * kPi * (grid.n / 2 - 1) / grid.length;
  const double k2 = 2.0 * kmax * kmax;
  auto rhs = [&](const Vec& u) -> Vec { return (-2.0 * u.array()).exp().matrix().cwiseProduct(flat_laplacian(sp, u)); };

  ConformalFlowState st;
  st.grid = grid;
  st.omega = omega;
  st.dt = dt;
  st.cfl = dt * (-2.0 * u0.array()).exp().maxCoeff() * k2;
  std::vector<double> t{0.0};
  std::vector<Vec> us{u0};
  Vec u = u0;
  for (long i = 0; i < steps; ++i) {
    const double rate = dt * (-2.0 * u.array()).exp().maxCoeff() * k2;
    if (rate > 2.5) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "conformal flow unstable at step %ld: dt*max(e^-2u)|xi|^2 = %.4g > 2.5", i, rate);
      throw StepperFailure(buf);
    }
    const Vec a = rhs(u);
    const Vec b = rhs(u + 0.5 * dt * a);
    const Vec c = rhs(u + 0.5 * dt * b);
    const Vec e = rhs(u + dt * c);
    u += (dt / 6.0) * (a + 2.0 * b + 2.0 * c + e);
    if (!u.allFinite()) throw StepperFailure("conformal flow produced non-finite values");
    if ((i + 1) % record_every == 0) {
      t.push_back(dt * double(i + 1));
      us.push_back(u);
    }
  }
  for (std::size_t j = t.size(); j-- > 0;) {
    st.tau.push_back(omega - t[j]);
    st.u.push_back(us[j]);
  }
  st.tau.front() = 0.0;
  return st;
}

ProlongedSections build_prolonged(const ConformalFlowState& a, const ConformalFlowState& b, std::size_t index) {
  require_pair(a, b, index);
  const TorusGrid& grid = a.grid;
  const Spectral sp(grid);
  const Vec& u = a.u[index];
  const Vec& v = b.u[index];
  ProlongedSections s;
  const Vec Ka = gauss_curvature(grid, u), Kb = gauss_curvature(grid, v);
  s.X0 = Ka - Kb;
  for (int i = 0; i < 2; ++i) s.X1[i] = d(sp, Ka, i) - d(sp, Kb, i);
  const Vec gdiff = ((2.0 * u.array()).exp() - (2.0 * v.array()).exp()).matrix();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) s.Y0[i + 2 * j] = delta(i, j) * gdiff;
  const Tensor3 Ga = christoffel_field(grid, u), Gb = christoffel_field(grid, v);
  for (int c = 0; c < 8; ++c) s.Y1[c] = Ga[c] - Gb[c];
  s.Y2 = covariant_derivative(sp, s.Y1, Ga);
  return s;
}

Tensor3 y1_from_metric_difference(const ConformalFlowState& a, const ConformalFlowState& b, std::size_t index) {
  require_pair(a, b, index);
  const Spectral sp(a.grid);
  const Vec& u = a.u[index];
  const Vec& v = b.u[index];
  const Tensor3 G = christoffel_field(a.grid, u);
  const Vec gdiff = ((2.0 * u.array()).exp() - (2.0 * v.array()).exp()).matrix();
  Tensor2 Y0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) Y0[i + 2 * j] = delta(i, j) * gdiff;
  // nabla_i Y0_jl at i + 2j + 4l
  std::array<Vec, 8> dY;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int l = 0; l < 2; ++l) {
        Vec w = d(sp, Y0[j + 2 * l], i);
        for (int m = 0; m < 2; ++m) {
          w -= G[m + 2 * i + 4 * j].cwiseProduct(Y0[m + 2 * l]);
          w -= G[m + 2 * i + 4 * l].cwiseProduct(Y0[j + 2 * m]);
        }
        dY[i + 2 * j + 4 * l] = w;
      }
  const Vec ginv = (-2.0 * v.array()).exp().matrix();
  Tensor3 out;
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const int l = k;  // g~^{kl} is diagonal
        out[k + 2 * i + 4 * j] =
            0.5 * ginv.cwiseProduct(dY[i + 2 * j + 4 * l] + dY[j + 2 * i + 4 * l] - dY[l + 2 * i + 4 * j]);
      }
  return out;
}

ProlongedNorms prolonged_norms(const ProlongedSections& s, const Vec& u) {
  const Vec w2 = (-2.0 * u.array()).exp().matrix();
  const Vec w4 = (-4.0 * u.array()).exp().matrix();
  ProlongedNorms n;
  n.X = s.X0.cwiseAbs() + weighted_norm(s.X1, w2);
  n.Y = weighted_norm(s.Y0, w4) + weighted_norm(s.Y1, w2) + weighted_norm(s.Y2, w4);
  return n;
}

ProlongAudit prolongation_audit(const ConformalFlowState& a, const ConformalFlowState& b, double epsilon,
                                double max_mismatch) {
  require_pair(a, b, 0);
  const std::size_t count = a.size();
  if (count < 5) throw Refused("prolongation audit needs at least five time samples");
  const TorusGrid& grid = a.grid;
  const Spectral sp(grid);
  std::vector<ProlongedSections> secs;
  for (std::size_t i = 0; i < count; ++i) secs.push_back(build_prolonged(a, b, i));
  const double h = a.tau[1] - a.tau[0];

  // flatten all fields of one sample for time differencing
  auto flatten = [](const ProlongedSections& s) {
    std::vector<const Vec*> f{&s.X0, &s.X1[0], &s.X1[1]};
    for (const Vec& v : s.Y0) f.push_back(&v);
    for (const Vec& v : s.Y1) f.push_back(&v);
    for (const Vec& v : s.Y2) f.push_back(&v);
    return f;
  };
  const std::size_t fields = flatten(secs[0]).size();

  ProlongAudit rep;
  rep.epsilon = epsilon;
  double mismatch = 0.0, d4max = 0.0;
  struct Local {
    Vec pde_num, pde_den, ode_num, ode_den;
  };
  std::vector<Local> locals;
  std::vector<std::size_t> where;
  for (std::size_t i = 2; i + 2 < count; ++i) {
    const auto fm2 = flatten(secs[i - 2]), fm1 = flatten(secs[i - 1]), fp1 = flatten(secs[i + 1]),
               fp2 = flatten(secs[i + 2]);
    std::vector<Vec> dt(fields);
    for (std::size_t c = 0; c < fields; ++c) {
      dt[c] = (-*fp2[c] + 8.0 * *fp1[c] - 8.0 * *fm1[c] + *fm2[c]) / (12.0 * h);
      const Vec d2 = (*fp1[c] - *fm1[c]) / (2.0 * h);
      mismatch = std::max(mismatch, (d2 - dt[c]).cwiseAbs().maxCoeff());
      d4max = std::max(d4max, dt[c].cwiseAbs().maxCoeff());
    }
    const Vec& u = a.u[i];
    const Tensor3 G = christoffel_field(grid, u);
    const ProlongedSections& s = secs[i];
    const Vec w2 = (-2.0 * u.array()).exp().matrix();
    const Vec w4 = (-4.0 * u.array()).exp().matrix();
    const ProlongedNorms n = prolonged_norms(s, u);

    const Vec r0 = dt[0] + w2.cwiseProduct(flat_laplacian(sp, s.X0));
    const std::array<Vec, 2> lap1 = rough_laplacian(sp, s.X1, G, u);
    const std::array<Vec, 2> r1{dt[1] + lap1[0], dt[2] + lap1[1]};
    Local loc;
    loc.pde_num = r0.cwiseAbs() + weighted_norm(r1, w2);
    loc.pde_den = n.X + n.Y;

    Tensor2 dY0;
    Tensor3 dY1;
    Tensor4 dY2;
    for (int c = 0; c < 4; ++c) dY0[c] = dt[3 + c];
    for (int c = 0; c < 8; ++c) dY1[c] = dt[7 + c];
    for (int c = 0; c < 16; ++c) dY2[c] = dt[15 + c];
    loc.ode_num = weighted_norm(dY0, w4) + weighted_norm(dY1, w2) + weighted_norm(dY2, w4);
    const std::array<Vec, 2> dX0{d(sp, s.X0, 0), d(sp, s.X0, 1)};
    const Tensor2 dX1 = covariant_derivative(sp, s.X1, G);
    loc.ode_den = n.X + n.Y + weighted_norm(dX0, w2) + weighted_norm(dX1, w4);
    locals.push_back(std::move(loc));
    where.push_back(i);
  }
  rep.time_mismatch = d4max > 0.0 ? mismatch / d4max : 0.0;
  if (rep.time_mismatch > max_mismatch) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "time sampling too coarse: 2nd/4th-order tau differences disagree by %.3g (limit %.3g); reduce dt",
                  rep.time_mismatch, max_mismatch);
    throw Refused(buf);
  }
  double pde_scale = 0.0, ode_scale = 0.0;
  for (const auto& l : locals) {
    pde_scale = std::max(pde_scale, l.pde_den.maxCoeff());
    ode_scale = std::max(ode_scale, l.ode_den.maxCoeff());
  }
  double worst = -1.0;
  for (std::size_t k = 0; k < locals.size(); ++k) {
    const Local& l = locals[k];
    for (Index p = 0; p < grid.size(); ++p) {
      if (l.pde_den[p] >= 1e-14 * pde_scale && l.pde_den[p] > 0.0) {
        const double r = l.pde_num[p] / l.pde_den[p];
        rep.C_pde = std::max(rep.C_pde, r);
        if (r > worst) {
          worst = r;
          rep.worst_point = {grid.point(p)[0], grid.point(p)[1]};
          rep.worst_time = a.tau[where[k]];
        }
      }
      if (l.ode_den[p] >= 1e-14 * ode_scale && l.ode_den[p] > 0.0) {
        const double r = l.ode_num[p] / l.ode_den[p];
        rep.C_ode = std::max(rep.C_ode, r);
        if (r > worst) {
          worst = r;
          rep.worst_point = {grid.point(p)[0], grid.point(p)[1]};
          rep.worst_time = a.tau[where[k]];
        }
      }
    }
  }
  rep.C0_empirical = std::max(rep.C_pde, rep.C_ode);
  return rep;
}

}  // namespace logcvx
