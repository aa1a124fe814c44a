#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "logcvx/localization.hpp"
#include "support.hpp"

using namespace logcvx;
using oracle::rel;

namespace {

// central difference of order m of f at s with step h (fourth-order accurate in h for m <= 2, second for m > 2)
template <class F>
double fd(F f, double s, int m, double h) {
  switch (m) {
    case 1: return (-f(s + 2 * h) + 8 * f(s + h) - 8 * f(s - h) + f(s - 2 * h)) / (12 * h);
    case 2: return (-f(s + 2 * h) + 16 * f(s + h) - 30 * f(s) + 16 * f(s - h) - f(s - 2 * h)) / (12 * h * h);
    case 3: return (f(s + 2 * h) - 2 * f(s + h) + 2 * f(s - h) - f(s - 2 * h)) / (2 * h * h * h);
    default: return (f(s + 2 * h) - 4 * f(s + h) + 6 * f(s) - 4 * f(s - h) + f(s - 2 * h)) / (h * h * h * h);
  }
}

Trajectory frozen(const TorusGrid& g, const Vec& x, int count) {
  Trajectory t;
  t.geometry = flat_geometry(g);
  for (int i = 0; i < count; ++i) {
    TrajectorySample s;
    s.tau = 0.01 * i;
    s.X = Section::scalar(g, x);
    s.dX = s.Y = s.dY = Section::zero(g, 1);
    t.samples.push_back(s);
  }
  return t;
}

}  // namespace

TEST_CASE("rho closed forms") {
  const TorusGrid g = TorusGrid::make(1, 64, 32.0);
  const WeightProfile w = build_rho(g, 16.0);
  const Index c = g.index(32), one = g.index(34);  // h = 0.5
  CHECK(w.rho[0][c] == 1.0);
  CHECK(w.r[one] == doctest::Approx(1.0));
  CHECK(w.rho[0][one] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  const double ratio = w.rho[0][one] / (1.0 + w.r[one]);
  CHECK(ratio >= 1.0 / std::sqrt(2.0));
  CHECK(ratio <= std::sqrt(2.0));
  CHECK(w.rho[1].cwiseAbs().maxCoeff() < 1.0);
  CHECK(w.safe_radius == 8.0);
}

TEST_CASE("rho comparison and derivative bounds (property)") {
  oracle::FieldGen gen(17);
  for (int trial = 0; trial < 5; ++trial) {
    const double L = gen.uniform(20, 80);
    const TorusGrid g = TorusGrid::make(1, 128, L);
    const double center = gen.uniform(0, L);
    const WeightProfile w = build_rho(g, center);
    auto f = [](double s) { return std::sqrt(1 + s * s); };
    for (Index p = 0; p < g.size(); ++p) {
      CHECK(w.rho[0][p] >= (1 + w.r[p]) / w.C1);
      CHECK(w.rho[0][p] <= (1 + w.r[p]) * w.C1);
      if (w.r[p] > w.safe_radius) continue;
      double s = g.point(p)[0] - center;
      s -= L * std::round(s / L);
      for (int m = 1; m <= 4; ++m) {
        CHECK(std::abs(w.rho[m][p]) <= w.C2);
        CHECK(std::abs(w.rho[m][p] - fd(f, s, m, 1e-2)) < (m <= 2 ? 1e-6 : 5e-3));
      }
    }
  }
}

TEST_CASE("smoothstep values and derivatives") {
  for (int sm : {2, 4}) {
    const auto a = smoothstep(0.0, sm), b = smoothstep(1.0, sm);
    CHECK(a[0] == 0.0);
    CHECK(b[0] == 1.0);
    for (int m = 1; m <= sm; ++m) {
      CHECK(std::abs(a[m]) < 1e-12);
      CHECK(std::abs(b[m]) < 1e-12);
    }
    // monomial coefficients c[j] of t^j, differentiated term by term
    std::vector<double> c = sm == 2 ? std::vector<double>{0, 0, 0, 10, -15, 6}
                                    : std::vector<double>{0, 0, 0, 0, 0, 126, -420, 540, -315, 70};
    for (double t : {0.2, 0.5, 0.77}) {
      std::vector<double> d = c;
      for (int m = 0; m <= 4; ++m) {
        double v = 0.0;
        for (std::size_t j = 0; j < d.size(); ++j) v += d[j] * std::pow(t, double(j));
        CHECK(std::abs(smoothstep(t, sm)[m] - v) < 1e-10 * (1 + std::abs(v)));
        for (std::size_t j = 0; j + 1 < d.size(); ++j) d[j] = d[j + 1] * double(j + 1);
        d.back() = 0.0;
      }
    }
    CHECK(smoothstep(-0.5, sm)[0] == 0.0);
    CHECK(smoothstep(1.5, sm)[0] == 1.0);
  }
  CHECK(smoothstep(0.5, 2)[1] == doctest::Approx(15.0 / 8.0));
}

TEST_CASE("cutoff support and a single C3 over radii") {
  const TorusGrid g = TorusGrid::make(1, 512, 128.0);
  const WeightProfile w = build_rho(g, 64.0);
  double first_C3 = 0.0;
  for (double R : {2.0, 4.0, 8.0}) {
    const WeightProfile c = build_cutoff(w, R);
    for (Index p = 0; p < g.size(); ++p) {
      if (c.r[p] < R) CHECK(c.phi[0][p] == 1.0);
      if (c.r[p] > 2 * R) CHECK(c.phi[0][p] == 0.0);
    }
    const double max_d1 = c.phi[1].cwiseAbs().maxCoeff();
    // phi' = -S'(t) rho' / (rho_2R - rho_R), S' <= 15/8
    const double width = std::sqrt(1 + 4 * R * R) - std::sqrt(1 + R * R);
    CHECK(max_d1 <= 15.0 / 8.0 / width + 1e-12);
    CHECK(max_d1 >= 0.8 * 15.0 / 8.0 / width);
    if (first_C3 == 0.0) first_C3 = c.C3;
    CHECK((c.phi[1].cwiseAbs() + c.phi[2].cwiseAbs()).maxCoeff() <= first_C3 + 1e-12);
  }
  CHECK_THROWS_AS(build_cutoff(w, 20.0), ConfigError);
  CHECK_THROWS_AS(build_rho(TorusGrid::make(2, 16), 1.0), DimensionError);
  CHECK(weight_rate(2.0, 3.0) == 3.0);
}

TEST_CASE("weighted localization") {
  const TorusGrid g = TorusGrid::make(1, 256, 64.0);
  const Index p = 100;
  const WeightProfile w = build_cutoff(build_rho(g, g.point(p)[0] - std::sqrt(3.0)), 4.0);
  CHECK(w.rho[0][p] == doctest::Approx(2.0).epsilon(1e-14));
  const Section one = Section::scalar(g, Vec::Ones(g.size()));
  const auto [Xt, Yt] = weighted_localize(one, Section::zero(g, 1), w);
  CHECK(Xt.value()(p, 0) == doctest::Approx(std::exp(-6.0)).epsilon(1e-13));
  CHECK(Yt.value().cwiseAbs().maxCoeff() == 0.0);
  const auto zero = weighted_localize(Section::zero(g, 1), Section::zero(g, 1), w);
  CHECK(zero.first.value().cwiseAbs().maxCoeff() == 0.0);
  // compact support inside B_R: cutoff inactive
  Vec bump = Vec::Zero(g.size());
  for (Index q = 0; q < g.size(); ++q)
    if (w.r[q] < 3.0) bump[q] = std::exp(-1.0 / (1.0 - w.r[q] * w.r[q] / 9.0));
  const auto loc = weighted_localize(Section::scalar(g, bump), Section::zero(g, 1), w);
  const Vec expect = (-3.0 * w.rho[0]).array().exp() * bump.array();
  CHECK((loc.first.value().col(0) - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cutoff limit on the heat kernel") {
  const TorusGrid g = TorusGrid::make(1, 512, 128.0);
  const Trajectory t = heat_kernel_trajectory(g, 64.0, 1.0, 0.5, 101);
  const CutoffReport r = cutoff_limit_experiment(t, build_rho(g, 64.0), {16, 4, 8});
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].R == 4.0);
  CHECK(r.rows[0].max_dev > r.rows[1].max_dev);
  CHECK(r.rows[1].max_dev >= r.rows[2].max_dev);
  for (int i = 0; i + 1 < 3; ++i) CHECK(r.rows[i + 1].correction <= std::exp(-8.0) * r.rows[i].correction * (1 + 1e-9));
  for (const auto& row : r.rows) CHECK(row.bound_ok);
  CHECK(r.monotone_ok);
  CHECK(r.decay_ok);
  CHECK(r.c3_ok);
  CHECK(r.pass);
}

TEST_CASE("heat kernel trajectory solves the backward heat equation") {
  const TorusGrid g = TorusGrid::make(1, 512, 128.0);
  const Trajectory t = heat_kernel_trajectory(g, 64.0, 1.0, 0.5, 101);
  const FrequencyTrace tr = frequency_trace(t);
  CHECK(tr.summarize().max_res_l2ev < 1e-8);
  CHECK(tr.summarize().max_res_h1arr1 < 1e-10);
}

TEST_CASE("compact data inside B_Rmin gives identical localized energies") {
  const TorusGrid g = TorusGrid::make(1, 512, 128.0);
  const WeightProfile w = build_rho(g, 64.0);
  Vec bump = Vec::Zero(g.size());
  for (Index q = 0; q < g.size(); ++q)
    if (w.r[q] < 2.0) bump[q] = std::exp(-1.0 / (1.0 - w.r[q] * w.r[q] / 4.0));
  const CutoffReport r = cutoff_limit_experiment(frozen(g, bump, 11), w, {4, 8, 16});
  for (std::size_t i = 0; i < r.tau.size(); ++i) {
    CHECK(r.rows[1].E[i] == r.rows[0].E[i]);
    CHECK(r.rows[2].E[i] == r.rows[0].E[i]);
  }
}

TEST_CASE("zero trajectory and support refusal") {
  const TorusGrid g = TorusGrid::make(1, 512, 128.0);
  const WeightProfile w = build_rho(g, 64.0);
  const CutoffReport z = cutoff_limit_experiment(frozen(g, Vec::Zero(g.size()), 11), w, {4, 8, 16});
  CHECK(z.trivially_zero);
  CHECK(z.pass);
  const Trajectory wide = heat_kernel_trajectory(g, 64.0, 50.0, 0.5, 11);
  CHECK_THROWS_AS(cutoff_limit_experiment(wide, w, {4, 8, 16}), Refused);
}
