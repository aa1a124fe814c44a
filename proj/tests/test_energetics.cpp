#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "logcvx/energetics.hpp"
#include "support.hpp"

using namespace logcvx;
using oracle::rel;

namespace {

Section mode(const TorusGrid& g, double k, bool cosine = false) {
  return Section::scalar(g, sample(g, [&](const Point& p) { return cosine ? std::cos(k * p.x()) : std::sin(k * p.x()); }));
}

std::vector<EnergyReport> reports(const Trajectory& t) {
  std::vector<EnergyReport> out;
  for (const auto& s : t.samples) out.push_back(evaluate(s, t.geometry.at(s.tau), t.order));
  return out;
}

}  // namespace

TEST_CASE("energy examples") {
  const TorusGrid g = TorusGrid::make(1, 32);
  const GeometrySample s = flat_geometry(g).at(0);
  const Section Z = Section::zero(g, 1);
  CHECK(energy(mode(g, 1), Z, s).E == doctest::Approx(kPi).epsilon(1e-14));
  CHECK(energy(Z, Z, s).E == 0.0);
  const EnergyParts p = energy(mode(g, 1), mode(g, 1, true), s);
  CHECK(p.E == doctest::Approx(2 * kPi).epsilon(1e-14));
  CHECK(p.X2 == doctest::Approx(kPi).epsilon(1e-14));
  CHECK(p.Y2 == doctest::Approx(kPi).epsilon(1e-14));
}

TEST_CASE("dirichlet examples") {
  const TorusGrid g = TorusGrid::make(1, 32);
  CHECK(dirichlet(mode(g, 3), flat_geometry(g).at(0)) == doctest::Approx(9 * kPi).epsilon(1e-13));
  CHECK(dirichlet(Section::scalar(g, Vec::Constant(32, 4.0)), flat_geometry(g).at(0)) < 1e-25);
  Geometry two = flat_geometry(g);
  two.coefficient.lambda = [](const Point&, double) -> SpaceMat { return 2.0 * identity_space(1); };
  CHECK(dirichlet(mode(g, 3), two.at(0)) == doctest::Approx(18 * kPi).epsilon(1e-13));
}

TEST_CASE("error terms vanish on flat-static") {
  oracle::FieldGen gen(2);
  const TorusGrid g = TorusGrid::make(2, 12);
  const GeometrySample s = build_preset("flat-static", g).at(0.3);
  const Section X = Section::scalar(g, gen.field(g, 4)), Y = Section::scalar(g, gen.field(g, 4));
  const ErrorTerms t = error_terms(X, Y, grad_hat(X, s), s);
  CHECK(t.I1 == 0.0);
  CHECK(t.I2 == 0.0);
}

TEST_CASE("breathing error terms against direct quadrature of the closed-form integrands") {
  const TorusGrid g = TorusGrid::make(1, 32);
  PresetOptions o;
  o.amplitude = 0.1;
  const Geometry geo = build_preset("conformal-breathing", g, o);
  for (double tau : {0.0, 0.8}) {
    const GeometrySample s = geo.at(tau);
    const Section X = mode(g, 1);
    const ErrorTerms t = error_terms(X, Section::zero(g, 1), grad_hat(X, s), s);
    // d = 1: g = e^{2a sin tau}, sqrt g = e^{a sin tau}, B = 2a cos tau, Lambda = 1/g
    const double a = 0.1, B = 2 * a * std::cos(tau), dens = std::exp(a * std::sin(tau));
    const double lam = std::exp(-2 * a * std::sin(tau)), dlam = -2 * a * std::cos(tau) * lam;
    const Vec sin2 = sample(g, [](const Point& p) { return std::sin(p.x()) * std::sin(p.x()); });
    const Vec cos2 = sample(g, [](const Point& p) { return std::cos(p.x()) * std::cos(p.x()); });
    const double I1 = oracle::trapezoid(g, (B / 2) * dens * sin2);
    const double I2 = oracle::trapezoid(g, (dlam + B / 2 * lam) * dens * cos2);
    CHECK(rel(t.I1, I1) < 1e-13);
    CHECK(rel(t.I2, I2) < 1e-13);
  }
}

TEST_CASE("time-dependent fiber metric: I1 against dE/dtau of a frozen section") {
  const TorusGrid g = TorusGrid::make(1, 32);
  Geometry geo = flat_geometry(g);
  geo.bundle.gamma = [](const Point&, double t) -> FiberMat { return std::exp(t) * identity_fiber(1); };
  geo.bundle.beta = [](const Point&, double t) -> FiberMat { return std::exp(t) * identity_fiber(1); };
  geo.is_static = false;
  const Section Y = mode(g, 1), X = Section::zero(g, 1);
  const double tau = 0.3, d = 1e-4;
  const GeometrySample s = geo.at(tau);
  const double I1 = error_terms(X, Y, grad_hat(X, s), s).I1;
  const double fd = (energy(X, Y, geo.at(tau + d)).E - energy(X, Y, geo.at(tau - d)).E) / (2 * d);
  CHECK(rel(I1, std::exp(tau) * kPi) < 1e-13);
  CHECK(rel(I1, fd) < 1e-8);
}

TEST_CASE("l2ev on the exact backward heat mode") {
  const TorusGrid g = TorusGrid::make(1, 32);
  for (int k : {1, 3}) {
    const Trajectory t = oracle::exact_modes(g, {{k, 1.0}}, 0.02, 21);
    const auto r = reports(t);
    for (std::size_t i = 0; i < r.size(); ++i) {
      CHECK(rel(r[i].E, kPi * std::exp(2.0 * k * k * r[i].tau)) < 1e-12);
      CHECK(rel(l2ev_rhs_first(r[i]), 2.0 * k * k * r[i].E) < 1e-12);
      CHECK(rel(l2ev_rhs_second(r[i]), 2.0 * k * k * r[i].E) < 1e-12);
      StencilQuality q;
      const double res = check_identity_l2ev(r, i, &q);
      if (q == StencilQuality::full) CHECK(res <= 1e-6);
      CHECK(check_identity_l2ev_forms(r[i]) <= 1e-12);
    }
  }
}

TEST_CASE("identities on the zero trajectory are exactly zero") {
  const TorusGrid g = TorusGrid::make(1, 16);
  const Trajectory t = oracle::exact_modes(g, {{1, 0.0}}, 0.02, 11);
  const auto r = reports(t);
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(check_identity_l2ev(r, i) == 0.0);
    CHECK(check_identity_h1ev(r, i) == 0.0);
    CHECK(check_identity_h1arr1(r[i]) == 0.0);
    CHECK_FALSE(r[i].N.has_value());
    CHECK_THROWS_AS(frequency_sandwich(r[i]), UndefinedFrequency);
  }
}

TEST_CASE("breathing metric, frozen X: dE/dtau is the I1 value") {
  const TorusGrid g = TorusGrid::make(1, 32);
  const Geometry geo = build_preset("conformal-breathing", g);
  Trajectory t;
  t.geometry = geo;
  for (int i = 0; i < 21; ++i) {
    TrajectorySample s;
    s.tau = 0.5 + 1e-3 * i;
    s.X = mode(g, 2);
    s.dX = Section::zero(g, 1);
    s.Y = s.dY = Section::zero(g, 1);
    t.samples.push_back(s);
  }
  const auto r = reports(t);
  std::vector<double> tau, E;
  for (const auto& x : r) tau.push_back(x.tau), E.push_back(x.E);
  for (std::size_t i = 4; i + 4 < r.size(); ++i) {
    // E = pi e^{a sin tau}: dE/dtau = a cos(tau) E, which is int (B/2)|X|^2
    const double a = 0.1;
    CHECK(rel(r[i].I1, a * std::cos(r[i].tau) * r[i].E) < 1e-12);
    CHECK(rel(sampled_derivative(tau, E, i).value, r[i].I1) < 1e-10);
  }
}

TEST_CASE("h1arr1 and h1ev on exact modes") {
  const TorusGrid g = TorusGrid::make(1, 32);
  const Trajectory t = oracle::exact_modes(g, {{2, 1.0}}, 0.02, 21);
  const auto r = reports(t);
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(rel(r[i].F, 0.5 * r[i].LFX_X) < 1e-12);
    CHECK(rel(r[i].F, 4.0 * r[i].E) < 1e-12);
    CHECK(check_identity_h1arr1(r[i]) < 1e-12);
    StencilQuality q;
    const double res = check_identity_h1ev(r, i, &q);
    if (q == StencilQuality::full) CHECK(res < 1e-6);
  }
}

TEST_CASE("h1arr1 is pure summation by parts for frozen random data (property)") {
  oracle::FieldGen gen(13);
  for (const auto& name : preset_names()) {
    const TorusGrid g = TorusGrid::make(1, 64);
    const Geometry geo = build_preset(name, g);
    for (int trial = 0; trial < 4; ++trial) {
      TrajectorySample s;
      s.tau = gen.uniform(0, 6);
      s.X = Section::from(g, gen.fields(g, geo.fiber_dim(), 12));
      s.dX = Section::zero(g, geo.fiber_dim());
      s.Y = Section::from(g, gen.fields(g, geo.fiber_dim(), 12));
      s.dY = Section::from(g, gen.fields(g, geo.fiber_dim(), 12));
      const EnergyReport r = evaluate(s, geo.at(s.tau));
      CHECK(check_identity_h1arr1(r) <= 1e-10);
      CHECK(r.E >= 0.0);
      CHECK(r.F >= 0.0);
      CHECK(std::abs(r.Ic - (r.I2 * r.E - r.I1 * r.F)) <= 1e-14 * (std::abs(r.I2 * r.E) + std::abs(r.I1 * r.F)));
      CHECK(check_identity_l2ev_forms(r) <= 1e-12);
      const Sandwich sw = frequency_sandwich(r);
      CHECK(sw.lower <= sw.upper);
    }
  }
}

TEST_CASE("frequency sandwich on exact solutions") {
  const TorusGrid g = TorusGrid::make(1, 32);
  SUBCASE("single mode: N constant, 0 inside the sandwich, lower = 0") {
    const Trajectory t = oracle::exact_modes(g, {{3, 1.0}}, 0.02, 21);
    const FrequencyTrace tr = frequency_trace(t);
    for (const auto& row : tr.rows) {
      CHECK(rel(*row.report.N, 9.0) < 1e-12);
      CHECK(std::abs(*row.sandwich_lower) < 1e-9);
      CHECK(*row.sandwich_lower <= 1e-9);
      CHECK(*row.sandwich_upper >= 0.0);
    }
    CHECK(tr.summarize().sandwich_ok);
  }
  SUBCASE("two modes: closed-form N and sampled dN inside the sandwich") {
    const std::vector<oracle::Mode> modes{{1, 1.0}, {2, 1.0}};
    const Trajectory t = oracle::exact_modes(g, modes, 0.05, 51);
    const FrequencyTrace tr = frequency_trace(t);
    CHECK(rel(*tr.rows[0].report.N, 2.5) < 1e-12);
    for (const auto& row : tr.rows) {
      CHECK(rel(*row.report.N, oracle::modes_frequency(modes, row.report.tau)) < 1e-10);
      CHECK(*row.sandwich_lower <= 1e-9);
    }
    const auto sum = tr.summarize();
    CHECK(sum.sandwich_ok);
    CHECK(sum.checked_rows > 40);
    CHECK(sum.max_res_l2ev < tr.budget);
    CHECK(sum.max_res_h1ev < tr.budget);
  }
}

TEST_CASE("discretization budget and thresholds") {
  CHECK(discretization_budget(1e-3, 1.0) == 1e-8);
  CHECK(discretization_budget(0.1, 1.0) == doctest::Approx(1e-3));
  CHECK(discretization_budget(1e-3, 1e6) == doctest::Approx(1e-6 > 1e-8 ? 1e-6 : 1e-8));
  CHECK(energy_threshold(TorusGrid::make(1, 64)) == doctest::Approx(64e-30));
}

TEST_CASE("higher-order functionals and flat operator") {
  const TorusGrid g = TorusGrid::make(1, 32);
  const GeometrySample s = flat_geometry(g).at(0);
  const Section X = mode(g, 2);
  CHECK(order_functional(X, 0, s) == doctest::Approx(4 * kPi).epsilon(1e-12));
  CHECK(order_functional(X, 1, s) == doctest::Approx(16 * kPi).epsilon(1e-12));
  CHECK(order_functional(X, 2, s) == doctest::Approx(64 * kPi).epsilon(1e-12));
  CHECK(order_functional(X, 3, s) == doctest::Approx(256 * kPi).epsilon(1e-12));
  // (-1)^k Delta^{k+1} sin 2x = (-1)^k (-4)^{k+1} sin 2x = -4^{k+1} sin 2x
  // round-off in the top modes is amplified by (n/2)^(2k+2)
  for (int k = 0; k <= 3; ++k)
    CHECK((flat_elliptic(X, k).value() + std::pow(4.0, k + 1) * X.value()).cwiseAbs().maxCoeff() <
          1e-14 * std::pow(16.0, 2 * k + 2));
}
