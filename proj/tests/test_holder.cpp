#include <cmath>

#include "doctest.h"
#include "kinokit/holder.hpp"

using namespace kinokit;

namespace {

SeminormSpec small_spec() {
  SeminormSpec sp;
  sp.base_points = 8;
  sp.shells = 6;
  sp.directions = 16;
  return sp;
}

Point at(double t, Vec x, Vec v) { return {t, x, v}; }

}  // namespace

TEST_CASE("kinetic degree") {
  KMultiIndex tx;
  tx.a0 = 1;
  tx.ax[0] = 1;
  CHECK(kdeg(tx, 0.5) == doctest::Approx(3.0));
  KMultiIndex vv;
  vv.av[0] = 2;
  CHECK(kdeg(vv, 0.25) == doctest::Approx(2.0));
  KMultiIndex t;
  t.a0 = 1;
  CHECK(kdeg(t, 0.25) == doctest::Approx(0.5));
  CHECK(kdeg(KMultiIndex{}, 0.3) == 0.0);
}

TEST_CASE("monomials scale with their kinetic degree") {
  const double s = 0.3, r = 1.7;
  const Point z = at(0.4, Vec{0.3, -0.2, 0.9}, Vec{1.1, 0.5, -0.7});
  for (const auto& m : monomials_below(3, s, 3.0))
    CHECK(monomial(m, dilate(r, z, s)) == doctest::Approx(std::pow(r, kdeg(m, s)) * monomial(m, z)));
}

TEST_CASE("monomial counts") {
  CHECK(monomials_below(3, 0.5, 1.0).size() == 1);
  CHECK(monomials_below(3, 0.5, 2.0).size() == 5);
  CHECK(monomials_below(3, 0.5, 2.5).size() == 18);
  CHECK(monomials_below(2, 0.5, 2.0).size() == 4);
  for (const auto& m : monomials_below(3, 0.25, 2.2)) CHECK(kdeg(m, 0.25) < 2.2);
}

TEST_CASE("Taylor expansion of simple functions") {
  const double s = 0.5;
  const Point z0 = at(0.2, Vec{0.1, 0.0, -0.3}, Vec{2.0, 0.0, 0.0});

  const auto c = taylor_expansion([](const Point&) { return 3.0; }, z0, 2.5, s);
  CHECK(c.degree() == 0.0);
  CHECK(c.terms.at(KMultiIndex{}) == doctest::Approx(3.0));

  const auto pv = taylor_expansion([](const Point& z) { return z.v[0]; }, z0, 2.5, s);
  KMultiIndex v1;
  v1.av[0] = 1;
  CHECK(pv.terms.at(v1) == doctest::Approx(1.0));
  CHECK(pv.terms.at(KMultiIndex{}) == doctest::Approx(2.0));

  KMultiIndex tt;
  tt.a0 = 1;
  const auto pt = taylor_expansion([](const Point& z) { return z.t; }, z0, 1.5, s);
  CHECK(pt.terms.at(tt) == doctest::Approx(1.0));
  CHECK(pt.terms.at(KMultiIndex{}) == doctest::Approx(0.2));

  // x1 transported by the base velocity: f(z0 o xi) = x0 + xi_x + xi_t v0
  const auto px = taylor_expansion([](const Point& z) { return z.x[0]; }, z0, 2.5, s);
  KMultiIndex x1;
  x1.ax[0] = 1;
  CHECK(px.terms.at(tt) == doctest::Approx(2.0));
  CHECK(px.terms.at(x1) == doctest::Approx(1.0));

  CounterRng rng(11);
  for (int i = 0; i < 20; ++i) {
    Point z{0.2 + 0.3 * rng.uniform(-1, 1), 0.3 * rng.in_ball(3), Vec{2.0, 0.0, 0.0} + 0.3 * rng.in_ball(3)};
    CHECK(px.eval(z) == doctest::Approx(z.x[0]).epsilon(1e-8));
  }
}

TEST_CASE("zero polynomial has degree -inf") {
  const auto p = taylor_expansion([](const Point&) { return 0.0; }, Point::origin(3), 2.0, 0.5);
  CHECK(p.degree() == KPolynomial::kZeroDegree);
}

TEST_CASE("seminorm of exact cases") {
  const double s = 0.5;
  const Cylinder Q{Point::origin(3), 1.0};
  const auto sp = small_spec();
  CHECK(seminorm_est([](const Point&) { return 1.0; }, Q, 0.5, s, sp).value <= 1e-12);
  CHECK(seminorm_est([](const Point& z) { return z.v[0]; }, Q, 1.5, s, sp).value < 1e-6);
  CHECK(seminorm_est([](const Point& z) { return z.v[0] * z.v[1] + z.t; }, Q, 2.5, s, sp).value < 1e-6);
}

TEST_CASE("time coordinate has unit C1 seminorm at s = 1/2") {
  const Cylinder Q{Point::origin(3), 1.0};
  const auto est = seminorm_est([](const Point& z) { return z.t; }, Q, 1.0, 0.5, small_spec());
  CHECK(est.value == doctest::Approx(1.0).epsilon(0.05));
  CHECK(est.sup_abs == doctest::Approx(1.0).epsilon(0.05));
  CHECK(est.inf_val < est.sup_val);
}

TEST_CASE("seminorm increases under refinement") {
  const Cylinder Q{Point::origin(3), 1.0};
  PhaseFn f = [](const Point& z) { return std::sin(3 * z.v[0]) * std::cos(z.x[1]) + z.t * z.t; };
  auto sp = small_spec();
  const double coarse = seminorm_est(f, Q, 0.7, 0.5, sp).value;
  sp.directions *= 2;
  sp.base_points *= 2;
  const double fine = seminorm_est(f, Q, 0.7, 0.5, sp).value;
  CHECK(fine >= coarse);
  CHECK(coarse > 0.0);
}

TEST_CASE("seminorm is deterministic") {
  const Cylinder Q{Point::origin(3), 1.0};
  PhaseFn f = [](const Point& z) { return std::exp(-norm2(z.v)) * (1 + z.t); };
  const auto a = seminorm_est(f, Q, 0.5, 0.25, small_spec());
  const auto b = seminorm_est(f, Q, 0.5, 0.25, small_spec());
  CHECK(a.value == b.value);
  CHECK(a.samples == b.samples);
}

TEST_CASE("weighted norm of a Gaussian decreases with the speed weight") {
  PhaseFn f = [](const Point& z) { return std::exp(-0.5 * norm2(z.v)); };
  const auto lo = weighted_norm_est(f, {0.0, 2.0, 4.0}, Vec{1.0, 0.0, 0.0}, 0.5, 0.0, 0.5, small_spec());
  const auto hi = weighted_norm_est(f, {0.0, 2.0, 4.0}, Vec{1.0, 0.0, 0.0}, 0.5, 2.0, 0.5, small_spec());
  CHECK(lo.per_speed.size() == 3);
  CHECK(hi.value >= lo.value);
  CHECK(lo.per_speed[0].second > lo.per_speed[2].second);
}

TEST_CASE("right increments") {
  PhaseFn x1 = [](const Point& z) { return z.x[0]; };
  PhaseFn v1 = [](const Point& z) { return z.v[0]; };
  const Point z = at(0.3, Vec{1.0, 2.0, 0.0}, Vec{0.5, 0.0, 0.0});
  CHECK(increment_x(x1, Vec{0.25, 0.0, 0.0})(z) == doctest::Approx(0.25));
  CHECK(increment_v(v1, Vec{0.5, 0.0, 0.0})(z) == doctest::Approx(0.5));
  CHECK(increment_v(x1, Vec{0.5, 0.0, 0.0})(z) == 0.0);
}

TEST_CASE("interpolation and product inequalities") {
  const Cylinder Q{Point::origin(3), 1.0};
  PhaseFn f = [](const Point& z) { return std::sin(z.v[0] + 0.5 * z.x[1]) + 0.3 * z.t; };
  PhaseFn g = [](const Point& z) { return std::cos(z.v[1]) * (1 + 0.2 * z.t); };
  const auto ip = check_interpolation(f, Q, 0.25, 0.75, 1.5, 0.5, small_spec());
  CHECK(ip.pass);
  CHECK(ip.constants.at("ratio") <= 10.0);
  CHECK(check_product(f, g, Q, 0.5, 0.5, small_spec()).pass);
  CHECK_THROWS_AS(check_interpolation(f, Q, 0.5, 0.25, 1.0, 0.5, small_spec()), std::invalid_argument);
}

TEST_CASE("localization") {
  const Cylinder Q{Point::origin(3), 1.0};
  PhaseFn f = [](const Point& z) { return std::sin(2 * z.v[0]) + z.t; };
  CHECK(check_localization(f, Q, 0.5, 0.25, 0.5, small_spec()).pass);
}

TEST_CASE("increment bounds") {
  const Cylinder Q{Point::origin(3), 1.0};
  PhaseFn f = [](const Point& z) { return std::sin(z.v[0] + z.x[0]) + std::cos(z.t + z.v[1]); };
  const std::vector<Vec> ys{Vec{0.1, 0.0, 0.0}, Vec{0.0, 0.2, 0.0}, Vec{0.05, 0.05, 0.05}};
  CHECK(check_increment_x_bound(f, Q, 0.5, 0.5, ys, small_spec()).pass);
  CHECK_THROWS_AS(check_increment_x_bound(f, Q, 0.5, 0.5, {Vec{0.9, 0.0, 0.0}}, small_spec()),
                  std::invalid_argument);
  const std::vector<Vec> ws{Vec{0.1, 0.0, 0.0}, Vec{0.0, 0.3, 0.0}};
  CHECK(check_increment_v_bound(f, Q, 0.25, 0.25, ws, small_spec()).pass);
  CHECK_THROWS_AS(check_increment_v_bound(f, Q, 0.5, 0.5, ws, small_spec()), std::invalid_argument);
}
