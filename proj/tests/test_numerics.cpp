#include <cmath>
#include <numbers>

#include "doctest.h"
#include "kinokit/numerics.hpp"
#include "kinokit/parallel.hpp"

using namespace kinokit;

namespace {
double gauss3(const Vec& w, const Vec& c) {
  return std::pow(2.0 * std::numbers::pi, -1.5) * std::exp(-0.5 * norm2(w - c));
}
}  // namespace

TEST_CASE("integrate_1d is exact on polynomials") {
  QuadratureSpec q;
  auto r = integrate_1d([](double x) { return std::pow(x, 5) - 3 * x * x; }, 0.0, 2.0, q);
  CHECK(r.value == doctest::Approx(64.0 / 6.0 - 8.0).epsilon(1e-13));
  CHECK(r.converged);
}

TEST_CASE("integrate_1d resolves an algebraic endpoint singularity") {
  QuadratureSpec q;
  q.rel_tol = 1e-10;
  auto r = integrate_1d([](double x) { return std::pow(x, -0.5); }, 0.0, 1.0, q);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("hyperplane integral of a centred Gaussian is its marginal at zero") {
  QuadratureSpec q;
  q.rel_tol = 1e-10;
  const Vec e{0.0, 0.0, 1.0};
  auto r = integrate_hyperplane([](const Vec& w) { return gauss3(w, Vec::zero(3)); }, e, q, {{Vec::zero(3), 12.0}});
  CHECK(r.value == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-9));
}

TEST_CASE("hyperplane integral of the zero function") {
  auto r = integrate_hyperplane([](const Vec&) { return 0.0; }, Vec{1.0, 0.0, 0.0}, QuadratureSpec{});
  CHECK(r.value == 0.0);
}

TEST_CASE("hyperplane Gaussian moment matches the Gamma closed form") {
  const double kappa = 1.5;
  QuadratureSpec q;
  q.rel_tol = 1e-10;
  const Vec e = normalized(Vec{1.0, 2.0, -0.5});
  auto r = integrate_hyperplane([&](const Vec& w) { return gauss3(w, Vec::zero(3)) * std::pow(norm(w), kappa); }, e,
                                q, {{Vec::zero(3), 12.0}});
  const double oracle = std::pow(2.0 * std::numbers::pi, -0.5) * std::pow(2.0, kappa / 2) * std::tgamma(kappa / 2 + 1);
  CHECK(oracle == doctest::Approx(0.6166).epsilon(1e-3));
  CHECK(r.value == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("hyperplane integral with off-centre support far from the origin") {
  QuadratureSpec q;
  q.rel_tol = 1e-10;
  const Vec c{30.0, -4.0, 0.3};
  const Vec e{0.0, 0.0, 1.0};
  auto r = integrate_hyperplane([&](const Vec& w) { return gauss3(w, c); }, e, q, {{c, 12.0}});
  CHECK(r.value == doctest::Approx(std::exp(-0.045) / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-9));
}

TEST_CASE("line integral in two dimensions") {
  QuadratureSpec q;
  q.rel_tol = 1e-10;
  const Vec c{0.0, 0.7};
  auto g = [&](const Vec& w) { return std::exp(-0.5 * norm2(w - c)) / (2.0 * std::numbers::pi); };
  auto r = integrate_hyperplane(g, Vec{0.0, 1.0}, q, {{c, 12.0}});
  CHECK(r.value == doctest::Approx(std::exp(-0.245) / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-9));
}

TEST_CASE("sphere grids carry the sphere area and integrate quadratics") {
  for (int d : {2, 3}) {
    const auto dirs = sphere_grid(d, d == 3 ? 2048 : 512);
    double acc = 0.0;
    for (const auto& s : dirs) acc += s[0] * s[0];
    acc *= sphere_area(d) / dirs.size();
    CHECK(acc == doctest::Approx(sphere_area(d) / d).epsilon(1e-5));
  }
  CHECK(sphere_area(3) == doctest::Approx(4.0 * std::numbers::pi));
  CHECK(ball_volume(2) == doctest::Approx(std::numbers::pi));
}

TEST_CASE("pv ring integral: odd integrands cancel") {
  PvSpec ps;
  ps.directions = 128;
  const Vec c{0.3, -0.1, 0.2};
  auto r = pv_ring_integral([&](const Vec& v) { return (v[0] - c[0]) / std::pow(norm(v - c), 3.5); }, c, 1e-3, 1.0, ps);
  CHECK(std::abs(r.value) < 1e-9);
}

TEST_CASE("pv ring integral: constants give the annulus volume") {
  PvSpec ps;
  ps.directions = 64;
  const double eps = 1e-2, R = 2.0;
  auto r = pv_ring_integral([](const Vec&) { return 3.0; }, Vec::zero(3), eps, R, ps);
  CHECK(r.ladder[0] == doctest::Approx(3.0 * ball_volume(3) * (R * R * R - eps * eps * eps)).epsilon(1e-12));
}

TEST_CASE("pv ring integral of a capped singular kernel matches direct radial quadrature") {
  const double s = 0.25;
  const int d = 3;
  PvSpec ps;
  ps.directions = 64;
  ps.core_exponent = 2.0 - 2.0 * s;
  ps.ladder_steps = 6;
  ps.quad.rel_tol = 1e-12;
  auto g = [&](const Vec& v) {
    const double r = norm(v);
    return std::pow(r, -d - 2 * s + 2) * std::exp(-r * r);
  };
  auto r = pv_ring_integral(g, Vec::zero(3), 1e-3, 2.0, ps);
  QuadratureSpec q;
  q.rel_tol = 1e-13;
  const double direct =
      sphere_area(3) * integrate_1d([&](double x) { return std::pow(x, 1 - 2 * s) * std::exp(-x * x); }, 0.0, 2.0, q).value;
  CHECK(r.value == doctest::Approx(direct).epsilon(1e-6));
}

TEST_CASE("fit_power_law") {
  auto f = fit_power_law({{1, 1}, {2, 4}, {4, 16}});
  CHECK(f.exponent == doctest::Approx(2.0));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK(fit_power_law({{1, 2}, {2, 1}, {4, 0.5}}).exponent == doctest::Approx(-1.0));
  CounterRng rng(7);
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 20; ++i) {
    const double x = 1.0 + i;
    pts.emplace_back(x, 3.0 * std::pow(x, 1.5) * (1.0 + 0.01 * rng.uniform(-1, 1)));
  }
  CHECK(fit_power_law(pts).exponent == doctest::Approx(1.5).epsilon(0.05 / 1.5));
  CHECK_THROWS(fit_power_law({{1, 1}, {2, 2}}));
  CHECK_THROWS(fit_power_law({{1, 1}, {2, -2}, {3, 1}}));
}

TEST_CASE("mc_integrate: ball volume and Gaussian second moment") {
  auto r = mc_integrate([](const Vec&) { return 1.0; }, uniform_ball_sampler(3, Vec::zero(3), 1.0), 4000, 1);
  CHECK(r.value == doctest::Approx(ball_volume(3)).epsilon(1e-12));
  auto g = mc_integrate([](const Vec& x) { return norm2(x) * gauss3(x, Vec::zero(3)); },
                        gaussian_sampler(3, Vec::zero(3), 1.0), 20000, 42);
  CHECK(std::abs(g.value - 3.0) < 3.0 * g.std_error);
}

TEST_CASE("mc_integrate is reproducible and worker-count invariant") {
  auto g = [](const Vec& x) { return std::cos(x[0]) + x[1] * x[1]; };
  auto smp = uniform_ball_sampler(3, Vec::zero(3), 2.0);
  set_default_workers(1);
  auto a = mc_integrate(g, smp, 5000, 99);
  set_default_workers(8);
  auto b = mc_integrate(g, smp, 5000, 99);
  set_default_workers(1);
  CHECK(a.value == b.value);
  CHECK(a.std_error == b.std_error);
  auto c = mc_integrate(g, smp, 5000, 100);
  CHECK(c.value != a.value);
}

TEST_CASE("pairwise_sum and seeds") {
  CHECK(pairwise_sum({1.0, 2.0, 3.0, 4.0, 5.0}) == 15.0);
  CHECK(pairwise_sum({}) == 0.0);
  CHECK(derive_seed(42, 1) != derive_seed(42, 2));
  CHECK(derive_seed(42, 1, 2) == derive_seed(42, 1, 2));
}
