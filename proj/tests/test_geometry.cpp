#include <cmath>

#include "doctest.h"
#include "kinokit/geometry.hpp"

using namespace kinokit;

namespace {

Point random_point(CounterRng& rng, int d, double scale = 1.0) {
  Point z = Point::origin(d);
  z.t = scale * rng.uniform(-1, 1);
  z.x = scale * rng.in_ball(d);
  z.v = scale * rng.in_ball(d);
  return z;
}

double pdiff(const Point& a, const Point& b) {
  return std::abs(a.t - b.t) + norm(a.x - b.x) + norm(a.v - b.v);
}

// Independent oracle: the optimal w lies in the plane through v1, v2 and
// dx/dt, where the quasiconvex objective is minimised by a zooming grid.
double brute_distance(const Point& z1, const Point& z2, double s) {
  const double dt = z1.t - z2.t;
  const Vec dx = z1.x - z2.x;
  auto obj = [&](const Vec& w) {
    return std::max({std::pow(std::abs(dt), 1 / (2 * s)), std::pow(norm(dx - dt * w), 1 / (1 + 2 * s)),
                     norm(z1.v - w), norm(z2.v - w)});
  };
  const int d = z1.dim();
  std::vector<Vec> basis;
  auto push = [&](Vec u) {
    for (const auto& e : basis) u = u - dot(u, e) * e;
    if (norm(u) > 1e-12 && basis.size() < 2) basis.push_back(normalized(u));
  };
  push(z2.v - z1.v);
  if (dt != 0.0) push(dx / dt - z1.v);
  for (int i = 0; i < d; ++i) push(Vec::unit(d, i));
  const Vec c = 0.5 * (z1.v + z2.v);
  double half = norm(z1.v - z2.v) + (dt != 0.0 ? norm(dx / dt - c) : 0.0) + 1.0;
  double ca = 0.0, cb = 0.0, best = obj(c);
  const int n = 20;
  for (int round = 0; round < 60; ++round) {
    double ba = ca, bb = cb;
    for (int i = -n; i <= n; ++i)
      for (int j = -n; j <= n; ++j) {
        const double a = ca + half * i / n, b = cb + half * j / n;
        const double val = obj(c + a * basis[0] + b * basis[1]);
        if (val < best) {
          best = val;
          ba = a;
          bb = b;
        }
      }
    ca = ba;
    cb = bb;
    half *= 0.5;
  }
  return best;
}

double det3(std::array<std::array<double, 3>, 3> a, int n) {
  double det = 1.0;
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    if (a[p][c] == 0.0) return 0.0;
    if (p != c) {
      std::swap(a[p], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (int r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return det;
}

}  // namespace

TEST_CASE("group laws") {
  CounterRng rng(1);
  for (int d : {2, 3})
    for (int i = 0; i < 200; ++i) {
      const Point a = random_point(rng, d), b = random_point(rng, d), c = random_point(rng, d);
      CHECK(pdiff(compose(compose(a, b), c), compose(a, compose(b, c))) < 1e-12);
      CHECK(pdiff(compose(a, inverse(a)), Point::origin(d)) < 1e-12);
      CHECK(pdiff(compose(inverse(a), a), Point::origin(d)) < 1e-12);
      CHECK(pdiff(compose(Point::origin(d), a), a) == 0.0);
    }
}

TEST_CASE("composition formula") {
  const Point xi{1.0, Vec{1.0, 2.0, 3.0}, Vec{0.5, 0.0, -1.0}};
  const Point z{2.0, Vec{0.0, 1.0, 0.0}, Vec{1.0, 1.0, 1.0}};
  const Point c = compose(xi, z);
  CHECK(c.t == 3.0);
  CHECK(c.x == Vec{2.0, 3.0, 1.0});
  CHECK(c.v == Vec{1.5, 1.0, 0.0});
}

TEST_CASE("kinetic distance matches direct minimisation") {
  CounterRng rng(2);
  for (double s : {0.25, 0.5, 0.75})
    for (int i = 0; i < 30; ++i) {
      const Point a = random_point(rng, 3), b = random_point(rng, 3);
      const double exact = kdistance(a, b, s);
      const double brute = brute_distance(a, b, s);
      CHECK(exact <= brute + 1e-12);
      CHECK(brute <= exact * (1 + 1e-5));
    }
}

TEST_CASE("kinetic distance special cases") {
  const double s = 0.5;
  Point a = Point::origin(3), b = Point::origin(3);
  b.v = Vec{2.0, 0.0, 0.0};
  CHECK(kdistance(a, b, s) == doctest::Approx(1.0));
  b = Point::origin(3);
  b.t = -0.25;
  CHECK(kdistance(a, b, s) == doctest::Approx(0.25));
  b = Point::origin(3);
  b.x = Vec{4.0, 0.0, 0.0};
  CHECK(kdistance(a, b, s) == doctest::Approx(2.0));
  CHECK(kdistance(a, a, s) == 0.0);
}

TEST_CASE("invariance, scaling, symmetry, triangle inequality") {
  CounterRng rng(3);
  for (double s : {0.25, 0.5, 0.75})
    for (int i = 0; i < 100; ++i) {
      const Point a = random_point(rng, 3), b = random_point(rng, 3), c = random_point(rng, 3);
      const Point xi = random_point(rng, 3, 2.0);
      const double dab = kdistance(a, b, s);
      CHECK(std::abs(kdistance(compose(xi, a), compose(xi, b), s) - dab) < 1e-9);
      CHECK(std::abs(kdistance(b, a, s) - dab) < 1e-12);
      const double r = 0.1 + 3.0 * rng.uniform();
      CHECK(std::abs(kdistance(dilate(r, a, s), dilate(r, b, s), s) - r * dab) < 1e-9 * (1 + r));
      const double p = s >= 0.5 ? 1.0 : 2.0 * s;
      CHECK(std::pow(dab, p) <= std::pow(kdistance(a, c, s), p) + std::pow(kdistance(c, b, s), p) + 1e-9);
      CHECK(std::pow(knorm(compose(a, b), s), p) <= std::pow(knorm(a, s), p) + std::pow(knorm(b, s), p) + 1e-9);
      CHECK(std::abs(dab - knorm(compose(inverse(b), a), s)) < 1e-9);
    }
}

TEST_CASE("right translation estimate") {
  CounterRng rng(4);
  const double s = 0.5;
  for (int i = 0; i < 100; ++i) {
    const Point a = random_point(rng, 3), b = random_point(rng, 3);
    const Vec w = 3.0 * rng.in_ball(3);
    const Point sh{0.0, Vec::zero(3), w};
    const double lhs = kdistance(compose(a, sh), compose(b, sh), s);
    const double rhs = kdistance(a, b, s) + std::pow(std::abs(a.t - b.t) * norm(w), 1 / (1 + 2 * s));
    CHECK(lhs <= rhs + 1e-9);
  }
}

TEST_CASE("cylinder membership") {
  const double s = 0.5;
  Cylinder Q{Point::origin(3), 1.0};
  CHECK(cylinder_contains(Q, Point::origin(3), s));
  Point z = Point::origin(3);
  z.t = -1.0;
  CHECK_FALSE(cylinder_contains(Q, z, s));
  z.t = 0.1;
  CHECK_FALSE(cylinder_contains(Q, z, s));
  Point c = Point::origin(3);
  c.v = Vec{3.0, 0.0, 0.0};
  Cylinder Qc{c, 1.0};
  Point y = c;
  y.t = -0.5;
  y.x = Vec{-1.5, 0.0, 0.0};  // transported along v0
  CHECK(cylinder_contains(Qc, y, s));
  y.x = Vec::zero(3);
  CHECK_FALSE(cylinder_contains(Qc, y, s));
  CounterRng rng(5);
  for (int i = 0; i < 200; ++i) CHECK(cylinder_contains(Qc, sample_in_cylinder(Qc, s, rng), s));
}

TEST_CASE("velocity map T0") {
  ModelParams p;
  for (double sp : {2.0, 8.0, 64.0}) {
    const Vec v0 = sp * normalized(Vec{1.0, -2.0, 0.5});
    const CovMap M = make_cov_map(v0, p);
    CHECK(std::abs(det3(t0_matrix(M), 3) - 1.0 / sp) < 1e-12);
    const Vec perp = orthonormal_complement(M.direction)[0];
    CHECK(norm(t0_apply(M, perp) - perp) < 1e-15);
    CHECK(norm(t0_apply(M, v0) - M.direction) < 1e-12);
    CounterRng rng(6);
    for (int i = 0; i < 20; ++i) {
      const Vec w = rng.in_ball(3);
      CHECK(norm(t0_inverse(M, t0_apply(M, w)) - w) < 1e-12);
    }
  }
  const CovMap I = make_cov_map(Vec{1.5, 0.0, 0.0}, p);
  CHECK(I.identity);
  CHECK(det3(t0_matrix(I), 3) == 1.0);
}

TEST_CASE("change of variables round trip and identity fallback") {
  ModelParams p;
  p.gamma = -0.5;
  p.s = 0.75;
  CounterRng rng(7);
  Point z0 = random_point(rng, 3);
  z0.v = Vec{0.0, 10.0, 0.0};
  const CovMap M = make_cov_map(z0, p);
  CHECK(M.time_scale == doctest::Approx(std::pow(10.0, -1.0)));
  for (int i = 0; i < 50; ++i) {
    const Point z = random_point(rng, 3);
    CHECK(pdiff(cov_backward(M, cov_forward(M, z)), z) < 1e-12);
  }
  // centre of Q1 maps to z0 and velocities to the ellipsoid v0 + T0(B1)
  CHECK(pdiff(cov_forward(M, Point::origin(3)), z0) < 1e-14);
  Point z1 = z0;
  z1.v = Vec{0.5, 1.0, 0.0};
  const CovMap I = make_cov_map(z1, p);
  const Point z = random_point(rng, 3);
  CHECK(pdiff(cov_forward(I, z), compose(z1, z)) == 0.0);
}

TEST_CASE("Gressman-Strain and anisotropic distances") {
  ModelParams p;
  const CovMap M = make_cov_map(Vec{8.0, 0.0, 0.0}, p);
  const Vec v1{8.0, 0.0, 0.0}, v2{8.01, 0.0, 0.0};
  CHECK(da(M, v1, v2) == doctest::Approx(0.08));
  const double e = 0.5 * (64.0 - 8.01 * 8.01);
  CHECK(dGS(v1, v2) == doctest::Approx(std::sqrt(0.0001 + e * e)));
  CHECK(da(M, v1, v2) / dGS(v1, v2) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(dGS(v1, v1) == 0.0);
}
