#include "kinokit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kinokit {

Point compose(const Point& xi, const Point& z) { return {xi.t + z.t, z.x + xi.x + z.t * xi.v, z.v + xi.v}; }

Point inverse(const Point& z) { return {-z.t, -z.x + z.t * z.v, -z.v}; }

Point dilate(double r, const Point& z, double s) {
  return {std::pow(r, 2.0 * s) * z.t, std::pow(r, 1.0 + 2.0 * s) * z.x, r * z.v};
}

namespace {

// Closest point to p in the lens B(v1,rho) n B(v2,rho); assumes it is nonempty.
Vec closest_in_lens(const Vec& p, const Vec& v1, const Vec& v2, double rho) {
  auto in_ball = [&](const Vec& q, const Vec& c) { return norm(q - c) <= rho * (1.0 + 1e-14); };
  if (in_ball(p, v1) && in_ball(p, v2)) return p;
  for (const Vec* c : {&v1, &v2}) {
    const Vec& o = (c == &v1) ? v2 : v1;
    const Vec dp = p - *c;
    const double n = norm(dp);
    if (n == 0.0) continue;
    const Vec q = *c + (rho / n) * dp;
    if (in_ball(q, o)) return q;
  }
  const Vec m = 0.5 * (v1 + v2);
  const Vec dv = v2 - v1;
  const double half = 0.5 * norm(dv);
  const double h = std::sqrt(std::max(0.0, rho * rho - half * half));
  if (half == 0.0) return m;
  const Vec n = dv / (2.0 * half);
  Vec perp = (p - m) - dot(p - m, n) * n;
  double pn = norm(perp);
  if (pn == 0.0) {
    perp = orthonormal_complement(n)[0];
    pn = 1.0;
  }
  return m + (h / pn) * perp;
}

}  // namespace

double kdistance(const Point& z1, const Point& z2, double s) {
  const double dt = z1.t - z2.t;
  const Vec dx = z1.x - z2.x;
  const double a = std::pow(std::abs(dt), 1.0 / (2.0 * s));
  const double px = 1.0 / (1.0 + 2.0 * s);
  const Vec& v1 = z1.v;
  const Vec& v2 = z2.v;
  const double half = 0.5 * norm(v1 - v2);
  auto feasible = [&](double rho) {
    if (rho < a || rho < half) return false;
    if (dt == 0.0) return norm(dx) <= std::pow(rho, 1.0 + 2.0 * s);
    const Vec p = dx / dt;
    const Vec q = closest_in_lens(p, v1, v2, rho);
    return norm(dx - dt * q) <= std::pow(rho, 1.0 + 2.0 * s);
  };
  const Vec m = 0.5 * (v1 + v2);
  double lo = std::max(a, half);
  double hi = std::max({a, half, std::pow(norm(dx - dt * m), px)});
  if (feasible(lo)) return lo;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double knorm(const Point& z, double s) { return kdistance(z, Point::origin(z.dim()), s); }

bool cylinder_contains(const Cylinder& Q, const Point& z, double s) {
  const Point& c = Q.center;
  const double r = Q.radius;
  if (!(z.t > c.t - std::pow(r, 2.0 * s) && z.t <= c.t)) return false;
  if (!(norm(z.x - c.x - (z.t - c.t) * c.v) < std::pow(r, 1.0 + 2.0 * s))) return false;
  return norm(z.v - c.v) < r;
}

Point sample_in_cylinder(const Cylinder& Q, double s, CounterRng& rng) {
  const int d = Q.center.dim();
  const double r = Q.radius;
  const Point& c = Q.center;
  const double t = c.t - std::pow(r, 2.0 * s) * rng.uniform();
  const Vec v = c.v + r * rng.in_ball(d);
  const Vec x = c.x + (t - c.t) * c.v + std::pow(r, 1.0 + 2.0 * s) * rng.in_ball(d);
  return {t, x, v};
}

CovMap make_cov_map(const Point& z0, const ModelParams& params) {
  CovMap M;
  M.z0 = z0;
  M.params = params;
  const int d = z0.dim();
  if (d != params.d) throw std::invalid_argument("make_cov_map: dimension mismatch");
  M.speed = norm(z0.v);
  M.direction = M.speed > 0.0 ? z0.v / M.speed : Vec::unit(d, 0);
  M.identity = M.speed < 2.0;
  M.time_scale = M.identity ? 1.0 : std::pow(M.speed, -params.gamma - 2.0 * params.s);
  return M;
}

CovMap make_cov_map(const Vec& v0, const ModelParams& params) {
  Point z0 = Point::origin(v0.dim());
  z0.v = v0;
  return make_cov_map(z0, params);
}

Vec t0_apply(const CovMap& M, const Vec& w) {
  if (M.identity) return w;
  const double a = dot(w, M.direction);
  return w + (a / M.speed - a) * M.direction;
}

Vec t0_inverse(const CovMap& M, const Vec& w) {
  if (M.identity) return w;
  const double a = dot(w, M.direction);
  return w + (a * M.speed - a) * M.direction;
}

std::array<std::array<double, 3>, 3> t0_matrix(const CovMap& M) {
  std::array<std::array<double, 3>, 3> A{};
  const int d = M.params.d;
  for (int j = 0; j < d; ++j) {
    const Vec col = t0_apply(M, Vec::unit(d, j));
    for (int i = 0; i < d; ++i) A[i][j] = col[i];
  }
  return A;
}

Point cov_forward(const CovMap& M, const Point& z) {
  const double ts = M.time_scale;
  return compose(M.z0, {ts * z.t, ts * t0_apply(M, z.x), t0_apply(M, z.v)});
}

Point cov_backward(const CovMap& M, const Point& zbar) {
  const Point xi = compose(inverse(M.z0), zbar);
  const double ts = M.time_scale;
  return {xi.t / ts, t0_inverse(M, xi.x) / ts, t0_inverse(M, xi.v)};
}

double dGS(const Vec& v1, const Vec& v2) {
  const double e = 0.5 * (norm2(v1) - norm2(v2));
  return std::sqrt(norm2(v1 - v2) + e * e);
}

double da(const CovMap& M, const Vec& v1, const Vec& v2) { return norm(t0_inverse(M, v1 - v2)); }

}  // namespace kinokit
