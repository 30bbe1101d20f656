#include "kinokit/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <stdexcept>

#include "kinokit/parallel.hpp"

namespace kinokit {

namespace {

constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const std::function<double(double)>& g, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = g(c);
  double rk = fc * kWgk[7];
  double rg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double f1 = g(c - dx);
    const double f2 = g(c + dx);
    rk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) rg += kWg[j / 2] * (f1 + f2);
  }
  return {a, b, rk * h, std::abs((rk - rg) * h)};
}

}  // namespace

QuadResult integrate_1d(const std::function<double(double)>& g, double a, double b, const QuadratureSpec& spec) {
  QuadResult res;
  if (!(b > a)) return res;
  std::priority_queue<Panel> heap;
  Panel p0 = gk15(g, a, b);
  heap.push(p0);
  double total = p0.value, err = p0.error;
  int evals = 15, subdivisions = 0;
  std::vector<Panel> done;
  while (err > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
    if (subdivisions >= spec.max_subdivisions) {
      res.converged = false;
      break;
    }
    Panel p = heap.top();
    heap.pop();
    const double m = 0.5 * (p.a + p.b);
    if (!(m > p.a && m < p.b)) {
      done.push_back(p);
      if (heap.empty()) break;
      continue;
    }
    Panel l = gk15(g, p.a, m);
    Panel r = gk15(g, m, p.b);
    evals += 30;
    ++subdivisions;
    total += l.value + r.value - p.value;
    err += l.error + r.error - p.error;
    heap.push(l);
    heap.push(r);
  }
  // Resum in a fixed order to avoid drift from incremental updates.
  std::vector<Panel> all = std::move(done);
  while (!heap.empty()) {
    all.push_back(heap.top());
    heap.pop();
  }
  std::sort(all.begin(), all.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
  double v = 0.0, e = 0.0;
  for (const auto& p : all) {
    v += p.value;
    e += p.error;
  }
  res.value = v;
  res.error = e;
  res.evaluations = evals;
  return res;
}

std::vector<std::pair<double, double>> merge_intervals(std::vector<std::pair<double, double>> iv) {
  std::erase_if(iv, [](const auto& p) { return !(p.second > p.first); });
  std::sort(iv.begin(), iv.end());
  std::vector<std::pair<double, double>> out;
  for (const auto& p : iv) {
    if (!out.empty() && p.first <= out.back().second)
      out.back().second = std::max(out.back().second, p.second);
    else
      out.push_back(p);
  }
  return out;
}

QuadResult integrate_intervals(const std::function<double(double)>& g,
                               const std::vector<std::pair<double, double>>& intervals, const QuadratureSpec& spec) {
  QuadResult res;
  for (const auto& [a, b] : intervals) {
    QuadResult r = integrate_1d(g, a, b, spec);
    res.value += r.value;
    res.error += r.error;
    res.evaluations += r.evaluations;
    res.converged = res.converged && r.converged;
  }
  return res;
}

namespace {

// Splits intervals at the given breakpoints.
std::vector<std::pair<double, double>> split_at(const std::vector<std::pair<double, double>>& iv,
                                                std::vector<double> cuts) {
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::pair<double, double>> out;
  for (auto [a, b] : iv) {
    double lo = a;
    for (double c : cuts) {
      if (c > lo && c < b) {
        out.emplace_back(lo, c);
        lo = c;
      }
    }
    out.emplace_back(lo, b);
  }
  return out;
}

struct Disk {
  double px, py, pr, rd;
};

}  // namespace

QuadResult integrate_hyperplane(const std::function<double(const Vec&)>& g, const Vec& e, const QuadratureSpec& spec,
                                const std::vector<Ball>& support) {
  const int d = e.dim();
  if (std::abs(norm(e) - 1.0) > 1e-9) throw std::invalid_argument("integrate_hyperplane: normal must be a unit vector");
  std::vector<Ball> balls = support;
  if (balls.empty()) balls.push_back({Vec::zero(d), spec.radial_cutoff});
  const auto basis = orthonormal_complement(e);
  QuadratureSpec inner = spec;
  inner.rel_tol = spec.rel_tol * 0.1;
  inner.abs_tol = spec.abs_tol * 0.1;

  if (d == 2) {
    const Vec& u = basis[0];
    std::vector<std::pair<double, double>> iv;
    std::vector<double> cuts{0.0};
    for (const auto& b : balls) {
      const double h = dot(b.center, e);
      if (std::abs(h) >= b.radius) continue;
      const double half = std::sqrt(b.radius * b.radius - h * h);
      const double tc = dot(b.center, u);
      iv.emplace_back(tc - half, tc + half);
      cuts.push_back(tc);
    }
    iv = split_at(merge_intervals(iv), cuts);
    return integrate_intervals([&](double t) { return g(t * u); }, iv, spec);
  }
  if (d != 3) throw std::invalid_argument("integrate_hyperplane: d must be 2 or 3");

  const Vec& u1 = basis[0];
  const Vec& u2 = basis[1];
  std::vector<Disk> disks;
  std::vector<std::pair<double, double>> radial;
  std::vector<double> cuts;
  for (const auto& b : balls) {
    const double h = dot(b.center, e);
    if (std::abs(h) >= b.radius) continue;
    const double rd = std::sqrt(b.radius * b.radius - h * h);
    const double px = dot(b.center, u1), py = dot(b.center, u2);
    const double pr = std::hypot(px, py);
    disks.push_back({px, py, pr, rd});
    radial.emplace_back(std::max(0.0, pr - rd), pr + rd);
    cuts.push_back(pr);
  }
  radial = split_at(merge_intervals(radial), cuts);
  constexpr double two_pi = 2.0 * std::numbers::pi;

  bool inner_ok = true;
  auto ring = [&](double rho) -> double {
    if (rho <= 0.0) return 0.0;
    std::vector<std::pair<double, double>> win;
    bool full = false;
    for (const auto& dk : disks) {
      if (dk.pr <= dk.rd && rho <= dk.rd - dk.pr) {
        full = true;
        break;
      }
      if (rho < dk.pr - dk.rd || rho > dk.pr + dk.rd) continue;
      const double c = std::clamp((rho * rho + dk.pr * dk.pr - dk.rd * dk.rd) / (2.0 * rho * dk.pr), -1.0, 1.0);
      const double delta = std::acos(c);
      if (delta >= std::numbers::pi - 1e-12) {
        full = true;
        break;
      }
      double phi = std::atan2(dk.py, dk.px);
      double a = phi - delta;
      a = a - two_pi * std::floor(a / two_pi);
      const double b = a + 2.0 * delta;
      if (b > two_pi) {
        win.emplace_back(a, two_pi);
        win.emplace_back(0.0, b - two_pi);
      } else {
        win.emplace_back(a, b);
      }
    }
    if (full) win = {{0.0, std::numbers::pi}, {std::numbers::pi, two_pi}};
    win = merge_intervals(win);
    auto ang = [&](double phi) { return g(rho * (std::cos(phi) * u1 + std::sin(phi) * u2)); };
    QuadResult r = integrate_intervals(ang, win, inner);
    if (!r.converged) inner_ok = false;
    return r.value * rho;
  };
  QuadResult res = integrate_intervals(ring, radial, spec);
  res.converged = res.converged && inner_ok;
  return res;
}

double sphere_area(int d) { return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d); }

double ball_volume(int d) { return sphere_area(d) / d; }

std::vector<Vec> sphere_grid(int d, int n) {
  if (n < 1) throw std::invalid_argument("sphere_grid: n must be positive");
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(n));
  if (d == 2) {
    for (int i = 0; i < n; ++i) {
      const double th = 2.0 * std::numbers::pi * (i + 0.5) / n;
      out.push_back(Vec{std::cos(th), std::sin(th)});
    }
    return out;
  }
  if (d != 3) throw std::invalid_argument("sphere_grid: d must be 2 or 3");
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    out.push_back(Vec{r * std::cos(phi), r * std::sin(phi), z});
  }
  return out;
}

namespace {

// Reflection taking the grid pole onto `axis`.
Vec pole_to_axis(const Vec& u, const Vec& pole, const Vec& axis) {
  const Vec a = normalized(axis);
  const Vec h = pole - a;
  const double hh = norm2(h);
  if (hh < 1e-30) return u;
  return u - (2.0 * dot(u, h) / hh) * h;
}

}  // namespace

std::vector<Vec> sphere_grid(int d, int n, const Vec& axis) {
  auto out = sphere_grid(d, n);
  const Vec pole = d == 3 ? Vec::unit(3, 2) : Vec::unit(2, 0);
  for (auto& u : out) u = pole_to_axis(u, pole, axis);
  return out;
}

double cap_area(int d, double cos_min) {
  const double c = std::clamp(cos_min, -1.0, 1.0);
  if (d == 2) return 2.0 * std::acos(c);
  if (d == 3) return 2.0 * std::numbers::pi * (1.0 - c);
  throw std::invalid_argument("cap_area: d must be 2 or 3");
}

std::vector<Vec> cap_grid(int d, int n, const Vec& axis, double cos_min) {
  if (n < 1) throw std::invalid_argument("cap_grid: n must be positive");
  const double c = std::clamp(cos_min, -1.0, 1.0);
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(n));
  if (d == 2) {
    const double th = std::acos(c);
    for (int i = 0; i < n; ++i) {
      const double a = -th + 2.0 * th * (i + 0.5) / n;
      out.push_back(pole_to_axis(Vec{std::cos(a), std::sin(a)}, Vec::unit(2, 0), axis));
    }
    return out;
  }
  if (d != 3) throw std::invalid_argument("cap_grid: d must be 2 or 3");
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (1.0 - c) * (i + 0.5) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    out.push_back(pole_to_axis(Vec{r * std::cos(phi), r * std::sin(phi), z}, Vec::unit(3, 2), axis));
  }
  return out;
}

QuadResult sphere_radial_integral(const std::function<double(const Vec&, double)>& ray, const std::vector<Vec>& dirs,
                                  const std::function<double(const Vec&)>& lo,
                                  const std::function<double(const Vec&)>& hi, const QuadratureSpec& spec) {
  QuadResult res;
  if (dirs.empty()) return res;
  const int d = dirs.front().dim();
  const double w = sphere_area(d) / static_cast<double>(dirs.size());
  std::vector<double> vals;
  vals.reserve(dirs.size());
  for (const auto& s : dirs) {
    const double a = lo(s), b = hi(s);
    QuadResult r = integrate_1d([&](double rho) { return ray(s, rho) * std::pow(rho, d - 1); }, a, b, spec);
    vals.push_back(r.value * w);
    res.error += r.error * w;
    res.evaluations += r.evaluations;
    res.converged = res.converged && r.converged;
  }
  res.value = pairwise_sum(vals);
  return res;
}

PvResult pv_ring_integral_paired(const std::function<double(const Vec&, double)>& paired, int d, double eps, double R,
                                 const PvSpec& spec) {
  if (!(eps > 0.0) || !(R > eps)) throw std::invalid_argument("pv_ring_integral: need 0 < eps < R");
  const auto dirs = spec.axis.dim() == d && norm(spec.axis) > 0.0 ? sphere_grid(d, spec.directions, spec.axis)
                                                                 : sphere_grid(d, spec.directions);
  const int L = std::max(1, spec.ladder_steps);
  auto half = [&](const Vec& s, double rho) { return 0.5 * paired(s, rho); };
  // Outer piece [eps, R] and the shells [eps/2^{k+1}, eps/2^k].
  std::vector<double> pieces;
  pieces.push_back(sphere_radial_integral(half, dirs, [&](const Vec&) { return eps; },
                                          [&](const Vec&) { return R; }, spec.quad)
                       .value);
  double e = eps;
  for (int k = 0; k < L; ++k) {
    const double e2 = 0.5 * e;
    pieces.push_back(sphere_radial_integral(half, dirs, [&](const Vec&) { return e2; },
                                            [&](const Vec&) { return e; }, spec.quad)
                         .value);
    e = e2;
  }
  PvResult out;
  double acc = 0.0;
  for (double p : pieces) {
    acc += p;
    out.ladder.push_back(acc);
  }
  const double a = std::pow(2.0, -spec.core_exponent);
  std::vector<double> ext;
  for (std::size_t k = 1; k < out.ladder.size(); ++k)
    ext.push_back(out.ladder[k] + (out.ladder[k] - out.ladder[k - 1]) * a / (1.0 - a));
  for (std::size_t k = 1; k < ext.size(); ++k) out.residuals.push_back(std::abs(ext[k] - ext[k - 1]));
  out.value = ext.back();
  if (!out.residuals.empty()) {
    const double tol = std::max(1e2 * spec.quad.abs_tol, 1e2 * spec.quad.rel_tol * std::abs(out.value));
    out.converged = out.residuals.back() <= tol || out.residuals.back() <= out.residuals.front();
  }
  return out;
}

PvResult pv_ring_integral(const std::function<double(const Vec&)>& g, const Vec& center, double eps, double R,
                          const PvSpec& spec) {
  auto paired = [&](const Vec& s, double rho) { return g(center + rho * s) + g(center - rho * s); };
  return pv_ring_integral_paired(paired, center.dim(), eps, R, spec);
}

FitResult fit_power_law(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("fit_power_law: need at least 3 points");
  double sx = 0, sy = 0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) throw std::invalid_argument("fit_power_law: data must be positive");
    sx += std::log(x);
    sy += std::log(y);
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - mx, dy = std::log(y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_power_law: abscissae must not all coincide");
  FitResult f;
  f.exponent = sxy / sxx;
  f.intercept = my - f.exponent * mx;
  f.r_squared = syy == 0.0 ? 1.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  f.n_points = static_cast<int>(points.size());
  return f;
}

double pairwise_sum(const std::vector<double>& xs) {
  std::vector<double> cur = xs;
  if (cur.empty()) return 0.0;
  while (cur.size() > 1) {
    std::vector<double> nxt((cur.size() + 1) / 2);
    for (std::size_t i = 0; i < nxt.size(); ++i)
      nxt[i] = cur[2 * i] + (2 * i + 1 < cur.size() ? cur[2 * i + 1] : 0.0);
    cur.swap(nxt);
  }
  return cur[0];
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = mix64(root);
  h = mix64(h ^ mix64(a + 1));
  h = mix64(h ^ mix64(b + 2));
  h = mix64(h ^ mix64(c + 3));
  return h;
}

double CounterRng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec CounterRng::unit_vector(int d) {
  for (;;) {
    Vec g(d);
    for (int i = 0; i < d; ++i) g[i] = normal();
    const double n = norm(g);
    if (n > 1e-12) return g / n;
  }
}

Vec CounterRng::in_ball(int d) { return unit_vector(d) * std::pow(uniform(), 1.0 / d); }

Sampler uniform_ball_sampler(int d, const Vec& center, double radius) {
  const double vol = ball_volume(d) * std::pow(radius, d);
  return {d, [=](CounterRng& rng) { return Sample{center + radius * rng.in_ball(d), vol}; }};
}

Sampler gaussian_sampler(int d, const Vec& mean, double temperature) {
  const double sd = std::sqrt(temperature);
  const double norm_c = std::pow(2.0 * std::numbers::pi * temperature, 0.5 * d);
  return {d, [=](CounterRng& rng) {
            Vec z(d);
            for (int i = 0; i < d; ++i) z[i] = rng.normal();
            return Sample{mean + sd * z, norm_c * std::exp(0.5 * norm2(z))};
          }};
}

McResult mc_integrate(const std::function<double(const Vec&)>& g, const Sampler& sampler, std::size_t n,
                      std::uint64_t seed, int strata) {
  if (n == 0) throw std::invalid_argument("mc_integrate: n must be positive");
  const std::size_t S = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, strata)), n);
  struct Acc {
    double sum = 0, sumsq = 0;
  };
  auto parts = parallel_map(S, [&](std::size_t k) {
    const std::size_t cnt = n / S + (k < n % S ? 1 : 0);
    CounterRng rng(derive_seed(seed, k));
    std::vector<double> vals(cnt);
    for (std::size_t i = 0; i < cnt; ++i) {
      Sample s = sampler.draw(rng);
      vals[i] = g(s.x) * s.weight;
    }
    Acc a;
    a.sum = pairwise_sum(vals);
    for (double& v : vals) v *= v;
    a.sumsq = pairwise_sum(vals);
    return a;
  });
  std::vector<double> sums, sqs;
  for (const auto& p : parts) {
    sums.push_back(p.sum);
    sqs.push_back(p.sumsq);
  }
  const double N = static_cast<double>(n);
  const double mean = pairwise_sum(sums) / N;
  const double var = n > 1 ? std::max(0.0, (pairwise_sum(sqs) / N - mean * mean) * N / (N - 1.0)) : 0.0;
  return {mean, std::sqrt(var / N), n};
}

}  // namespace kinokit
