#include "kinokit/holder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "kinokit/parallel.hpp"

namespace kinokit {

int KMultiIndex::order() const {
  int n = a0;
  for (int i = 0; i < 3; ++i) n += ax[i] + av[i];
  return n;
}

double kdeg(const KMultiIndex& m, double s) {
  int sx = 0, sv = 0;
  for (int i = 0; i < 3; ++i) {
    sx += m.ax[i];
    sv += m.av[i];
  }
  return 2.0 * s * m.a0 + (1.0 + 2.0 * s) * sx + sv;
}

double monomial(const KMultiIndex& m, const Point& z) {
  double p = std::pow(z.t, m.a0);
  for (int i = 0; i < z.dim(); ++i) p *= std::pow(z.x[i], m.ax[i]) * std::pow(z.v[i], m.av[i]);
  return p;
}

std::vector<KMultiIndex> monomials_below(int d, double s, double alpha) {
  std::vector<KMultiIndex> out;
  if (alpha <= 0.0) return out;
  // exponents of the 2d+1 variables, enumerated by bounded recursion
  const int n = 1 + 2 * d;
  std::vector<double> w(n);
  w[0] = 2.0 * s;
  for (int i = 0; i < d; ++i) {
    w[1 + i] = 1.0 + 2.0 * s;
    w[1 + d + i] = 1.0;
  }
  std::vector<int> e(n, 0);
  std::function<void(int, double)> rec = [&](int k, double deg) {
    if (k == n) {
      KMultiIndex m;
      m.a0 = e[0];
      for (int i = 0; i < d; ++i) {
        m.ax[i] = e[1 + i];
        m.av[i] = e[1 + d + i];
      }
      out.push_back(m);
      return;
    }
    for (int a = 0; deg + a * w[k] < alpha - 1e-12; ++a) {
      e[k] = a;
      rec(k + 1, deg + a * w[k]);
    }
    e[k] = 0;
  };
  rec(0, 0.0);
  std::sort(out.begin(), out.end());
  return out;
}

double KPolynomial::degree() const {
  double best = kZeroDegree;
  for (const auto& [m, c] : terms)
    if (c != 0.0) best = std::max(best, kdeg(m, s));
  return best;
}

double KPolynomial::eval_xi(const Point& xi) const {
  double sum = 0.0;
  for (const auto& [m, c] : terms) sum += c * monomial(m, xi);
  return sum;
}

namespace {

// Fornberg weights for the m-th derivative at 0 on the given nodes.
std::vector<double> fd_weights(const std::vector<double>& x, int m) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0, c4 = x[0];
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i];
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][m];
  return w;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

Point xi_from_vars(const std::vector<double>& u, int d) {
  Point p = Point::origin(d);
  p.t = u[0];
  for (int i = 0; i < d; ++i) {
    p.x[i] = u[1 + i];
    p.v[i] = u[1 + d + i];
  }
  return p;
}

}  // namespace

KPolynomial taylor_expansion(const PhaseFn& f, const Point& z0, double alpha, double s, double h, double scale) {
  const int d = z0.dim();
  KPolynomial poly;
  poly.s = s;
  poly.d = d;
  poly.base = z0;
  const int nv = 1 + 2 * d;
  auto F = [&](const std::vector<double>& u) { return f(compose(z0, xi_from_vars(u, d))); };
  for (const auto& m : monomials_below(d, s, alpha)) {
    std::vector<int> ord(nv, 0);
    ord[0] = m.a0;
    for (int i = 0; i < d; ++i) {
      ord[1 + i] = m.ax[i];
      ord[1 + d + i] = m.av[i];
    }
    const int total = m.order();
    if (total == 0) {
      poly.terms[m] = F(std::vector<double>(nv, 0.0));
      continue;
    }
    const double hm = std::max(h * scale, std::pow(1e-16, 1.0 / (total + 2)) * scale);
    if (hm < 1e-6 * scale) poly.ill_conditioned = true;
    double fmax = 0.0;
    auto derivative = [&](double step) {
      std::vector<int> vars;
      std::vector<std::vector<double>> nodes, weights;
      for (int j = 0; j < nv; ++j) {
        if (ord[j] == 0) continue;
        const int p = (ord[j] + 1) / 2;
        std::vector<double> x;
        for (int k = -p; k <= p; ++k) x.push_back(k * step);
        vars.push_back(j);
        weights.push_back(fd_weights(x, ord[j]));
        nodes.push_back(x);
      }
      std::vector<std::size_t> idx(vars.size(), 0);
      double sum = 0.0;
      fmax = 0.0;
      for (;;) {
        std::vector<double> u(nv, 0.0);
        double w = 1.0;
        for (std::size_t a = 0; a < vars.size(); ++a) {
          u[vars[a]] = nodes[a][idx[a]];
          w *= weights[a][idx[a]];
        }
        if (w != 0.0) {
          const double fu = F(u);
          fmax = std::max(fmax, std::abs(fu));
          sum += w * fu;
        }
        std::size_t a = 0;
        while (a < vars.size() && ++idx[a] == nodes[a].size()) idx[a++] = 0;
        if (a == vars.size()) break;
      }
      return sum;
    };
    const double d1 = derivative(hm);
    const double d2 = derivative(0.5 * hm);
    double denom = factorial(m.a0);
    for (int i = 0; i < d; ++i) denom *= factorial(m.ax[i]) * factorial(m.av[i]);
    const double noise = 1e3 * std::numeric_limits<double>::epsilon() * fmax / std::pow(0.5 * hm, total);
    const double c = (4.0 * d2 - d1) / 3.0;
    poly.terms[m] = std::abs(c) <= noise ? 0.0 : c / denom;
  }
  return poly;
}

namespace {

struct BaseResult {
  double ratio = 0.0;
  Point base, point;
  double sup_abs = 0.0, lo = 0.0, hi = 0.0;
  int samples = 0;
};

Point unit_offset(CounterRng& rng, int d, double s) {
  Point z = Point::origin(d);
  z.t = rng.uniform(-1.0, 1.0);
  z.x = rng.in_ball(d);
  z.v = rng.in_ball(d);
  const double n = std::max({std::pow(std::abs(z.t), 1.0 / (2.0 * s)), std::pow(norm(z.x), 1.0 / (1.0 + 2.0 * s)),
                             norm(z.v), 1e-300});
  return dilate(1.0 / n, z, s);
}

std::vector<Point> axis_offsets(int d) {
  std::vector<Point> out;
  for (double sg : {-1.0, 1.0}) {
    Point p = Point::origin(d);
    p.t = sg;
    out.push_back(p);
  }
  for (int i = 0; i < d; ++i)
    for (double sg : {-1.0, 1.0}) {
      Point p = Point::origin(d);
      p.x[i] = sg;
      out.push_back(p);
      Point q = Point::origin(d);
      q.v[i] = sg;
      out.push_back(q);
    }
  return out;
}

}  // namespace

SeminormEstimate seminorm_est(const PhaseFn& f, const Cylinder& Q, double alpha, double s, const SeminormSpec& spec) {
  if (alpha < 0.0) throw std::invalid_argument("seminorm_est: alpha must be nonnegative");
  if (spec.base_points < 1 || spec.shells < 1) throw std::invalid_argument("seminorm_est: empty sample");
  const int d = Q.center.dim();
  const double r = Q.radius;
  const auto axes = axis_offsets(d);
  auto per_base = parallel_map(static_cast<std::size_t>(spec.base_points), [&](std::size_t b) {
    Point z0;
    if (b == 0) {
      const double dt = 0.5 * std::pow(r, 2.0 * s);
      z0 = {Q.center.t - dt, Q.center.x - dt * Q.center.v, Q.center.v};
    } else {
      CounterRng rng(derive_seed(spec.seed, 0xBA5E, b));
      z0 = sample_in_cylinder(Q, s, rng);
    }
    BaseResult br;
    br.base = z0;
    br.point = z0;
    const KPolynomial poly = taylor_expansion(f, z0, alpha, s, spec.fd_step, r);
    const double f0 = f(z0);
    br.sup_abs = std::abs(f0);
    br.lo = br.hi = f0;
    const int ndir = static_cast<int>(axes.size()) + spec.directions;
    for (int k = 0; k < spec.shells; ++k) {
      const double rho =
          2.0 * r * (spec.shells == 1 ? 1.0 : std::pow(spec.min_shell, static_cast<double>(k) / (spec.shells - 1)));
      for (int j = 0; j < ndir; ++j) {
        Point zeta;
        if (j < static_cast<int>(axes.size())) {
          zeta = axes[static_cast<std::size_t>(j)];
        } else {
          CounterRng rng(derive_seed(spec.seed, b, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(j)));
          zeta = unit_offset(rng, d, s);
        }
        const Point xi = dilate(rho, zeta, s);
        const Point z = compose(z0, xi);
        if (!cylinder_contains(Q, z, s)) continue;
        const double dist = kdistance(z, z0, s);
        if (!(dist > 0.0)) continue;
        if (spec.max_offset > 0.0 && dist > spec.max_offset) continue;
        const double fz = f(z);
        br.sup_abs = std::max(br.sup_abs, std::abs(fz));
        br.lo = std::min(br.lo, fz);
        br.hi = std::max(br.hi, fz);
        const double ratio = std::abs(fz - poly.eval_xi(xi)) / std::pow(dist, alpha);
        ++br.samples;
        if (ratio > br.ratio) {
          br.ratio = ratio;
          br.point = z;
        }
      }
    }
    return br;
  });
  SeminormEstimate est;
  est.alpha = alpha;
  est.seed = spec.seed;
  est.witness_base = per_base[0].base;
  est.witness_point = per_base[0].point;
  est.inf_val = per_base[0].lo;
  est.sup_val = per_base[0].hi;
  for (const auto& br : per_base) {
    est.samples += br.samples;
    est.sup_abs = std::max(est.sup_abs, br.sup_abs);
    est.inf_val = std::min(est.inf_val, br.lo);
    est.sup_val = std::max(est.sup_val, br.hi);
    if (br.ratio > est.value) {
      est.value = br.ratio;
      est.witness_base = br.base;
      est.witness_point = br.point;
    }
  }
  if (est.samples == 0) throw std::runtime_error("seminorm_est: no sampled offsets inside the cylinder");
  return est;
}

WeightedNormEstimate weighted_norm_est(const PhaseFn& f, const std::vector<double>& speeds, const Vec& direction,
                                       double alpha, double q, double s, const SeminormSpec& spec) {
  if (speeds.empty()) throw std::invalid_argument("weighted_norm_est: empty speed grid");
  WeightedNormEstimate out;
  const int d = direction.dim();
  const Vec dir = normalized(direction);
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    Cylinder Q{Point::origin(d), 1.0};
    Q.center.v = speeds[i] * dir;
    SeminormSpec sp = spec;
    sp.seed = derive_seed(spec.seed, i);
    SeminormEstimate e = seminorm_est(f, Q, alpha, s, sp);
    e.q = q;
    const double val = std::pow(1.0 + speeds[i], q) * e.norm();
    out.per_speed.emplace_back(speeds[i], val);
    if (i == 0 || val > out.value) {
      out.value = val;
      out.best = e;
    }
  }
  return out;
}

PhaseFn increment_x(PhaseFn f, const Vec& y) {
  return [f = std::move(f), y](const Point& z) {
    return f(compose(z, {0.0, y, Vec::zero(y.dim())})) - f(z);
  };
}

PhaseFn increment_v(PhaseFn f, const Vec& w) {
  return [f = std::move(f), w](const Point& z) {
    return f(compose(z, {0.0, Vec::zero(w.dim()), w})) - f(z);
  };
}

namespace {

CheckResult base_result(const std::string& id, double s, int d) {
  CheckResult r;
  r.check_id = id;
  r.params.s = s;
  r.params.d = d;
  return r;
}

}  // namespace

CheckResult check_interpolation(const PhaseFn& f, const Cylinder& Q, double a1, double a2, double a3, double s,
                                const SeminormSpec& spec, double c_max) {
  if (!(0.0 <= a1 && a1 < a2 && a2 < a3)) throw std::invalid_argument("check_interpolation: need 0 <= a1 < a2 < a3");
  CheckResult res = base_result("interpolation", s, Q.center.dim());
  const double theta = (a3 - a2) / (a3 - a1);
  const double s1 = seminorm_est(f, Q, a1, s, spec).value;
  const SeminormEstimate e2 = seminorm_est(f, Q, a2, s, spec);
  const double s3 = seminorm_est(f, Q, a3, s, spec).value;
  const double den = std::pow(s1, theta) * std::pow(s3, 1.0 - theta) + std::pow(Q.radius, a1 - a2) * s1;
  res.coords = {{"alpha1", a1}, {"alpha2", a2}, {"alpha3", a3}, {"r", Q.radius}};
  res.constants = {{"seminorm_a1", s1}, {"seminorm_a2", e2.value}, {"seminorm_a3", s3}, {"theta", theta}};
  res.tolerance["C_max"] = c_max;
  if (den <= 1e-300) {
    res.constants["ratio"] = 0.0;
    res.pass = e2.value <= 1e-12;
    res.witness.push_back("vacuous: vanishing denominator");
    return res;
  }
  const double ratio = e2.value / den;
  res.constants["ratio"] = ratio;
  res.pass = ratio <= c_max;
  return res;
}

CheckResult check_product(const PhaseFn& f, const PhaseFn& g, const Cylinder& Q, double alpha, double s,
                          const SeminormSpec& spec, double c_max) {
  CheckResult res = base_result("product", s, Q.center.dim());
  PhaseFn fg = [&](const Point& z) { return f(z) * g(z); };
  const double nf = seminorm_est(f, Q, alpha, s, spec).norm();
  const double ng = seminorm_est(g, Q, alpha, s, spec).norm();
  const double nfg = seminorm_est(fg, Q, alpha, s, spec).norm();
  res.coords = {{"alpha", alpha}, {"r", Q.radius}};
  res.constants = {{"norm_f", nf}, {"norm_g", ng}, {"norm_fg", nfg}};
  res.tolerance["C_max"] = c_max;
  const double den = nf * ng;
  const double ratio = den > 1e-300 ? nfg / den : 0.0;
  res.constants["ratio"] = ratio;
  res.pass = den > 1e-300 ? ratio <= c_max : nfg <= 1e-12;
  return res;
}

CheckResult check_localization(const PhaseFn& f, const Cylinder& Q, double alpha, double r0, double s,
                               const SeminormSpec& spec, double c_max) {
  CheckResult res = base_result("localization", s, Q.center.dim());
  SeminormSpec local = spec;
  local.max_offset = r0;
  const double c0 = seminorm_est(f, Q, alpha, s, local).value;
  const SeminormEstimate global = seminorm_est(f, Q, alpha, s, spec);
  const double osc = global.sup_val - global.inf_val;
  res.coords = {{"alpha", alpha}, {"r0", r0}};
  res.constants = {{"C0", c0}, {"global", global.value}, {"osc", osc}};
  res.tolerance["C_max"] = c_max;
  const double excess = std::max(0.0, global.value - c0);
  if (osc <= 1e-300) {
    res.constants["ratio"] = 0.0;
    res.pass = excess <= 1e-12;
    return res;
  }
  const double ratio = excess / (std::pow(r0, -alpha) * osc);
  res.constants["ratio"] = ratio;
  res.pass = ratio <= c_max;
  return res;
}

CheckResult check_increment_x_bound(const PhaseFn& f, const Cylinder& Q, double alpha, double s,
                                    const std::vector<Vec>& y_grid, const SeminormSpec& spec, double c_max) {
  if (!(alpha > 0.0 && alpha <= std::min(1.0, 2.0 * s)))
    throw std::invalid_argument("check_increment_x_bound: alpha in (0, min(1,2s)] violated");
  if (Q.radius > 1.0) throw std::invalid_argument("check_increment_x_bound: R <= 1 violated");
  CheckResult res = base_result("increment_x", s, Q.center.dim());
  const double fnorm = seminorm_est(f, Q, 2.0 * s + alpha, s, spec).norm();
  const Cylinder inner{Q.center, 0.5 * Q.radius};
  double worst = 0.0, best = std::numeric_limits<double>::infinity();
  for (const auto& y : y_grid) {
    if (!(norm(y) < 0.5 * std::pow(Q.radius, 1.0 + 2.0 * s)))
      throw std::invalid_argument("check_increment_x_bound: |y| < R^{1+2s}/2 violated");
    const int d = y.dim();
    const double lhs = seminorm_est(increment_x(f, y), inner, alpha, s, spec).norm();
    const double rhs = fnorm * std::pow(knorm({0.0, y, Vec::zero(d)}, s), 2.0 * s);
    const double ratio = rhs > 0.0 ? lhs / rhs : 0.0;
    res.series["ratio"].emplace_back(norm(y), ratio);
    worst = std::max(worst, ratio);
    best = std::min(best, ratio);
  }
  std::sort(res.series["ratio"].begin(), res.series["ratio"].end());
  res.coords = {{"alpha", alpha}, {"R", Q.radius}};
  res.constants = {{"norm_f", fnorm}, {"ratio", worst}, {"ratio_spread", best > 0 ? worst / best : 0.0}};
  res.tolerance["C_max"] = c_max;
  res.pass = worst <= c_max;
  return res;
}

CheckResult check_increment_v_bound(const PhaseFn& f, const Cylinder& Q, double alpha, double s,
                                    const std::vector<Vec>& w_grid, const SeminormSpec& spec, double c_max) {
  if (!(2.0 * s + alpha < 1.0)) throw std::invalid_argument("check_increment_v_bound: 2s + alpha < 1 violated");
  if (!(alpha > 0.0 && alpha <= std::min(1.0, 2.0 * s)))
    throw std::invalid_argument("check_increment_v_bound: alpha <= min(1,2s) violated");
  if (Q.radius > 1.0) throw std::invalid_argument("check_increment_v_bound: R <= 1 violated");
  CheckResult res = base_result("increment_v", s, Q.center.dim());
  const int d = Q.center.dim();
  const double fsemi = seminorm_est(f, Q, 2.0 * s + alpha, s, spec).value;
  // sup |grad_x f| over sampled points of Q
  double grad = 0.0;
  const double hx = 1e-5 * std::pow(Q.radius, 1.0 + 2.0 * s);
  for (int b = 0; b < 256; ++b) {
    CounterRng rng(derive_seed(spec.seed, 0x6AAD, static_cast<std::uint64_t>(b)));
    const Point z = sample_in_cylinder(Q, s, rng);
    Vec g(d);
    for (int i = 0; i < d; ++i) {
      Point zp = z, zm = z;
      zp.x[i] += hx;
      zm.x[i] -= hx;
      g[i] = (f(zp) - f(zm)) / (2.0 * hx);
    }
    grad = std::max(grad, norm(g));
  }
  const Cylinder inner{Q.center, 0.5 * Q.radius};
  double worst = 0.0;
  for (const auto& w : w_grid) {
    if (!(norm(w) < 0.5 * Q.radius)) throw std::invalid_argument("check_increment_v_bound: |w| < R/2 violated");
    const double lhs = seminorm_est(increment_v(f, w), inner, alpha, s, spec).value;
    const double rhs =
        (fsemi + std::pow(norm(w), 1.0 - alpha) * grad) * std::pow(knorm({0.0, Vec::zero(d), w}, s), 2.0 * s);
    const double ratio = rhs > 0.0 ? lhs / rhs : 0.0;
    res.series["ratio"].emplace_back(norm(w), ratio);
    worst = std::max(worst, ratio);
  }
  std::sort(res.series["ratio"].begin(), res.series["ratio"].end());
  res.coords = {{"alpha", alpha}, {"R", Q.radius}};
  res.constants = {{"seminorm_f", fsemi}, {"grad_x_sup", grad}, {"ratio", worst}};
  res.tolerance["C_max"] = c_max;
  res.pass = worst <= c_max;
  return res;
}

}  // namespace kinokit
