#include "kinokit/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "kinokit/parallel.hpp"

namespace kinokit {

namespace {

double weight(const ModelParams& p, double r, double wn) {
  const double base = std::pow(wn, p.kappa());
  if (p.kernel_mode == KernelMode::model) return base;
  if (wn == 0.0) return 0.0;
  return base * carleman_factor(p, r, wn);
}

double bump_value(const CompactBump& b, const Vec& u) { return b.amplitude * b.shape(norm(u - b.center) / b.radius); }

// e^{-x} I_0(x) for x >= 0.
double scaled_bessel_i0(double x) {
  if (x < 500.0) return std::exp(-x) * std::cyl_bessel_i(0.0, x);
  const double t = 1.0 / (8.0 * x);
  return (1.0 + t * (1.0 + t * (4.5 + t * 37.5))) / std::sqrt(2.0 * std::numbers::pi * x);
}

struct PlaneMoment {
  double h;  ///< signed offset of the component centre from the plane through v
  double E;  ///< plane integral of the component with the e^{-h^2/2T} factor removed
};

// Gaussian component on the hyperplane {v + w : w.e = 0} against a radial
// weight phi(|w|), reduced to one radial integral.
PlaneMoment gaussian_plane(const GaussianComponent& c, const Vec& v, const Vec& e,
                           const std::function<double(double)>& phi, const QuadratureSpec& q) {
  const int d = v.dim();
  const double T = c.temperature;
  const double sd = std::sqrt(T);
  const Vec u = v - c.drift;
  const double h = dot(u, e);
  const double mu = norm(u - h * e);
  const double pref = c.mass / std::sqrt(2.0 * std::numbers::pi * T);
  const double L = q.radial_cutoff * sd;
  double E;
  if (d == 2) {
    std::vector<std::pair<double, double>> iv;
    const double a = -mu - L, b = -mu + L;
    if (a < 0.0 && b > 0.0)
      iv = {{a, 0.0}, {0.0, b}};
    else
      iv = {{a, b}};
    E = integrate_intervals([&](double t) { return phi(std::abs(t)) * std::exp(-(t + mu) * (t + mu) / (2.0 * T)); },
                            iv, q)
            .value /
        std::sqrt(2.0 * std::numbers::pi * T);
  } else {
    const double lo = std::max(0.0, mu - L), hi = mu + L;
    E = integrate_1d(
            [&](double r) {
              return phi(r) * r * std::exp(-(r - mu) * (r - mu) / (2.0 * T)) * scaled_bessel_i0(r * mu / T);
            },
            lo, hi, q)
            .value /
        T;
  }
  return {h, pref * E};
}

Vec unit_or_throw(const Vec& sigma, const char* who) {
  const double n = norm(sigma);
  if (!(n > 0.0)) throw std::invalid_argument(std::string(who) + ": direction must be nonzero");
  return sigma / n;
}

double cov_factor(const CovMap& M) { return M.identity ? M.time_scale : M.time_scale / M.speed; }

// Largest distance from v at which f is non-negligible.
double support_reach(const Profile& f, const Vec& v, double cutoff) {
  double r = 0.0;
  for (const auto& b : f.support(cutoff)) r = std::max(r, norm(b.center - v) + b.radius);
  return r;
}

// int_a^inf h(rho) rho^{-1-2s} drho through u = rho^{-2s}.
QuadResult power_tail(const std::function<double(double)>& h, double a, double s, const QuadratureSpec& q) {
  const double umax = std::pow(a, -2.0 * s);
  auto r = integrate_1d([&](double u) { return h(std::pow(u, -1.0 / (2.0 * s))); }, 0.0, umax, q);
  r.value /= 2.0 * s;
  r.error /= 2.0 * s;
  return r;
}

std::vector<Vec> directions_for(int d, int n, const Vec& axis) {
  if (axis.dim() == d && norm(axis) > 0.0) return sphere_grid(d, n, axis);
  return sphere_grid(d, n);
}

// Transformed kernel along v + t sigma: Jbar(v + t sigma, sigma, rho) = scale * J(vbar + t n e, e, rho n).
class CovRay {
public:
  CovRay(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v, const Vec& sigma,
         const QuadratureSpec& q)
      : f_(f), p_(p), q_(q) {
    const Vec te = t0_apply(M, sigma);
    n_ = norm(te);
    e_ = te / n_;
    vbar_ = cov_base_velocity(M, v);
    scale_ = cov_factor(M) * std::pow(n_, -p.d - 2.0 * p.s);
    fast_ = p.kernel_mode == KernelMode::model && !f.bump();
    if (fast_) line_ = plane_line(f, p, vbar_, e_, 1.0, q);
  }

  bool fast() const { return fast_; }

  double J(double t, double rho) const {
    if (fast_) return scale_ * line_.at(t * n_);
    return scale_ * plane_integral(f_, p_, vbar_ + (t * n_) * e_, e_, rho * n_, q_).value;
  }
  double second_difference(double rho) const {
    if (fast_) return scale_ * line_.second_difference(rho * n_);
    return scale_ * second_difference_plane(f_, p_, vbar_, e_, rho * n_, q_);
  }
  double odd_difference(double rho) const {
    if (fast_) return scale_ * line_.odd_difference(rho * n_);
    return scale_ * odd_difference_plane(f_, p_, vbar_, e_, rho * n_, q_);
  }

  // Values of t where the line is non-negligible, one window per component.
  std::vector<std::pair<double, double>> windows(double cutoff) const {
    std::vector<std::pair<double, double>> out;
    for (std::size_t k = 0; k < line_.amplitude.size(); ++k) {
      const double c = -line_.offset[k] / n_, L = cutoff * std::sqrt(line_.temperature[k]) / n_;
      out.emplace_back(c - L, c + L);
    }
    return out;
  }

private:
  const Profile& f_;
  const ModelParams& p_;
  const QuadratureSpec& q_;
  Vec vbar_, e_;
  double n_ = 1.0, scale_ = 1.0;
  bool fast_ = false;
  PlaneLine line_;
};

void require_ascending(const std::vector<double>& radii, const char* who) {
  if (radii.empty()) throw std::invalid_argument(std::string(who) + ": empty radius list");
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (!(radii[i] > 0.0) || !std::isfinite(radii[i]) || (i > 0 && !(radii[i] > radii[i - 1])))
      throw std::invalid_argument(std::string(who) + ": radii must be positive, finite and ascending");
}

double sum_column(const std::vector<std::vector<double>>& rows, std::size_t k) {
  std::vector<double> col(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i][k];
  return pairwise_sum(col);
}

// int over the unit sphere of |rho sigma - a e|^gamma, d = 3.
double shell_average_3d(double rho, double a, double gamma) {
  const double hi = std::max(rho, a), lo = std::min(rho, a);
  if (hi == 0.0) return gamma == 0.0 ? 4.0 * std::numbers::pi : 0.0;
  const double x = lo / hi;
  const double p = gamma + 2.0;
  double ratio;  // ((1+x)^p - (1-x)^p)/(2 p x), or its logarithmic limit at p = 0
  if (x < 1e-4) {
    ratio = std::abs(p) < 1e-12 ? 1.0 + x * x / 3.0 : 1.0 + (p - 1.0) * (p - 2.0) * x * x / 6.0;
  } else if (std::abs(p) < 1e-12) {
    ratio = std::log((1.0 + x) / (1.0 - x)) / (2.0 * x);
  } else {
    ratio = (std::pow(1.0 + x, p) - std::pow(1.0 - x, p)) / (2.0 * p * x);
  }
  return 4.0 * std::numbers::pi * std::pow(hi, gamma) * ratio;
}

double shell_average_2d(double rho, double a, double gamma, const QuadratureSpec& q) {
  if (gamma == 0.0) return 2.0 * std::numbers::pi;
  if (rho == 0.0 || a == 0.0) return 2.0 * std::numbers::pi * std::pow(std::max(rho, a), gamma);
  auto r = integrate_1d(
      [&](double phi) {
        const double q2 = std::max(rho * rho + a * a - 2.0 * rho * a * std::cos(phi), 0.0);
        return std::pow(q2, 0.5 * gamma);
      },
      0.0, std::numbers::pi, q);
  return 2.0 * r.value;
}

// int_0^rmax frad(rho) rho^{d-1} S(rho, a) drho for a radial component centred at distance a.
double radial_convolution(const std::function<double(double)>& frad, double rmax, double a, int d, double gamma,
                          const QuadratureSpec& q) {
  QuadratureSpec inner = q;
  inner.rel_tol = q.rel_tol * 0.1;
  auto h = [&](double rho) {
    const double S = d == 3 ? shell_average_3d(rho, a, gamma) : shell_average_2d(rho, a, gamma, inner);
    return frad(rho) * std::pow(rho, d - 1) * S;
  };
  std::vector<std::pair<double, double>> iv;
  if (a > 0.0 && a < rmax) {
    iv = {{0.0, a}, {a, rmax}};
  } else {
    iv = {{0.0, rmax}};
  }
  return integrate_intervals(h, iv, q).value;
}

}  // namespace

double carleman_factor(const ModelParams& p, double r, double wnorm) {
  if (wnorm <= 0.0) return p.a_cap * p.b_norm;
  const double A = std::pow(2.0, p.d - 1) * std::pow((r * r + wnorm * wnorm) / (wnorm * wnorm), 0.5 * p.kappa());
  return std::min(A, p.a_cap) * p.b_norm;
}

KernelEval plane_integral(const Profile& f, const ModelParams& p, const Vec& v, const Vec& sigma, double r,
                          const QuadratureSpec& q) {
  KernelEval out;
  out.mode = p.kernel_mode;
  if (f.is_zero()) return out;
  const Vec e = unit_or_throw(sigma, "plane_integral");
  auto phi = [&](double wn) { return weight(p, r, wn); };
  for (const auto& c : f.components()) {
    const auto [h, E] = gaussian_plane(c, v, e, phi, q);
    out.value += E * std::exp(-h * h / (2.0 * c.temperature));
  }
  if (const auto& b = f.bump()) {
    auto res = integrate_hyperplane([&](const Vec& w) { return bump_value(*b, v + w) * phi(norm(w)); }, e, q,
                                    {{b->center - v, b->radius}});
    out.value += res.value;
    out.error_est += res.error;
  }
  return out;
}

KernelEval cone_direction_integral(const Profile& f, const ModelParams& p, const Vec& v, const Vec& sigma,
                                   const QuadratureSpec& q) {
  ModelParams pm = p;
  pm.kernel_mode = KernelMode::model;
  return plane_integral(f, pm, v, sigma, 1.0, q);
}

KernelEval kernel_eval(const Profile& f, const ModelParams& p, const Vec& v, const Vec& vp, const QuadratureSpec& q) {
  const Vec dv = vp - v;
  const double r = norm(dv);
  if (!(r > 0.0)) throw std::invalid_argument("kernel_eval: coincident points");
  KernelEval k = plane_integral(f, p, v, dv / r, r, q);
  const double scale = std::pow(r, -p.d - 2.0 * p.s);
  k.value *= scale;
  k.error_est *= scale;
  return k;
}

Vec cov_base_velocity(const CovMap& M, const Vec& v) { return M.v0() + t0_apply(M, v); }

KernelEval kernel_cov_eval(const Profile& f, const ModelParams& p, const CovMap& M, const Point& z, const Vec& w,
                           const QuadratureSpec& q) {
  if (!(norm(w) > 0.0)) throw std::invalid_argument("kernel_cov_eval: w must be nonzero");
  const Vec vbar = cov_base_velocity(M, z.v);
  KernelEval k = kernel_eval(f, p, vbar, vbar + t0_apply(M, w), q);
  const double c = cov_factor(M);
  k.value *= c;
  k.error_est *= c;
  return k;
}

double cov_direction_integral(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v, const Vec& sigma,
                              double rho, const QuadratureSpec& q) {
  const Vec e = unit_or_throw(sigma, "cov_direction_integral");
  const Vec te = t0_apply(M, e);
  const double n = norm(te);
  const Vec vbar = cov_base_velocity(M, v);
  const double J = plane_integral(f, p, vbar, te / n, rho * n, q).value;
  return cov_factor(M) * std::pow(n, -p.d - 2.0 * p.s) * J;
}

double PlaneLine::at(double t) const {
  double total = 0.0;
  for (std::size_t k = 0; k < amplitude.size(); ++k)
    total += amplitude[k] * std::exp(-(offset[k] + t) * (offset[k] + t) / (2.0 * temperature[k]));
  return total;
}

double PlaneLine::second_difference(double rho) const {
  double total = 0.0;
  for (std::size_t k = 0; k < amplitude.size(); ++k) {
    const double h = offset[k], T = temperature[k];
    const double x = h * rho / T;
    double bracket;
    if (std::abs(x) > 30.0) {
      bracket = std::exp(-(h + rho) * (h + rho) / (2.0 * T)) + std::exp(-(h - rho) * (h - rho) / (2.0 * T)) -
                2.0 * std::exp(-h * h / (2.0 * T));
    } else {
      const double sh = std::sinh(0.5 * x);
      const double em = std::expm1(-rho * rho / (2.0 * T));
      bracket = 2.0 * std::exp(-h * h / (2.0 * T)) * ((1.0 + em) * 2.0 * sh * sh + em);
    }
    total += amplitude[k] * bracket;
  }
  return total;
}

double PlaneLine::odd_difference(double rho) const {
  double total = 0.0;
  for (std::size_t k = 0; k < amplitude.size(); ++k) {
    const double h = offset[k], T = temperature[k];
    const double x = h * rho / T;
    double bracket;
    if (std::abs(x) > 1.0)
      bracket = std::exp(-(h - rho) * (h - rho) / (2.0 * T)) - std::exp(-(h + rho) * (h + rho) / (2.0 * T));
    else
      bracket = 2.0 * std::exp(-(h * h + rho * rho) / (2.0 * T)) * std::sinh(x);
    total += amplitude[k] * bracket;
  }
  return total;
}

PlaneLine plane_line(const Profile& f, const ModelParams& p, const Vec& v, const Vec& sigma, double r,
                     const QuadratureSpec& q) {
  const Vec e = unit_or_throw(sigma, "plane_line");
  auto phi = [&](double wn) { return weight(p, r, wn); };
  PlaneLine line;
  for (const auto& c : f.components()) {
    const auto [h, E] = gaussian_plane(c, v, e, phi, q);
    line.amplitude.push_back(E);
    line.offset.push_back(h);
    line.temperature.push_back(c.temperature);
  }
  return line;
}

double second_difference_plane(const Profile& f, const ModelParams& p, const Vec& v, const Vec& sigma, double rho,
                               const QuadratureSpec& q) {
  if (f.is_zero()) return 0.0;
  const Vec e = unit_or_throw(sigma, "second_difference_plane");
  double total = plane_line(f, p, v, e, rho, q).second_difference(rho);
  if (const auto& b = f.bump()) {
    auto phi = [&](double wn) { return weight(p, rho, wn); };
    const Vec up = v + rho * e, dn = v - rho * e;
    total += integrate_hyperplane(
                 [&](const Vec& w) {
                   return (bump_value(*b, up + w) + bump_value(*b, dn + w) - 2.0 * bump_value(*b, v + w)) *
                          phi(norm(w));
                 },
                 e, q, {{b->center - v, b->radius}, {b->center - up, b->radius}, {b->center - dn, b->radius}})
                 .value;
  }
  return total;
}

double odd_difference_plane(const Profile& f, const ModelParams& p, const Vec& v, const Vec& sigma, double rho,
                            const QuadratureSpec& q) {
  if (f.is_zero()) return 0.0;
  const Vec e = unit_or_throw(sigma, "odd_difference_plane");
  double total = plane_line(f, p, v, e, rho, q).odd_difference(rho);
  if (const auto& b = f.bump()) {
    auto phi = [&](double wn) { return weight(p, rho, wn); };
    const Vec up = v + rho * e, dn = v - rho * e;
    total += integrate_hyperplane(
                 [&](const Vec& w) { return (bump_value(*b, dn + w) - bump_value(*b, up + w)) * phi(norm(w)); }, e, q,
                 {{b->center - up, b->radius}, {b->center - dn, b->radius}})
                 .value;
  }
  return total;
}

ApplyLResult apply_L(const Profile& f, const ModelParams& p, const VelocityFn& g, const Vec& v,
                     const ApplyLSpec& spec) {
  const int d = p.d;
  const double s = p.s;
  ApplyLResult out;
  const double alpha = spec.alpha > 0.0 ? spec.alpha : std::min(1.0, 2.0 * s);
  out.beta = std::min(2.0 * s + alpha, 2.0);

  const double g0 = g(v);
  out.g_sup = std::abs(g0);
  for (const auto& e : sphere_grid(d, 64))
    for (int k = -6; k <= 3; ++k) {
      const double r = std::ldexp(1.0, k);
      const double gp = g(v + r * e), gm = g(v - r * e);
      out.g_sup = std::max({out.g_sup, std::abs(gp), std::abs(gm)});
      out.g_seminorm = std::max(out.g_seminorm, std::abs(gp + gm - 2.0 * g0) / std::pow(r, out.beta));
    }
  out.radius = spec.radius;
  if (!(out.radius > 0.0))
    out.radius = out.g_seminorm > 0.0 ? std::pow(out.g_sup / out.g_seminorm, 1.0 / out.beta) : 1.0;
  out.radius = std::clamp(out.radius, 1e-3, 1e3);
  const double r0 = out.radius;

  const auto dirs = directions_for(d, spec.kernel.sphere_points(d), v);
  const double wdir = sphere_area(d) / static_cast<double>(dirs.size());
  const bool model = p.kernel_mode == KernelMode::model;
  std::vector<double> near(dirs.size()), far(dirs.size());
  bool ok = true;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const Vec& e = dirs[i];
    const double J = model ? plane_integral(f, p, v, e, 1.0, spec.kernel.plane).value : 0.0;
    auto kern = [&](double rho) { return model ? J : plane_integral(f, p, v, e, rho, spec.kernel.plane).value; };
    auto rn = integrate_1d(
        [&](double rho) {
          return 0.5 * (g(v + rho * e) + g(v - rho * e) - 2.0 * g0) * kern(rho) * std::pow(rho, -1.0 - 2.0 * s);
        },
        0.0, r0, spec.kernel.radial);
    auto rf = power_tail([&](double rho) { return 0.5 * (g(v + rho * e) + g(v - rho * e) - 2.0 * g0) * kern(rho); },
                         r0, s, spec.kernel.radial);
    near[i] = rn.value * wdir;
    far[i] = rf.value * wdir;
    ok = ok && rn.converged && rf.converged;
  }
  out.near = pairwise_sum(near);
  out.far = pairwise_sum(far);
  out.value = out.near + out.far;
  out.converged = ok;
  return out;
}

double conv_gamma(const Profile& f, const ModelParams& p, const Vec& v, const QuadratureSpec& q) {
  const int d = p.d;
  if (!(p.gamma > -d)) throw std::domain_error("conv_gamma: divergent, gamma <= -d");
  double total = 0.0;
  for (const auto& c : f.components()) {
    const double T = c.temperature;
    const double norm_c = c.mass * std::pow(2.0 * std::numbers::pi * T, -0.5 * d);
    total += radial_convolution([&](double rho) { return norm_c * std::exp(-rho * rho / (2.0 * T)); },
                                q.radial_cutoff * std::sqrt(T), norm(v - c.drift), d, p.gamma, q);
  }
  if (const auto& b = f.bump()) {
    total += radial_convolution([&](double rho) { return b->amplitude * b->shape(rho / b->radius); }, b->radius,
                                norm(v - b->center), d, p.gamma, q);
  }
  return total;
}

double q2_eval(const Profile& f, const VelocityFn& g, const ModelParams& p, const Vec& v, const QuadratureSpec& q) {
  return p.c_b * conv_gamma(f, p, v, q) * g(v);
}

double tail_mass(const Profile& f, const ModelParams& p, const Vec& v, double r, const KernelSpec& spec) {
  if (!(r > 0.0)) throw std::invalid_argument("tail_mass: r must be positive");
  if (f.is_zero()) return 0.0;
  const int d = p.d;
  const double s = p.s;
  const auto dirs = directions_for(d, spec.sphere_points(d), v);
  const double wdir = sphere_area(d) / static_cast<double>(dirs.size());
  std::vector<double> vals(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const Vec& e = dirs[i];
    if (p.kernel_mode == KernelMode::model) {
      vals[i] = wdir * plane_integral(f, p, v, e, 1.0, spec.plane).value * std::pow(r, -2.0 * s) / (2.0 * s);
    } else {
      vals[i] = wdir *
                power_tail([&](double rho) { return plane_integral(f, p, v, e, rho, spec.plane).value; }, r, s,
                           spec.radial)
                    .value;
    }
  }
  return pairwise_sum(vals);
}

PvResult cancel1(const Profile& f, const ModelParams& p, const Vec& v, double R, const KernelSpec& spec) {
  if (!(R > 0.0)) throw std::invalid_argument("cancel1: R must be positive");
  PvResult out;
  if (f.is_zero()) {
    out.ladder.assign(static_cast<std::size_t>(spec.ladder_steps) + 1, 0.0);
    return out;
  }
  const int d = p.d;
  const double s = p.s;
  const double reach = support_reach(f, v, spec.plane.radial_cutoff) + 1.0;
  const double Rfin = std::isinf(R) ? reach : R;
  PvSpec pv;
  pv.quad = spec.radial;
  pv.directions = spec.sphere_points(d);
  pv.ladder_steps = spec.ladder_steps;
  pv.core_exponent = 2.0 - 2.0 * s;
  pv.axis = v;
  const double eps = std::min(Rfin, 1.0) / 4.0;
  auto paired = [&](const Vec& e, double rho) {
    return -std::pow(rho, -d - 2.0 * s) * second_difference_plane(f, p, v, e, rho, spec.plane);
  };
  out = pv_ring_integral_paired(paired, d, eps, Rfin, pv);
  if (std::isinf(R)) {
    // beyond the reach only the K_f(v, v') term survives
    const auto dirs = directions_for(d, pv.directions, v);
    const double wdir = sphere_area(d) / static_cast<double>(dirs.size());
    std::vector<double> tail(dirs.size());
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const Vec& e = dirs[i];
      if (p.kernel_mode == KernelMode::model)
        tail[i] = wdir * plane_integral(f, p, v, e, 1.0, spec.plane).value * std::pow(Rfin, -2.0 * s) / (2.0 * s);
      else
        tail[i] = wdir * power_tail([&](double rho) { return plane_integral(f, p, v, e, rho, spec.plane).value; },
                                    Rfin, s, spec.radial)
                             .value;
    }
    const double t = pairwise_sum(tail);
    out.value += t;
    for (auto& l : out.ladder) l += t;
  }
  return out;
}

VecPvResult cancel2(const Profile& f, const ModelParams& p, const Vec& v, double r, const KernelSpec& spec) {
  if (!(r > 0.0)) throw std::invalid_argument("cancel2: r must be positive");
  const int d = p.d;
  const double s = p.s;
  VecPvResult out;
  out.value = Vec::zero(d);
  if (f.is_zero()) return out;
  const auto dirs = directions_for(d, spec.sphere_points(d), v);
  const double wdir = sphere_area(d) / static_cast<double>(dirs.size());
  std::vector<std::vector<double>> comp(static_cast<std::size_t>(d), std::vector<double>(dirs.size()));
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const Vec& e = dirs[i];
    auto res = integrate_1d(
        [&](double rho) { return 0.5 * std::pow(rho, -2.0 * s) * odd_difference_plane(f, p, v, e, rho, spec.plane); },
        0.0, r, spec.radial);
    out.converged = out.converged && res.converged;
    for (int k = 0; k < d; ++k) comp[static_cast<std::size_t>(k)][i] = wdir * res.value * e[k];
  }
  for (int k = 0; k < d; ++k) out.value[k] = pairwise_sum(comp[static_cast<std::size_t>(k)]);
  return out;
}

QuadResult cov_pv_discrepancy(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& vbar, double R,
                              const KernelSpec& spec) {
  if (!(R > 0.0)) throw std::invalid_argument("cov_pv_discrepancy: R must be positive");
  if (f.is_zero()) return {};
  const int d = p.d;
  const double s = p.s;
  const auto dirs = directions_for(d, spec.sphere_points(d), M.direction);
  auto ray = [&](const Vec& e, double rho) {
    return -0.5 * std::pow(rho, -d - 2.0 * s) * second_difference_plane(f, p, vbar, e, rho, spec.plane);
  };
  return sphere_radial_integral(
      ray, dirs, [&](const Vec& e) { return R / norm(t0_inverse(M, e)); }, [&](const Vec&) { return R; },
      spec.radial);
}

std::vector<double> cov_tail_out(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v,
                                 const std::vector<double>& radii, const KernelSpec& spec) {
  require_ascending(radii, "cov_tail_out");
  std::vector<double> out(radii.size(), 0.0);
  if (f.is_zero()) return out;
  const int d = p.d;
  const double s = p.s;
  const auto dirs = directions_for(d, spec.sphere_points(d), M.direction);
  const double wdir = sphere_area(d) / static_cast<double>(dirs.size());
  auto rows = parallel_map(dirs.size(), [&](std::size_t i) {
    CovRay ray(f, p, M, v, dirs[i], spec.plane);
    std::vector<double> row(radii.size());
    for (std::size_t k = 0; k < radii.size(); ++k) {
      const double r = radii[k];
      if (ray.fast())
        row[k] = wdir * ray.J(0.0, 1.0) / (2.0 * s);
      else
        row[k] = wdir * std::pow(r, 2.0 * s) *
                 power_tail([&](double rho) { return ray.J(0.0, rho); }, r, s, spec.radial).value;
    }
    return row;
  });
  for (std::size_t k = 0; k < radii.size(); ++k) out[k] = sum_column(rows, k);
  return out;
}

std::vector<double> cov_tail_in(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& vp,
                                const std::vector<double>& radii, const KernelSpec& spec) {
  require_ascending(radii, "cov_tail_in");
  std::vector<double> out(radii.size(), 0.0);
  if (f.is_zero()) return out;
  const int d = p.d;
  const double s = p.s;
  const std::size_t K = radii.size();
  const auto dirs = directions_for(d, spec.sphere_points(d), M.direction);
  const double wdir = sphere_area(d) / static_cast<double>(dirs.size());
  auto rows = parallel_map(dirs.size(), [&](std::size_t i) {
    CovRay ray(f, p, M, vp, dirs[i], spec.plane);
    auto g = [&](double rho) { return ray.J(-rho, rho) * std::pow(rho, -1.0 - 2.0 * s); };
    // piece k covers [r_k, r_{k+1}), the last one [r_K, inf)
    std::vector<double> piece(K, 0.0);
    if (ray.fast()) {
      std::vector<std::pair<double, double>> win;
      for (const auto& [a, b] : ray.windows(spec.plane.radial_cutoff)) win.emplace_back(-b, -a);
      win = merge_intervals(win);
      for (std::size_t k = 0; k < K; ++k) {
        const double lo = radii[k], hi = k + 1 < K ? radii[k + 1] : std::numeric_limits<double>::infinity();
        std::vector<std::pair<double, double>> iv;
        for (const auto& [a, b] : win) {
          const double x = std::max(a, lo), y = std::min(b, hi);
          if (y > x) iv.emplace_back(x, y);
        }
        if (!iv.empty()) piece[k] = integrate_intervals(g, iv, spec.radial).value;
      }
    } else {
      for (std::size_t k = 0; k + 1 < K; ++k) piece[k] = integrate_1d(g, radii[k], radii[k + 1], spec.radial).value;
      piece[K - 1] = power_tail([&](double rho) { return ray.J(-rho, rho); }, radii[K - 1], s, spec.radial).value;
    }
    std::vector<double> row(K);
    double acc = 0.0;
    for (std::size_t k = K; k-- > 0;) {
      acc += piece[k];
      row[k] = wdir * std::pow(radii[k], 2.0 * s) * acc;
    }
    return row;
  });
  for (std::size_t k = 0; k < K; ++k) out[k] = sum_column(rows, k);
  return out;
}

QuadResult cov_cancel1(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v, double R,
                       const KernelSpec& spec) {
  if (!(R > 0.0)) throw std::invalid_argument("cov_cancel1: R must be positive");
  QuadResult out;
  if (f.is_zero()) return out;
  const int d = p.d;
  const double s = p.s;
  const auto dirs = directions_for(d, spec.sphere_points(d), M.direction);
  const double wdir = sphere_area(d) / static_cast<double>(dirs.size());
  auto parts = parallel_map(dirs.size(), [&](std::size_t i) {
    CovRay ray(f, p, M, v, dirs[i], spec.plane);
    auto paired = [&](double rho) { return -0.5 * ray.second_difference(rho) * std::pow(rho, -1.0 - 2.0 * s); };
    if (std::isfinite(R)) return integrate_1d(paired, 0.0, R, spec.radial);
    // beyond R0 the K(v,v') part has the closed tail J(0) R0^{-2s}/2s
    const double R0 = 1.0;
    QuadResult res = integrate_1d(paired, 0.0, R0, spec.radial);
    auto shifted = [&](double rho) {
      return -0.5 * (ray.J(rho, rho) + ray.J(-rho, rho)) * std::pow(rho, -1.0 - 2.0 * s);
    };
    QuadResult far;
    if (ray.fast()) {
      res.value += ray.J(0.0, 1.0) * std::pow(R0, -2.0 * s) / (2.0 * s);
      std::vector<std::pair<double, double>> win;
      for (const auto& [a, b] : ray.windows(spec.plane.radial_cutoff)) {
        win.emplace_back(std::max(a, R0), b);
        win.emplace_back(std::max(-b, R0), -a);
      }
      std::erase_if(win, [](const auto& w) { return !(w.second > w.first); });
      if (!win.empty()) far = integrate_intervals(shifted, merge_intervals(win), spec.radial);
    } else {
      const Vec te = t0_apply(M, dirs[i]);
      const double R1 = std::max(R0, (support_reach(f, cov_base_velocity(M, v), spec.plane.radial_cutoff) + 1.0) /
                                         norm(te));
      far = integrate_1d(shifted, R0, R1, spec.radial);
      auto own = power_tail([&](double rho) { return ray.J(0.0, rho); }, R0, s, spec.radial);
      res.value += own.value;
      res.error += own.error;
      res.converged = res.converged && own.converged;
    }
    res.value += far.value;
    res.error += far.error;
    res.converged = res.converged && far.converged;
    return res;
  });
  std::vector<double> vals(parts.size()), errs(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    vals[i] = wdir * parts[i].value;
    errs[i] = wdir * parts[i].error;
    out.converged = out.converged && parts[i].converged;
    out.evaluations += parts[i].evaluations;
  }
  out.value = pairwise_sum(vals);
  out.error = pairwise_sum(errs);
  return out;
}

std::vector<Vec> cov_cancel2(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v,
                             const std::vector<double>& radii, const KernelSpec& spec) {
  require_ascending(radii, "cov_cancel2");
  const int d = p.d;
  const double s = p.s;
  const std::size_t K = radii.size();
  std::vector<Vec> out(K, Vec::zero(d));
  if (f.is_zero()) return out;
  const auto dirs = directions_for(d, spec.sphere_points(d), M.direction);
  const double wdir = sphere_area(d) / static_cast<double>(dirs.size());
  auto rows = parallel_map(dirs.size(), [&](std::size_t i) {
    CovRay ray(f, p, M, v, dirs[i], spec.plane);
    auto g = [&](double rho) { return 0.5 * ray.odd_difference(rho) * std::pow(rho, -2.0 * s); };
    std::vector<double> row(K);
    double acc = 0.0, lo = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      acc += integrate_1d(g, lo, radii[k], spec.radial).value;
      lo = radii[k];
      row[k] = wdir * acc;
    }
    return row;
  });
  for (std::size_t k = 0; k < K; ++k)
    for (int c = 0; c < d; ++c) {
      std::vector<double> col(dirs.size());
      for (std::size_t i = 0; i < dirs.size(); ++i) col[i] = rows[i][k] * dirs[i][c];
      out[k][c] = pairwise_sum(col);
    }
  return out;
}

double cutoff_phi(const CutoffSpec& spec, const Vec& v) {
  const double sp = norm(spec.v0);
  if (!(sp > 0.0)) throw std::invalid_argument("cutoff_phi: v0 must be nonzero");
  const double r = norm(v) / sp;
  auto psi = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  const double a = psi(1.0 / 8.0 - r), b = psi(r - 1.0 / 9.0);
  return a / (a + b);
}

double bump_tail(const Profile& f, const ModelParams& p, const CutoffSpec& cut, const VelocityFn& g, const Vec& v,
                 const KernelSpec& spec) {
  if (f.is_zero()) return 0.0;
  const int d = p.d;
  const double s = p.s;
  const double outer = cut.outer();
  const double a = norm(v);
  if (!(a > outer)) throw std::invalid_argument("bump_tail: v must lie outside B_{|v0|/8}");
  const double cmin = std::sqrt(std::max(0.0, 1.0 - (outer / a) * (outer / a)));
  const Vec axis = -v / a;
  const int n = std::max(64, spec.sphere_points(d) / 4);
  const auto dirs = cap_grid(d, n, axis, cmin);
  const double wdir = cap_area(d, cmin) / static_cast<double>(n);
  const bool model = p.kernel_mode == KernelMode::model;
  std::vector<double> vals(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const Vec& e = dirs[i];
    const double b = dot(v, e);
    const double disc = b * b - a * a + outer * outer;
    if (disc <= 0.0) continue;
    const double lo = std::max(0.0, -b - std::sqrt(disc)), hi = -b + std::sqrt(disc);
    if (hi <= lo) continue;
    const double J = model ? plane_integral(f, p, v, e, 1.0, spec.plane).value : 0.0;
    auto res = integrate_1d(
        [&](double rho) {
          const Vec vp = v + rho * e;
          const double k = model ? J : plane_integral(f, p, v, e, rho, spec.plane).value;
          return std::abs(g(vp)) * cutoff_phi(cut, vp) * k * std::pow(rho, -1.0 - 2.0 * s);
        },
        lo, hi, spec.radial);
    vals[i] = wdir * res.value;
  }
  return pairwise_sum(vals);
}

}  // namespace kinokit
