#include "kinokit/profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace kinokit {

std::string to_string(KernelMode m) { return m == KernelMode::model ? "model" : "carleman"; }

KernelMode kernel_mode_from_string(const std::string& s) {
  if (s == "model") return KernelMode::model;
  if (s == "carleman") return KernelMode::carleman;
  throw std::invalid_argument("unknown kernel_mode '" + s + "'");
}

void ModelParams::validate() const {
  if (d != 2 && d != 3) throw std::invalid_argument("d must be 2 or 3");
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("0 < s < 1 violated");
  if (!(gamma > -d)) throw std::invalid_argument("gamma > -d violated");
  if (!(c_b > 0.0)) throw std::invalid_argument("c_b > 0 violated");
  if (!(b_norm > 0.0)) throw std::invalid_argument("b_norm > 0 violated");
  if (!(a_cap > 0.0)) throw std::invalid_argument("a_cap > 0 violated");
}

ModelParams make_inverse_power_params(double p_exp, int d) {
  if (!(p_exp > 2.0)) throw std::invalid_argument("make_inverse_power_params: exponent must exceed 2");
  ModelParams p;
  p.d = d;
  p.gamma = (p_exp - 2.0 * d + 1.0) / (p_exp - 1.0);
  p.s = 1.0 / (p_exp - 1.0);
  p.validate();
  return p;
}

double CompactBump::shape(double r) const {
  if (r >= 1.0) return 0.0;
  const double u = 1.0 - r * r;
  if (smoothness <= 0) return std::exp(1.0 - 1.0 / u);
  return std::pow(u, smoothness);
}

Profile Profile::maxwellian(int d, double mass, double temperature) {
  Profile p(d);
  p.add({mass, temperature, Vec::zero(d)});
  return p;
}

Profile& Profile::add(GaussianComponent c) {
  if (!(c.mass > 0.0) || !(c.temperature > 0.0)) throw std::invalid_argument("Gaussian component needs mass, T > 0");
  if (c.drift.dim() == 0) c.drift = Vec::zero(d_);
  if (c.drift.dim() != d_) throw std::invalid_argument("Gaussian drift has wrong dimension");
  comps_.push_back(c);
  return *this;
}

Profile& Profile::set_bump(CompactBump b) {
  if (!(b.radius > 0.0) || !(b.amplitude > 0.0)) throw std::invalid_argument("bump needs radius, amplitude > 0");
  if (b.center.dim() == 0) b.center = Vec::zero(d_);
  if (b.center.dim() != d_) throw std::invalid_argument("bump center has wrong dimension");
  bump_ = b;
  return *this;
}

double Profile::operator()(const Vec& v) const {
  double s = 0.0;
  for (const auto& c : comps_) {
    const double T = c.temperature;
    s += c.mass * std::pow(2.0 * std::numbers::pi * T, -0.5 * d_) * std::exp(-norm2(v - c.drift) / (2.0 * T));
  }
  if (bump_) s += bump_->amplitude * bump_->shape(norm(v - bump_->center) / bump_->radius);
  return s;
}

std::vector<Ball> Profile::support(double cutoff) const {
  std::vector<Ball> out;
  for (const auto& c : comps_) out.push_back({c.drift, cutoff * std::sqrt(c.temperature)});
  if (bump_) out.push_back({bump_->center, bump_->radius});
  return out;
}

std::string Profile::hash() const {
  std::string desc = "d=" + std::to_string(d_);
  char buf[64];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, ",%.17g", x);
    desc += buf;
  };
  for (const auto& c : comps_) {
    desc += ";g";
    put(c.mass);
    put(c.temperature);
    for (int i = 0; i < d_; ++i) put(c.drift[i]);
  }
  if (bump_) {
    desc += ";b";
    for (int i = 0; i < d_; ++i) put(bump_->center[i]);
    put(bump_->radius);
    put(bump_->amplitude);
    put(bump_->smoothness);
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : desc) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

// Nested adaptive quadrature of g over a box in R^d.
double integrate_box(const std::function<double(const Vec&)>& g, const Vec& lo, const Vec& hi, double rel_tol,
                     double* err, bool* ok) {
  const int d = lo.dim();
  QuadratureSpec spec;
  spec.rel_tol = rel_tol;
  spec.abs_tol = 1e-14;
  spec.max_subdivisions = 400;
  Vec p(d);
  std::function<double(int)> level = [&](int k) -> double {
    QuadResult r = integrate_1d(
        [&](double x) {
          p[k] = x;
          return k + 1 < d ? level(k + 1) : g(p);
        },
        lo[k], hi[k], spec);
    if (!r.converged) *ok = false;
    if (k == 0) *err = r.error;
    return r.value;
  };
  return level(0);
}

double radial_moment(const CompactBump& b, int d, int power) {
  QuadratureSpec spec;
  spec.rel_tol = 1e-12;
  spec.abs_tol = 1e-16;
  return integrate_1d([&](double r) { return b.shape(r) * std::pow(r, d - 1 + power); }, 0.0, 1.0, spec).value;
}

}  // namespace

HydroQuantities hydro_quantities(const Profile& f, const ModelParams& params) {
  const int d = f.dim();
  if (d != params.d) throw std::invalid_argument("hydro_quantities: profile and params dimensions differ");
  HydroQuantities h;
  for (const auto& c : f.components()) {
    h.mass += c.mass;
    h.energy += c.mass * (norm2(c.drift) + d * c.temperature);
  }
  if (const auto& b = f.bump()) {
    const double area = sphere_area(d);
    const double m = b->amplitude * std::pow(b->radius, d) * area * radial_moment(*b, d, 0);
    const double second = b->amplitude * std::pow(b->radius, d + 2) * area * radial_moment(*b, d, 2);
    h.mass += m;
    h.energy += norm2(b->center) * m + second;
  }
  if (f.is_zero()) return h;
  if (f.components().size() == 1 && !f.bump()) {
    const auto& c = f.components()[0];
    h.entropy = c.mass * std::log(c.mass) - 0.5 * d * c.mass * (std::log(2.0 * std::numbers::pi * c.temperature) + 1.0);
    return h;
  }
  if (f.components().empty()) {
    const auto& b = *f.bump();
    QuadratureSpec spec;
    spec.rel_tol = 1e-10;
    spec.abs_tol = 1e-16;
    auto r = integrate_1d(
        [&](double r) {
          const double v = b.amplitude * b.shape(r);
          return v > 0.0 ? v * std::log(v) * std::pow(r, d - 1) : 0.0;
        },
        0.0, 1.0, spec);
    h.entropy = r.value * std::pow(b.radius, d) * sphere_area(d);
    h.entropy_error = r.error * std::pow(b.radius, d) * sphere_area(d);
    h.converged = r.converged;
    return h;
  }
  Vec lo(d), hi(d);
  bool first = true;
  for (const auto& ball : f.support(10.0)) {
    for (int i = 0; i < d; ++i) {
      const double a = ball.center[i] - ball.radius, b = ball.center[i] + ball.radius;
      lo[i] = first ? a : std::min(lo[i], a);
      hi[i] = first ? b : std::max(hi[i], b);
    }
    first = false;
  }
  bool ok = true;
  double err = 0.0;
  h.entropy = integrate_box(
      [&](const Vec& v) {
        const double x = f(v);
        return x > 0.0 ? x * std::log(x) : 0.0;
      },
      lo, hi, 1e-8, &err, &ok);
  h.entropy_error = err;
  h.converged = ok;
  return h;
}

double decay_envelope(const Profile& f, double q) {
  if (q < 0.0) throw std::invalid_argument("decay_envelope: q must be nonnegative");
  const int d = f.dim();
  if (f.is_zero()) return 0.0;
  auto val = [&](const Vec& v) { return std::pow(1.0 + norm(v), q) * f(v); };
  std::vector<std::pair<Vec, double>> lines;  // direction, half-length
  for (const auto& c : f.components()) {
    const double len = norm(c.drift) + 12.0 * std::sqrt(c.temperature) + q + 1.0;
    lines.emplace_back(norm(c.drift) > 0 ? normalized(c.drift) : Vec::unit(d, 0), len);
  }
  if (const auto& b = f.bump())
    lines.emplace_back(norm(b->center) > 0 ? normalized(b->center) : Vec::unit(d, 0), norm(b->center) + b->radius);
  double best = 0.0;
  Vec arg = Vec::zero(d);
  for (const auto& [dir, len] : lines) {
    constexpr int n = 4001;
    double bt = 0.0, bv = -1.0;
    for (int i = 0; i < n; ++i) {
      const double t = -len + 2.0 * len * i / (n - 1);
      const double y = val(t * dir);
      if (y > bv) {
        bv = y;
        bt = t;
      }
    }
    // Golden-section polish on the bracketing cell.
    double a = bt - 2.0 * len / (n - 1), b = bt + 2.0 * len / (n - 1);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 100; ++it) {
      const double c1 = b - g * (b - a), c2 = a + g * (b - a);
      if (val(c1 * dir) > val(c2 * dir))
        b = c2;
      else
        a = c1;
    }
    const double tm = 0.5 * (a + b);
    const double vm = std::max(bv, val(tm * dir));
    if (vm > best) {
      best = vm;
      arg = vm == bv ? bt * dir : tm * dir;
    }
  }
  // Global pattern-search polish.
  double step = 0.5;
  Vec x = arg;
  double fx = best;
  while (step > 1e-10) {
    bool moved = false;
    for (int i = 0; i < d; ++i) {
      for (double sgn : {1.0, -1.0}) {
        Vec y = x;
        y[i] += sgn * step;
        const double fy = val(y);
        if (fy > fx) {
          x = y;
          fx = fy;
          moved = true;
        }
      }
    }
    if (!moved) step *= 0.5;
  }
  return std::max(best, fx);
}

void HydroBounds::validate() const {
  if (!(m0 > 0.0 && m0 <= M0)) throw std::invalid_argument("hydro bounds: 0 < m0 <= M0 violated");
  if (!(E0 >= 0.0)) throw std::invalid_argument("hydro bounds: E0 >= 0 violated");
}

bool hydro_gate(const HydroQuantities& h, const HydroBounds& b) {
  return h.mass >= b.m0 && h.mass <= b.M0 && h.energy <= b.E0 && h.entropy <= b.H0;
}

}  // namespace kinokit
