#include "kinokit/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "kinokit/parallel.hpp"

namespace kinokit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t id_key(const std::string& id) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : id) h = (h ^ c) * 1099511628211ULL;
  return h;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

std::map<std::string, double> tolerance_record(const Tolerances& t) {
  return {{"lambda_min", t.lambda_min},       {"anchor_factor", t.anchor_factor},
          {"uniformity", t.uniformity},       {"mu_min", t.mu_min},
          {"fit_slack", t.fit_slack},         {"cone_slack", t.cone_slack},
          {"min_r_squared", t.min_r_squared}, {"distance_band", t.distance_band},
          {"c_max", t.c_max},                 {"ratio_spread", t.ratio_spread}};
}

CheckResult start(const std::string& id, const Profile& f, const ModelParams& p, const VerifyConfig& cfg) {
  CheckResult r;
  r.check_id = id;
  r.params = p;
  r.profile_hash = f.hash();
  r.tolerance = tolerance_record(cfg.tol);
  return r;
}

Vec axis_of(int d) { return Vec::unit(d, 0); }

CovMap sweep_map(const ModelParams& p, double speed) { return make_cov_map(speed * axis_of(p.d), p); }

std::vector<Vec> frame(const Vec& axis) {
  const Vec e = normalized(axis);
  const auto c = orthonormal_complement(e);
  std::vector<Vec> out{e, c[0]};
  if (e.dim() == 3) out.push_back(c[1]);
  return out;
}

std::vector<Vec> grid_dirs(int d, int n, const Vec& axis) { return sphere_grid(d, n, axis); }

// Radii no larger than `cap`, or the single radius cap when none qualify.
std::vector<double> radii_up_to(const std::vector<double>& radii, double cap) {
  std::vector<double> out;
  for (double r : radii)
    if (r <= cap) out.push_back(r);
  if (out.empty()) out.push_back(cap);
  return out;
}

// r^{2s-2} int_0^r rho^{1-2s} Jbar(v,sigma,rho) drho for each direction and radius.
std::vector<std::vector<double>> moment_table(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v,
                                              const std::vector<Vec>& dirs, const std::vector<double>& radii,
                                              const KernelSpec& spec) {
  const double s = p.s;
  return parallel_map(dirs.size(), [&](std::size_t i) {
    std::vector<double> row(radii.size());
    if (p.kernel_mode == KernelMode::model) {
      const double J = cov_direction_integral(f, p, M, v, dirs[i], 1.0, spec.plane);
      std::fill(row.begin(), row.end(), J / (2.0 - 2.0 * s));
      return row;
    }
    double acc = 0.0, lo = 0.0;
    for (std::size_t k = 0; k < radii.size(); ++k) {
      acc += integrate_1d(
                 [&](double rho) {
                   return std::pow(rho, 1.0 - 2.0 * s) * cov_direction_integral(f, p, M, v, dirs[i], rho, spec.plane);
                 },
                 lo, radii[k], spec.radial)
                 .value;
      lo = radii[k];
      row[k] = acc * std::pow(radii[k], 2.0 * s - 2.0);
    }
    return row;
  });
}

std::vector<double> nondeg_from_table(const std::vector<std::vector<double>>& tab, const std::vector<Vec>& dirs,
                                      int d, std::size_t nrad, const Vec& axis) {
  const double w = sphere_area(d) / static_cast<double>(dirs.size());
  auto es = grid_dirs(d, d == 3 ? 256 : 128, axis);
  for (const auto& e : frame(axis)) {
    es.push_back(e);
    es.push_back(-e);
  }
  std::vector<double> out(nrad, kInf);
  for (const auto& e : es) {
    std::vector<double> acc(nrad, 0.0);
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const double c = std::max(0.0, dot(dirs[i], e));
      if (c == 0.0) continue;
      for (std::size_t k = 0; k < nrad; ++k) acc[k] += w * c * c * tab[i][k];
    }
    for (std::size_t k = 0; k < nrad; ++k) out[k] = std::min(out[k], acc[k]);
  }
  return out;
}

std::vector<double> moment_from_table(const std::vector<std::vector<double>>& tab, int d, std::size_t nrad) {
  const double w = sphere_area(d) / static_cast<double>(tab.size());
  std::vector<double> out(nrad);
  for (std::size_t k = 0; k < nrad; ++k) {
    std::vector<double> col(tab.size());
    for (std::size_t i = 0; i < tab.size(); ++i) col[i] = w * tab[i][k];
    out[k] = pairwise_sum(col);
  }
  return out;
}

double vmin(const std::vector<double>& xs) { return *std::min_element(xs.begin(), xs.end()); }
double vmax(const std::vector<double>& xs) { return *std::max_element(xs.begin(), xs.end()); }

std::optional<FitResult> fit_positive(const std::vector<std::pair<double, double>>& pts) {
  std::vector<std::pair<double, double>> use;
  for (const auto& [x, y] : pts)
    if (x > 0.0 && y > 0.0 && std::isfinite(y)) use.emplace_back(x, y);
  if (use.size() < 3) return std::nullopt;
  return fit_power_law(use);
}

// Records a |v0| series with its anchor, extremes and uniformity ratio under `name`.
void record_series(CheckResult& r, const std::string& name, const std::vector<double>& speeds,
                   const std::vector<double>& vals) {
  auto& ser = r.series[name];
  for (std::size_t i = 0; i < vals.size(); ++i) ser.emplace_back(speeds[i], vals[i]);
  r.series_axis[name] = "v0";
  if (vals.empty()) return;
  r.constants[name + "_anchor"] = vals.front();
  r.constants[name + "_min"] = vmin(vals);
  r.constants[name + "_max"] = vmax(vals);
  r.constants[name + "_uniformity"] = uniformity_ratio(vals);
  if (auto fit = fit_positive(ser)) r.fits[name] = *fit;
}

bool within_anchor(const std::vector<double>& vals, double factor) {
  if (vals.empty()) return true;
  const double cap = factor * vals.front();
  return std::all_of(vals.begin(), vals.end(), [&](double x) { return x <= cap * (1.0 + 1e-12) + 1e-300; });
}

double mass_energy(const Profile& f, const ModelParams& p) {
  const auto h = hydro_quantities(f, p);
  return h.mass + h.energy;
}

void guard_ellipticity(CheckResult& r, const ModelParams& p) {
  if (!p.ellipticity_range()) r.errors.push_back("requires gamma + 2s in [0,2]");
}

}  // namespace

void SweepGrid::validate() const {
  auto check = [](const std::vector<double>& xs, const char* what) {
    if (xs.empty()) throw std::invalid_argument(std::string("sweep: ") + what + " must be nonempty");
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!(xs[i] > 0.0) || !std::isfinite(xs[i]))
        throw std::invalid_argument(std::string("sweep: ") + what + " must be positive and finite");
      if (i > 0 && !(xs[i] > xs[i - 1]))
        throw std::invalid_argument(std::string("sweep: ") + what + " must be strictly ascending");
    }
  };
  check(v0_magnitudes, "v0_magnitudes");
  check(radii, "radii");
  if (directions < 16) throw std::invalid_argument("sweep: directions must be at least 16");
}

Tolerances Tolerances::scaled(double x) const {
  if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("tolerance scale must be positive");
  Tolerances t = *this;
  t.lambda_min /= x;
  t.anchor_factor *= x;
  t.uniformity *= x;
  t.mu_min /= x;
  t.fit_slack *= x;
  t.cone_slack *= x;
  t.min_r_squared = 1.0 - (1.0 - min_r_squared) * x;
  t.distance_band *= x;
  t.c_max *= x;
  t.ratio_spread *= x;
  return t;
}

KernelSpec VerifyConfig::kernel() const {
  KernelSpec k;
  k.plane = quadrature;
  k.radial = quadrature;
  k.radial.abs_tol = std::min(quadrature.abs_tol, 1e-14);
  k.directions = grid.directions;
  return k;
}

double uniformity_ratio(const std::vector<double>& values) {
  double lo = kInf, hi = 0.0;
  bool any_zero = false;
  for (double x : values) {
    const double a = std::abs(x);
    if (a == 0.0) {
      any_zero = true;
      continue;
    }
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  if (hi == 0.0) return 1.0;
  if (any_zero) return kInf;
  return hi / lo;
}

std::vector<Vec> ball_probes(int d, double radius, const Vec& axis) {
  std::vector<Vec> out{Vec::zero(d)};
  for (const auto& e : frame(axis)) {
    out.push_back(0.75 * radius * e);
    out.push_back(-0.75 * radius * e);
  }
  return out;
}

std::vector<double> nondeg_profile(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v,
                                   const std::vector<double>& radii, const KernelSpec& spec) {
  const auto dirs = grid_dirs(p.d, spec.sphere_points(p.d), M.direction);
  const auto tab = moment_table(f, p, M, v, dirs, radii, spec);
  return nondeg_from_table(tab, dirs, p.d, radii.size(), M.direction);
}

std::vector<double> second_moment_profile(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v,
                                          const std::vector<double>& radii, const KernelSpec& spec) {
  const auto dirs = grid_dirs(p.d, spec.sphere_points(p.d), M.direction);
  return moment_from_table(moment_table(f, p, M, v, dirs, radii, spec), p.d, radii.size());
}

McResult measure_fraction(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v, const Ball& ball,
                          double lambda, std::size_t n, std::uint64_t seed, const QuadratureSpec& q) {
  if (!(lambda > 0.0)) throw std::invalid_argument("measure_fraction: probe lambda must be positive");
  if (n == 0) throw std::invalid_argument("measure_fraction: empty sample");
  CounterRng rng(seed);
  std::vector<Vec> pts(n);
  for (auto& x : pts) x = ball.center + ball.radius * rng.in_ball(p.d);
  auto hits = parallel_map(n, [&](std::size_t i) -> double {
    const Vec dv = pts[i] - v;
    const double rho = norm(dv);
    if (!(rho > 0.0)) return 0.0;
    return cov_direction_integral(f, p, M, v, dv / rho, rho, q) >= lambda ? 1.0 : 0.0;
  });
  McResult out;
  out.n = n;
  out.value = pairwise_sum(hits) / static_cast<double>(n);
  out.std_error = std::sqrt(std::max(0.0, out.value * (1.0 - out.value)) / static_cast<double>(n));
  return out;
}

ConeMeasure cone_measure(const Profile& f, const ModelParams& p, const Vec& v, double threshold, int directions,
                         const QuadratureSpec& q) {
  const Vec axis = norm(v) > 0.0 ? v : axis_of(p.d);
  const auto dirs = grid_dirs(p.d, directions, axis);
  auto J = parallel_map(dirs.size(), [&](std::size_t i) { return cone_direction_integral(f, p, v, dirs[i], q).value; });
  ConeMeasure m;
  for (std::size_t i = 0; i < dirs.size(); ++i)
    if (J[i] >= threshold) {
      ++m.count;
      m.width = std::max(m.width, std::abs(dot(dirs[i], v)));
    }
  m.area = sphere_area(p.d) * static_cast<double>(m.count) / static_cast<double>(dirs.size());
  return m;
}

ConeMeasure cone_measure_cov(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v, double threshold,
                             int directions, const QuadratureSpec& q) {
  ModelParams pm = p;
  pm.kernel_mode = KernelMode::model;
  const auto dirs = grid_dirs(p.d, directions, M.direction);
  auto J = parallel_map(dirs.size(), [&](std::size_t i) { return cov_direction_integral(f, pm, M, v, dirs[i], 1.0, q); });
  ConeMeasure m;
  for (std::size_t i = 0; i < dirs.size(); ++i)
    if (J[i] >= threshold) {
      ++m.count;
      m.width = std::max(m.width, std::abs(dot(dirs[i], v)));
    }
  m.area = sphere_area(p.d) * static_cast<double>(m.count) / static_cast<double>(dirs.size());
  return m;
}

double isotropic_level(const Profile& f, const ModelParams& p, int directions, const QuadratureSpec& q) {
  if (f.is_zero()) return 0.0;
  const auto dirs = sphere_grid(p.d, directions);
  const auto support = f.support(q.radial_cutoff);
  auto m = parallel_map(dirs.size(), [&](std::size_t i) {
    return integrate_hyperplane([&](const Vec& w) { return f(w); }, dirs[i], q, support).value;
  });
  return pairwise_sum(m) / static_cast<double>(dirs.size());
}

double a0_ratio(const Profile& f, const ModelParams& p, const CovMap& M, const Point& z1, const Point& z2,
                double alpha, const std::vector<double>& rhos, const KernelSpec& spec) {
  const double s = p.s;
  const double dist = kdistance(z1, z2, s);
  if (!(dist > 0.0)) return 0.0;
  const double ap = 2.0 * s * alpha / (1.0 + 2.0 * s);
  const auto dirs = grid_dirs(p.d, spec.sphere_points(p.d), M.direction);
  const double w = sphere_area(p.d) / static_cast<double>(dirs.size());
  // the profile is static, so the frozen kernels depend on the velocities only
  auto rows = parallel_map(dirs.size(), [&](std::size_t i) {
    std::vector<double> row(rhos.size());
    if (p.kernel_mode == KernelMode::model) {
      const double dJ = std::abs(cov_direction_integral(f, p, M, z1.v, dirs[i], 1.0, spec.plane) -
                                 cov_direction_integral(f, p, M, z2.v, dirs[i], 1.0, spec.plane));
      for (std::size_t k = 0; k < rhos.size(); ++k) row[k] = w * dJ * std::pow(rhos[k], 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
      return row;
    }
    double acc = 0.0, lo = 0.0;
    for (std::size_t k = 0; k < rhos.size(); ++k) {
      acc += integrate_1d(
                 [&](double rho) {
                   return std::pow(rho, 1.0 - 2.0 * s) *
                          std::abs(cov_direction_integral(f, p, M, z1.v, dirs[i], rho, spec.plane) -
                                   cov_direction_integral(f, p, M, z2.v, dirs[i], rho, spec.plane));
                 },
                 lo, rhos[k], spec.radial)
                 .value;
      lo = rhos[k];
      row[k] = w * acc;
    }
    return row;
  });
  double best = 0.0;
  for (std::size_t k = 0; k < rhos.size(); ++k) {
    std::vector<double> col(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i][k];
    best = std::max(best, pairwise_sum(col) / (std::pow(rhos[k], 2.0 - 2.0 * s) * std::pow(dist, ap)));
  }
  return best;
}

BandResult da_band(const CovMap& M, std::size_t n_pairs, std::uint64_t seed) {
  const int d = M.v0().dim();
  CounterRng rng(seed);
  BandResult b;
  b.min_ratio = kInf;
  b.max_ratio = 0.0;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const Vec v1 = M.v0() + t0_apply(M, rng.in_ball(d));
    const Vec v2 = M.v0() + t0_apply(M, rng.in_ball(d));
    const double g = dGS(v1, v2);
    const double ratio = g > 0.0 ? da(M, v1, v2) / g : 1.0;
    b.min_ratio = std::min(b.min_ratio, ratio);
    b.max_ratio = std::max(b.max_ratio, ratio);
  }
  b.pairs = n_pairs;
  if (n_pairs == 0) b.min_ratio = b.max_ratio = 1.0;
  return b;
}

CheckResult check_nondeg1(const Profile& f, const ModelParams& p, const VerifyConfig& cfg) {
  CheckResult r = start("nondeg1", f, p, cfg);
  guard_ellipticity(r, p);
  if (!r.errors.empty()) return r;
  const KernelSpec ks = cfg.kernel();
  const auto radii = p.kernel_mode == KernelMode::model ? std::vector<double>{1.0} : radii_up_to(cfg.grid.radii, 1.0);
  std::vector<double> lam;
  for (double V : cfg.grid.v0_magnitudes) {
    const CovMap M = sweep_map(p, V);
    double best = kInf;
    for (const auto& v : ball_probes(p.d, 2.0, M.direction)) {
      try {
        best = std::min(best, vmin(nondeg_profile(f, p, M, v, radii, ks)));
      } catch (const std::exception& e) {
        r.errors.push_back("v0=" + fmt(V) + ": " + e.what());
      }
    }
    lam.push_back(best);
  }
  record_series(r, "lambda", cfg.grid.v0_magnitudes, lam);
  const CovMap I = make_cov_map(Vec::zero(p.d), p);
  r.constants["lambda_untransformed_v16"] = vmin(nondeg_profile(f, p, I, 16.0 * axis_of(p.d), radii, ks));
  const double lo = vmin(lam);
  r.pass = r.errors.empty() && lo >= cfg.tol.lambda_min && uniformity_ratio(lam) <= cfg.tol.uniformity;
  if (lo < cfg.tol.lambda_min) r.witness.push_back("lambda below lambda_min: " + fmt(lo));
  return r;
}

CheckResult check_bounded(const Profile& f, const ModelParams& p, const VerifyConfig& cfg, int which) {
  if (which != 1 && which != 2) throw std::invalid_argument("check_bounded: which must be 1 or 2");
  CheckResult r = start(which == 1 ? "bounded1" : "bounded2", f, p, cfg);
  const KernelSpec ks = cfg.kernel();
  std::vector<double> lam;
  for (double V : cfg.grid.v0_magnitudes) {
    const CovMap M = sweep_map(p, V);
    double best = 0.0;
    for (const auto& v : ball_probes(p.d, 2.0, M.direction)) {
      try {
        const auto vals = which == 1 ? cov_tail_out(f, p, M, v, cfg.grid.radii, ks)
                                     : cov_tail_in(f, p, M, v, cfg.grid.radii, ks);
        best = std::max(best, vmax(vals));
      } catch (const std::exception& e) {
        r.errors.push_back("v0=" + fmt(V) + ": " + e.what());
      }
    }
    lam.push_back(best);
  }
  record_series(r, "Lambda", cfg.grid.v0_magnitudes, lam);
  const double me = mass_energy(f, p);
  if (me > 0.0) r.constants["Lambda_over_mass_energy"] = vmax(lam) / me;
  r.pass = r.errors.empty() && within_anchor(lam, cfg.tol.anchor_factor) &&
           uniformity_ratio(lam) <= cfg.tol.uniformity;
  return r;
}

CheckResult check_cancellation(const Profile& f, const ModelParams& p, const VerifyConfig& cfg, int which) {
  if (which != 1 && which != 2) throw std::invalid_argument("check_cancellation: which must be 1 or 2");
  CheckResult r = start(which == 1 ? "cancellation1" : "cancellation2", f, p, cfg);
  const KernelSpec ks = cfg.kernel();
  const double s = p.s;
  if (which == 2 && s < 0.5) {
    r.witness.push_back("not required for s < 1/2");
    r.pass = true;
    return r;
  }
  std::vector<double> lam, full;
  const auto radii = radii_up_to(cfg.grid.radii, 0.25);
  for (double V : cfg.grid.v0_magnitudes) {
    const CovMap M = sweep_map(p, V);
    double best = 0.0;
    for (const auto& v : ball_probes(p.d, 1.75, M.direction)) {
      try {
        if (which == 1) {
          best = std::max(best, std::abs(cov_cancel1(f, p, M, v, 0.25, ks).value));
        } else {
          const auto vals = cov_cancel2(f, p, M, v, radii, ks);
          for (std::size_t k = 0; k < radii.size(); ++k)
            best = std::max(best, norm(vals[k]) / (1.0 + std::pow(radii[k], 1.0 - 2.0 * s)));
        }
      } catch (const std::exception& e) {
        r.errors.push_back("v0=" + fmt(V) + ": " + e.what());
      }
    }
    lam.push_back(best);
    if (which == 1) {
      try {
        full.push_back(std::abs(cov_cancel1(f, p, M, Vec::zero(p.d), kInf, ks).value));
      } catch (const std::exception& e) {
        r.errors.push_back("v0=" + fmt(V) + " whole space: " + e.what());
        full.push_back(0.0);
      }
    }
  }
  record_series(r, "Lambda", cfg.grid.v0_magnitudes, lam);
  bool ok = r.errors.empty() && within_anchor(lam, cfg.tol.anchor_factor) &&
            uniformity_ratio(lam) <= cfg.tol.uniformity;
  if (which == 1) {
    record_series(r, "whole_space", cfg.grid.v0_magnitudes, full);
    r.constants["predicted_exponent"] = -2.0 * s;
    auto it = r.fits.find("whole_space");
    if (it != r.fits.end()) ok = ok && it->second.exponent <= -2.0 * s + cfg.tol.fit_slack;
  }
  r.pass = ok;
  return r;
}

CheckResult check_classK(const Profile& f, const ModelParams& p, const VerifyConfig& cfg) {
  CheckResult r = start("classK", f, p, cfg);
  guard_ellipticity(r, p);
  if (!r.errors.empty()) return r;
  const KernelSpec ks = cfg.kernel();
  const auto radii = p.kernel_mode == KernelMode::model ? std::vector<double>{1.0} : radii_up_to(cfg.grid.radii, 1.0);
  std::vector<double> up, low, mu;
  double sym = 0.0;
  double probe = 0.0;
  for (std::size_t iv = 0; iv < cfg.grid.v0_magnitudes.size(); ++iv) {
    const double V = cfg.grid.v0_magnitudes[iv];
    const CovMap M = sweep_map(p, V);
    const auto dirs = grid_dirs(p.d, ks.sphere_points(p.d), M.direction);
    double hi = 0.0, lo = kInf;
    for (const auto& v : ball_probes(p.d, 1.0, M.direction)) {
      try {
        const auto tab = moment_table(f, p, M, v, dirs, radii, ks);
        hi = std::max(hi, vmax(moment_from_table(tab, p.d, radii.size())));
        lo = std::min(lo, vmin(nondeg_from_table(tab, dirs, p.d, radii.size(), M.direction)));
      } catch (const std::exception& e) {
        r.errors.push_back("v0=" + fmt(V) + ": " + e.what());
      }
    }
    up.push_back(hi);
    low.push_back(lo);
    // symmetry of the frozen kernel at z = origin
    const Point z = Point::origin(p.d);
    for (const auto& e : sphere_grid(p.d, 32, M.direction)) {
      const double a = kernel_cov_eval(f, p, M, z, 0.5 * e, ks.plane).value;
      const double b = kernel_cov_eval(f, p, M, z, -0.5 * e, ks.plane).value;
      const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
      sym = std::max(sym, std::abs(a - b) / scale);
    }
    if (iv == 0) {
      const auto Jd = sphere_grid(p.d, 256, M.direction);
      double mean = 0.0;
      for (const auto& e : Jd) mean += cov_direction_integral(f, p, M, Vec::zero(p.d), e, 1.0, ks.plane);
      probe = 0.1 * mean / static_cast<double>(Jd.size());
      if (!(probe > 0.0)) probe = cfg.tol.lambda_min;
    }
    const std::size_t n = std::max<std::size_t>(256, cfg.mc_samples / 4);
    mu.push_back(measure_fraction(f, p, M, Vec::zero(p.d), {Vec::zero(p.d), 0.5}, probe, n,
                                  derive_seed(cfg.grid.seed, id_key("classK"), iv), ks.plane)
                     .value);
  }
  record_series(r, "Lambda_ii", cfg.grid.v0_magnitudes, up);
  record_series(r, "lambda_iv", cfg.grid.v0_magnitudes, low);
  record_series(r, "mu_iii", cfg.grid.v0_magnitudes, mu);
  r.constants["symmetry_residual"] = sym;
  r.constants["lambda_probe"] = probe;
  const double me = mass_energy(f, p);
  const double ratio = me > 0.0 ? vmax(up) / me : (vmax(up) > 0.0 ? kInf : 0.0);
  r.constants["Lambda_ii_over_moment"] = ratio;
  r.pass = r.errors.empty() && sym < 1e-8 && ratio <= cfg.tol.c_max && vmin(low) >= cfg.tol.lambda_min &&
           vmin(mu) >= cfg.tol.mu_min && uniformity_ratio(up) <= cfg.tol.uniformity &&
           uniformity_ratio(low) <= cfg.tol.uniformity;
  return r;
}

CheckResult check_measure_condition(const Profile& f, const ModelParams& p, const VerifyConfig& cfg,
                                    double lambda_probe) {
  CheckResult r = start("measure_condition", f, p, cfg);
  const KernelSpec ks = cfg.kernel();
  const int d = p.d;
  double probe = lambda_probe;
  if (!(probe > 0.0)) {
    const CovMap M = sweep_map(p, cfg.grid.v0_magnitudes.front());
    const auto Jd = sphere_grid(d, 256, M.direction);
    double mean = 0.0;
    for (const auto& e : Jd) mean += cov_direction_integral(f, p, M, Vec::zero(d), e, 1.0, ks.plane);
    probe = 0.1 * mean / static_cast<double>(Jd.size());
    if (!(probe > 0.0)) probe = cfg.tol.lambda_min;
  }
  r.constants["lambda_probe"] = probe;
  std::vector<Ball> balls;
  for (double rad : {0.25, 0.5, 1.0}) {
    balls.push_back({Vec::zero(d), rad});
    for (const auto& e : frame(axis_of(d))) {
      balls.push_back({0.5 * rad * e, rad});
      balls.push_back({-0.5 * rad * e, rad});
    }
  }
  const std::size_t n = std::max<std::size_t>(128, cfg.mc_samples / balls.size());
  std::vector<double> mu;
  double worst_err = 0.0;
  for (std::size_t iv = 0; iv < cfg.grid.v0_magnitudes.size(); ++iv) {
    const double V = cfg.grid.v0_magnitudes[iv];
    const CovMap M = sweep_map(p, V);
    double lo = 1.0;
    for (std::size_t b = 0; b < balls.size(); ++b) {
      // balls are centred relative to the frame of the map direction
      Ball B = balls[b];
      if (norm(B.center) > 0.0) {
        const auto F = frame(M.direction);
        Vec c = Vec::zero(d);
        for (int k = 0; k < d; ++k) c += B.center[k] * F[static_cast<std::size_t>(k)];
        B.center = c;
      }
      const auto m = measure_fraction(f, p, M, Vec::zero(d), B, probe, n,
                                      derive_seed(cfg.grid.seed, id_key("measure_condition"), iv, b), ks.plane);
      if (m.value < lo) {
        lo = m.value;
        worst_err = m.std_error;
      }
    }
    mu.push_back(lo);
  }
  record_series(r, "mu", cfg.grid.v0_magnitudes, mu);
  r.constants["mu_std_error"] = worst_err;
  // superlevel sets shrink as the probe grows
  const CovMap M0 = sweep_map(p, cfg.grid.v0_magnitudes.front());
  bool monotone = true;
  double prev = 2.0;
  auto& ladder = r.series["mu_vs_probe"];
  r.series_axis["mu_vs_probe"] = "lambda_probe";
  for (double factor : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double m = measure_fraction(f, p, M0, Vec::zero(d), {Vec::zero(d), 0.5}, factor * probe, n,
                                      derive_seed(cfg.grid.seed, id_key("measure_condition"), 999), ks.plane)
                         .value;
    ladder.emplace_back(factor * probe, m);
    monotone = monotone && m <= prev;
    prev = m;
  }
  r.constants["monotone_in_probe"] = monotone ? 1.0 : 0.0;
  r.pass = r.errors.empty() && monotone && vmin(mu) >= cfg.tol.mu_min;
  return r;
}

CheckResult check_cone(const Profile& f, const ModelParams& p, const VerifyConfig& cfg,
                       const std::vector<double>& speeds, double fraction) {
  CheckResult r = start("cone", f, p, cfg);
  const KernelSpec ks = cfg.kernel();
  const int n = ks.sphere_points(p.d);
  const double J0 = isotropic_level(f, p, n, ks.plane);
  const double lam = fraction * J0;
  r.constants["threshold_level"] = lam;
  r.coords["threshold_fraction"] = fraction;
  std::vector<std::pair<double, double>> area_pts;
  std::vector<double> widths;
  auto& area = r.series["area"];
  auto& width = r.series["width"];
  r.series_axis["area"] = "v";
  r.series_axis["width"] = "v";
  for (double sp : speeds) {
    const Vec v = sp * axis_of(p.d);
    const auto m = cone_measure(f, p, v, lam * std::pow(1.0 + sp, p.kappa()), n, ks.plane);
    area.emplace_back(sp, m.area);
    width.emplace_back(sp, m.width);
    area_pts.emplace_back(1.0 + sp, m.area);
    widths.push_back(m.width);
  }
  bool ok = J0 > 0.0;
  if (auto fit = fit_positive(area_pts)) {
    r.fits["area_vs_one_plus_v"] = *fit;
    ok = ok && std::abs(fit->exponent + 1.0) <= cfg.tol.cone_slack && fit->r_squared >= cfg.tol.min_r_squared &&
         fit->n_points == static_cast<int>(speeds.size());
  } else {
    ok = false;
    r.witness.push_back("cone empty at some speed");
  }
  if (!widths.empty()) {
    r.constants["width_max"] = vmax(widths);
    ok = ok && within_anchor(widths, cfg.tol.anchor_factor);
  }
  r.pass = ok;
  return r;
}

CheckResult check_cone_transformed(const Profile& f, const ModelParams& p, const VerifyConfig& cfg, double fraction) {
  CheckResult r = start("cone_transformed", f, p, cfg);
  const KernelSpec ks = cfg.kernel();
  const int n = ks.sphere_points(p.d);
  const double lam = fraction * isotropic_level(f, p, n, ks.plane);
  r.constants["threshold_level"] = lam;
  r.coords["threshold_fraction"] = fraction;
  std::vector<double> areas;
  for (double V : cfg.grid.v0_magnitudes) {
    const CovMap M = sweep_map(p, V);
    areas.push_back(cone_measure_cov(f, p, M, Vec::zero(p.d), lam, n, ks.plane).area);
  }
  record_series(r, "area", cfg.grid.v0_magnitudes, areas);
  std::size_t ref = 0;
  for (std::size_t i = 0; i < cfg.grid.v0_magnitudes.size(); ++i)
    if (cfg.grid.v0_magnitudes[i] == 4.0) ref = i;
  r.constants["area_reference"] = areas[ref];
  r.pass = lam > 0.0 && vmin(areas) > 0.0 && vmin(areas) >= 0.5 * areas[ref] &&
           uniformity_ratio(areas) <= cfg.tol.uniformity;
  return r;
}

CheckResult check_A0(const Profile& f, const ModelParams& p, const VerifyConfig& cfg, double alpha) {
  CheckResult r = start("A0", f, p, cfg);
  const double s = p.s;
  const double amax = std::min(1.0, 2.0 * s);
  if (!(alpha > 0.0)) alpha = 0.5 * amax;
  r.coords["alpha"] = alpha;
  if (!(alpha < amax)) {
    r.errors.push_back("alpha must lie in (0, min(1,2s))");
    return r;
  }
  const KernelSpec ks = cfg.kernel();
  const std::vector<double> rhos{0.25, 0.5, 1.0};
  const int d = p.d;
  std::vector<double> a0;
  double tx = 0.0;
  for (double V : cfg.grid.v0_magnitudes) {
    const CovMap M = sweep_map(p, V);
    const Point z1 = Point::origin(d);
    double best = 0.0;
    for (const auto& u : frame(M.direction)) {
      for (double delta : {0.0625, 0.125, 0.25, 0.5}) {
        const Point z2{0.0, Vec::zero(d), delta * u};
        try {
          best = std::max(best, a0_ratio(f, p, M, z1, z2, alpha, rhos, ks));
        } catch (const std::exception& e) {
          r.errors.push_back("v0=" + fmt(V) + ": " + e.what());
        }
      }
      if (d == 3) break;  // one perpendicular direction is enough by symmetry
    }
    a0.push_back(best);
    const Point zt{-0.25, 0.1 * M.direction, Vec::zero(d)};
    tx = std::max(tx, a0_ratio(f, p, M, z1, zt, alpha, rhos, ks));
  }
  record_series(r, "A0", cfg.grid.v0_magnitudes, a0);
  r.constants["tx_pair_ratio"] = tx;
  const double predicted = alpha / (1.0 + 2.0 * s) * std::max(0.0, 1.0 - 2.0 * s - p.gamma);
  r.constants["predicted_exponent"] = predicted;
  bool ok = r.errors.empty() && std::all_of(a0.begin(), a0.end(), [](double x) { return std::isfinite(x); }) &&
            tx == 0.0;
  auto it = r.fits.find("A0");
  if (it != r.fits.end()) ok = ok && it->second.exponent <= predicted + cfg.tol.fit_slack;
  r.pass = ok;
  return r;
}

CheckResult check_da_equivalence(const ModelParams& p, const VerifyConfig& cfg, std::size_t n_pairs) {
  CheckResult r = start("da_equivalence", Profile::zero(p.d), p, cfg);
  r.profile_hash.clear();
  r.coords["pairs"] = static_cast<double>(n_pairs);
  std::vector<double> lo, hi;
  for (std::size_t i = 0; i < cfg.grid.v0_magnitudes.size(); ++i) {
    const double V = cfg.grid.v0_magnitudes[i];
    if (V < 2.0) {
      r.errors.push_back("requires |v0| >= 2, got " + fmt(V));
      continue;
    }
    const auto b = da_band(sweep_map(p, V), n_pairs, derive_seed(cfg.grid.seed, id_key("da_equivalence"), i));
    lo.push_back(b.min_ratio);
    hi.push_back(b.max_ratio);
  }
  if (lo.empty()) return r;
  std::vector<double> used;
  for (double V : cfg.grid.v0_magnitudes)
    if (V >= 2.0) used.push_back(V);
  record_series(r, "ratio_min", used, lo);
  record_series(r, "ratio_max", used, hi);
  const double band = cfg.tol.distance_band;
  r.pass = r.errors.empty() && vmin(lo) >= 1.0 / band && vmax(hi) <= band;
  return r;
}

namespace {

// Radius where the Gressman-Strain ball of radius rho about v ends along sigma.
double gs_reach(const Vec& v, const Vec& sigma, double rho) {
  const double b = dot(v, sigma);
  auto dist2 = [&](double t) { return t * t * (1.0 + 0.25 * (2.0 * b + t) * (2.0 * b + t)); };
  double lo = 0.0, hi = rho;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * rho; ++it) {
    const double mid = 0.5 * (lo + hi);
    (dist2(mid) < rho * rho ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct RatioStats {
  double c = 0.0;
  double err = 0.0;
};

RatioStats ratio_estimate(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = pairwise_sum(a) / n, mb = pairwise_sum(b) / n;
  RatioStats out;
  if (!(mb > 0.0)) return out;
  out.c = ma / mb;
  std::vector<double> res(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) res[i] = (a[i] - out.c * b[i]) * (a[i] - out.c * b[i]);
  const double var = pairwise_sum(res) / std::max(1.0, n - 1.0);
  out.err = std::sqrt(var / n) / mb;
  return out;
}

std::pair<double, double> mean_and_error(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double m = pairwise_sum(x) / n;
  std::vector<double> sq(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - m) * (x[i] - m);
  return {m, std::sqrt(pairwise_sum(sq) / std::max(1.0, n - 1.0) / n)};
}

}  // namespace

CheckResult check_gs_coercivity(const Profile& f, const ModelParams& p, const VelocityFn& g, const VerifyConfig& cfg,
                                const CoercivitySpec& spec) {
  CheckResult r = start("gs_coercivity", f, p, cfg);
  r.coords["rho"] = spec.rho;
  guard_ellipticity(r, p);
  if (!r.errors.empty()) return r;
  const int d = p.d;
  const double s = p.s;
  KernelSpec ks = cfg.kernel();
  ks.directions = d == 3 ? spec.directions : 4 * spec.directions;
  const double inf = kInf;
  const CovMap I = make_cov_map(Vec::zero(d), p);

  double cb = p.c_b;
  if (spec.consistent_cb) {
    const double conv0 = conv_gamma(f, p, Vec::zero(d), cfg.quadrature);
    cb = conv0 > 0.0 ? cov_cancel1(f, p, I, Vec::zero(d), inf, ks).value / conv0 : p.c_b;
  }
  r.constants["c_b"] = cb;

  const auto dirs = sphere_grid(d, ks.sphere_points(d));
  const double wdir = sphere_area(d) / static_cast<double>(dirs.size());
  const Sampler sampler = gaussian_sampler(d, Vec::zero(d), spec.sampler_temperature);
  const std::size_t n = spec.samples;
  CounterRng rng(derive_seed(cfg.grid.seed, id_key("gs_coercivity")));
  std::vector<Sample> pts(n);
  for (auto& x : pts) x = sampler.draw(rng);
  const double kap = p.kappa();
  const double zero_exp = std::max(p.gamma, 0.0);

  struct Terms {
    double i1 = 0, i2 = 0, i3 = 0, direct = 0, semi = 0, zero = 0;
  };
  auto terms = parallel_map(n, [&](std::size_t i) {
    const Vec& v = pts[i].x;
    const double wt = pts[i].weight;
    const double g0 = g(v);
    Terms t;
    std::vector<double> a1(dirs.size()), as(dirs.size());
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      const Vec& e = dirs[k];
      // half of the Dirichlet form against K_f
      const bool model = p.kernel_mode == KernelMode::model;
      const double J = model ? plane_integral(f, p, v, e, 1.0, cfg.quadrature).value : 0.0;
      auto kern = [&](double rho) { return model ? J : plane_integral(f, p, v, e, rho, cfg.quadrature).value; };
      auto h = [&](double rho) {
        const double dg = g(v + rho * e) - g0;
        return dg * dg * kern(rho) * std::pow(rho, -1.0 - 2.0 * s);
      };
      const double near = integrate_1d(h, 0.0, 1.0, ks.radial).value;
      const double far = integrate_1d([&](double u) { return h(1.0 / u) / (u * u); }, 0.0, 1.0, ks.radial).value;
      a1[k] = 0.5 * wdir * (near + far);
      // anisotropic seminorm restricted to d_GS < rho
      const double tmax = gs_reach(v, e, spec.rho);
      as[k] = wdir * integrate_1d(
                         [&](double t) {
                           if (t <= 0.0) return 0.0;
                           const Vec vp = v + t * e;
                           const double dg = g(vp) - g0;
                           const double dist = dGS(v, vp);
                           return dg * dg * std::pow(1.0 + norm(v + vp), kap) * std::pow(dist, -d - 2.0 * s) *
                                  std::pow(t, d - 1);
                         },
                         0.0, tmax, ks.radial)
                         .value;
    }
    const double c1 = cov_cancel1(f, p, I, v, inf, ks).value;
    const double conv = conv_gamma(f, p, v, cfg.quadrature);
    ApplyLSpec al;
    al.kernel = ks;
    const double Lg = apply_L(f, p, g, v, al).value;
    t.i1 = wt * pairwise_sum(a1);
    t.i2 = wt * g0 * g0 * c1;
    t.i3 = wt * cb * conv * g0 * g0;
    t.direct = wt * (-g0 * Lg - cb * conv * g0 * g0);
    t.semi = wt * pairwise_sum(as);
    t.zero = wt * g0 * g0 * std::pow(1.0 + norm(v), zero_exp);
    return t;
  });

  std::vector<double> lhs(n), rhs_num(n), semi(n), zero(n), direct(n), i1(n), i2(n), i3(n), i23(n), split_vs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = terms[i];
    i1[i] = t.i1;
    i2[i] = t.i2;
    i3[i] = t.i3;
    i23[i] = t.i2 - t.i3;
    lhs[i] = t.i1 + 0.5 * t.i2 - t.i3;
    direct[i] = t.direct;
    split_vs[i] = lhs[i] - direct[i];
    semi[i] = t.semi;
    zero[i] = t.zero;
    rhs_num[i] = lhs[i] + spec.zero_order_constant * t.zero;
  }
  const auto [m1, e1] = mean_and_error(i1);
  const auto [m2, e2] = mean_and_error(i2);
  const auto [m3, e3] = mean_and_error(i3);
  const auto [md, ed] = mean_and_error(i23);
  const auto [ml, el] = mean_and_error(lhs);
  const auto [mdir, edir] = mean_and_error(direct);
  const auto [msv, esv] = mean_and_error(split_vs);
  const auto [ms, es] = mean_and_error(semi);
  const auto [mz, ez] = mean_and_error(zero);
  r.constants["I1"] = m1;
  r.constants["I1_error"] = e1;
  r.constants["I2"] = m2;
  r.constants["I2_error"] = e2;
  r.constants["I3"] = m3;
  r.constants["I3_error"] = e3;
  r.constants["I2_minus_I3"] = md;
  r.constants["I2_minus_I3_error"] = ed;
  r.constants["lhs"] = ml;
  r.constants["lhs_error"] = el;
  r.constants["lhs_direct"] = mdir;
  r.constants["lhs_direct_error"] = edir;
  r.constants["split_minus_direct"] = msv;
  r.constants["split_minus_direct_error"] = esv;
  r.constants["seminorm"] = ms;
  r.constants["seminorm_error"] = es;
  r.constants["zero_order"] = mz;
  r.constants["zero_order_error"] = ez;
  r.constants["zero_order_constant"] = spec.zero_order_constant;

  const double scale = std::max({std::abs(m2), std::abs(m3), 1e-300});
  const bool i23_ok = std::abs(md) <= 3.0 * ed + 1e-3 * scale;
  const bool split_ok = std::abs(msv) <= 3.0 * esv + 1e-3 * std::max(std::abs(ml), 1e-300);
  r.constants["I2_equals_I3"] = i23_ok ? 1.0 : 0.0;
  r.constants["split_matches_direct"] = split_ok ? 1.0 : 0.0;
  if (!(ms > 0.0)) {
    // vanishing increments: only the zero-order inequality is left
    r.constants["c"] = 0.0;
    r.witness.push_back("seminorm vanishes");
    r.pass = ml + spec.zero_order_constant * mz >= -3.0 * el;
    return r;
  }
  const auto rs = ratio_estimate(rhs_num, semi);
  r.constants["c"] = rs.c;
  r.constants["c_error"] = rs.err;
  const bool inconclusive = es > 0.2 * ms;
  r.constants["inconclusive"] = inconclusive ? 1.0 : 0.0;
  if (inconclusive) r.witness.push_back("seminorm Monte Carlo error above 20%");
  r.pass = !inconclusive && rs.c - 3.0 * rs.err > 0.0 && i23_ok && split_ok;
  return r;
}

namespace {

// Natural cubic spline on a uniform grid.
class RadialSpline {
public:
  RadialSpline(double h, std::vector<double> y) : h_(h), y_(std::move(y)), m_(y_.size(), 0.0) {
    const std::size_t n = y_.size();
    if (n < 3) return;
    std::vector<double> c(n, 0.0), dd(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double rhs = 6.0 * (y_[i + 1] - 2.0 * y_[i] + y_[i - 1]) / (h_ * h_);
      const double den = 4.0 - c[i - 1];
      c[i] = 1.0 / den;
      dd[i] = (rhs - dd[i - 1]) / den;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m_[i] = dd[i] - c[i] * m_[i + 1];
      if (i == 1) break;
    }
  }
  double operator()(double x) const {
    const std::size_t n = y_.size();
    if (x <= 0.0) return y_.front();
    const double pos = x / h_;
    std::size_t i = static_cast<std::size_t>(pos);
    if (i >= n - 1) return y_.back();
    const double t = pos - static_cast<double>(i);
    const double a = 1.0 - t;
    return a * y_[i] + t * y_[i + 1] + h_ * h_ / 6.0 * ((a * a * a - a) * m_[i] + (t * t * t - t) * m_[i + 1]);
  }

private:
  double h_;
  std::vector<double> y_;
  std::vector<double> m_;
};

bool radial_about_origin(const Profile& f) {
  for (const auto& c : f.components())
    if (norm(c.drift) != 0.0) return false;
  if (const auto& b = f.bump())
    if (norm(b->center) != 0.0) return false;
  return true;
}

}  // namespace

CheckResult check_bilinear_bounds(const Profile& f, const Profile& g, const ModelParams& p, const VerifyConfig& cfg,
                                  const BilinearSpec& spec) {
  CheckResult r = start("bilinear_bounds", f, p, cfg);
  const double s = p.s;
  const int d = p.d;
  const double amax = std::min(1.0, 2.0 * s);
  const double alpha = spec.alpha > 0.0 ? spec.alpha : 0.5 * amax;
  const double ap = 2.0 * s * alpha / (1.0 + 2.0 * s);
  const double q = spec.q;
  r.coords["alpha"] = alpha;
  r.coords["q"] = q;
  if (!(alpha <= amax)) r.errors.push_back("alpha must lie in (0, min(1,2s)]");
  if (!(q > d + std::max(p.gamma, 0.0) + alpha / (1.0 + 2.0 * s)))
    r.errors.push_back("q must exceed d + gamma_+ + alpha/(1+2s)");
  if (!r.errors.empty()) return r;

  KernelSpec ks = cfg.kernel();
  ks.directions = d == 3 ? spec.directions : 4 * spec.directions;
  VelocityFn gv = [&](const Vec& v) { return g(v); };
  auto q1 = [&](const Vec& v) {
    ApplyLSpec al;
    al.kernel = ks;
    return apply_L(f, p, gv, v, al).value;
  };
  auto q2 = [&](const Vec& v) { return q2_eval(f, gv, p, v, cfg.quadrature); };

  const double vmax_shell = *std::max_element(spec.shells.begin(), spec.shells.end()) + 2.5;
  std::function<double(const Vec&)> Q1 = q1, Q2 = q2;
  if (radial_about_origin(f) && radial_about_origin(g)) {
    // both inputs are radial, so are Q_1 and Q_2: tabulate along one ray
    const double h = 0.05;
    const std::size_t m = static_cast<std::size_t>(std::ceil(vmax_shell / h)) + 1;
    auto t1 = parallel_map(m, [&](std::size_t i) { return q1(static_cast<double>(i) * h * axis_of(d)); });
    auto t2 = parallel_map(m, [&](std::size_t i) { return q2(static_cast<double>(i) * h * axis_of(d)); });
    auto s1 = std::make_shared<RadialSpline>(h, t1);
    auto s2 = std::make_shared<RadialSpline>(h, t2);
    Q1 = [s1](const Vec& v) { return (*s1)(norm(v)); };
    Q2 = [s2](const Vec& v) { return (*s2)(norm(v)); };
    r.witness.push_back("radial inputs: Q1 and Q2 tabulated on a ray with spacing 0.05");
  }
  PhaseFn F = [&](const Point& z) { return f(z.v); };
  PhaseFn G = [&](const Point& z) { return g(z.v); };
  PhaseFn P1 = [&](const Point& z) { return Q1(z.v); };
  PhaseFn P2 = [&](const Point& z) { return Q2(z.v); };
  const Vec dir = axis_of(d);
  SeminormSpec sn = spec.seminorm;
  sn.seed = cfg.grid.seed;
  const auto& sh = spec.shells;
  const double nf_a = weighted_norm_est(F, sh, dir, alpha, q, s, sn).value;
  const double nf_0 = decay_envelope(f, q);
  const double ng_ap = weighted_norm_est(G, sh, dir, ap, q + alpha / (1.0 + 2.0 * s) + p.gamma, s, sn).value;
  const double ng_hi = weighted_norm_est(G, sh, dir, 2.0 * s + alpha, q, s, sn).value;
  const auto n2 = weighted_norm_est(P2, sh, dir, ap, q, s, sn);
  const auto n1 = weighted_norm_est(P1, sh, dir, ap, q - p.gamma - 2.0 * s - alpha / (1.0 + 2.0 * s), s, sn);
  r.constants["norm_f_alpha"] = nf_a;
  r.constants["norm_g_alpha_prime"] = ng_ap;
  r.constants["norm_g_2s_alpha"] = ng_hi;

  auto ratios = [&](const WeightedNormEstimate& num, double den, const std::string& name) {
    std::vector<double> vals;
    auto& ser = r.series[name];
    r.series_axis[name] = "v";
    for (const auto& [sp, val] : num.per_speed) {
      const double x = den > 0.0 ? val / den : (val > 0.0 ? kInf : 0.0);
      ser.emplace_back(sp, x);
      vals.push_back(x);
    }
    r.constants[name + "_max"] = vals.empty() ? 0.0 : vmax(vals);
    return vals;
  };
  const auto v2 = ratios(n2, nf_a * ng_ap, "Q2_ratio");
  const auto v1 = ratios(n1, nf_a * ng_hi, "Q1_ratio");
  std::vector<double> v10;
  {
    auto& ser = r.series["Q1_pointwise_ratio"];
    r.series_axis["Q1_pointwise_ratio"] = "v";
    for (double sp : sh) {
      const double sup = std::abs(Q1(sp * dir)) * std::pow(1.0 + sp, q - p.gamma - 2.0 * s);
      const double den = nf_0 * ng_hi;
      const double x = den > 0.0 ? sup / den : (sup > 0.0 ? kInf : 0.0);
      ser.emplace_back(sp, x);
      v10.push_back(x);
    }
    r.constants["Q1_pointwise_ratio_max"] = vmax(v10);
  }
  r.series_axis["Q2_sup"] = "v";
  for (double sp : sh) r.series["Q2_sup"].emplace_back(sp, std::abs(Q2(sp * dir)));
  r.constants["norm_f_sup_q"] = nf_0;
  auto bounded = [&](const std::vector<double>& vals) {
    return std::all_of(vals.begin(), vals.end(), [&](double x) { return std::isfinite(x) && x <= cfg.tol.c_max; });
  };
  r.pass = r.errors.empty() && bounded(v2) && bounded(v1) && bounded(v10);
  return r;
}

CheckResult check_tail_mass_witness(const Profile& f, const ModelParams& p, const VerifyConfig& cfg,
                                    const std::vector<double>& speeds) {
  CheckResult r = start("tail_mass_witness", f, p, cfg);
  const KernelSpec ks = cfg.kernel();
  auto& ser = r.series["tail_mass"];
  r.series_axis["tail_mass"] = "v";
  std::vector<std::pair<double, double>> pts;
  for (double sp : speeds) {
    const double t = tail_mass(f, p, sp * axis_of(p.d), 1.0, ks);
    ser.emplace_back(sp, t);
    pts.emplace_back(1.0 + sp, t);
  }
  const double predicted = p.gamma + 2.0 * p.s;
  r.constants["predicted_exponent"] = predicted;
  if (auto fit = fit_positive(pts)) {
    r.fits["tail_mass_vs_one_plus_v"] = *fit;
    r.pass = std::abs(fit->exponent - predicted) <= cfg.tol.fit_slack && fit->r_squared >= cfg.tol.min_r_squared;
  }
  return r;
}

CheckResult check_cov_pv_decay(const Profile& f, const ModelParams& p, const VerifyConfig& cfg, double speed,
                               int levels) {
  CheckResult r = start("cov_pv_decay", f, p, cfg);
  r.coords["v0"] = speed;
  if (levels < 2) {
    r.errors.push_back("levels must be at least 2");
    return r;
  }
  const KernelSpec ks = cfg.kernel();
  const CovMap M = sweep_map(p, speed);
  auto& ser = r.series["discrepancy"];
  r.series_axis["discrepancy"] = "R";
  std::vector<std::pair<double, double>> pts;
  for (int k = levels; k >= 1; --k) {
    const double R = std::ldexp(1.0, -k);
    const auto q = cov_pv_discrepancy(f, p, M, M.v0(), R, ks);
    if (!q.converged) r.witness.push_back("quadrature not converged at R=" + fmt(R));
    ser.emplace_back(R, std::abs(q.value));
    pts.emplace_back(R, std::abs(q.value));
  }
  const double predicted = 2.0 - 2.0 * p.s;
  r.constants["predicted_exponent"] = predicted;
  if (auto fit = fit_positive(pts)) {
    r.fits["discrepancy_vs_R"] = *fit;
    r.pass = fit->exponent >= predicted - cfg.tol.fit_slack;
  } else {
    r.witness.push_back("discrepancy vanishes on the ladder");
    r.pass = std::all_of(pts.begin(), pts.end(), [](const auto& q) { return q.second == 0.0; });
  }
  return r;
}

CheckResult check_cancel_ratio(const Profile& f, const ModelParams& p, const VerifyConfig& cfg) {
  CheckResult r = start("cancel_ratio", f, p, cfg);
  const int d = p.d;
  const KernelSpec ks = cfg.kernel();
  const CovMap I = make_cov_map(Vec::zero(d), p);
  std::vector<Vec> pts{Vec::zero(d)};
  for (int axis = 0; axis < 2; ++axis)
    for (double a : {0.5, 1.0}) {
      pts.push_back(a * Vec::unit(d, axis));
      pts.push_back(-a * Vec::unit(d, axis));
    }
  std::vector<double> ratios;
  auto& ser = r.series["ratio"];
  r.series_axis["ratio"] = "point_index";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double conv = conv_gamma(f, p, pts[i], cfg.quadrature);
    const double c1 = cov_cancel1(f, p, I, pts[i], kInf, ks).value;
    const double x = conv > 0.0 ? c1 / conv : 0.0;
    ratios.push_back(x);
    ser.emplace_back(static_cast<double>(i), x);
  }
  const double lo = vmin(ratios), hi = vmax(ratios);
  const double mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / static_cast<double>(ratios.size());
  const double spread = mean != 0.0 ? (hi - lo) / std::abs(mean) : 0.0;
  r.constants["ratio_mean"] = mean;
  r.constants["ratio_min"] = lo;
  r.constants["ratio_max"] = hi;
  r.constants["relative_spread"] = spread;
  if (f.is_zero()) r.witness.push_back("zero profile: both sides vanish");
  r.pass = spread <= cfg.tol.ratio_spread;
  return r;
}

CheckResult check_holder_suite(const ModelParams& p, const VerifyConfig& cfg) {
  CheckResult r = start("holder_suite", Profile::zero(p.d), p, cfg);
  r.profile_hash.clear();
  SeminormSpec sp;
  sp.base_points = 8;
  sp.shells = 6;
  sp.directions = 16;
  sp.seed = cfg.grid.seed;
  const Cylinder Q{Point::origin(3), 1.0};
  const double cmax = cfg.tol.c_max;
  bool ok = true;
  auto note = [&](const std::string& name, double value, bool good) {
    r.constants[name] = value;
    if (!good) r.witness.push_back(name + " out of range: " + fmt(value));
    ok = ok && good;
  };
  const auto lin = seminorm_est([](const Point& z) { return z.t; }, Q, 1.0, 0.5, sp);
  note("time_C1_seminorm", lin.value, std::abs(lin.value - 1.0) <= 0.05);
  note("constant_seminorm", seminorm_est([](const Point&) { return 1.0; }, Q, 0.5, 0.5, sp).value,
       seminorm_est([](const Point&) { return 1.0; }, Q, 0.5, 0.5, sp).value <= 1e-6);
  const double v1 = seminorm_est([](const Point& z) { return z.v[0]; }, Q, 1.5, 0.5, sp).value;
  note("linear_v_exact_seminorm", v1, v1 <= 1e-6);
  const double quad = seminorm_est([](const Point& z) { return z.v[0] * z.v[1] + z.t; }, Q, 2.5, 0.5, sp).value;
  note("quadratic_exact_seminorm", quad, quad <= 1e-6);

  PhaseFn f = [](const Point& z) { return std::sin(z.v[0] + 0.5 * z.x[1]) + 0.3 * z.t; };
  PhaseFn g = [](const Point& z) { return std::cos(z.v[1]) * (1 + 0.2 * z.t); };
  auto sub = [&](const std::string& name, const CheckResult& c) {
    r.constants[name + "_pass"] = c.pass ? 1.0 : 0.0;
    for (const auto& [k, v] : c.constants) r.constants[name + "." + k] = v;
    if (!c.pass) r.witness.push_back(name + " failed");
    ok = ok && c.pass;
  };
  sub("interpolation", check_interpolation(f, Q, 0.25, 0.75, 1.5, 0.5, sp, cmax));
  sub("product", check_product(f, g, Q, 0.5, 0.5, sp, cmax));
  PhaseFn h = [](const Point& z) { return std::sin(2 * z.v[0]) + z.t; };
  sub("localization", check_localization(h, Q, 0.5, 0.25, 0.5, sp, cmax));
  PhaseFn k = [](const Point& z) { return std::sin(z.v[0] + z.x[0]) + std::cos(z.t + z.v[1]); };
  const std::vector<Vec> ys{Vec{0.1, 0.0, 0.0}, Vec{0.0, 0.2, 0.0}, Vec{0.05, 0.05, 0.05}};
  sub("increment_x", check_increment_x_bound(k, Q, 0.5, 0.5, ys, sp, cmax));
  const std::vector<Vec> ws{Vec{0.1, 0.0, 0.0}, Vec{0.0, 0.3, 0.0}};
  sub("increment_v", check_increment_v_bound(k, Q, 0.25, 0.25, ws, sp, cmax));
  r.pass = ok;
  return r;
}

CheckResult check_holder_cov(const ModelParams& p, const VerifyConfig& cfg, double beta) {
  CheckResult r = start("holder_cov", Profile::zero(p.d), p, cfg);
  r.profile_hash.clear();
  const double s = p.s;
  const int d = p.d;
  if (!(beta > 0.0)) beta = 0.5 * std::min(1.0, 2.0 * s);
  r.coords["beta"] = beta;
  if (!(beta < std::min(1.0, 2.0 * s))) {
    r.errors.push_back("beta must lie in (0, min(1,2s)) so that the Taylor polynomial is a constant");
    return r;
  }
  const double cbar = std::max((p.gamma + 2.0 * s) / (2.0 * s), 1.0);
  r.constants["cbar"] = cbar;
  r.constants["predicted_exponent"] = cbar * beta;
  const std::size_t n = std::max<std::size_t>(512, cfg.mc_samples);
  const Cylinder Q1{Point::origin(d), 1.0};

  struct Family {
    std::string name;
    std::function<double(const CovMap&, const Point&)> fn;
  };
  const std::vector<Family> family{
      {"time_power", [&](const CovMap& M, const Point& z) { return std::pow(std::abs(z.t - M.z0.t), beta / (2.0 * s)); }},
      {"velocity_power",
       [&](const CovMap& M, const Point& z) { return std::pow(std::abs(dot(z.v - M.v0(), M.direction)), beta); }}};

  bool ok = true;
  double worst_exp = -kInf;
  double worst_lower = 0.0;
  for (const auto& fam : family) {
    std::vector<double> up;
    for (std::size_t iv = 0; iv < cfg.grid.v0_magnitudes.size(); ++iv) {
      const CovMap M = sweep_map(p, cfg.grid.v0_magnitudes[iv]);
      CounterRng rng(derive_seed(cfg.grid.seed, id_key("holder_cov"), iv));
      std::vector<std::pair<Point, Point>> pairs;
      for (std::size_t i = 0; i < n; ++i) {
        const Point a = sample_in_cylinder(Q1, s, rng);
        pairs.emplace_back(a, sample_in_cylinder(Q1, s, rng));
      }
      // axis-aligned pairs reach the extremal quotients of both families
      for (double h : {0.05, 0.1, 0.25, 0.5}) {
        pairs.emplace_back(Point::origin(d), Point{-h, Vec::zero(d), Vec::zero(d)});
        pairs.emplace_back(Point::origin(d), Point{0.0, Vec::zero(d), h * axis_of(d)});
      }
      double bar = 0.0, img = 0.0;
      for (const auto& [a, b] : pairs) {
        const Point A = cov_forward(M, a), B = cov_forward(M, b);
        const double diff = std::abs(fam.fn(M, A) - fam.fn(M, B));
        const double db = kdistance(a, b, s), di = kdistance(A, B, s);
        if (db > 0.0) bar = std::max(bar, diff / std::pow(db, beta));
        if (di > 0.0) img = std::max(img, diff / std::pow(di, beta));
      }
      const double lower = img > 0.0 ? bar / img : 0.0;
      worst_lower = std::max(worst_lower, lower);
      up.push_back(bar > 0.0 ? img / bar : kInf);
    }
    record_series(r, fam.name, cfg.grid.v0_magnitudes, up);
    auto it = r.fits.find(fam.name);
    if (it == r.fits.end()) {
      ok = false;
      r.witness.push_back(fam.name + ": no fit");
    } else {
      worst_exp = std::max(worst_exp, it->second.exponent);
    }
  }
  r.constants["max_fitted_exponent"] = worst_exp;
  r.constants["lower_ratio_max"] = worst_lower;
  ok = ok && std::abs(worst_exp - cbar * beta) <= cfg.tol.fit_slack && worst_lower <= cfg.tol.c_max;
  r.pass = ok;
  return r;
}

namespace {

struct Entry {
  std::vector<std::string> keys;
  std::function<CheckResult(const Profile&, const ModelParams&, const VerifyConfig&, const CheckOverrides&)> run;
};

double get(const CheckOverrides& o, const std::string& key, double fallback) {
  auto it = o.find(key);
  return it == o.end() ? fallback : it->second;
}

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> reg = [] {
    std::map<std::string, Entry> m;
    m["nondeg1"] = {{}, [](auto& f, auto& p, auto& c, auto&) { return check_nondeg1(f, p, c); }};
    m["bounded1"] = {{}, [](auto& f, auto& p, auto& c, auto&) { return check_bounded(f, p, c, 1); }};
    m["bounded2"] = {{}, [](auto& f, auto& p, auto& c, auto&) { return check_bounded(f, p, c, 2); }};
    m["cancellation1"] = {{}, [](auto& f, auto& p, auto& c, auto&) { return check_cancellation(f, p, c, 1); }};
    m["cancellation2"] = {{}, [](auto& f, auto& p, auto& c, auto&) { return check_cancellation(f, p, c, 2); }};
    m["classK"] = {{}, [](auto& f, auto& p, auto& c, auto&) { return check_classK(f, p, c); }};
    m["measure_condition"] = {{"lambda_probe"}, [](auto& f, auto& p, auto& c, auto& o) {
                                return check_measure_condition(f, p, c, get(o, "lambda_probe", 0.0));
                              }};
    m["cone"] = {{"fraction"}, [](auto& f, auto& p, auto& c, auto& o) {
                   return check_cone(f, p, c, {4, 8, 16, 32}, get(o, "fraction", 0.25));
                 }};
    m["cone_transformed"] = {{"fraction"}, [](auto& f, auto& p, auto& c, auto& o) {
                               return check_cone_transformed(f, p, c, get(o, "fraction", 0.25));
                             }};
    m["A0"] = {{"alpha"}, [](auto& f, auto& p, auto& c, auto& o) { return check_A0(f, p, c, get(o, "alpha", 0.0)); }};
    m["da_equivalence"] = {{"pairs"}, [](auto&, auto& p, auto& c, auto& o) {
                             return check_da_equivalence(p, c, static_cast<std::size_t>(get(o, "pairs", 10000)));
                           }};
    m["gs_coercivity"] = {{"consistent_cb", "directions", "rho", "samples", "sampler_temperature", "zero_order_constant"},
                          [](auto& f, auto& p, auto& c, auto& o) {
                            CoercivitySpec sp;
                            sp.rho = get(o, "rho", sp.rho);
                            sp.zero_order_constant = get(o, "zero_order_constant", sp.zero_order_constant);
                            sp.consistent_cb = get(o, "consistent_cb", 1.0) != 0.0;
                            sp.sampler_temperature = get(o, "sampler_temperature", sp.sampler_temperature);
                            sp.samples = static_cast<std::size_t>(get(o, "samples", static_cast<double>(sp.samples)));
                            sp.directions = static_cast<int>(get(o, "directions", sp.directions));
                            VelocityFn g = [&f](const Vec& v) { return f(v); };
                            return check_gs_coercivity(f, p, g, c, sp);
                          }};
    m["bilinear_bounds"] = {{"alpha", "directions", "q"}, [](auto& f, auto& p, auto& c, auto& o) {
                              BilinearSpec sp;
                              sp.alpha = get(o, "alpha", sp.alpha);
                              sp.q = get(o, "q", sp.q);
                              sp.directions = static_cast<int>(get(o, "directions", sp.directions));
                              return check_bilinear_bounds(f, f, p, c, sp);
                            }};
    m["tail_mass_witness"] = {{}, [](auto& f, auto& p, auto& c, auto&) { return check_tail_mass_witness(f, p, c); }};
    m["cov_pv_decay"] = {{"levels", "speed"}, [](auto& f, auto& p, auto& c, auto& o) {
                           return check_cov_pv_decay(f, p, c, get(o, "speed", 8.0),
                                                     static_cast<int>(get(o, "levels", 6)));
                         }};
    m["cancel_ratio"] = {{}, [](auto& f, auto& p, auto& c, auto&) { return check_cancel_ratio(f, p, c); }};
    m["holder_suite"] = {{}, [](auto&, auto& p, auto& c, auto&) { return check_holder_suite(p, c); }};
    m["holder_cov"] = {{"beta"}, [](auto&, auto& p, auto& c, auto& o) {
                         return check_holder_cov(p, c, get(o, "beta", 0.0));
                       }};
    return m;
  }();
  return reg;
}

}  // namespace

const std::vector<std::string>& check_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> out;
    for (const auto& [k, v] : registry()) out.push_back(k);
    return out;
  }();
  return ids;
}

bool is_check_id(const std::string& id) { return registry().count(id) > 0; }

const std::vector<std::string>& check_override_keys(const std::string& id) {
  auto it = registry().find(id);
  if (it == registry().end()) throw std::invalid_argument("unknown check id: " + id);
  return it->second.keys;
}

CheckResult run_check(const std::string& id, const Profile& f, const ModelParams& p, const VerifyConfig& cfg,
                      const CheckOverrides& overrides) {
  auto it = registry().find(id);
  if (it == registry().end()) throw std::invalid_argument("unknown check id: " + id);
  for (const auto& [k, v] : overrides)
    if (std::find(it->second.keys.begin(), it->second.keys.end(), k) == it->second.keys.end())
      throw std::invalid_argument("check " + id + " has no override '" + k + "'");
  try {
    return it->second.run(f, p, cfg, overrides);
  } catch (const std::exception& e) {
    CheckResult r = start(id, f, p, cfg);
    r.errors.push_back(e.what());
    return r;
  }
}

}  // namespace kinokit
