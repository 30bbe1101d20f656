#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "kinokit/parallel.hpp"
#include "kinokit/scenario.hpp"

using namespace kinokit;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void verdict(int n, bool ok, const std::string& title, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", n, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

ModelParams triple(double gamma, double s, int d = 3) {
  ModelParams p;
  p.d = d;
  p.gamma = gamma;
  p.s = s;
  return p;
}

const std::vector<std::pair<double, double>> kTriples{{0.0, 0.25}, {-0.5, 0.75}, {1.0, 0.5}};

double pdiff(const Point& a, const Point& b) { return std::abs(a.t - b.t) + norm(a.x - b.x) + norm(a.v - b.v); }

Point random_point(CounterRng& rng, int d, double scale) {
  return {scale * rng.uniform(-1, 1), scale * rng.in_ball(d), scale * rng.in_ball(d)};
}

void geometry_suite() {
  const auto t0 = Clock::now();
  CounterRng rng(derive_seed(42, 1));
  double group = 0.0, invariance = 0.0, scaling = 0.0, symmetry = 0.0, triangle = 0.0, det = 0.0;
  const double ss[] = {0.25, 0.5, 0.75};
  for (int i = 0; i < 1000; ++i) {
    const double s = ss[i % 3];
    const int d = i % 2 == 0 ? 3 : 2;
    const Point a = random_point(rng, d, 1.0), b = random_point(rng, d, 1.0), c = random_point(rng, d, 1.0);
    const Point xi = random_point(rng, d, 2.0);
    group = std::max({group, pdiff(compose(compose(a, b), c), compose(a, compose(b, c))),
                      pdiff(compose(a, inverse(a)), Point::origin(d))});
    const double dab = kdistance(a, b, s);
    invariance = std::max(invariance, std::abs(kdistance(compose(xi, a), compose(xi, b), s) - dab));
    symmetry = std::max(symmetry, std::abs(kdistance(b, a, s) - dab));
    const double r = 0.1 + 3.0 * rng.uniform();
    scaling = std::max(scaling, std::abs(kdistance(dilate(r, a, s), dilate(r, b, s), s) - r * dab) / (1.0 + r));
    const double p = s >= 0.5 ? 1.0 : 2.0 * s;
    triangle = std::max(triangle, std::pow(dab, p) - std::pow(kdistance(a, c, s), p) - std::pow(kdistance(c, b, s), p));
    ModelParams mp = triple(0.0, s, d);
    const double speed = 2.0 + 62.0 * rng.uniform();
    const CovMap M = make_cov_map(speed * normalized(rng.unit_vector(d)), mp);
    const auto m = t0_matrix(M);
    double dt = d == 2 ? m[0][0] * m[1][1] - m[0][1] * m[1][0]
                       : m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                             m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                             m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    det = std::max(det, std::abs(dt - 1.0 / speed));
  }
  const double worst = std::max({group, invariance, scaling, symmetry, std::max(triangle, 0.0)});
  const double t = seconds_since(t0);
  std::printf("  group %.2e, invariance %.2e, scaling %.2e, symmetry %.2e, triangle excess %.2e, det %.2e\n", group,
              invariance, scaling, symmetry, triangle, det);
  verdict(1, worst < 1e-8 && det < 1e-12 && t < 10.0, "geometry suite (1000 tuples)",
          fmt("max residual %.2e", worst) + fmt(", det T0 error %.2e", det) + fmt(", %.2f s", t));
}

void kernel_oracle() {
  const auto t0 = Clock::now();
  CounterRng rng(derive_seed(42, 2));
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto [gamma, s] = kTriples[static_cast<std::size_t>(i) % kTriples.size()];
    const ModelParams p = triple(gamma, s);
    // Maxwellian centred on a point u of the first axis, evaluated at v = u
    const Vec u = (i < 10 ? 0.0 : rng.uniform(-3.0, 3.0)) * Vec::unit(3, 0);
    Profile f(3);
    f.add({1.0, 1.0, u});
    const double r = 0.25 + 3.0 * rng.uniform();
    const Vec vp = u + r * normalized(rng.unit_vector(3));
    const double kappa = p.kappa();
    const double oracle = std::pow(2.0 * std::numbers::pi, -0.5) * std::pow(2.0, kappa / 2) *
                          std::tgamma(kappa / 2 + 1) * std::pow(r, -3.0 - 2.0 * s);
    const double got = kernel_eval(f, p, u, vp).value;
    worst = std::max(worst, std::abs(got - oracle) / oracle);
  }
  const double t = seconds_since(t0);
  verdict(2, worst <= 1e-6 && t < 30.0, "kernel quadrature oracle (20 pairs)",
          fmt("max relative error %.2e", worst) + fmt(", %.2f s", t));
}

struct Job {
  std::string label;
  std::function<CheckResult()> run;
};

struct Runs {
  std::vector<Job> jobs;
  std::vector<CheckResult> results;

  std::size_t add(std::string label, std::function<CheckResult()> fn) {
    jobs.push_back({std::move(label), std::move(fn)});
    return jobs.size() - 1;
  }
  const CheckResult& operator[](std::size_t i) const { return results[i]; }

  std::string execute(int workers) {
    set_default_workers(workers);
    results.clear();
    Report rep;
    for (const auto& j : jobs) {
      const auto t0 = Clock::now();
      results.push_back(j.run());
      if (workers == 1) std::printf("  ran %-40s %7.1f s\n", j.label.c_str(), seconds_since(t0));
      std::fflush(stdout);
      rep.entries.push_back({results.back(), 0.0});
    }
    set_default_workers(1);
    return report_json(rep);
  }
};

double constant(const CheckResult& r, const std::string& name) {
  auto it = r.constants.find(name);
  return it == r.constants.end() ? std::nan("") : it->second;
}

}  // namespace

int main() {
  const auto start = Clock::now();
  geometry_suite();
  kernel_oracle();

  const VerifyConfig cfg;
  const Profile maxw3 = Profile::maxwellian(3);
  Runs runs;

  struct Uniform {
    std::string name;
    std::size_t job;
    std::string constant;
  };
  std::vector<Uniform> uniform;
  std::vector<std::size_t> tail_jobs;
  for (const auto& [gamma, s] : kTriples) {
    const ModelParams p = triple(gamma, s);
    const std::string tag = "(" + fmt("%g", gamma) + "," + fmt("%g", s) + ") ";
    auto add = [&](const std::string& id, const std::vector<std::string>& names) {
      const std::size_t j = runs.add(tag + id, [=, &cfg, &maxw3] { return run_check(id, maxw3, p, cfg); });
      for (const auto& n : names) uniform.push_back({tag + id + (names.size() > 1 ? "." + n : ""), j, n});
    };
    add("nondeg1", {"lambda_uniformity"});
    add("bounded1", {"Lambda_uniformity"});
    add("bounded2", {"Lambda_uniformity"});
    add("cancellation1", {"Lambda_uniformity"});
    if (s >= 0.5) add("cancellation2", {"Lambda_uniformity"});
    add("classK", {"Lambda_ii_uniformity", "lambda_iv_uniformity"});
    add("cone_transformed", {"area_uniformity"});
    tail_jobs.push_back(runs.add(tag + "tail_mass_witness", [=, &cfg, &maxw3] {
      return check_tail_mass_witness(maxw3, p, cfg);
    }));
  }
  const std::size_t cone_job =
      runs.add("(0,0.25) cone", [&] { return check_cone(maxw3, triple(0.0, 0.25), cfg); });
  std::vector<std::size_t> pv_jobs;
  for (double s : {0.25, 0.75}) {
    const double gamma = s == 0.25 ? 0.0 : -0.5;
    pv_jobs.push_back(runs.add("(" + fmt("%g", gamma) + "," + fmt("%g", s) + ") cov_pv_decay",
                               [=, &cfg, &maxw3] { return check_cov_pv_decay(maxw3, triple(gamma, s), cfg); }));
  }
  const std::size_t ratio_job =
      runs.add("(0,0.25) cancel_ratio", [&] { return check_cancel_ratio(maxw3, triple(0.0, 0.25), cfg); });
  const std::size_t da_job = runs.add("da_equivalence {2,8,32}", [&] {
    VerifyConfig c = cfg;
    c.grid.v0_magnitudes = {2, 8, 32};
    return check_da_equivalence(triple(0.0, 0.25), c, 10000);
  });
  const std::size_t gs_job = runs.add("d=2 (0,0.25) gs_coercivity", [&] {
    const Profile f2 = Profile::maxwellian(2);
    CoercivitySpec sp;
    sp.rho = 1.0;
    return check_gs_coercivity(f2, triple(0.0, 0.25, 2), [f2](const Vec& v) { return f2(v); }, cfg, sp);
  });
  const std::size_t holder_job = runs.add("holder_suite", [&] { return check_holder_suite(triple(0.0, 0.5), cfg); });

  const auto t_run = Clock::now();
  const std::string body1 = runs.execute(1);
  const double t_serial = seconds_since(t_run);

  // 3: uniformity after the change of variables
  {
    bool ok = true;
    double worst = 0.0;
    for (const auto& u : uniform) {
      const double r = constant(runs[u.job], u.constant);
      const bool good = std::isfinite(r) && r <= cfg.tol.uniformity && runs[u.job].errors.empty();
      std::printf("  %-45s max/min %.3f%s\n", u.name.c_str(), r, good ? "" : "  <-- out of bound");
      ok = ok && good;
      worst = std::max(worst, r);
    }
    verdict(3, ok, "uniformity after change of variables (" + std::to_string(uniform.size()) + " constants)",
            fmt("worst max/min %.3f (bound 10)", worst));
  }
  // 4: non-uniformity witness
  {
    bool ok = true;
    std::string detail;
    for (std::size_t k = 0; k < tail_jobs.size(); ++k) {
      const auto& r = runs[tail_jobs[k]];
      const auto it = r.fits.find("tail_mass_vs_one_plus_v");
      const double pred = constant(r, "predicted_exponent");
      const bool good = it != r.fits.end() && std::abs(it->second.exponent - pred) <= 0.3 &&
                        it->second.r_squared >= 0.9;
      ok = ok && good;
      if (it != r.fits.end())
        detail += std::string(k ? "; " : "") + fmt("exponent %.3f", it->second.exponent) + fmt(" vs %.2f", pred) +
                  fmt(" (r2 %.4f)", it->second.r_squared);
    }
    verdict(4, ok, "untransformed tail mass exponent", detail);
  }
  // 5: cone scaling
  {
    const auto& r = runs[cone_job];
    const auto it = r.fits.find("area_vs_one_plus_v");
    const bool ok = it != r.fits.end() && std::abs(it->second.exponent + 1.0) <= 0.25 && it->second.r_squared >= 0.9;
    verdict(5, ok, "cone area exponent at (0,1/4)",
            it == r.fits.end() ? "no fit"
                               : fmt("exponent %.3f", it->second.exponent) + fmt(" (r2 %.4f)", it->second.r_squared));
  }
  // 6: modified principal value
  {
    bool ok = true;
    std::string detail;
    for (std::size_t k = 0; k < pv_jobs.size(); ++k) {
      const auto& r = runs[pv_jobs[k]];
      const auto it = r.fits.find("discrepancy_vs_R");
      const double pred = constant(r, "predicted_exponent");
      const bool good = it != r.fits.end() && it->second.exponent >= pred - 0.3;
      ok = ok && good;
      if (it != r.fits.end())
        detail += std::string(k ? "; " : "") + fmt("s=%g: ", r.params.s) + fmt("exponent %.3f", it->second.exponent) +
                  fmt(" >= %.2f", pred - 0.3);
    }
    verdict(6, ok, "principal value discrepancy decay", detail);
  }
  // 7: cancellation ratio
  {
    const auto& r = runs[ratio_job];
    const double spread = constant(r, "relative_spread");
    verdict(7, spread <= 0.1, "cancellation ratio on 9 points",
            fmt("ratio %.6g", constant(r, "ratio_mean")) + fmt(", relative spread %.2e", spread));
  }
  // 8: anisotropic distance band
  {
    const auto& r = runs[da_job];
    const double lo = constant(r, "ratio_min_min"), hi = constant(r, "ratio_max_max");
    verdict(8, lo >= 0.25 && hi <= 4.0, "d_a/d_GS band over 10^4 pairs per |v0|",
            fmt("[%.4f, ", lo) + fmt("%.4f]", hi));
  }
  // 9: coercivity
  {
    const auto& r = runs[gs_job];
    const double c = constant(r, "c"), err = constant(r, "c_error");
    const bool ok = r.pass && c - 3.0 * err > 0.0 && constant(r, "I2_equals_I3") == 1.0;
    verdict(9, ok, "coercivity lower bound at d=2",
            fmt("c = %.4f", c) + fmt(" +- %.4f", err) + fmt(", I2 - I3 = %.2e", constant(r, "I2_minus_I3")) +
                fmt(", split vs direct %.2e", constant(r, "split_minus_direct")));
  }
  // 10: Hoelder machinery
  {
    const auto& r = runs[holder_job];
    verdict(10, r.pass, "Hoelder estimators and inequalities",
            fmt("[t]_C1 = %.4f", constant(r, "time_C1_seminorm")) +
                fmt(", exact cases <= %.1e",
                    std::max({constant(r, "constant_seminorm"), constant(r, "linear_v_exact_seminorm"),
                              constant(r, "quadratic_exact_seminorm")})));
  }
  // 11: determinism across worker counts
  {
    const auto t8 = Clock::now();
    const std::string body8 = runs.execute(8);
    verdict(11, body1 == body8, "byte-identical results at 1 and 8 workers",
            std::to_string(body1.size()) + " bytes" + fmt(", serial run %.1f s", t_serial) +
                fmt(", 8-worker run %.1f s", seconds_since(t8)));
  }
  std::printf("%d of 11 criteria failed, total %.1f s\n", failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}
