#include <cmath>
#include <limits>

#include "doctest.h"
#include "kinokit/verifier.hpp"

using namespace kinokit;

namespace {

ModelParams params(double gamma, double s, int d = 3) {
  ModelParams p;
  p.d = d;
  p.gamma = gamma;
  p.s = s;
  return p;
}

VerifyConfig small_config() {
  VerifyConfig c;
  c.grid.v0_magnitudes = {2, 8};
  c.grid.radii = {0.25, 1, 4};
  c.grid.directions = 256;
  c.mc_samples = 512;
  return c;
}

}  // namespace

TEST_CASE("uniformity ratio edge cases") {
  CHECK(uniformity_ratio({0.0, 0.0}) == 1.0);
  CHECK(uniformity_ratio({2.0, 4.0, 8.0}) == doctest::Approx(4.0));
  CHECK(uniformity_ratio({-2.0, 4.0}) == doctest::Approx(2.0));
  CHECK(std::isinf(uniformity_ratio({0.0, 1.0})));
}

TEST_CASE("tolerance scaling") {
  const Tolerances t;
  const auto same = t.scaled(1.0);
  CHECK(same.uniformity == t.uniformity);
  CHECK(same.min_r_squared == t.min_r_squared);
  const auto loose = t.scaled(2.0);
  CHECK(loose.uniformity == 20.0);
  CHECK(loose.lambda_min == doctest::Approx(5e-5));
  CHECK(loose.min_r_squared == doctest::Approx(0.8));
  CHECK_THROWS_AS(t.scaled(0.0), std::invalid_argument);
}

TEST_CASE("sweep grid validation") {
  SweepGrid g;
  CHECK_NOTHROW(g.validate());
  g.v0_magnitudes = {4, 2};
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g.v0_magnitudes = {};
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g.v0_magnitudes = {2};
  g.radii = {-1};
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("registry") {
  const auto& ids = check_ids();
  CHECK(std::is_sorted(ids.begin(), ids.end()));
  CHECK(is_check_id("nondeg1"));
  CHECK(is_check_id("gs_coercivity"));
  CHECK_FALSE(is_check_id("nondeg3"));
  const auto p = params(0, 0.25);
  const auto f = Profile::maxwellian(3);
  CHECK_THROWS_AS(run_check("nondeg3", f, p, small_config()), std::invalid_argument);
  CHECK_THROWS_AS(run_check("nondeg1", f, p, small_config(), {{"alpha", 0.1}}), std::invalid_argument);
  CHECK(check_override_keys("A0") == std::vector<std::string>{"alpha"});
}

TEST_CASE("zero profile") {
  const auto p = params(0, 0.25);
  const auto z = Profile::zero(3);
  const auto cfg = small_config();
  const auto nd = check_nondeg1(z, p, cfg);
  CHECK_FALSE(nd.pass);
  CHECK(nd.constants.at("lambda_min") == 0.0);
  const auto b1 = check_bounded(z, p, cfg, 1);
  CHECK(b1.constants.at("Lambda_max") == 0.0);
  CHECK(b1.pass);
  const auto c1 = check_cancellation(z, p, cfg, 1);
  CHECK(c1.constants.at("Lambda_max") == 0.0);
  CHECK(c1.pass);
  const auto mc = check_measure_condition(z, p, cfg);
  CHECK(mc.constants.at("mu_max") == 0.0);
  CHECK_FALSE(mc.pass);
  CHECK_FALSE(check_cone(z, p, cfg).pass);
}

TEST_CASE("second cancellation is waived below s = 1/2") {
  const auto r = check_cancellation(Profile::maxwellian(3), params(0, 0.25), small_config(), 2);
  CHECK(r.pass);
  REQUIRE(r.witness.size() == 1);
}

TEST_CASE("class K symmetry and bounds for a Maxwellian") {
  const auto r = check_classK(Profile::maxwellian(3), params(0, 0.25), small_config());
  CHECK(r.errors.empty());
  CHECK(r.constants.at("symmetry_residual") < 1e-8);
  CHECK(r.constants.at("lambda_iv_min") > 0.0);
  CHECK(r.constants.at("Lambda_ii_over_moment") <= 10.0);
  CHECK(r.pass);
}

TEST_CASE("nondegeneracy profile is below the second moment") {
  const auto p = params(0, 0.25);
  const auto f = Profile::maxwellian(3);
  const auto M = make_cov_map(Vec{8.0, 0.0, 0.0}, p);
  KernelSpec ks;
  ks.directions = 512;
  const auto lo = nondeg_profile(f, p, M, Vec::zero(3), {1.0}, ks);
  const auto hi = second_moment_profile(f, p, M, Vec::zero(3), {1.0}, ks);
  CHECK(lo[0] > 0.0);
  CHECK(lo[0] <= hi[0]);
}

TEST_CASE("measure fraction shrinks as the probe grows") {
  const auto p = params(0, 0.25);
  const auto f = Profile::maxwellian(3);
  const auto M = make_cov_map(Vec{8.0, 0.0, 0.0}, p);
  const Ball B{Vec::zero(3), 0.5};
  double prev = 2.0;
  for (double lam : {0.01, 0.1, 1.0, 10.0}) {
    const auto m = measure_fraction(f, p, M, Vec::zero(3), B, lam, 256, 7);
    CHECK(m.value <= prev);
    prev = m.value;
  }
  CHECK(measure_fraction(f, p, M, Vec::zero(3), B, 0.01, 256, 7).value ==
        measure_fraction(f, p, M, Vec::zero(3), B, 0.01, 256, 7).value);
  CHECK_THROWS_AS(measure_fraction(f, p, M, Vec::zero(3), B, 0.0, 256, 7), std::invalid_argument);
}

TEST_CASE("cone area decays like 1/|v|") {
  auto cfg = small_config();
  cfg.grid.directions = 2048;
  const auto r = check_cone(Profile::maxwellian(3), params(0, 0.25), cfg);
  CHECK(r.pass);
  CHECK(r.fits.at("area_vs_one_plus_v").exponent == doctest::Approx(-1.0).epsilon(0.25));
}

TEST_CASE("A0 ratio vanishes on equal velocities") {
  const auto p = params(0, 0.25);
  const auto f = Profile::maxwellian(3);
  const auto M = make_cov_map(Vec{4.0, 0.0, 0.0}, p);
  KernelSpec ks;
  ks.directions = 256;
  const Point z1 = Point::origin(3);
  CHECK(a0_ratio(f, p, M, z1, z1, 0.25, {0.5, 1.0}, ks) == 0.0);
  const Point ztx{-0.5, Vec{0.1, 0.2, 0.0}, Vec::zero(3)};
  CHECK(a0_ratio(f, p, M, z1, ztx, 0.25, {0.5, 1.0}, ks) == 0.0);
  const Point zv{0.0, Vec::zero(3), Vec{0.0, 0.25, 0.0}};
  const double a = a0_ratio(f, p, M, z1, zv, 0.25, {0.5, 1.0}, ks);
  CHECK(a > 0.0);
  CHECK(std::isfinite(a));
}

TEST_CASE("A0 rejects alpha outside the admissible range") {
  const auto r = check_A0(Profile::maxwellian(3), params(0, 0.25), small_config(), 0.6);
  CHECK_FALSE(r.pass);
  CHECK_FALSE(r.errors.empty());
}

TEST_CASE("anisotropic distance band") {
  const auto p = params(0, 0.25);
  const auto M = make_cov_map(Vec{8.0, 0.0, 0.0}, p);
  // along v0 both distances are close to |v0| |delta|
  const Vec v1 = M.v0();
  const Vec v2 = M.v0() + t0_apply(M, Vec{0.5, 0.0, 0.0});
  CHECK(da(M, v1, v2) / dGS(v1, v2) == doctest::Approx(1.0).epsilon(0.05));
  const auto b = da_band(M, 2000, 3);
  CHECK(b.min_ratio >= 0.25);
  CHECK(b.max_ratio <= 4.0);
  CHECK(da_band(M, 0, 3).min_ratio == 1.0);
  auto cfg = small_config();
  cfg.grid.v0_magnitudes = {1, 8};
  CHECK_FALSE(check_da_equivalence(p, cfg, 100).pass);
}

TEST_CASE("coercivity with trivial test functions") {
  const auto p = params(0, 0.25, 2);
  const auto f = Profile::maxwellian(2);
  auto cfg = small_config();
  CoercivitySpec sp;
  sp.samples = 32;
  sp.directions = 16;
  const auto zero = check_gs_coercivity(f, p, [](const Vec&) { return 0.0; }, cfg, sp);
  CHECK(zero.constants.at("I1") == 0.0);
  CHECK(zero.constants.at("seminorm") == 0.0);
  CHECK(zero.constants.at("zero_order") == 0.0);
  CHECK(zero.pass);
  const auto one = check_gs_coercivity(f, p, [](const Vec&) { return 1.0; }, cfg, sp);
  CHECK(one.constants.at("seminorm") == 0.0);
  CHECK(one.constants.at("I1") == 0.0);
  CHECK(one.pass);
}

TEST_CASE("bilinear bounds with a vanishing second argument") {
  const auto p = params(0, 0.25);
  BilinearSpec sp;
  sp.shells = {0, 2};
  sp.directions = 32;
  sp.seminorm = {4, 4, 8, 1e-2, 0.0, 1e-3, 42};
  const auto r = check_bilinear_bounds(Profile::maxwellian(3), Profile::zero(3), p, small_config(), sp);
  CHECK(r.constants.at("Q1_ratio_max") == 0.0);
  CHECK(r.constants.at("Q2_ratio_max") == 0.0);
  sp.q = 2.0;
  CHECK_FALSE(check_bilinear_bounds(Profile::maxwellian(3), Profile::maxwellian(3), p, small_config(), sp).pass);
}

TEST_CASE("transformed Hoelder sandwich exponent") {
  auto cfg = small_config();
  cfg.grid.v0_magnitudes = {2, 8, 32};
  const auto r = check_holder_cov(params(1, 0.5), cfg);
  CHECK(r.constants.at("max_fitted_exponent") == doctest::Approx(1.0).epsilon(0.05));
  CHECK(r.constants.at("lower_ratio_max") <= 1.0);
}

TEST_CASE("checks are deterministic") {
  const auto p = params(0, 0.25);
  const auto f = Profile::maxwellian(3);
  const auto cfg = small_config();
  for (const char* id : {"measure_condition", "bounded2", "da_equivalence"}) {
    const auto a = run_check(id, f, p, cfg);
    const auto b = run_check(id, f, p, cfg);
    CHECK(a.constants == b.constants);
    CHECK(a.pass == b.pass);
  }
}
