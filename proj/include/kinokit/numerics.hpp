#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "kinokit/vec.hpp"

namespace kinokit {

struct QuadratureSpec {
  double rel_tol = 1e-6;
  double abs_tol = 1e-12;
  int max_subdivisions = 200;
  double radial_cutoff = 12.0;  ///< in standard deviations
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
  int evaluations = 0;
};

/// Adaptive Gauss-Kronrod (7/15) on [a,b].
QuadResult integrate_1d(const std::function<double(double)>& g, double a, double b, const QuadratureSpec& spec);

/// Same, over the union of the given intervals (assumed disjoint).
QuadResult integrate_intervals(const std::function<double(double)>& g,
                               const std::vector<std::pair<double, double>>& intervals, const QuadratureSpec& spec);

/// Merge overlapping intervals; drops empty ones.
std::vector<std::pair<double, double>> merge_intervals(std::vector<std::pair<double, double>> iv);

/// A ball outside of which an integrand is treated as zero.
struct Ball {
  Vec center;
  double radius = 0.0;
};

/// Integral of g over the hyperplane {w : w.e = 0}. g is negligible outside
/// the union of `support`; an empty support means the disk of radius
/// spec.radial_cutoff about the origin.
QuadResult integrate_hyperplane(const std::function<double(const Vec&)>& g, const Vec& e, const QuadratureSpec& spec,
                                const std::vector<Ball>& support = {});

/// Surface measure of the unit sphere in R^d.
double sphere_area(int d);

/// Volume of the unit ball in R^d.
double ball_volume(int d);

/// Equal-weight direction set: Fibonacci lattice on S^2 (d=3) or uniform
/// angles on S^1 (d=2). Each direction carries weight sphere_area(d)/n.
std::vector<Vec> sphere_grid(int d, int n);

/// Same directions with the pole (e_3, or e_1 for d=2) moved onto `axis`.
std::vector<Vec> sphere_grid(int d, int n, const Vec& axis);

/// Equal-area directions in the cap {sigma : sigma.axis >= cos_min}.
std::vector<Vec> cap_grid(int d, int n, const Vec& axis, double cos_min);
double cap_area(int d, double cos_min);

/// Integral over directions sigma in `dirs` (equal weights) and radii in
/// [lo(sigma), hi(sigma)] of ray(sigma, rho) * rho^(d-1).
QuadResult sphere_radial_integral(const std::function<double(const Vec&, double)>& ray, const std::vector<Vec>& dirs,
                                  const std::function<double(const Vec&)>& lo,
                                  const std::function<double(const Vec&)>& hi, const QuadratureSpec& spec);

struct PvResult {
  double value = 0.0;
  std::vector<double> ladder;     ///< annulus integrals for eps, eps/2, ...
  std::vector<double> residuals;  ///< successive differences of extrapolants
  bool converged = true;
};

struct PvSpec {
  QuadratureSpec quad;
  int directions = 512;
  int ladder_steps = 4;
  double core_exponent = 2.0;  ///< expected order of the omitted core in eps
  Vec axis;                    ///< pole of the direction grid; empty for the default
};

/// Integral of g over eps < |v'-center| < R with antipodally paired nodes,
/// extrapolated eps -> 0 along eps, eps/2, ...
PvResult pv_ring_integral(const std::function<double(const Vec&)>& g, const Vec& center, double eps, double R,
                          const PvSpec& spec);

/// Same, for a pre-paired ray integrand h(sigma, rho) = g(c+rho sigma) + g(c-rho sigma);
/// the result includes the factor 1/2 from pairing.
PvResult pv_ring_integral_paired(const std::function<double(const Vec&, double)>& paired, int d, double eps, double R,
                                 const PvSpec& spec);

struct FitResult {
  double exponent = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int n_points = 0;
};

/// Least squares fit of ln y = intercept + exponent ln x.
FitResult fit_power_law(const std::vector<std::pair<double, double>>& points);

/// Pairwise (tree) summation.
double pairwise_sum(const std::vector<double>& xs);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic seed derived from a root seed and a key path.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// Counter-based generator: the i-th draw depends only on (seed, i).
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t next_u64() { return mix64(seed_ ^ mix64(counter_++ + 0x9e3779b97f4a7c15ULL)); }
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal();
  Vec unit_vector(int d);
  Vec in_ball(int d);

private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// A draw x together with its importance weight (1/density).
struct Sample {
  Vec x;
  double weight = 1.0;
};

struct Sampler {
  int dim = 3;
  std::function<Sample(CounterRng&)> draw;
};

Sampler uniform_ball_sampler(int d, const Vec& center, double radius);
Sampler gaussian_sampler(int d, const Vec& mean, double temperature);

struct McResult {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

/// Stratified Monte Carlo: n draws split over a fixed number of strata, each
/// seeded from (seed, stratum); independent of worker count.
McResult mc_integrate(const std::function<double(const Vec&)>& g, const Sampler& sampler, std::size_t n,
                      std::uint64_t seed, int strata = 64);

}  // namespace kinokit
