#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "kinokit/check_result.hpp"
#include "kinokit/geometry.hpp"

namespace kinokit {

using PhaseFn = std::function<double(const Point&)>;

struct KMultiIndex {
  int a0 = 0;
  std::array<int, 3> ax{};
  std::array<int, 3> av{};

  int order() const;
  auto operator<=>(const KMultiIndex&) const = default;
};

double kdeg(const KMultiIndex& m, double s);

/// Value of the monomial at (t,x,v).
double monomial(const KMultiIndex& m, const Point& z);

/// All multi-indices in dimension d with kinetic degree < alpha.
std::vector<KMultiIndex> monomials_below(int d, double s, double alpha);

/// Polynomial in group coordinates xi = base^{-1} o z.
struct KPolynomial {
  double s = 0.5;
  int d = 3;
  Point base;
  std::map<KMultiIndex, double> terms;
  bool ill_conditioned = false;  ///< finite-difference step below the warning threshold

  static constexpr double kZeroDegree = -std::numeric_limits<double>::infinity();

  /// Kinetic degree; -inf for the zero polynomial.
  double degree() const;
  double eval_xi(const Point& xi) const;
  double eval(const Point& z) const { return eval_xi(compose(inverse(base), z)); }
};

/// Taylor polynomial of kinetic degree < alpha of f at z0, from centred finite
/// differences of xi -> f(z0 o xi) with step h and one Richardson refinement.
KPolynomial taylor_expansion(const PhaseFn& f, const Point& z0, double alpha, double s, double h = 1e-3,
                             double scale = 1.0);

struct SeminormSpec {
  int base_points = 16;
  int shells = 8;
  int directions = 32;
  double min_shell = 1e-2;   ///< smallest shell radius relative to the largest
  double max_offset = 0.0;   ///< if > 0, only offsets with ||xi|| <= max_offset
  double fd_step = 1e-3;     ///< relative to the cylinder radius
  std::uint64_t seed = 42;
};

struct SeminormEstimate {
  double value = 0.0;
  double sup_abs = 0.0;  ///< sampled sup |f|
  double inf_val = 0.0;  ///< sampled inf f
  double sup_val = 0.0;  ///< sampled sup f
  Point witness_base;
  Point witness_point;
  double alpha = 0.0;
  double q = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;

  double norm() const { return value + sup_abs; }
};

SeminormEstimate seminorm_est(const PhaseFn& f, const Cylinder& Q, double alpha, double s, const SeminormSpec& spec);

struct WeightedNormEstimate {
  SeminormEstimate best;
  double value = 0.0;
  std::vector<std::pair<double, double>> per_speed;  ///< (|v|, (1+|v|)^q ||f||_{C^alpha(Q1(z))})
};

/// sup over unit cylinders centred at (0,0,|v| e) of (1+|v|)^q ||f||_{C^alpha}.
WeightedNormEstimate weighted_norm_est(const PhaseFn& f, const std::vector<double>& speeds, const Vec& direction,
                                       double alpha, double q, double s, const SeminormSpec& spec);

/// z -> f(z o (0,y,0)) - f(z).
PhaseFn increment_x(PhaseFn f, const Vec& y);
/// z -> f(z o (0,0,w)) - f(z).
PhaseFn increment_v(PhaseFn f, const Vec& w);

CheckResult check_interpolation(const PhaseFn& f, const Cylinder& Q, double a1, double a2, double a3, double s,
                                const SeminormSpec& spec, double c_max = 10.0);

CheckResult check_product(const PhaseFn& f, const PhaseFn& g, const Cylinder& Q, double alpha, double s,
                          const SeminormSpec& spec, double c_max = 10.0);

/// Compares the global seminorm with C0 + C r0^{-alpha} osc f, where C0 is
/// measured from offsets with ||xi|| <= r0.
CheckResult check_localization(const PhaseFn& f, const Cylinder& Q, double alpha, double r0, double s,
                               const SeminormSpec& spec, double c_max = 10.0);

CheckResult check_increment_x_bound(const PhaseFn& f, const Cylinder& Q, double alpha, double s,
                                    const std::vector<Vec>& y_grid, const SeminormSpec& spec, double c_max = 10.0);

/// Requires 2s + alpha < 1 and alpha <= min(1,2s); throws otherwise.
CheckResult check_increment_v_bound(const PhaseFn& f, const Cylinder& Q, double alpha, double s,
                                    const std::vector<Vec>& w_grid, const SeminormSpec& spec, double c_max = 10.0);

}  // namespace kinokit
