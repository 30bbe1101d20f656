#pragma once

#include <functional>
#include <vector>

#include "kinokit/geometry.hpp"
#include "kinokit/numerics.hpp"
#include "kinokit/profile.hpp"

namespace kinokit {

using VelocityFn = std::function<double(const Vec&)>;

struct KernelEval {
  double value = 0.0;
  double error_est = 0.0;
  KernelMode mode = KernelMode::model;
};

/// Quadrature settings shared by the kernel integrals.
struct KernelSpec {
  QuadratureSpec plane;                 ///< hyperplane integrals
  QuadratureSpec radial{1e-6, 1e-14, 200, 12.0};
  int directions = 2048;                ///< sphere grid size (d=3); d=2 uses directions/4
  int ladder_steps = 4;

  int sphere_points(int d) const { return d == 3 ? directions : std::max(64, directions / 4); }
};

/// Carleman factor 2^{d-1}((r^2+|w|^2)/|w|^2)^{kappa/2}, capped at params.a_cap.
double carleman_factor(const ModelParams& p, double r, double wnorm);

/// J(v,sigma) = int_{w perp sigma} f(v+w)|w|^{gamma+2s+1} dw, so that the model
/// kernel is K_f(v, v + r sigma) = r^{-d-2s} J(v,sigma).
KernelEval cone_direction_integral(const Profile& f, const ModelParams& p, const Vec& v, const Vec& sigma,
                                   const QuadratureSpec& q = {});

/// Plane integral with the mode's weight at separation r (equals J in model mode).
KernelEval plane_integral(const Profile& f, const ModelParams& p, const Vec& v, const Vec& sigma, double r,
                          const QuadratureSpec& q = {});

/// K_f(v, v') in the configured mode. Throws when v == v'.
KernelEval kernel_eval(const Profile& f, const ModelParams& p, const Vec& v, const Vec& vp, const QuadratureSpec& q = {});

/// Transformed kernel |v0|^{-1-gamma-2s} K_f(vbar, vbar + T0 w), vbar = v0 + T0 z.v.
KernelEval kernel_cov_eval(const Profile& f, const ModelParams& p, const CovMap& M, const Point& z, const Vec& w,
                           const QuadratureSpec& q = {});

/// Base velocity v0 + T0 v of the transformed kernel.
Vec cov_base_velocity(const CovMap& M, const Vec& v);

/// Angular profile of the transformed kernel: Kbar(v, v + rho sigma) = rho^{-d-2s} Jbar(v, sigma, rho),
/// independent of rho in model mode.
double cov_direction_integral(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v, const Vec& sigma,
                              double rho = 1.0, const QuadratureSpec& q = {});

/// Plane integral of the Gaussian components along the line v + t sigma at a fixed separation r:
/// sum_k amplitude_k exp(-(offset_k + t)^2 / (2 temperature_k)). Bump parts are not represented.
struct PlaneLine {
  std::vector<double> amplitude;
  std::vector<double> offset;
  std::vector<double> temperature;

  double at(double t) const;
  /// Value at +rho plus value at -rho minus twice the value at 0.
  double second_difference(double rho) const;
  /// Value at -rho minus value at +rho.
  double odd_difference(double rho) const;
};

PlaneLine plane_line(const Profile& f, const ModelParams& p, const Vec& v, const Vec& sigma, double r,
                     const QuadratureSpec& q = {});

/// int_{w perp sigma} [f(v+rho sigma+w) + f(v-rho sigma+w) - 2 f(v+w)] weight(w) dw.
double second_difference_plane(const Profile& f, const ModelParams& p, const Vec& v, const Vec& sigma, double rho,
                               const QuadratureSpec& q = {});

/// int_{w perp sigma} [f(v-rho sigma+w) - f(v+rho sigma+w)] weight(w) dw.
double odd_difference_plane(const Profile& f, const ModelParams& p, const Vec& v, const Vec& sigma, double rho,
                            const QuadratureSpec& q = {});

struct ApplyLSpec {
  KernelSpec kernel;
  double radius = 0.0;  ///< near-field radius; 0 picks (|g|_0 / [g]_beta)^{1/beta}
  double alpha = 0.0;   ///< 0 picks min(1, 2s), with 2s + alpha capped at 2
};

struct ApplyLResult {
  double value = 0.0;
  double near = 0.0;
  double far = 0.0;
  double radius = 0.0;
  double g_sup = 0.0;       ///< sampled sup |g|
  double g_seminorm = 0.0;  ///< sampled second-difference quotient of order beta
  double beta = 0.0;        ///< 2s + alpha
  bool converged = true;
};

/// PV int (g(v') - g(v)) K_f(v,v') dv', split into a symmetrised near field and a direct far field.
ApplyLResult apply_L(const Profile& f, const ModelParams& p, const VelocityFn& g, const Vec& v,
                     const ApplyLSpec& spec = {});

/// int f(v+w)|w|^gamma dw. Throws when gamma <= -d.
double conv_gamma(const Profile& f, const ModelParams& p, const Vec& v, const QuadratureSpec& q = {});

/// c_b (f * |.|^gamma)(v) g(v).
double q2_eval(const Profile& f, const VelocityFn& g, const ModelParams& p, const Vec& v, const QuadratureSpec& q = {});

/// int_{|v'-v|>r} K_f(v,v') dv'.
double tail_mass(const Profile& f, const ModelParams& p, const Vec& v, double r, const KernelSpec& spec = {});

/// PV int_{B_R(v)} (K_f(v,v') - K_f(v',v)) dv'; R may be +infinity.
PvResult cancel1(const Profile& f, const ModelParams& p, const Vec& v, double R, const KernelSpec& spec = {});

struct VecPvResult {
  Vec value;
  bool converged = true;
};

/// PV int_{B_r(v)} (K_f(v,v') - K_f(v',v)) (v'-v) dv'.
VecPvResult cancel2(const Profile& f, const ModelParams& p, const Vec& v, double r, const KernelSpec& spec = {});

/// int_{B_R \ E_R} (K_f(vbar, vbar+w) - K_f(vbar+w, vbar)) dw with E_R = T0(B_R).
QuadResult cov_pv_discrepancy(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& vbar, double R,
                              const KernelSpec& spec = {});

/// r^{2s} int_{|v'-v|>r} Kbar(v,v') dv' for each r in `radii`.
std::vector<double> cov_tail_out(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v,
                                 const std::vector<double>& radii, const KernelSpec& spec = {});

/// r^{2s} int_{|v-vp|>r} Kbar(v,vp) dv for each r in `radii` (ascending), with vp held fixed.
std::vector<double> cov_tail_in(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& vp,
                                const std::vector<double>& radii, const KernelSpec& spec = {});

/// PV int_{B_R(v)} (Kbar(v,v') - Kbar(v',v)) dv' for the transformed kernel; R may be +infinity.
QuadResult cov_cancel1(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v, double R,
                       const KernelSpec& spec = {});

/// PV int_{B_r(v)} (Kbar(v,v') - Kbar(v',v)) (v'-v) dv' for each r in `radii` (ascending).
std::vector<Vec> cov_cancel2(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v,
                             const std::vector<double>& radii, const KernelSpec& spec = {});

/// Smooth cutoff equal to 1 on B_{|v0|/9} and 0 outside B_{|v0|/8}.
struct CutoffSpec {
  Vec v0;

  double inner() const { return norm(v0) / 9.0; }
  double outer() const { return norm(v0) / 8.0; }
};

double cutoff_phi(const CutoffSpec& spec, const Vec& v);

/// int_{|v'| < |v0|/8} |g(v')| phi(v') K_f(v,v') dv'.
double bump_tail(const Profile& f, const ModelParams& p, const CutoffSpec& cut, const VelocityFn& g, const Vec& v,
                 const KernelSpec& spec = {});

}  // namespace kinokit
