#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kinokit/check_result.hpp"
#include "kinokit/geometry.hpp"
#include "kinokit/holder.hpp"
#include "kinokit/kernel.hpp"

namespace kinokit {

struct SweepGrid {
  std::vector<double> v0_magnitudes{2, 4, 8, 16, 32, 64};
  std::vector<double> radii{0.0625, 0.125, 0.25, 0.5, 1, 2, 4, 8, 16};
  int directions = 2048;  ///< per sphere for d=3; d=2 uses directions/4
  std::uint64_t seed = 42;

  /// Throws std::invalid_argument unless both lists are nonempty, positive and strictly ascending.
  void validate() const;
};

struct Tolerances {
  double lambda_min = 1e-4;
  double anchor_factor = 10.0;  ///< Lambda_max and C_max as multiples of the smallest-|v0| value
  double uniformity = 10.0;     ///< max/min over the |v0| sweep
  double mu_min = 0.05;
  double fit_slack = 0.3;
  double cone_slack = 0.25;
  double min_r_squared = 0.9;
  double distance_band = 4.0;   ///< d_a/d_GS must lie in [1/band, band]
  double c_max = 10.0;
  double ratio_spread = 0.1;    ///< relative spread allowed for ratios expected to be constant

  /// Loosens every bound by the factor x (>0); x = 1 is the identity.
  Tolerances scaled(double x) const;
};

struct VerifyConfig {
  SweepGrid grid;
  Tolerances tol;
  QuadratureSpec quadrature;
  std::size_t mc_samples = 4096;

  /// Kernel quadrature derived from the grid and quadrature settings.
  KernelSpec kernel() const;
};

/// Per-check knobs; unknown keys are rejected by run_check.
using CheckOverrides = std::map<std::string, double>;

/// All registered check ids, sorted.
const std::vector<std::string>& check_ids();
bool is_check_id(const std::string& id);
/// Override keys accepted by a check.
const std::vector<std::string>& check_override_keys(const std::string& id);

/// Runs one check by id. Precondition failures and numerical errors are
/// recorded in the result instead of thrown; unknown ids throw.
CheckResult run_check(const std::string& id, const Profile& f, const ModelParams& p, const VerifyConfig& cfg,
                      const CheckOverrides& overrides = {});

// Point measurements for one change of variables.

/// Probe velocities: the centre and +-0.75 radius along each axis of a frame whose first axis is `axis`.
std::vector<Vec> ball_probes(int d, double radius, const Vec& axis);

/// inf over unit e of r^{2s-2} int_{B_r(v)} ((v'-v).e)_+^2 Kbar(v,v') dv', one value per radius.
std::vector<double> nondeg_profile(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v,
                                   const std::vector<double>& radii, const KernelSpec& spec);

/// r^{2s-2} int_{B_r(v)} |v'-v|^2 Kbar(v,v') dv', one value per radius.
std::vector<double> second_moment_profile(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v,
                                          const std::vector<double>& radii, const KernelSpec& spec);

/// Monte Carlo fraction of v' in the ball with Kbar(v,v') >= lambda |v'-v|^{-d-2s}.
McResult measure_fraction(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v, const Ball& ball,
                          double lambda, std::size_t n, std::uint64_t seed, const QuadratureSpec& q = {});

struct ConeMeasure {
  double area = 0.0;       ///< spherical measure of the superlevel set
  double width = 0.0;      ///< sup over the set of |sigma . v|
  std::size_t count = 0;
};

/// Directions with J(v,sigma) >= threshold (untransformed) on a grid aligned with v.
ConeMeasure cone_measure(const Profile& f, const ModelParams& p, const Vec& v, double threshold, int directions,
                         const QuadratureSpec& q = {});

/// Same for Jbar(v,sigma) of the transformed kernel.
ConeMeasure cone_measure_cov(const Profile& f, const ModelParams& p, const CovMap& M, const Vec& v, double threshold,
                             int directions, const QuadratureSpec& q = {});

/// Mean over sigma of the unweighted plane mass int_{w perp sigma} f(w) dw, the large-|v| limit of
/// J(v,sigma)/|v|^{gamma+2s+1} for sigma perpendicular to v. Reference level of the cone thresholds.
double isotropic_level(const Profile& f, const ModelParams& p, int directions, const QuadratureSpec& q = {});

/// sup over rho of int_{B_rho} |Kbar_{z1} - Kbar_{z2}| |w|^2 dw / (rho^{2-2s} d(z1,z2)^{alpha'}), alpha' = 2s alpha/(1+2s).
double a0_ratio(const Profile& f, const ModelParams& p, const CovMap& M, const Point& z1, const Point& z2,
                double alpha, const std::vector<double>& rhos, const KernelSpec& spec);

struct BandResult {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  std::size_t pairs = 0;
};

/// d_a/d_GS over pairs drawn uniformly from v0 + T0(B_1); coincident pairs count as ratio 1.
BandResult da_band(const CovMap& M, std::size_t n_pairs, std::uint64_t seed);

// Sweep checks.

CheckResult check_nondeg1(const Profile& f, const ModelParams& p, const VerifyConfig& cfg);
CheckResult check_bounded(const Profile& f, const ModelParams& p, const VerifyConfig& cfg, int which);
CheckResult check_cancellation(const Profile& f, const ModelParams& p, const VerifyConfig& cfg, int which);
CheckResult check_classK(const Profile& f, const ModelParams& p, const VerifyConfig& cfg);
CheckResult check_measure_condition(const Profile& f, const ModelParams& p, const VerifyConfig& cfg,
                                    double lambda_probe = 0.0);
/// Untransformed cone over |v| in `speeds`, threshold fraction x isotropic level x (1+|v|)^{gamma+2s+1}.
CheckResult check_cone(const Profile& f, const ModelParams& p, const VerifyConfig& cfg,
                       const std::vector<double>& speeds = {4, 8, 16, 32}, double fraction = 0.25);
CheckResult check_cone_transformed(const Profile& f, const ModelParams& p, const VerifyConfig& cfg,
                                   double fraction = 0.25);
/// alpha = 0 picks min(1,2s)/2.
CheckResult check_A0(const Profile& f, const ModelParams& p, const VerifyConfig& cfg, double alpha = 0.0);
CheckResult check_da_equivalence(const ModelParams& p, const VerifyConfig& cfg, std::size_t n_pairs = 10000);

struct CoercivitySpec {
  double rho = 1.0;
  double zero_order_constant = 1.0;  ///< C in LHS >= c seminorm - C zero-order
  bool consistent_cb = true;         ///< replace c_b by cancel1/conv at the origin
  double sampler_temperature = 0.6;
  std::size_t samples = 1024;
  int directions = 128;
};

CheckResult check_gs_coercivity(const Profile& f, const ModelParams& p, const VelocityFn& g, const VerifyConfig& cfg,
                                const CoercivitySpec& spec = {});

struct BilinearSpec {
  double alpha = 0.0;  ///< 0 picks min(1,2s)/2
  double q = 8.0;
  std::vector<double> shells{0, 1, 2, 3, 4};
  SeminormSpec seminorm{8, 6, 16, 1e-2, 0.0, 1e-3, 42};
  int directions = 256;
};

CheckResult check_bilinear_bounds(const Profile& f, const Profile& g, const ModelParams& p, const VerifyConfig& cfg,
                                  const BilinearSpec& spec = {});

// Supporting checks.

/// Untransformed tail mass at r = 1 over |v| in `speeds`, fitted against (1+|v|)^{gamma+2s}.
CheckResult check_tail_mass_witness(const Profile& f, const ModelParams& p, const VerifyConfig& cfg,
                                    const std::vector<double>& speeds = {4, 8, 16, 32, 64});
/// Decay of cov_pv_discrepancy over R = 2^{-1}, ..., 2^{-levels} at |v0| = speed.
CheckResult check_cov_pv_decay(const Profile& f, const ModelParams& p, const VerifyConfig& cfg, double speed = 8.0,
                               int levels = 6);
/// cancel1(v, inf) / conv_gamma(v) over a 9-point grid.
CheckResult check_cancel_ratio(const Profile& f, const ModelParams& p, const VerifyConfig& cfg);
/// Hoelder estimator self-checks on a smooth test family.
CheckResult check_holder_suite(const ModelParams& p, const VerifyConfig& cfg);
/// ||Fbar||_{C^beta(Q_1)} <= C ||F||_{C^beta(E_1)} <= C |v0|^{cbar beta} ||Fbar|| on a test family.
CheckResult check_holder_cov(const ModelParams& p, const VerifyConfig& cfg, double beta = 0.0);

/// max/min of the positive entries; 1 when all are zero, +inf when some are zero and others are not.
double uniformity_ratio(const std::vector<double>& values);

}  // namespace kinokit
