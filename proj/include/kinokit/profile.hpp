#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kinokit/numerics.hpp"
#include "kinokit/vec.hpp"

namespace kinokit {

enum class KernelMode { model, carleman };

std::string to_string(KernelMode m);
KernelMode kernel_mode_from_string(const std::string& s);

struct ModelParams {
  int d = 3;
  double s = 0.25;
  double gamma = 0.0;
  KernelMode kernel_mode = KernelMode::model;
  double c_b = 1.0;
  double b_norm = 1.0;
  double a_cap = 1e3;  ///< ceiling on the carleman factor A

  /// gamma + 2s + 1, the weight exponent on the collision hyperplane.
  double kappa() const { return gamma + 2.0 * s + 1.0; }
  /// True when gamma + 2s lies in [0,2].
  bool ellipticity_range() const { return gamma + 2.0 * s >= 0.0 && gamma + 2.0 * s <= 2.0; }
  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;
};

ModelParams make_inverse_power_params(double p_exp, int d);

struct GaussianComponent {
  double mass = 1.0;
  double temperature = 1.0;
  Vec drift;
};

/// Radial bump amplitude * phi(|v-center|/radius); smoothness 0 is the C^inf
/// template exp(1 - 1/(1-r^2)), k > 0 is (1-r^2)^k.
struct CompactBump {
  Vec center;
  double radius = 1.0;
  double amplitude = 1.0;
  int smoothness = 0;

  double shape(double r) const;
};

class Profile {
public:
  Profile() = default;
  explicit Profile(int d) : d_(d) {}

  static Profile maxwellian(int d, double mass = 1.0, double temperature = 1.0);
  static Profile zero(int d) { return Profile(d); }

  Profile& add(GaussianComponent c);
  Profile& set_bump(CompactBump b);

  int dim() const { return d_; }
  const std::vector<GaussianComponent>& components() const { return comps_; }
  const std::optional<CompactBump>& bump() const { return bump_; }
  bool is_zero() const { return comps_.empty() && !bump_; }

  double operator()(const Vec& v) const;

  /// Balls outside of which f is below exp(-cutoff^2/2) relative to its scale.
  std::vector<Ball> support(double cutoff) const;

  /// Stable hex digest of the profile description.
  std::string hash() const;

private:
  int d_ = 3;
  std::vector<GaussianComponent> comps_;
  std::optional<CompactBump> bump_;
};

struct HydroQuantities {
  double mass = 0.0;
  double energy = 0.0;
  double entropy = 0.0;
  double entropy_error = 0.0;
  bool converged = true;
};

HydroQuantities hydro_quantities(const Profile& f, const ModelParams& params);

/// sup_v (1+|v|)^q f(v).
double decay_envelope(const Profile& f, double q);

struct HydroBounds {
  double m0 = 0.5;
  double M0 = 2.0;
  double E0 = 10.0;
  double H0 = 10.0;

  void validate() const;
};

bool hydro_gate(const HydroQuantities& h, const HydroBounds& b);

}  // namespace kinokit
