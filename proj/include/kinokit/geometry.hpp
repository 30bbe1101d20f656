#pragma once

#include <array>

#include "kinokit/numerics.hpp"
#include "kinokit/profile.hpp"
#include "kinokit/vec.hpp"

namespace kinokit {

struct Point {
  double t = 0.0;
  Vec x;
  Vec v;

  static Point origin(int d) { return {0.0, Vec::zero(d), Vec::zero(d)}; }
  int dim() const { return v.dim(); }
};

/// Group law: (h,y,w) o (t,x,v) = (h+t, x+y+t w, v+w).
Point compose(const Point& xi, const Point& z);
Point inverse(const Point& z);
/// Kinetic scaling S_r z = (r^{2s} t, r^{1+2s} x, r v).
Point dilate(double r, const Point& z, double s);

/// Kinetic distance: min over w of max(|dt|^{1/2s}, |dx - dt w|^{1/(1+2s)}, |v1-w|, |v2-w|).
double kdistance(const Point& z1, const Point& z2, double s);
double knorm(const Point& z, double s);

struct Cylinder {
  Point center;
  double radius = 1.0;
};

bool cylinder_contains(const Cylinder& Q, const Point& z, double s);
Point sample_in_cylinder(const Cylinder& Q, double s, CounterRng& rng);

/// Change-of-variables data attached to a base point z0 with velocity v0.
struct CovMap {
  Point z0;
  ModelParams params;
  double speed = 0.0;      ///< |v0|
  Vec direction;           ///< v0/|v0| (e_1 when v0 = 0)
  bool identity = true;    ///< |v0| < 2
  double time_scale = 1.0; ///< |v0|^{-gamma-2s}, or 1 for the identity map

  const Vec& v0() const { return z0.v; }
};

CovMap make_cov_map(const Point& z0, const ModelParams& params);
/// Convenience: base point (0,0,v0).
CovMap make_cov_map(const Vec& v0, const ModelParams& params);

/// Compression by 1/|v0| along v0, identity on the orthogonal complement.
Vec t0_apply(const CovMap& M, const Vec& w);
Vec t0_inverse(const CovMap& M, const Vec& w);
/// Row-major matrix of the velocity map (d x d, padded to 3 x 3).
std::array<std::array<double, 3>, 3> t0_matrix(const CovMap& M);

Point cov_forward(const CovMap& M, const Point& z);
Point cov_backward(const CovMap& M, const Point& zbar);

/// Gressman-Strain distance sqrt(|v1-v2|^2 + (|v1|^2-|v2|^2)^2/4).
double dGS(const Vec& v1, const Vec& v2);
/// |T0^{-1}(v1 - v2)|.
double da(const CovMap& M, const Vec& v1, const Vec& v2);

}  // namespace kinokit
