#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>

namespace kinokit {

/// Small fixed-capacity real vector for d in {1,2,3}.
class Vec {
public:
  static constexpr int kMaxDim = 3;

  Vec() = default;
  explicit Vec(int dim) : n_(dim) {
    if (dim < 0 || dim > kMaxDim) throw std::invalid_argument("Vec: dimension must be in [0,3]");
  }
  Vec(std::initializer_list<double> xs) : n_(static_cast<int>(xs.size())) {
    if (n_ > kMaxDim) throw std::invalid_argument("Vec: dimension must be in [0,3]");
    int i = 0;
    for (double x : xs) c_[i++] = x;
  }

  static Vec zero(int dim) { return Vec(dim); }
  static Vec unit(int dim, int axis) {
    Vec e(dim);
    e[axis] = 1.0;
    return e;
  }

  int dim() const { return n_; }
  double& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n_; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n_; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Vec& operator*=(double a) {
    for (int i = 0; i < n_; ++i) c_[i] *= a;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator-(Vec a) { return a *= -1.0; }
  friend Vec operator*(Vec a, double k) { return a *= k; }
  friend Vec operator*(double k, Vec a) { return a *= k; }
  friend Vec operator/(Vec a, double k) { return a *= 1.0 / k; }
  friend bool operator==(const Vec& a, const Vec& b) {
    if (a.n_ != b.n_) return false;
    for (int i = 0; i < a.n_; ++i)
      if (a.c_[i] != b.c_[i]) return false;
    return true;
  }

private:
  std::array<double, kMaxDim> c_{};
  int n_ = 0;
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}
inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec normalized(const Vec& a) {
  const double n = norm(a);
  if (n == 0.0) throw std::invalid_argument("normalized: zero vector");
  return a / n;
}

/// Orthonormal basis of the hyperplane perpendicular to the unit vector e.
inline std::array<Vec, 2> orthonormal_complement(const Vec& e) {
  const int d = e.dim();
  std::array<Vec, 2> out{Vec(d), Vec(d)};
  if (d == 2) {
    out[0] = Vec{-e[1], e[0]};
    return out;
  }
  if (d != 3) throw std::invalid_argument("orthonormal_complement: d must be 2 or 3");
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(e[i]) < std::abs(e[k])) k = i;
  Vec a = Vec::unit(3, k);
  Vec u = a - dot(a, e) * e;
  u = normalized(u);
  Vec w{e[1] * u[2] - e[2] * u[1], e[2] * u[0] - e[0] * u[2], e[0] * u[1] - e[1] * u[0]};
  out[0] = u;
  out[1] = w;
  return out;
}

}  // namespace kinokit
