#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace scatlab {

/// Fixed-size Euclidean vector. Thin value type over std::array.
template <std::size_t D>
struct Vec {
  static_assert(D >= 1);
  std::array<double, D> c{};

  constexpr double& operator[](std::size_t i) { return c[i]; }
  constexpr double operator[](std::size_t i) const { return c[i]; }

  static constexpr std::size_t size() { return D; }

  friend constexpr Vec operator+(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < D; ++i) a.c[i] += b.c[i];
    return a;
  }
  friend constexpr Vec operator-(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < D; ++i) a.c[i] -= b.c[i];
    return a;
  }
  friend constexpr Vec operator-(Vec a) {
    for (auto& v : a.c) v = -v;
    return a;
  }
  friend constexpr Vec operator*(double s, Vec a) {
    for (auto& v : a.c) v *= s;
    return a;
  }
  friend constexpr Vec operator*(Vec a, double s) { return s * a; }
  friend constexpr Vec operator/(Vec a, double s) {
    for (auto& v : a.c) v /= s;
    return a;
  }
  constexpr Vec& operator+=(const Vec& b) { return *this = *this + b; }
  constexpr Vec& operator-=(const Vec& b) { return *this = *this - b; }

  friend constexpr bool operator==(const Vec&, const Vec&) = default;
};

template <std::size_t D>
constexpr double dot(const Vec<D>& a, const Vec<D>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < D; ++i) s += a[i] * b[i];
  return s;
}

template <std::size_t D>
double norm(const Vec<D>& a) {
  return std::sqrt(dot(a, a));
}

template <std::size_t D>
constexpr double norm2(const Vec<D>& a) {
  return dot(a, a);
}

/// Component of `v` orthogonal to the unit vector `u`.
template <std::size_t D>
constexpr Vec<D> reject(const Vec<D>& v, const Vec<D>& u) {
  return v - dot(v, u) * u;
}

/// Planar cross product x ∧ y.
inline double wedge(const Vec<2>& a, const Vec<2>& b) { return a[0] * b[1] - a[1] * b[0]; }

}  // namespace scatlab
