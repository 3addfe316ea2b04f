#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "scatlab/core/errors.hpp"
#include "scatlab/core/vec.hpp"

namespace scatlab {

/// Wraps an angle into (−π, π].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(a, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

/// Point of S^{D−1}. Normalized on construction.
template <std::size_t D>
class UnitDirection {
 public:
  static UnitDirection from_vector(const Vec<D>& v) {
    const double n = norm(v);
    if (!(n > 0.0) || !std::isfinite(n))
      throw config_error("DomainError", "direction vector must be finite and nonzero");
    return UnitDirection(v / n);
  }

  static UnitDirection from_angle(double theta) requires(D == 2) {
    return UnitDirection(Vec<2>{{std::cos(theta), std::sin(theta)}});
  }

  const Vec<D>& vec() const { return v_; }
  double operator[](std::size_t i) const { return v_[i]; }

  double angle() const requires(D == 2) { return std::atan2(v_[1], v_[0]); }

  /// ω^⊥ = (ω₂, −ω₁). With this orientation the state exp(iηθ/h) sits over (θ, η).
  Vec<2> perp() const requires(D == 2) { return Vec<2>{{v_[1], -v_[0]}}; }

  UnitDirection operator-() const { return UnitDirection(-v_); }

  friend bool operator==(const UnitDirection&, const UnitDirection&) = default;

 private:
  explicit UnitDirection(const Vec<D>& v) : v_(v) {}
  Vec<D> v_;
};

/// (ω, η) ∈ T*S^{D−1}: incoming direction and impact vector η ⊥ ω.
template <std::size_t D>
struct CotangentPoint {
  UnitDirection<D> omega;
  Vec<D> eta;

  CotangentPoint(UnitDirection<D> w, const Vec<D>& e) : omega(w), eta(reject(e, w.vec())) {}

  /// Chart (θ, η) of T*S¹.
  static CotangentPoint from_chart(double theta, double eta_signed) requires(D == 2) {
    auto w = UnitDirection<2>::from_angle(theta);
    return CotangentPoint(w, eta_signed * w.perp());
  }

  double theta() const requires(D == 2) { return omega.angle(); }
  double eta_signed() const requires(D == 2) { return dot(eta, omega.perp()); }

  friend bool operator==(const CotangentPoint&, const CotangentPoint&) = default;
};

template <std::size_t D>
struct PhaseSpacePoint {
  Vec<D> x;
  Vec<D> xi;
};

/// angle(ω, ω′) + |η − η′|.
template <std::size_t D>
double cotangent_distance(const CotangentPoint<D>& a, const CotangentPoint<D>& b) {
  const double c = std::clamp(dot(a.omega.vec(), b.omega.vec()), -1.0, 1.0);
  // acos is ill-conditioned near 1; recover small angles from the chord length.
  const double chord = norm(a.omega.vec() - b.omega.vec());
  const double ang = c > 0.5 ? 2.0 * std::asin(std::min(1.0, 0.5 * chord)) : std::acos(c);
  return ang + norm(a.eta - b.eta);
}

}  // namespace scatlab
