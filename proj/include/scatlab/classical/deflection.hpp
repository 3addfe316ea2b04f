#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "scatlab/core/errors.hpp"
#include "scatlab/core/potential.hpp"

namespace scatlab {

/// Rotation angle Θ(η) of the outgoing direction for a radial potential at energy 1,
/// by quadrature of the central-field orbit equation:
///   χ(b) = π − 2[arcsin(b/a) + ∫_{r_min}^{a} b / (r² √(1 − V − b²/r²)) dr],  Θ(η) = −sgn(η) χ(|η|).
/// The sign matches the chart (θ, η) with η = eta·ω^⊥, so θ′ = θ + Θ(η).
inline double deflection_angle_radial(const PotentialSpec<2>& p, double eta) {
  if (!p.is_radial()) throw config_error("NotRadial", "deflection oracle requires a radial potential");
  if (p.is_zero()) return 0.0;
  const double a = p.support_radius();
  const double b = std::abs(eta);
  if (b >= a) return 0.0;
  auto V = [&](double r) { return p.radial_value(r); };
  if (b == 0.0) {
    // Head-on: straight through if the barrier is below the energy, else reflected.
    double vmax = 0.0;
    for (int i = 0; i <= 2000; ++i) vmax = std::max(vmax, V(a * i / 2000.0));
    return vmax < 1.0 ? 0.0 : std::numbers::pi;
  }
  // f(r) = r²(1 − V(r)); the outer turning point is the largest root of f = b² below a.
  auto f = [&](double r) { return r * r * (1.0 - V(r)) - b * b; };
  const int n = 4000;
  double hi = a, lo = -1.0;
  for (int i = n - 1; i >= 0; --i) {
    const double r = a * i / n;
    if (f(r) <= 0.0) {
      lo = r;
      break;
    }
    hi = r;
  }
  if (lo < 0.0) throw numeric_error("CapturedOrbit", "no outer turning point");
  double rmin = lo;
  if (f(lo) < 0.0) {
    std::uintmax_t it = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(52);
    const auto br = boost::math::tools::toms748_solve(f, lo, hi, f(lo), f(hi), tol, it);
    rmin = 0.5 * (br.first + br.second);
  }
  // F(r) = r²V(r); with r = r_min + t², f(r) − f(r_min) = t²·H(t) where
  //   H(t) = 2r_min + t² − (F(r) − F(r_min))/t²,
  // and the difference quotient is replaced by F′ at the midpoint when t is tiny.
  auto F = [&](double r) { return r * r * V(r); };
  auto dF = [&](double r) { return 2.0 * r * V(r) + r * r * p.evaluate(Vec<2>{{r, 0.0}}).gradient[0]; };
  const double Fmin = F(rmin);
  auto H = [&](double t) {
    const double t2 = t * t;
    const double q = t2 < 1e-6 ? dF(rmin + 0.5 * t2) : (F(rmin + t2) - Fmin) / t2;
    return 2.0 * rmin + t2 - q;
  };
  if (!(H(0.0) > 1e-12)) throw numeric_error("CapturedOrbit", "turning point is degenerate (orbiting)");

  // r = r_min + t² removes the inverse-square-root endpoint singularity.
  const double tmax = std::sqrt(a - rmin);
  auto integrand = [&](double t) { return 2.0 * b / ((rmin + t * t) * std::sqrt(H(t))); };
  const double I = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, tmax, 15, 1e-14);
  const double chi = std::numbers::pi - 2.0 * (std::asin(b / a) + I);
  return eta > 0 ? -chi : chi;
}

}  // namespace scatlab
