#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "scatlab/core/errors.hpp"

namespace scatlab {

/// Real number stored as mantissa · e^{log_scale}, for values outside double range.
struct ScaledReal {
  double mantissa = 0.0;
  double log_scale = 0.0;

  double value() const {
    if (mantissa == 0.0) return 0.0;
    return mantissa * std::exp(log_scale);
  }
  /// log|value|.
  double log_abs() const { return std::log(std::abs(mantissa)) + log_scale; }
};

/// J, Y and their derivatives at one (m, x). The plain fields saturate to 0 / ±inf
/// outside double range; the scaled pairs share one scale per kind:
///   J = j_mant·e^{j_log}, J′ = jp_mant·e^{j_log}, and likewise for Y.
struct CylinderEval {
  int order = 0;
  double x = 0.0;
  double j = 0.0, y = 0.0, j_prime = 0.0, y_prime = 0.0;
  double j_mant = 0.0, jp_mant = 0.0, j_log = 0.0;
  double y_mant = 0.0, yp_mant = 0.0, y_log = 0.0;
  /// |J| below 1e−280: j and j_prime are returned as 0.
  bool j_underflow = false;

  ScaledReal j_scaled() const { return {j_mant, j_log}; }
  ScaledReal y_scaled() const { return {y_mant, y_log}; }
};

struct Bessel01 {
  double j0, j1, y0, y1;
};

namespace detail {

inline constexpr double kRescale = 1e200;
inline constexpr double kLogRescale = 460.51701859880913680;  // ln 1e200
inline constexpr int kAsymptoticFrom = 25;

/// Hankel's large-argument expansion for orders 0 and 1; full double accuracy for x ≥ 25.
inline Bessel01 bessel01_asymptotic(double x) {
  double out[4];
  for (int nu = 0; nu <= 1; ++nu) {
    const double mu = 4.0 * nu * nu;
    double p = 1.0, q = 0.0, term = 1.0, prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 200; ++k) {
      const double odd = 2.0 * k - 1.0;
      term *= (mu - odd * odd) / (k * 8.0 * x);
      if (std::abs(term) >= prev) break;  // asymptotic series: stop at the smallest term
      prev = std::abs(term);
      // a_k/x^k enters Q for odd k, P for even k, with alternating signs.
      if (k % 2 == 1) q += ((k / 2) % 2 == 0 ? term : -term);
      else p += ((k / 2) % 2 == 0 ? term : -term);
      if (std::abs(term) < 1e-17 * std::abs(p)) break;
    }
    // χ = x − (ν/2 + 1/4)π; cos χ, sin χ via exact reduction of x.
    const double c = std::cos(x), s = std::sin(x);
    const double r = std::numbers::sqrt2 / 2.0;
    double cc, ss;
    if (nu == 0) {
      cc = r * (c + s);
      ss = r * (s - c);
    } else {
      cc = r * (s - c);
      ss = -r * (c + s);
    }
    const double amp = std::sqrt(2.0 / (std::numbers::pi * x));
    out[nu] = amp * (p * cc - q * ss);
    out[2 + nu] = amp * (p * ss + q * cc);
  }
  return {out[0], out[1], out[2], out[3]};
}

/// Miller backward recurrence. Returns J_m and J_{m+1} with a common log scale, and
/// (for x below the asymptotic threshold) Y₀, Y₁ from the Neumann series accumulated
/// over the same normalized sequence.
struct MillerResult {
  double jm, jm1, log_scale;
  double y0, y1;
};

inline MillerResult miller(int m, double x, bool want_y) {
  const double big = std::max<double>(m, x);
  int n0 = static_cast<int>(big + 12.0 * std::cbrt(big) + 40.0);
  if (n0 % 2) ++n0;
  // Backward recurrence J_{n−1} = (2n/x) J_n − J_{n+1}, seeded with (J_{N+1}, J_N) = (0, tiny).
  double jp1 = 0.0, jn = 1e-300;
  double log_scale = 0.0;
  double norm = 0.0;    // J₀ + 2 Σ J_{2k}
  double sy0 = 0.0;     // Σ_{k≥1} (−1)^k J_{2k} / k
  double sy1 = 0.0;     // Σ_{k≥1} (−1)^k (2k+1)/(k(k+1)) J_{2k+1}
  double jm = 0.0, jm1 = 0.0;
  double jm_scale = 0.0;
  auto rescale = [&](double f) {
    jp1 *= f;
    jn *= f;
    norm *= f;
    sy0 *= f;
    sy1 *= f;
  };
  for (int n = n0; n >= 0; --n) {
    // jn holds J_n (unnormalized), jp1 holds J_{n+1}.
    if (n == m) {
      jm = jn;
      jm1 = jp1;
      jm_scale = log_scale;
    }
    if (n % 2 == 0) {
      norm += (n == 0 ? 1.0 : 2.0) * jn;
      if (want_y && n > 0) {
        const int k = n / 2;
        sy0 += (k % 2 == 0 ? 1.0 : -1.0) * jn / k;
      }
    } else if (want_y && n >= 3) {
      const int k = (n - 1) / 2;
      sy1 += (k % 2 == 0 ? 1.0 : -1.0) * (2.0 * k + 1.0) / (k * (k + 1.0)) * jn;
    }
    if (n == 0) break;
    const double jnm1 = (2.0 * n / x) * jn - jp1;
    jp1 = jn;
    jn = jnm1;
    if (std::abs(jn) > kRescale) {
      rescale(1.0 / kRescale);
      log_scale -= kLogRescale;
    }
  }
  // At exit jn, jp1 hold J₀, J₁. A value stored at scale s relates to one stored at the
  // final scale L by e^{L − s}, so J_m = (jm / normalizer)·e^{L − s_m}. The quotient is
  // formed in logs since jm and the normalizer can sit hundreds of decades apart.
  double normalizer = norm;
  if (x >= kAsymptoticFrom) {
    // Normalize against the asymptotic J₀ or J₁, whichever is larger: more accurate
    // than the sum rule when many terms of both signs contribute.
    const auto a = bessel01_asymptotic(x);
    normalizer = std::abs(a.j0) > std::abs(a.j1) ? jn / a.j0 : jp1 / a.j1;
  }
  MillerResult r{};
  const double big_m = std::max(std::abs(jm), std::abs(jm1));
  const double sgn = normalizer < 0.0 ? -1.0 : 1.0;
  r.jm = sgn * jm / big_m;
  r.jm1 = sgn * jm1 / big_m;
  r.log_scale = (log_scale - jm_scale) + std::log(big_m) - std::log(std::abs(normalizer));
  if (want_y) {
    const double j0 = jn / norm, j1 = jp1 / norm;
    const double lg = std::log(0.5 * x) + std::numbers::egamma;
    r.y0 = (2.0 / std::numbers::pi) * lg * j0 - (4.0 / std::numbers::pi) * (sy0 / norm);
    r.y1 = (2.0 / std::numbers::pi) * (lg - 1.0) * j1 - (2.0 / std::numbers::pi) * j0 / x -
           (2.0 / std::numbers::pi) * (sy1 / norm);
  }
  return r;
}

}  // namespace detail

/// J₀, J₁, Y₀, Y₁ at x > 0.
inline Bessel01 bessel01(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw config_error("DomainError", "Bessel argument must be positive");
  if (x >= detail::kAsymptoticFrom) return detail::bessel01_asymptotic(x);
  const auto r = detail::miller(0, x, true);
  return {r.jm * std::exp(r.log_scale), r.jm1 * std::exp(r.log_scale), r.y0, r.y1};
}

/// J_m, Y_m and derivatives for integer m ≥ 0 and x > 0.
inline CylinderEval bessel_pair(int m, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw config_error("DomainError", "Bessel argument must be positive");
  if (m < 0) throw config_error("DomainError", "Bessel order must be nonnegative");
  CylinderEval e;
  e.order = m;
  e.x = x;

  // J_m, J_{m+1} on a common scale.
  const auto mr = detail::miller(m, x, x < detail::kAsymptoticFrom);
  e.j_mant = mr.jm;
  e.jp_mant = (m / x) * mr.jm - mr.jm1;
  e.j_log = mr.log_scale;

  // Y₀, Y₁ then forward recurrence Y_{n+1} = (2n/x) Y_n − Y_{n−1}, which is stable upward.
  double y0, y1;
  if (x < detail::kAsymptoticFrom) {
    y0 = mr.y0;
    y1 = mr.y1;
  } else {
    const auto a = detail::bessel01_asymptotic(x);
    y0 = a.y0;
    y1 = a.y1;
  }
  double ylog = 0.0;
  double ym1 = y0, yn = y1;  // Y_{n−1}, Y_n at n = 1
  if (m == 0) {
    e.y_mant = y0;
    e.yp_mant = -y1;
  } else {
    for (int n = 1; n < m; ++n) {
      const double next = (2.0 * n / x) * yn - ym1;
      ym1 = yn;
      yn = next;
      if (std::abs(yn) > detail::kRescale) {
        yn /= detail::kRescale;
        ym1 /= detail::kRescale;
        ylog += detail::kLogRescale;
      }
    }
    e.y_mant = yn;
    e.yp_mant = ym1 - (m / x) * yn;
  }
  e.y_log = ylog;

  auto expand = [](double mant, double lg) {
    if (mant == 0.0) return 0.0;
    const double l = std::log(std::abs(mant)) + lg;
    if (l > 709.0) return std::copysign(std::numeric_limits<double>::infinity(), mant);
    if (l < -745.0) return 0.0;
    return mant * std::exp(lg);
  };
  const double jl = e.j_mant != 0.0 ? std::log(std::abs(e.j_mant)) + e.j_log : -std::numeric_limits<double>::infinity();
  e.j_underflow = jl < std::log(1e-280);
  if (e.j_underflow) {
    e.j = 0.0;
    e.j_prime = 0.0;
  } else {
    e.j = expand(e.j_mant, e.j_log);
    e.j_prime = expand(e.jp_mant, e.j_log);
  }
  e.y = expand(e.y_mant, e.y_log);
  e.y_prime = expand(e.yp_mant, e.y_log);
  return e;
}

/// H_m^{(1)} = J_m + iY_m and its derivative.
struct HankelEval {
  std::complex<double> value;
  std::complex<double> derivative;
};

inline HankelEval hankel1(int m, double x) {
  const auto e = bessel_pair(m, x);
  return {{e.j, e.y}, {e.j_prime, e.y_prime}};
}

}  // namespace scatlab
