#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "scatlab/core/errors.hpp"
#include "scatlab/quantum/eigenphases.hpp"
#include "scatlab/quantum/smatrix.hpp"

namespace scatlab {

/// p(z) = Σ_k a_k z^k with Σ a_k = 0; coefficients indexed k = −N..N.
struct TrigPoly {
  int degree = 0;
  std::vector<cplx> coefficients;  // size 2N + 1, entry k + N

  static TrigPoly power_minus_one(int k) {
    const int n = std::abs(k);
    TrigPoly p{n, std::vector<cplx>(2 * n + 1, cplx{})};
    p.coefficients[k + n] += 1.0;
    p.coefficients[n] -= 1.0;
    return p;
  }
};

/// Indicator of the closed arc φ₁ ≤ arg z ≤ φ₂, arguments in [0, 2π).
struct IndicatorArc {
  double phi1 = 0.0, phi2 = 0.0;
};

/// base(z)·χ(|z − 1|)·|log|z − 1||^{−α}, with χ a smooth cutoff equal to 1 on [0, 0.2]
/// and 0 on [0.5, ∞). The base is a function of the phase β ∈ (−π, π].
struct LogWeighted {
  std::string name;
  std::function<cplx(double)> base;
  double alpha = 3.0;
};

using TestFunction = std::variant<TrigPoly, IndicatorArc, LogWeighted>;

namespace detail {

inline double smooth_step(double t) {
  // C^∞ transition: 0 for t ≤ 0, 1 for t ≥ 1.
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

inline double log_cutoff(double dist) { return 1.0 - smooth_step((dist - 0.2) / 0.3); }

}  // namespace detail

inline void validate(const TestFunction& f) {
  if (const auto* p = std::get_if<TrigPoly>(&f)) {
    if (p->degree < 0 || static_cast<int>(p->coefficients.size()) != 2 * p->degree + 1)
      throw config_error("InvalidTestFunction", "trigonometric polynomial needs 2N + 1 coefficients");
    cplx s{};
    double mag = 0.0;
    for (const auto& c : p->coefficients) {
      s += c;
      mag += std::abs(c);
    }
    if (std::abs(s) > 1e-12 * std::max(mag, 1.0))
      throw config_error("FunctionNotVanishingAtOne", "trigonometric polynomial coefficients must sum to zero");
  } else if (const auto* a = std::get_if<IndicatorArc>(&f)) {
    if (!(0.0 < a->phi1 && a->phi1 < a->phi2 && a->phi2 < 2.0 * std::numbers::pi))
      throw config_error("BadArc", "arc must satisfy 0 < phi1 < phi2 < 2*pi");
  } else {
    const auto& w = std::get<LogWeighted>(f);
    if (!(w.alpha > 0.0)) throw config_error("InvalidTestFunction", "alpha must be positive");
    if (!w.base) throw config_error("InvalidTestFunction", "log-weighted function needs a base");
  }
}

/// f(e^{iβ}).
inline cplx evaluate(const TestFunction& f, double beta) {
  if (const auto* p = std::get_if<TrigPoly>(&f)) {
    // Σ a_k (z^k − 1): exact zero at z = 1 and no cancellation near it.
    cplx s{};
    for (int k = -p->degree; k <= p->degree; ++k) {
      if (k == 0) continue;
      const double t = k * beta;
      const cplx zk_minus_1{-2.0 * std::sin(0.5 * t) * std::sin(0.5 * t), std::sin(t)};
      s += p->coefficients[k + p->degree] * zk_minus_1;
    }
    return s;
  }
  if (const auto* a = std::get_if<IndicatorArc>(&f)) {
    const double b = beta < 0.0 ? beta + 2.0 * std::numbers::pi : beta;
    return (a->phi1 <= b && b <= a->phi2) ? 1.0 : 0.0;
  }
  const auto& w = std::get<LogWeighted>(f);
  const double dist = chord_from_one(beta);
  if (dist == 0.0) return 0.0;
  const double cut = detail::log_cutoff(dist);
  if (cut == 0.0) return 0.0;
  return w.base(beta) * cut * std::pow(std::abs(std::log(dist)), -w.alpha);
}

/// (2πh)^{d−1} Σ_n f(e^{iβ_n}).
inline cplx mu_pairing(const PhaseSpectrum& spec, const TestFunction& f, int dimension = 2) {
  validate(f);
  cplx s{};
  for (double b : spec.phases) s += evaluate(f, b);
  return std::pow(2.0 * std::numbers::pi * spec.h, dimension - 1) * s;
}

/// N_h(φ₁, φ₂) = #{n : φ₁ ≤ β_n mod 2π ≤ φ₂}.
inline long count_in_arc(const PhaseSpectrum& spec, double phi1, double phi2) {
  const TestFunction f = IndicatorArc{phi1, phi2};
  validate(f);
  long n = 0;
  for (double b : spec.phases) n += evaluate(f, b).real() != 0.0;
  return n;
}

/// Tr(S^k − I) = Σ_n (λ_n^k − 1). For diagonal S the k = 1 value is Σ (S_nn − 1) in index
/// order; otherwise it is accumulated from eigenphases and cross-checked against the direct
/// trace of the matrix power within 1e−6.
inline cplx trace_powers(const ScatteringMatrix& s, int k) {
  if (k == 0) throw config_error("InvalidPower", "trace power must be nonzero");
  if (k < 0) return std::conj(trace_powers(s, -k));
  if (s.is_diagonal()) {
    cplx t{};
    const auto& d = s.diagonal_entries();
    if (k == 1) {
      for (Eigen::Index i = 0; i < d.size(); ++i) t += d[i] - 1.0;
      return t;
    }
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double b = std::arg(d[i]);
      t += cplx{-2.0 * std::pow(std::sin(0.5 * k * b), 2), std::sin(k * b)};
    }
    return t;
  }
  const auto spec = eigenphases(s);
  cplx t{};
  for (double b : spec.phases) t += cplx{-2.0 * std::pow(std::sin(0.5 * k * b), 2), std::sin(k * b)};
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(s.size(), s.size());
  for (int i = 0; i < k; ++i) p = p * s.dense_entries();
  const cplx direct = p.trace() - static_cast<double>(s.size());
  if (std::abs(direct - t) > 1e-6 * std::max(1.0, std::abs(t)))
    throw numeric_error("TraceMismatch", "eigenphase trace disagrees with the direct matrix-power trace");
  return t;
}

/// N_{L,h} = #{n : |e^{iβ_n} − 1| ≥ e^{−L/h}}, compared in logs.
inline long count_above_threshold(const PhaseSpectrum& spec, double L) {
  if (!(L >= 1.0)) throw config_error("InvalidThreshold", "L must be at least 1");
  const double log_thr = -L / spec.h;
  if (log_thr < -700.0)
    throw numeric_error("ThresholdUnderflow", "e^{-L/h} is below double precision range; reduce L or raise h");
  long n = 0;
  for (double b : spec.phases) {
    const double c = chord_from_one(b);
    if (c > 0.0 && std::log(c) >= log_thr) ++n;
  }
  return n;
}

struct HolderNorm {
  double value = 0.0;
  int level = 0;
};

/// sup over the circle of |log|z − 1||^α |f(z)|. A uniform grid of base_points, then level j
/// adds a 64-point grid on ±[s·2^{−j}, s·2^{−j+1}] with s the base spacing; the value is accepted when two successive
/// levels agree within 1%, and rejected as NonConvergent if it grows for 5 successive levels.
inline HolderNorm holder_log_norm(const LogWeighted& f, int base_points = 4096, int max_level = 60) {
  validate(TestFunction{f});
  auto weighted = [&](double b) {
    const double dist = chord_from_one(b);
    if (dist == 0.0) return 0.0;
    return std::pow(std::abs(std::log(dist)), f.alpha) * std::abs(evaluate(TestFunction{f}, b));
  };
  double sup = 0.0;
  for (int i = 1; i < base_points; ++i) sup = std::max(sup, weighted(-std::numbers::pi + 2.0 * std::numbers::pi * i / base_points));
  double prev = sup;
  int growth = 0;
  for (int j = 1; j <= max_level; ++j) {
    const double spacing = 2.0 * std::numbers::pi / base_points;
    const double hi = spacing * std::ldexp(1.0, -j + 1), lo = spacing * std::ldexp(1.0, -j);
    for (int i = 0; i <= 64; ++i) {
      const double b = lo + (hi - lo) * i / 64.0;
      sup = std::max({sup, weighted(b), weighted(-b)});
    }
    if (j >= 2 && std::abs(sup - prev) <= 0.01 * std::max(sup, 1e-300)) return {sup, j};
    growth = sup > prev * (1.0 + 1e-12) ? growth + 1 : 0;
    if (growth >= 5) throw numeric_error("NonConvergent", "weighted sup keeps growing toward z = 1");
    prev = sup;
  }
  throw numeric_error("NonConvergent", "weighted sup did not stabilize");
}

/// Error decreasing along an h-grid ordered coarse to fine: the last error is at most half
/// the first and no consecutive step increases it by more than 10%.
inline bool decreasing_along_grid(const std::vector<double>& err) {
  if (err.size() < 2) return true;
  if (!(err.back() <= 0.5 * err.front())) return false;
  for (std::size_t i = 1; i < err.size(); ++i)
    if (err[i] > 1.1 * err[i - 1]) return false;
  return true;
}

}  // namespace scatlab
