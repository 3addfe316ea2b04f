#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "scatlab/core/errors.hpp"
#include "scatlab/core/parallel.hpp"
#include "scatlab/core/potential.hpp"
#include "scatlab/io/digest.hpp"
#include "scatlab/ode/dormand_prince.hpp"
#include "scatlab/quantum/smatrix.hpp"
#include "scatlab/special/bessel.hpp"

namespace scatlab {

struct RadialSolverSettings {
  double rtol = 1e-11;
  double atol = 1e-300;
  /// Inner starting radius, where u ∼ r^{|m|+1/2}.
  double r_start = 1e-6;
  /// Matching radius is a + match_margin (V ≡ 0 there).
  double match_margin = 0.1;
};

namespace detail {

/// Channels whose whole interval [0, r_match] lies under the centrifugal barrier. There the
/// shift is far below the relative precision of the log-derivative z itself, so the
/// difference w = z − z₀ from the free log-derivative z₀ = r(√r J)′/(√r J) is integrated
/// directly, as ℓ = ln|w|:
///   z₀′ = r²Q₀ − z₀² + z₀,   w′ = r²k²V − w(2z₀ + w − 1)   (′ = d/d ln r),
/// and then tan δ = wJ²/(wJY − 2/π) at r_match. The single-signed radial profile keeps w
/// of one sign.
inline double barrier_phase_shift(const PotentialSpec<2>& p, double k, double l, double r0, double rm,
                                  const RadialSolverSettings& cfg) {
  const double k2 = k * k;
  const double cent = l * l - 0.25;
  const double v0 = p.radial_value(0.0);
  const double sgn = v0 > 0.0 ? 1.0 : -1.0;
  const double w0 = v0 * k2 * r0 * r0 / (2.0 * (l + 1.0));
  auto rhs = [&](double s, const std::array<double, 2>& y, std::array<double, 2>& dy) {
    const double r = std::exp(s);
    const double v = p.radial_value(r);
    const double w = sgn * std::exp(y[1]);
    dy[0] = r * r * (-k2) + cent - y[0] * y[0] + y[0];
    dy[1] = (v != 0.0 ? r * r * k2 * std::abs(v) * std::exp(-y[1]) : 0.0) - (2.0 * y[0] + w - 1.0);
  };
  ode::StepControl ctl;
  ctl.initial_step = 1e-3;
  ctl.max_step = 0.05;
  ctl.max_steps = 2000000;
  const std::array<double, 2> y0{l + 0.5 - k2 * r0 * r0 / (2.0 * (l + 1.0)), std::log(std::abs(w0))};
  const auto res = ode::integrate<2>(rhs, std::log(r0), y0, std::log(rm), ode::Tolerance{cfg.rtol, 1e-12}, ctl,
                                     [](double, std::array<double, 2>&) { return true; });
  const double z_free = res.y[0], lw = res.y[1];

  const auto bj = bessel_pair(static_cast<int>(l), k * rm);
  const double z_bessel = 0.5 + k * rm * bj.jp_mant / bj.j_mant;
  if (!std::isfinite(z_free) || !std::isfinite(lw) || std::abs(z_free - z_bessel) > 1e-6 * std::abs(z_bessel))
    throw numeric_error("MatchFailure", "free log-derivative drifted from the Bessel value under the barrier");
  const double log_jy = std::log(std::abs(bj.j_mant * bj.y_mant)) + bj.j_log + bj.y_log;
  const double jy_sign = (bj.j_mant > 0.0) == (bj.y_mant > 0.0) ? 1.0 : -1.0;
  const double wjy = lw + log_jy > -700.0 ? sgn * jy_sign * std::exp(lw + log_jy) : 0.0;
  const double den = wjy - 2.0 / std::numbers::pi;
  if (den == 0.0) throw numeric_error("MatchFailure", "singular barrier matching");
  const double lt = lw + 2.0 * (std::log(std::abs(bj.j_mant)) + bj.j_log) - std::log(std::abs(den));
  const double sign = sgn * (den > 0.0 ? 1.0 : -1.0);
  if (lt < -745.0) return 0.0;
  if (lt < -30.0) return sign * std::exp(lt);
  return std::atan(sign * std::exp(lt));
}

}  // namespace detail

/// δ_m for a radial potential: principal value in (−π/2, π/2].
///
/// Solves u″ = Q u, Q = (V − 1)/h² + (m² − ¼)/r², for the regular solution. In the
/// classically forbidden zone near the origin the log-derivative z = r u′/u is carried
/// by its Riccati equation dz/d(ln r) = r²Q − z² + z (stable there); once r²Q < 1 the
/// linear system for (u, u′) takes over. At the matching radius
///   tan δ = W(u, √r J) / W(u, √r Y)
/// with u ∼ √r (J cos δ − Y sin δ) outside the support, so S_mm = e^{2iδ_m}.
inline double partial_wave_phase_shift(const PotentialSpec<2>& p, double h, int m,
                                       const RadialSolverSettings& cfg = {}) {
  if (!p.is_radial()) throw config_error("NotRadial", "partial-wave solver requires a radial potential");
  if (!(h > 0.0)) throw config_error("InvalidH", "h must be positive");
  if (p.is_zero()) return 0.0;
  const double k = 1.0 / h;
  const double k2 = k * k;
  const double l = std::abs(static_cast<double>(m));
  const double a = p.support_radius();
  const double rm = a + cfg.match_margin;
  const double cent = l * l - 0.25;
  auto Q = [&](double r) { return (p.radial_value(r) - 1.0) * k2 + cent / (r * r); };

  const double r0 = std::min(cfg.r_start, 0.5 * rm);
  const double v_origin = p.radial_value(0.0);
  const double well = std::max(0.0, -v_origin);
  if (l * l - 1.25 >= (1.0 + well) * k2 * rm * rm) return detail::barrier_phase_shift(p, k, l, r0, rm, cfg);
  const double q2 = (1.0 - v_origin) * k2;
  double z = l + 0.5 - q2 * r0 * r0 / (2.0 * (l + 1.0));
  double r = r0;

  // Forbidden zone: Riccati in s = ln r.
  if (r0 * r0 * Q(r0) >= 1.0) {
    auto rhs = [&](double s, const std::array<double, 1>& y, std::array<double, 1>& dy) {
      const double rr = std::exp(s);
      dy[0] = rr * rr * Q(rr) - y[0] * y[0] + y[0];
    };
    bool switched = false;
    ode::StepControl ctl;
    ctl.initial_step = 1e-3;
    ctl.max_step = 0.05;
    const auto res = ode::integrate<1>(rhs, std::log(r0), {z}, std::log(rm), ode::Tolerance{cfg.rtol, 1e-12}, ctl,
                                       [&](double s, std::array<double, 1>&) {
                                         const double rr = std::exp(s);
                                         if (rr * rr * Q(rr) < 1.0) {
                                           switched = true;
                                           return false;
                                         }
                                         return true;
                                       });
    z = res.y[0];
    r = switched ? std::exp(res.t) : rm;
  }

  double u = 1.0, up = z / r;
  if (r < rm) {
    auto rhs = [&](double rr, const std::array<double, 2>& y, std::array<double, 2>& dy) {
      dy[0] = y[1];
      dy[1] = Q(rr) * y[0];
    };
    ode::StepControl ctl;
    ctl.initial_step = std::min(1e-3 * r, 1e-3);
    ctl.max_step = std::min(a / 16.0, 2.0 * std::numbers::pi * h / 8.0);
    const auto res = ode::integrate<2>(rhs, r, {u, up}, rm, ode::Tolerance{cfg.rtol, cfg.atol}, ctl,
                                       [](double, std::array<double, 2>& y) {
                                         const double mag = std::abs(y[0]) + std::abs(y[1]);
                                         if (mag > 1e100 || (mag < 1e-100 && mag > 0.0)) {
                                           y[0] /= mag;
                                           y[1] /= mag;
                                         }
                                         return true;
                                       });
    u = res.y[0];
    up = res.y[1];
  }

  const auto bj = bessel_pair(static_cast<int>(l), k * rm);
  const double nj = u * (bj.j_mant / (2.0 * rm) + k * bj.jp_mant) - up * bj.j_mant;
  const double ny = u * (bj.y_mant / (2.0 * rm) + k * bj.yp_mant) - up * bj.y_mant;
  const double scale_j = std::abs(u) * (std::abs(bj.j_mant) / rm + k * std::abs(bj.jp_mant)) + std::abs(up * bj.j_mant);
  const double scale_y = std::abs(u) * (std::abs(bj.y_mant) / rm + k * std::abs(bj.yp_mant)) + std::abs(up * bj.y_mant);
  if (!std::isfinite(nj) || !std::isfinite(ny) ||
      (std::abs(nj) <= 1e-14 * scale_j && std::abs(ny) <= 1e-14 * scale_y))
    throw numeric_error("MatchFailure", "singular matching determinant");
  if (ny == 0.0) return std::numbers::pi / 2.0;
  if (nj == 0.0) return 0.0;
  const double sign = (nj > 0.0) == (ny > 0.0) ? 1.0 : -1.0;
  const double lt = (bj.j_log - bj.y_log) + std::log(std::abs(nj)) - std::log(std::abs(ny));
  double delta;
  if (lt < -30.0) delta = sign * std::exp(lt);  // atan(t) = t to double precision
  else if (lt > 30.0) delta = sign * (std::numbers::pi / 2.0) - sign * std::exp(-lt);
  else delta = std::atan(sign * std::exp(lt));
  if (delta <= -std::numbers::pi / 2.0) delta += std::numbers::pi;
  return delta;
}

/// δ_m for m = 0..M (δ_{−m} = δ_m), plus a branch-unwrapped copy made continuous in m
/// starting from m = M. The unwrapped values are diagnostics only.
struct RadialPhaseTable {
  double h = 0.0;
  int M = 0;
  std::vector<double> delta;
  std::vector<double> unwrapped;
};

inline RadialPhaseTable radial_phase_table(const PotentialSpec<2>& p, double h, int M,
                                           const RadialSolverSettings& cfg = {}, unsigned workers = 1) {
  RadialPhaseTable t;
  t.h = h;
  t.M = M;
  t.delta.assign(static_cast<std::size_t>(M) + 1, 0.0);
  parallel_for(t.delta.size(), workers, [&](std::size_t i) { t.delta[i] = partial_wave_phase_shift(p, h, static_cast<int>(i), cfg); }, 1);
  t.unwrapped = t.delta;
  for (int l = M - 1; l >= 0; --l) {
    const double n = std::round((t.unwrapped[l + 1] - t.delta[l]) / std::numbers::pi);
    t.unwrapped[l] = t.delta[l] + n * std::numbers::pi;
  }
  return t;
}

inline std::string potential_digest(const PotentialSpec<2>& p) { return sha256_hex(p.canonical()); }

inline ScatteringMatrix radial_smatrix_from_table(const PotentialSpec<2>& p, const RadialPhaseTable& t) {
  Eigen::VectorXcd d(2 * t.M + 1);
  for (int m = -t.M; m <= t.M; ++m) {
    const double dl = t.delta[static_cast<std::size_t>(std::abs(m))];
    d[m + t.M] = p.is_zero() ? cplx{1.0, 0.0} : std::polar(1.0, 2.0 * dl);
  }
  return ScatteringMatrix::diagonal(t.h, t.M, std::move(d), Backend::Radial, potential_digest(p));
}

/// Diagonal S with entries e^{2iδ_m}, m ∈ [−M, M].
inline ScatteringMatrix assemble_radial_smatrix(const PotentialSpec<2>& p, double h, const TruncationPolicy& policy,
                                                const RadialSolverSettings& cfg = {}, unsigned workers = 1) {
  if (!p.is_radial()) throw config_error("NotRadial", "radial backend requires a radial potential");
  const int M = policy.modes(p.support_radius(), h);
  return radial_smatrix_from_table(p, radial_phase_table(p, h, M, cfg, workers));
}

}  // namespace scatlab
