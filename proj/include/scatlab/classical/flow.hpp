#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "scatlab/core/errors.hpp"
#include "scatlab/core/phase_space.hpp"
#include "scatlab/core/potential.hpp"
#include "scatlab/ode/dormand_prince.hpp"

namespace scatlab {

struct FlowSettings {
  double rtol = 1e-10;
  double atol = 1e-12;
  /// Largest integrator step; 0 selects min bump radius / 8.
  double max_step = 0.0;
  /// Escape radius; 0 selects R₀ + 2.
  double escape_radius = 0.0;
  double max_time = 200.0;
  double energy_tolerance = 1e-8;

  double resolved_escape_radius(double r0) const { return escape_radius > 0.0 ? escape_radius : r0 + 2.0; }
  double resolved_max_step(double min_radius) const {
    if (max_step > 0.0) return max_step;
    return std::isfinite(min_radius) ? min_radius / 8.0 : 1.0;
  }
};

template <std::size_t D>
struct TrajectorySample {
  double t;
  PhaseSpacePoint<D> rho;
  double energy;
};

template <std::size_t D>
struct FlowResult {
  PhaseSpacePoint<D> final{};
  double elapsed = 0.0;
  bool escaped = false;
  double max_energy_drift = 0.0;
  /// |x∧ξ − x₀∧ξ₀|, d = 2 only (0 otherwise).
  double max_angular_momentum_drift = 0.0;
  bool energy_flagged = false;
  std::size_t steps = 0;
};

namespace detail {

/// Smallest t > 0 with |x + 2tξ| = r, or −1 if the straight line never reaches it.
template <std::size_t D>
double free_flight_hit(const Vec<D>& x, const Vec<D>& xi, double r, bool inward) {
  const double a = 4.0 * norm2(xi);
  const double b = 4.0 * dot(x, xi);
  const double c = norm2(x) - r * r;
  if (a == 0.0) return -1.0;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return -1.0;
  const double sq = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double qq = -0.5 * (b + std::copysign(sq, b));
  double t1 = qq / a, t2 = qq != 0.0 ? c / qq : t1;
  if (t1 > t2) std::swap(t1, t2);
  if (inward) return t1 > 0.0 ? t1 : -1.0;
  return t2 > 0.0 ? t2 : -1.0;
}

}  // namespace detail

/// Integrates ẋ = 2ξ, ξ̇ = −∇V until the trajectory leaves B(0, R_esc) outward or
/// the elapsed time exceeds T_max. Free flight outside B(0, R₀) is straight and is
/// propagated in closed form; only the passage through the support is integrated.
template <std::size_t D>
FlowResult<D> hamiltonian_flow(const PhaseSpacePoint<D>& rho0, const PotentialSpec<D>& p, const FlowSettings& s,
                               std::vector<TrajectorySample<D>>* trajectory = nullptr) {
  const double r0 = p.support_radius();
  const double r_esc = s.resolved_escape_radius(r0);
  const double e0 = hamiltonian(p, rho0);
  double l0 = 0.0;
  if constexpr (D == 2) l0 = wedge(rho0.x, rho0.xi);

  FlowResult<D> out;
  out.final = rho0;
  auto record = [&](double t, const PhaseSpacePoint<D>& r) {
    const double e = hamiltonian(p, r);
    out.max_energy_drift = std::max(out.max_energy_drift, std::abs(e - e0));
    if constexpr (D == 2) out.max_angular_momentum_drift = std::max(out.max_angular_momentum_drift, std::abs(wedge(r.x, r.xi) - l0));
    if (trajectory) trajectory->push_back({t, r, e});
  };
  record(0.0, rho0);

  auto escape_from = [&](double t, PhaseSpacePoint<D> r) {
    const double te = detail::free_flight_hit(r.x, r.xi, r_esc, false);
    if (te > 0.0 && norm(r.x) < r_esc) {
      r.x += (2.0 * te) * r.xi;
      t += te;
    }
    if (t > s.max_time) {
      out.escaped = false;
      out.elapsed = s.max_time;
      return;
    }
    out.final = r;
    out.elapsed = t;
    out.escaped = true;
    record(t, r);
  };

  double t = 0.0;
  PhaseSpacePoint<D> r = rho0;
  if (p.is_zero() || norm(r.x) >= r0) {
    const double th = p.is_zero() ? -1.0 : detail::free_flight_hit(r.x, r.xi, r0, true);
    if (th < 0.0 || dot(r.x, r.xi) >= 0.0) {
      escape_from(t, r);
      out.energy_flagged = out.max_energy_drift > s.energy_tolerance;
      return out;
    }
    r.x += (2.0 * th) * r.xi;
    t += th;
    record(t, r);
  }

  using State = std::array<double, 2 * D>;
  State y;
  for (std::size_t i = 0; i < D; ++i) {
    y[i] = r.x[i];
    y[D + i] = r.xi[i];
  }
  auto rhs = [&p](double, const State& st, State& dy) {
    Vec<D> x;
    for (std::size_t i = 0; i < D; ++i) x[i] = st[i];
    const auto v = p.evaluate(x);
    for (std::size_t i = 0; i < D; ++i) {
      dy[i] = 2.0 * st[D + i];
      dy[D + i] = -v.gradient[i];
    }
  };
  auto unpack = [](const State& st) {
    PhaseSpacePoint<D> q;
    for (std::size_t i = 0; i < D; ++i) {
      q.x[i] = st[i];
      q.xi[i] = st[D + i];
    }
    return q;
  };
  bool left = false;
  auto observer = [&](double tt, State& st) {
    const auto q = unpack(st);
    record(tt, q);
    if (norm2(q.x) >= r0 * r0 && dot(q.x, q.xi) > 0.0) {
      left = true;
      return false;
    }
    return true;
  };
  ode::StepControl ctl;
  ctl.max_step = s.resolved_max_step(p.min_feature_radius());
  ctl.initial_step = std::min(ctl.max_step, 1e-2);
  const auto res = ode::integrate<2 * D>(rhs, t, y, s.max_time, ode::Tolerance{s.rtol, s.atol}, ctl, observer);
  out.steps = res.accepted;
  if (left) {
    escape_from(res.t, unpack(res.y));
  } else {
    out.final = unpack(res.y);
    out.elapsed = res.t;
    out.escaped = false;
  }
  out.energy_flagged = out.max_energy_drift > s.energy_tolerance;
  return out;
}

}  // namespace scatlab
