#pragma once

#include <cmath>
#include <cstdlib>
#include <variant>

#include "scatlab/classical/flow.hpp"
#include "scatlab/core/phase_space.hpp"
#include "scatlab/core/potential.hpp"

namespace scatlab {

template <std::size_t D>
struct Escaped {
  CotangentPoint<D> out;
  double time_delay;
  double flight_time;
};

struct Trapped {
  double elapsed;
};

struct NonInteracting {};

template <std::size_t D>
using ScatteringOutcome = std::variant<Escaped<D>, Trapped, NonInteracting>;

/// Distance from a bump centre to the straight line {tω + η}.
template <std::size_t D>
double line_distance(const CotangentPoint<D>& q, const Vec<D>& c) {
  return norm(reject(c - q.eta, q.omega.vec()));
}

/// The incoming line meets the interior of some bump ball (q ∈ I).
template <std::size_t D>
bool line_meets_support(const CotangentPoint<D>& q, const PotentialSpec<D>& p) {
  for (const auto& b : p.bumps())
    if (line_distance(q, b.center) < b.radius) return true;
  return false;
}

/// Signed distance from the line to ∂I: min over bumps of |dᵢ − aᵢ|.
template <std::size_t D>
double distance_to_interaction_boundary(const CotangentPoint<D>& q, const PotentialSpec<D>& p) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : p.bumps()) m = std::min(m, std::abs(line_distance(q, b.center) - b.radius));
  return m;
}

/// Classical scattering map κ(ω, η) = (ω′, η′).
///
/// Lines that miss every bump are returned as NonInteracting without integration
/// (κ is the identity there). Otherwise the trajectory is launched at t = 0 from
/// x = −Tω + η and the outgoing asymptote x(t) ≈ η′ + 2(t − T/2 − τ)ω′ is read off
/// at escape; τ is the time delay in the ẋ = 2ξ parametrization.
template <std::size_t D>
ScatteringOutcome<D> scattering_map(const CotangentPoint<D>& q, const PotentialSpec<D>& p, const FlowSettings& s,
                                    FlowResult<D>* diagnostics = nullptr) {
  if (!line_meets_support(q, p)) return NonInteracting{};
  const double T = p.support_radius() + norm(q.eta) + 1.0;
  const auto rho0 = embed_initial_condition(q, T, p);
  const auto fr = hamiltonian_flow(rho0, p, s);
  if (diagnostics) *diagnostics = fr;
  if (!fr.escaped) return Trapped{fr.elapsed};
  const Vec<D>& x = fr.final.x;
  const auto w = UnitDirection<D>::from_vector(fr.final.xi);
  const double along = dot(x, w.vec());
  CotangentPoint<D> out(w, x);
  const double tau = fr.elapsed - 0.5 * T - along / (2.0 * norm(fr.final.xi));
  return Escaped<D>{out, tau, fr.elapsed};
}

/// Time-reversal conjugation C(ω, η) = (−ω, η); κ⁻¹ = C κ C.
template <std::size_t D>
CotangentPoint<D> time_reverse(const CotangentPoint<D>& q) {
  return CotangentPoint<D>(-q.omega, q.eta);
}

template <std::size_t D>
struct Completed {
  CotangentPoint<D> point;
};

struct Diverted {
  int failed_at_step;
};

template <std::size_t D>
using MapIterationResult = std::variant<Completed<D>, Diverted>;

/// κᵏ for k ≠ 0; negative k composes κ⁻¹. Diverted reports the first pass (1-based)
/// that ended Trapped, i.e. numerical membership of q in the bad set.
template <std::size_t D>
MapIterationResult<D> iterate_scattering_map(const CotangentPoint<D>& q, int k, const PotentialSpec<D>& p,
                                             const FlowSettings& s) {
  if (k == 0) throw config_error("InvalidIterate", "iteration count must be nonzero");
  const bool inverse = k < 0;
  CotangentPoint<D> cur = inverse ? time_reverse(q) : q;
  for (int i = 1; i <= std::abs(k); ++i) {
    const auto o = scattering_map(cur, p, s);
    if (std::holds_alternative<Trapped>(o)) return Diverted{i};
    if (const auto* e = std::get_if<Escaped<D>>(&o)) cur = e->out;
  }
  return Completed<D>{inverse ? time_reverse(cur) : cur};
}

}  // namespace scatlab
