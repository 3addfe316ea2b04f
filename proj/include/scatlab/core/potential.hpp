#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "scatlab/core/errors.hpp"
#include "scatlab/core/phase_space.hpp"
#include "scatlab/core/vec.hpp"

namespace scatlab {

/// Standard C^∞ bump: exp(1 − 1/(1 − s²)) for s < 1, 0 otherwise. Equals 1 at s = 0.
inline double bump_profile(double s2) {
  if (s2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s2));
}

template <std::size_t D>
struct Bump {
  Vec<D> center{};
  double amplitude = 0.0;
  double radius = 1.0;

  friend bool operator==(const Bump&, const Bump&) = default;
};

template <std::size_t D>
struct PotentialSample {
  double value = 0.0;
  Vec<D> gradient{};
};

/// Smooth compactly supported potential built from bump profiles.
///
/// X₀ is the union of the closed bump balls, so supp V = X₀ and
/// V ≡ 0 outside B(0, R₀) with R₀ = max |cᵢ| + aᵢ.
template <std::size_t D>
class PotentialSpec {
 public:
  enum class Kind { Zero, RadialBump, BumpSum };

  static PotentialSpec zero() { return PotentialSpec(Kind::Zero, {}); }

  static PotentialSpec radial_bump(double amplitude, double radius) {
    check_bump(amplitude, radius);
    return PotentialSpec(Kind::RadialBump, {Bump<D>{Vec<D>{}, amplitude, radius}});
  }

  static PotentialSpec bump_sum(std::vector<Bump<D>> bumps) {
    for (const auto& b : bumps) check_bump(b.amplitude, b.radius);
    if (bumps.empty()) return zero();
    return PotentialSpec(Kind::BumpSum, std::move(bumps));
  }

  Kind kind() const { return kind_; }
  bool is_zero() const { return kind_ == Kind::Zero; }

  /// Rotationally symmetric about the origin.
  bool is_radial() const {
    if (kind_ == Kind::Zero || kind_ == Kind::RadialBump) return true;
    return bumps_.size() == 1 && bumps_.front().center == Vec<D>{};
  }

  const std::vector<Bump<D>>& bumps() const { return bumps_; }

  double support_radius() const { return support_radius_; }

  /// Smallest bump radius; the length scale of the profile's features.
  double min_feature_radius() const {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& b : bumps_) r = std::min(r, b.radius);
    return r;
  }

  PotentialSample<D> evaluate(const Vec<D>& x) const {
    PotentialSample<D> out;
    for (const auto& b : bumps_) {
      const Vec<D> d = x - b.center;
      const double a2 = b.radius * b.radius;
      const double s2 = norm2(d) / a2;
      if (s2 >= 1.0) continue;
      const double one_minus = 1.0 - s2;
      const double v = b.amplitude * std::exp(1.0 - 1.0 / one_minus);
      out.value += v;
      // d/dx exp(1 − 1/(1 − |d|²/a²)) = −2 d / (a² (1 − s²)²) · profile
      out.gradient += (-2.0 * v / (a2 * one_minus * one_minus)) * d;
    }
    return out;
  }

  double value(const Vec<D>& x) const { return evaluate(x).value; }

  /// Radial profile V(r) for radial potentials.
  double radial_value(double r) const {
    if (bumps_.empty()) return 0.0;
    const auto& b = bumps_.front();
    return b.amplitude * bump_profile((r * r) / (b.radius * b.radius));
  }

  /// Canonical text form; stable across runs, used for digests.
  std::string canonical() const {
    std::string s = "potential/d=" + std::to_string(D) + ";kind=";
    s += kind_ == Kind::Zero ? "zero" : (kind_ == Kind::RadialBump ? "radial-bump" : "bump-sum");
    char buf[64];
    for (const auto& b : bumps_) {
      s += ";bump(";
      for (std::size_t i = 0; i < D; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,", b.center[i]);
        s += buf;
      }
      std::snprintf(buf, sizeof buf, "%.17g,%.17g)", b.amplitude, b.radius);
      s += buf;
    }
    return s;
  }

  friend bool operator==(const PotentialSpec&, const PotentialSpec&) = default;

 private:
  PotentialSpec(Kind k, std::vector<Bump<D>> bumps) : kind_(k), bumps_(std::move(bumps)) {
    for (const auto& b : bumps_) support_radius_ = std::max(support_radius_, norm(b.center) + b.radius);
  }

  static void check_bump(double amplitude, double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw config_error("InvalidPotential", "bump radius must be positive");
    if (!std::isfinite(amplitude)) throw config_error("InvalidPotential", "bump amplitude must be finite");
  }

  Kind kind_ = Kind::Zero;
  std::vector<Bump<D>> bumps_;
  double support_radius_ = 0.0;
};

template <std::size_t D>
PotentialSample<D> evaluate_potential(const PotentialSpec<D>& p, const Vec<D>& x) {
  return p.evaluate(x);
}

/// p(x, ξ) = |ξ|² + V(x).
template <std::size_t D>
double hamiltonian(const PotentialSpec<D>& p, const PhaseSpacePoint<D>& rho) {
  return norm2(rho.xi) + p.value(rho.x);
}

/// Launch point of the trajectory with asymptote tω + η, taken at t = −T:
/// x = −Tω + η, ξ = ω. Requires T > R₀ + |η| so the launch is outside the support.
template <std::size_t D>
PhaseSpacePoint<D> embed_initial_condition(const CotangentPoint<D>& q, double T, const PotentialSpec<D>& p) {
  const double r0 = p.support_radius();
  if (!(T > r0 + norm(q.eta)))
    throw config_error("LaunchInsideSupport", "launch time must exceed R0 + |eta|");
  return PhaseSpacePoint<D>{-T * q.omega.vec() + q.eta, q.omega.vec()};
}

/// Grid scan for points of the energy layer where dp vanishes: ξ = 0, V = 1, ∇V = 0.
/// An empty result certifies nondegeneracy at the grid resolution.
template <std::size_t D>
std::vector<Vec<D>> nondegeneracy_scan(const PotentialSpec<D>& p, double grid_step, double tol) {
  if (!(grid_step > 0.0)) throw config_error("InvalidGrid", "grid_step must be positive");
  std::vector<Vec<D>> hits;
  if (p.is_zero()) return hits;
  const double r0 = p.support_radius();
  const long n = static_cast<long>(std::floor(r0 / grid_step));
  std::array<long, D> idx;
  idx.fill(-n);
  while (true) {
    Vec<D> x;
    for (std::size_t i = 0; i < D; ++i) x[i] = static_cast<double>(idx[i]) * grid_step;
    if (norm(x) < r0) {
      const auto s = p.evaluate(x);
      if (s.value != 0.0 && std::abs(s.value - 1.0) < tol && norm(s.gradient) < tol) hits.push_back(x);
    }
    std::size_t k = 0;
    while (k < D && ++idx[k] > n) idx[k++] = -n;
    if (k == D) break;
  }
  return hits;
}

}  // namespace scatlab
