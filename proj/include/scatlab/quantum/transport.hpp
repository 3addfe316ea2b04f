#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <variant>

#include <Eigen/Dense>

#include "scatlab/classical/scattering_map.hpp"
#include "scatlab/core/errors.hpp"
#include "scatlab/core/phase_space.hpp"
#include "scatlab/quantum/smatrix.hpp"

namespace scatlab {

struct TransportResult {
  CotangentPoint<2> center_in;
  CotangentPoint<2> center_out;
  /// κ(center_in); equal to center_in off the interaction region.
  CotangentPoint<2> classical_out;
  double center_error = 0.0;
  /// |‖Su‖ − 1|.
  double mass_defect = 0.0;
  /// ‖Su − u‖.
  double identity_defect = 0.0;
  /// Fraction of the untruncated state's mass outside |m| ≤ M.
  double truncated_mass = 0.0;
};

/// Coefficients of u(θ) ∝ exp(iη₀θ/h − (θ − θ₀)²/(2h)) on e^{imθ}, |m| ≤ M, normalized:
///   c_m ∝ exp(−(hm − η₀)²/(2h)) e^{−imθ₀}.
inline Eigen::VectorXcd coherent_state(double theta0, double eta0, double h, int M, double* truncated_mass = nullptr) {
  Eigen::VectorXcd c(2 * M + 1);
  for (int m = -M; m <= M; ++m) {
    const double d = h * m - eta0;
    c[m + M] = std::exp(-d * d / (2.0 * h)) * std::polar(1.0, -m * theta0);
  }
  const double kept = c.squaredNorm();
  if (truncated_mass) {
    // Full Gaussian mass Σ_m over all integers, by summing until negligible.
    double full = kept;
    for (int m = M + 1;; ++m) {
      const double a = std::exp(-std::pow(h * m - eta0, 2) / h), b = std::exp(-std::pow(-h * m - eta0, 2) / h);
      full += a + b;
      if (a + b < 1e-300 || (a + b) < 1e-18 * full) break;
    }
    *truncated_mass = 1.0 - kept / full;
  }
  return c / std::sqrt(kept);
}

/// Husimi density |⟨φ_{θ,η}, v⟩|² up to a constant, for a state given on e^{imθ}.
inline double husimi(const Eigen::VectorXcd& v, double theta, double eta, double h) {
  const int M = static_cast<int>(v.size() - 1) / 2;
  cplx s{};
  for (int m = -M; m <= M; ++m) {
    const double d = h * m - eta;
    s += std::exp(-d * d / (2.0 * h)) * std::polar(1.0, m * theta) * v[m + M];
  }
  return std::norm(s);
}

/// Phase-space center of a state: maximum of its Husimi density over a (θ, η) grid, refined
/// by the stationary point of a quadratic fit to log-density on the surrounding 3×3 stencil
/// (exact for a Gaussian).
inline CotangentPoint<2> husimi_center(const Eigen::VectorXcd& v, double h) {
  const int M = static_cast<int>(v.size() - 1) / 2;
  const int nt = 4 * (2 * M + 1);
  const double dt = 2.0 * std::numbers::pi / nt;
  double best = -1.0;
  int bi = 0, bj = 0;
  for (int j = -M; j <= M; ++j) {
    const double eta = h * j;
    for (int i = 0; i < nt; ++i) {
      const double val = husimi(v, -std::numbers::pi + i * dt, eta, h);
      if (val > best) {
        best = val;
        bi = i;
        bj = j;
      }
    }
  }
  const double t0 = -std::numbers::pi + bi * dt, e0 = h * bj;
  std::array<std::array<double, 3>, 3> f{};
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b) f[a + 1][b + 1] = std::log(std::max(husimi(v, t0 + a * dt, e0 + b * h, h), 1e-300));
  // Quadratic model in unit offsets (x along θ, y along η).
  const double gx = 0.5 * (f[2][1] - f[0][1]);
  const double gy = 0.5 * (f[1][2] - f[1][0]);
  const double hxx = f[2][1] - 2.0 * f[1][1] + f[0][1];
  const double hyy = f[1][2] - 2.0 * f[1][1] + f[1][0];
  const double hxy = 0.25 * (f[2][2] - f[2][0] - f[0][2] + f[0][0]);
  const double det = hxx * hyy - hxy * hxy;
  double x = 0.0, y = 0.0;
  if (det > 0.0 && hxx < 0.0) {
    x = -(hyy * gx - hxy * gy) / det;
    y = -(hxx * gy - hxy * gx) / det;
    x = std::clamp(x, -1.0, 1.0);
    y = std::clamp(y, -1.0, 1.0);
  }
  return CotangentPoint<2>::from_chart(wrap_angle(t0 + x * dt), e0 + y * h);
}

/// Transport of a coherent state centered at q by S, compared with the classical map.
inline TransportResult wavepacket_transport_check(const ScatteringMatrix& s, const CotangentPoint<2>& q,
                                                  const PotentialSpec<2>& p, const FlowSettings& flow = {}) {
  const double h = s.h();
  const double eta0 = q.eta_signed();
  if (std::abs(eta0) > s.M() * h)
    throw config_error("Unrepresentable", "|eta0| exceeds the representable range M*h");
  TransportResult r{q, q, q};
  const auto outcome = scattering_map(q, p, flow);
  if (std::holds_alternative<Trapped>(outcome)) throw numeric_error("TrappedPoint", "classical trajectory is trapped");
  if (const auto* e = std::get_if<Escaped<2>>(&outcome)) r.classical_out = e->out;

  const Eigen::VectorXcd u = coherent_state(q.theta(), eta0, h, s.M(), &r.truncated_mass);
  const Eigen::VectorXcd v = s.apply(u);
  r.mass_defect = std::abs(v.norm() - 1.0);
  r.identity_defect = (v - u).norm();
  r.center_out = husimi_center(v, h);
  r.center_error = cotangent_distance(r.center_out, r.classical_out);
  return r;
}

}  // namespace scatlab
