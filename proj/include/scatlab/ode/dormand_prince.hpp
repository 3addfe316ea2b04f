#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include "scatlab/core/errors.hpp"

namespace scatlab::ode {

struct Tolerance {
  double rtol = 1e-10;
  double atol = 1e-12;
};

struct StepControl {
  double initial_step = 1e-3;
  double max_step = std::numeric_limits<double>::infinity();
  double min_step = 1e-14;
  std::size_t max_steps = 10'000'000;
};

template <std::size_t N>
struct IntegrationResult {
  double t = 0.0;
  std::array<double, N> y{};
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  bool stopped_by_observer = false;
};

/// Adaptive Dormand–Prince 5(4) with FSAL.
///
/// rhs(t, y, dy) evaluates the vector field. After every accepted step
/// observer(t, y) is called; it may modify y in place (e.g. rescaling) and
/// returns false to stop. Integration ends at t_end or when the observer stops it.
template <std::size_t N, class Rhs, class Observer>
IntegrationResult<N> integrate(Rhs&& rhs, double t0, const std::array<double, N>& y0, double t_end,
                               const Tolerance& tol, const StepControl& ctl, Observer&& observer) {
  using State = std::array<double, N>;
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  IntegrationResult<N> res;
  res.t = t0;
  res.y = y0;
  if (!(t_end > t0)) return res;

  State k1, k2, k3, k4, k5, k6, k7, tmp, ynew;
  rhs(t0, res.y, k1);
  double h = std::min({ctl.initial_step, ctl.max_step, t_end - t0});
  std::size_t steps = 0;

  while (res.t < t_end) {
    if (++steps > ctl.max_steps) throw numeric_error("StepFailure", "maximum number of integration steps exceeded");
    bool last = false;
    if (res.t + h >= t_end) {
      h = t_end - res.t;
      last = true;
    }
    const double t = res.t;
    const State& y = res.y;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    rhs(t + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    rhs(t + h, tmp, k6);
    for (std::size_t i = 0; i < N; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    rhs(t + h, ynew, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = tol.atol + tol.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(err / static_cast<double>(N));
    if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();

    if (err <= 1.0) {
      res.t = last ? t_end : t + h;
      res.y = ynew;
      k1 = k7;
      ++res.accepted;
      const State before = res.y;
      if (!observer(res.t, res.y)) {
        res.stopped_by_observer = true;
        return res;
      }
      if (res.y != before) rhs(res.t, res.y, k1);
      const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h = std::min(h * fac, ctl.max_step);
    } else {
      ++res.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      if (h < ctl.min_step) throw numeric_error("StepFailure", "step size underflow: tolerance cannot be met");
    }
  }
  return res;
}

template <std::size_t N, class Rhs>
IntegrationResult<N> integrate(Rhs&& rhs, double t0, const std::array<double, N>& y0, double t_end,
                               const Tolerance& tol, const StepControl& ctl = {}) {
  return integrate<N>(std::forward<Rhs>(rhs), t0, y0, t_end, tol, ctl, [](double, std::array<double, N>&) { return true; });
}

}  // namespace scatlab::ode
