#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <variant>
#include <vector>

#include "scatlab/classical/scattering_map.hpp"
#include "scatlab/core/errors.hpp"
#include "scatlab/core/parallel.hpp"
#include "scatlab/core/rng.hpp"

namespace scatlab {

struct MeasureEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t sample_count = 0;
  double reference_volume = 0.0;
};

/// |S^{D−1}|.
template <std::size_t D>
double sphere_area() {
  const double n = static_cast<double>(D);
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// Volume of the (D−1)-ball of radius R.
template <std::size_t D>
double transverse_ball_volume(double R) {
  const double n = static_cast<double>(D) - 1.0;
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0) * std::pow(R, n);
}

/// Liouville measure of the sampling box {(ω, η): |η| ≤ R}.
template <std::size_t D>
double sampling_box_volume(double R) {
  return sphere_area<D>() * transverse_ball_volume<D>(R);
}

/// Uniform (ω, η) in {|η| ≤ R}, drawn from the stream of sample `index`.
template <std::size_t D>
CotangentPoint<D> sample_cotangent(std::uint64_t seed, std::uint64_t index, double R) {
  SampleStream st(seed, index);
  if constexpr (D == 2) {
    const double theta = st.uniform(-std::numbers::pi, std::numbers::pi);
    const double eta = st.uniform(-R, R);
    return CotangentPoint<2>::from_chart(theta, eta);
  } else {
    Vec<D> w;
    for (std::size_t i = 0; i < D; ++i) w[i] = st.normal();
    const auto omega = UnitDirection<D>::from_vector(w);
    Vec<D> e;
    do {
      for (std::size_t i = 0; i < D; ++i) e[i] = st.normal();
      e = reject(e, omega.vec());
    } while (norm(e) == 0.0);
    const double rad = R * std::pow(st.uniform(), 1.0 / (static_cast<double>(D) - 1.0));
    return CotangentPoint<D>(omega, (rad / norm(e)) * e);
  }
}

/// Mean and standard error of a 0/1 indicator scaled by the box volume.
inline MeasureEstimate indicator_estimate(const std::vector<unsigned char>& hits, double ref) {
  MeasureEstimate m;
  m.sample_count = hits.size();
  m.reference_volume = ref;
  if (hits.empty()) return m;
  std::size_t k = 0;
  for (auto h : hits) k += h;
  const double n = static_cast<double>(hits.size());
  const double frac = static_cast<double>(k) / n;
  m.mean = frac * ref;
  const double var = hits.size() > 1 ? (static_cast<double>(k) - n * frac * frac) / (n - 1.0) : 0.0;
  m.standard_error = std::sqrt(std::max(var, 0.0)) * ref / std::sqrt(n);
  return m;
}

template <std::size_t D>
void check_sampling_radius(const PotentialSpec<D>& p, double R) {
  if (!(R >= p.support_radius())) throw config_error("InvalidSamplingRadius", "sampling radius must be >= R0");
}

/// Monte Carlo estimate of Vol(I) by the exact line–ball test.
template <std::size_t D>
MeasureEstimate estimate_interaction_volume(const PotentialSpec<D>& p, double R, std::size_t N, std::uint64_t seed,
                                            unsigned workers = 1) {
  check_sampling_radius(p, R);
  std::vector<unsigned char> hit(N, 0);
  parallel_for(N, workers, [&](std::size_t i) { hit[i] = line_meets_support(sample_cotangent<D>(seed, i, R), p); }, 4096);
  return indicator_estimate(hit, sampling_box_volume<D>(R));
}

/// Measure of the ε-shell around ∂I, {q : min |dᵢ − aᵢ| < ε}.
template <std::size_t D>
MeasureEstimate estimate_boundary_shell(const PotentialSpec<D>& p, double eps, double R, std::size_t N,
                                        std::uint64_t seed, unsigned workers = 1) {
  check_sampling_radius(p, R);
  std::vector<unsigned char> hit(N, 0);
  parallel_for(N, workers,
               [&](std::size_t i) { hit[i] = distance_to_interaction_boundary(sample_cotangent<D>(seed, i, R), p) < eps; },
               4096);
  return indicator_estimate(hit, sampling_box_volume<D>(R));
}

/// Trapped-measure estimates for every horizon in `horizons` from one sample set:
/// a sample counts as trapped at horizon T when it has not escaped by time T.
/// Integration runs to the largest horizon.
template <std::size_t D>
std::vector<MeasureEstimate> estimate_trapped_measure_ladder(const PotentialSpec<D>& p, double R, std::size_t N,
                                                             const FlowSettings& s, const std::vector<double>& horizons,
                                                             std::uint64_t seed, unsigned workers = 1) {
  check_sampling_radius(p, R);
  if (horizons.empty()) return {};
  FlowSettings sm = s;
  sm.max_time = *std::max_element(horizons.begin(), horizons.end());
  if (!(sm.max_time > 0.0)) throw config_error("InvalidHorizon", "T_max must be positive");
  std::vector<double> exit_time(N, 0.0);
  parallel_for(N, workers, [&](std::size_t i) {
    const auto q = sample_cotangent<D>(seed, i, R);
    const auto o = scattering_map(q, p, sm);
    if (std::holds_alternative<Trapped>(o)) exit_time[i] = std::numeric_limits<double>::infinity();
    else if (const auto* e = std::get_if<Escaped<D>>(&o)) exit_time[i] = e->flight_time;
  }, 16);
  std::vector<MeasureEstimate> out;
  const double ref = sampling_box_volume<D>(R);
  for (double T : horizons) {
    std::vector<unsigned char> hit(N);
    for (std::size_t i = 0; i < N; ++i) hit[i] = exit_time[i] > T;
    out.push_back(indicator_estimate(hit, ref));
  }
  return out;
}

template <std::size_t D>
MeasureEstimate estimate_trapped_measure(const PotentialSpec<D>& p, double R, std::size_t N, const FlowSettings& s,
                                         std::uint64_t seed, unsigned workers = 1) {
  return estimate_trapped_measure_ladder(p, R, N, s, {s.max_time}, seed, workers).front();
}

/// Measure of l-periodic interacting points at each ε of the ladder, from one sample set.
template <std::size_t D>
std::vector<MeasureEstimate> estimate_fixed_point_measure_ladder(const PotentialSpec<D>& p, int l,
                                                                 const std::vector<double>& eps_ladder, double R,
                                                                 std::size_t N, const FlowSettings& s,
                                                                 std::uint64_t seed, unsigned workers = 1) {
  check_sampling_radius(p, R);
  if (l == 0) throw config_error("InvalidIterate", "period must be nonzero");
  for (double e : eps_ladder)
    if (!(e > 0.0)) throw config_error("InvalidEpsilon", "epsilon must be positive");
  std::vector<double> dist(N, std::numeric_limits<double>::infinity());
  parallel_for(N, workers, [&](std::size_t i) {
    const auto q = sample_cotangent<D>(seed, i, R);
    if (!line_meets_support(q, p)) return;
    const auto r = iterate_scattering_map(q, l, p, s);
    if (const auto* c = std::get_if<Completed<D>>(&r)) dist[i] = cotangent_distance(c->point, q);
  }, 16);
  std::vector<MeasureEstimate> out;
  const double ref = sampling_box_volume<D>(R);
  for (double e : eps_ladder) {
    std::vector<unsigned char> hit(N);
    for (std::size_t i = 0; i < N; ++i) hit[i] = dist[i] < e;
    out.push_back(indicator_estimate(hit, ref));
  }
  return out;
}

template <std::size_t D>
MeasureEstimate estimate_fixed_point_measure(const PotentialSpec<D>& p, int l, double eps, double R, std::size_t N,
                                             const FlowSettings& s, std::uint64_t seed, unsigned workers = 1) {
  return estimate_fixed_point_measure_ladder(p, l, {eps}, R, N, s, seed, workers).front();
}

/// Vol(I) of κ-pushed samples: the image of each sample under κ is tested for membership in I.
/// Equal to estimate_interaction_volume within noise when κ preserves the Liouville measure.
template <std::size_t D>
MeasureEstimate estimate_pushed_interaction_volume(const PotentialSpec<D>& p, double R, std::size_t N,
                                                   const FlowSettings& s, std::uint64_t seed, unsigned workers = 1) {
  check_sampling_radius(p, R);
  std::vector<unsigned char> hit(N, 0);
  parallel_for(N, workers, [&](std::size_t i) {
    const auto q = sample_cotangent<D>(seed, i, R);
    const auto o = scattering_map(q, p, s);
    if (const auto* e = std::get_if<Escaped<D>>(&o)) hit[i] = line_meets_support(e->out, p) && norm(e->out.eta) <= R;
    else if (std::holds_alternative<NonInteracting>(o)) hit[i] = 0;
  }, 16);
  return indicator_estimate(hit, sampling_box_volume<D>(R));
}

/// Jacobian determinant of the chart map (θ, η) ↦ (θ′, η′) by central differences.
inline double symplectic_check(const CotangentPoint<2>& q, double delta, const PotentialSpec<2>& p,
                               const FlowSettings& s) {
  if (!(delta > 0.0)) throw config_error("InvalidStep", "delta must be positive");
  const double th = q.theta(), et = q.eta_signed();
  auto disp = [&](double t, double e) -> std::array<double, 2> {
    const auto c = CotangentPoint<2>::from_chart(t, e);
    const auto o = scattering_map(c, p, s);
    if (std::holds_alternative<Trapped>(o)) throw numeric_error("NeighborhoodTrapped", "a neighbor of q is trapped");
    if (const auto* x = std::get_if<Escaped<2>>(&o))
      return {wrap_angle(x->out.theta() - t), x->out.eta_signed() - e};
    return {0.0, 0.0};
  };
  const auto tp = disp(th + delta, et), tm = disp(th - delta, et);
  const auto ep = disp(th, et + delta), em = disp(th, et - delta);
  const double inv = 1.0 / (2.0 * delta);
  const double j11 = 1.0 + wrap_angle(tp[0] - tm[0]) * inv;
  const double j21 = (tp[1] - tm[1]) * inv;
  const double j12 = wrap_angle(ep[0] - em[0]) * inv;
  const double j22 = 1.0 + (ep[1] - em[1]) * inv;
  return j11 * j22 - j12 * j21;
}

}  // namespace scatlab
