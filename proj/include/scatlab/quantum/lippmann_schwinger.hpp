#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include <fftw3.h>
#include <Eigen/Dense>

#include "scatlab/core/errors.hpp"
#include "scatlab/core/parallel.hpp"
#include "scatlab/core/phase_space.hpp"
#include "scatlab/core/potential.hpp"
#include "scatlab/linalg/gmres.hpp"
#include "scatlab/quantum/partial_wave.hpp"
#include "scatlab/quantum/smatrix.hpp"
#include "scatlab/special/bessel.hpp"

namespace scatlab {

struct LsGridPolicy {
  double points_per_wavelength = 12.0;
  /// Grid spacing is also at most min_feature_radius / points_per_radius.
  double points_per_radius = 35.0;
  double box_margin = 0.1;
  linalg::GmresSettings gmres{};
  std::size_t max_unknowns = 20000;
  double memory_cap_mb = 2048.0;
  double unitarity_tolerance = 1e-6;
  /// Extra quadrature directions beyond 2M + 1.
  int extra_directions = 9;
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

inline bool fft_friendly(int n) {
  for (int f : {2, 3, 5, 7})
    while (n % f == 0) n /= f;
  return n == 1;
}

struct FftwBuffer {
  fftw_complex* ptr = nullptr;
  explicit FftwBuffer(std::size_t n) : ptr(fftw_alloc_complex(n)) {
    if (!ptr) throw budget_error("ResolutionBudgetExceeded", "FFT buffer allocation failed");
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(ptr); }
};

struct FftwPlan {
  fftw_plan plan = nullptr;
  ~FftwPlan() {
    if (plan) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

}  // namespace detail

/// Periodic grid carrying the truncated-kernel convolution with the outgoing fundamental
/// solution −(i/4)H₀(k|x|) of Δ + k². The kernel is cut off at radius L ≥ diam(supp V);
/// its Fourier transform is analytic, so the periodic FFT convolution is exact for all
/// point pairs inside the support as long as the period exceeds 2R₀ + L.
class LsDiscretization {
 public:
  LsDiscretization(const PotentialSpec<2>& p, double h, const LsGridPolicy& pol) : k_(1.0 / h) {
    if (!(h > 0.0)) throw config_error("InvalidH", "h must be positive");
    if (pol.points_per_wavelength < 10.0)
      throw config_error("InvalidGrid", "points_per_wavelength must be at least 10");
    const double r0 = std::max(p.support_radius(), 1e-3);
    double dx = 2.0 * std::numbers::pi * h / pol.points_per_wavelength;
    if (!p.is_zero()) dx = std::min(dx, p.min_feature_radius() / pol.points_per_radius);
    cutoff_ = 2.0 * r0 + 2.0 * dx;
    const double period = 2.0 * r0 + cutoff_ + pol.box_margin;
    int n = static_cast<int>(std::ceil(period / dx));
    if (n % 2) ++n;
    while (!detail::fft_friendly(n)) n += 2;
    n_ = n;
    dx_ = period / n;

    const double grid_bytes = 16.0 * static_cast<double>(n) * n;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const Vec<2> x{{(i - n / 2) * dx_, (j - n / 2) * dx_}};
        const double v = p.value(x);
        if (v != 0.0) {
          index_.push_back(static_cast<std::size_t>(i) * n + j);
          points_.push_back(x);
          weight_.push_back(k_ * k_ * v);
        }
      }
    }
    if (index_.size() > pol.max_unknowns)
      throw budget_error("ResolutionBudgetExceeded",
                         "LS grid needs " + std::to_string(index_.size()) + " unknowns, cap is " +
                             std::to_string(pol.max_unknowns));
    if (3.0 * grid_bytes / 1048576.0 > pol.memory_cap_mb)
      throw budget_error("ResolutionBudgetExceeded", "LS grid exceeds the memory cap");

    kernel_.resize(static_cast<std::size_t>(n) * n);
    const double L = cutoff_;
    const double kl = k_ * L;
    const auto h01 = bessel01(kl);
    const cplx H0{h01.j0, h01.y0}, H1{h01.j1, h01.y1};
    const cplx ipi2{0.0, std::numbers::pi / 2.0};
    const double inv = 1.0 / (static_cast<double>(n) * n);
    std::vector<double> freq(n);
    for (int i = 0; i < n; ++i) freq[i] = 2.0 * std::numbers::pi * (i < n / 2 ? i : i - n) / (n * dx_);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double s = std::hypot(freq[i], freq[j]);
        cplx g;
        if (std::abs(s - k_) < 1e-8 * k_) {
          // Removable singularity: numerator vanishes at s = k.
          const auto b = bessel01(kl);
          const double j1p = b.j0 - b.j1 / kl;
          const cplx dn = -ipi2 * L * (b.j1 * H0 + kl * j1p * H0 + kl * H1 * b.j1);
          g = dn / (2.0 * k_);
        } else if (s == 0.0) {
          g = (-1.0 + ipi2 * L * k_ * H1) / (-k_ * k_);
        } else {
          const double sl = s * L;
          const auto b = bessel01(sl);
          const cplx num = -1.0 - ipi2 * L * (s * b.j1 * H0 - k_ * H1 * b.j0);
          g = num / (s * s - k_ * k_);
        }
        kernel_[static_cast<std::size_t>(i) * n + j] = g * inv;
      }
    }

    detail::FftwBuffer a(static_cast<std::size_t>(n) * n), b(static_cast<std::size_t>(n) * n);
    std::lock_guard lock(detail::fftw_planner_mutex());
    fwd_ = std::make_shared<detail::FftwPlan>();
    bwd_ = std::make_shared<detail::FftwPlan>();
    fwd_->plan = fftw_plan_dft_2d(n, n, a.ptr, b.ptr, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_->plan = fftw_plan_dft_2d(n, n, b.ptr, a.ptr, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!fwd_->plan || !bwd_->plan) throw numeric_error("SolveFailure", "FFT planning failed");
  }

  double k() const { return k_; }
  int grid_size() const { return n_; }
  double spacing() const { return dx_; }
  double cutoff() const { return cutoff_; }
  std::size_t unknowns() const { return index_.size(); }
  const std::vector<Vec<2>>& points() const { return points_; }
  const std::vector<double>& weights() const { return weight_; }

  /// Per-thread FFT scratch.
  struct Workspace {
    detail::FftwBuffer grid, spec;
    explicit Workspace(int n) : grid(static_cast<std::size_t>(n) * n), spec(static_cast<std::size_t>(n) * n) {}
  };

  /// out = (I − G W) v on the support points.
  void apply(const Eigen::Ref<const Eigen::VectorXcd>& v, Eigen::VectorXcd& out, Workspace& ws) const {
    const std::size_t total = static_cast<std::size_t>(n_) * n_;
    cplx* g = ws.grid.data();
    cplx* s = ws.spec.data();
    std::fill(g, g + total, cplx{});
    for (std::size_t q = 0; q < index_.size(); ++q) g[index_[q]] = weight_[q] * v[static_cast<Eigen::Index>(q)];
    fftw_execute_dft(fwd_->plan, ws.grid.ptr, ws.spec.ptr);
    for (std::size_t q = 0; q < total; ++q) s[q] *= kernel_[q];
    fftw_execute_dft(bwd_->plan, ws.spec.ptr, ws.grid.ptr);
    out.resize(v.size());
    for (std::size_t q = 0; q < index_.size(); ++q) out[static_cast<Eigen::Index>(q)] = v[static_cast<Eigen::Index>(q)] - g[index_[q]];
  }

  /// Total field on the support points for the incident plane wave e^{ik ω·x}.
  Eigen::VectorXcd solve(const UnitDirection<2>& omega, const linalg::GmresSettings& cfg, Workspace& ws,
                         linalg::GmresResult* info = nullptr) const {
    Eigen::VectorXcd rhs(static_cast<Eigen::Index>(points_.size()));
    for (std::size_t q = 0; q < points_.size(); ++q)
      rhs[static_cast<Eigen::Index>(q)] = std::polar(1.0, k_ * dot(omega.vec(), points_[q]));
    Eigen::VectorXcd u;
    const auto r = linalg::gmres([&](const Eigen::Ref<const Eigen::VectorXcd>& in, Eigen::VectorXcd& out) { apply(in, out, ws); },
                                 rhs, u, cfg);
    if (info) *info = r;
    return u;
  }

  /// Amplitude integral I(φ) = Δ² Σ e^{−ik ω_φ·x} W(x) u(x) for each outgoing angle.
  Eigen::MatrixXcd outgoing_weights(const std::vector<double>& angles) const {
    Eigen::MatrixXcd e(static_cast<Eigen::Index>(angles.size()), static_cast<Eigen::Index>(points_.size()));
    for (std::size_t a = 0; a < angles.size(); ++a) {
      const double c = std::cos(angles[a]), s = std::sin(angles[a]);
      for (std::size_t q = 0; q < points_.size(); ++q)
        e(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(q)) =
            dx_ * dx_ * weight_[q] * std::polar(1.0, -k_ * (c * points_[q][0] + s * points_[q][1]));
    }
    return e;
  }

 private:
  double k_;
  int n_ = 0;
  double dx_ = 0.0;
  double cutoff_ = 0.0;
  std::vector<std::size_t> index_;
  std::vector<Vec<2>> points_;
  std::vector<double> weight_;
  std::vector<cplx> kernel_;
  std::shared_ptr<detail::FftwPlan> fwd_, bwd_;
};

/// Far-field amplitude f(φ) of the scattered wave, u_sc ∼ f(φ) e^{ik|x|}/√|x|, at the given
/// outgoing angles for the incident direction omega_in.
inline std::vector<cplx> lippmann_schwinger_farfield(const PotentialSpec<2>& p, double h, const UnitDirection<2>& omega_in,
                                                     const std::vector<double>& angles, const LsGridPolicy& pol = {}) {
  if (p.is_zero()) return std::vector<cplx>(angles.size(), cplx{});
  const LsDiscretization disc(p, h, pol);
  LsDiscretization::Workspace ws(disc.grid_size());
  const Eigen::VectorXcd u = disc.solve(omega_in, pol.gmres, ws);
  const Eigen::VectorXcd amp = disc.outgoing_weights(angles) * u;
  const double k = disc.k();
  const cplx c = cplx{0.0, -0.25} * std::sqrt(2.0 / (std::numbers::pi * k)) * std::polar(1.0, -std::numbers::pi / 4.0);
  std::vector<cplx> out(angles.size());
  for (std::size_t a = 0; a < angles.size(); ++a) out[a] = c * amp[static_cast<Eigen::Index>(a)];
  return out;
}

/// Same far field from radial phase shifts: f(φ) = √(2/(πk)) e^{−iπ/4} Σ_m ((e^{2iδ_m} − 1)/2) e^{im(φ − θ_in)}.
inline std::vector<cplx> partial_wave_farfield(const RadialPhaseTable& t, double theta_in, const std::vector<double>& angles) {
  const double k = 1.0 / t.h;
  const cplx c = std::sqrt(2.0 / (std::numbers::pi * k)) * std::polar(1.0, -std::numbers::pi / 4.0);
  std::vector<cplx> out(angles.size());
  for (std::size_t a = 0; a < angles.size(); ++a) {
    cplx s{};
    for (int m = -t.M; m <= t.M; ++m)
      s += 0.5 * (std::polar(1.0, 2.0 * t.delta[static_cast<std::size_t>(std::abs(m))]) - 1.0) *
           std::polar(1.0, m * (angles[a] - theta_in));
    out[a] = c * s;
  }
  return out;
}

struct LsDiagnostics {
  int grid_size = 0;
  double spacing = 0.0;
  std::size_t unknowns = 0;
  int directions = 0;
  int max_iterations = 0;
  double unitarity_defect = 0.0;
};

/// S on {e^{imθ}: |m| ≤ M} from far fields at Q equispaced incident and outgoing angles:
///   S_{m′m} = δ_{m′m} − (i/2) Q⁻² Σ_{a,b} I(φ_a, θ_b) e^{−im′φ_a} e^{imθ_b}.
/// The constant −i/2 converts the amplitude integral into S − I in the e^{2iδ} convention.
inline ScatteringMatrix assemble_general_smatrix(const PotentialSpec<2>& p, double h, const TruncationPolicy& trunc,
                                                 const LsGridPolicy& pol = {}, unsigned workers = 1,
                                                 LsDiagnostics* diag = nullptr) {
  const int M = trunc.modes(p.support_radius(), h);
  const int n = 2 * M + 1;
  const std::string hash = potential_digest(p);
  if (p.is_zero()) return ScatteringMatrix::dense(h, M, Eigen::MatrixXcd::Identity(n, n), Backend::LippmannSchwinger, hash);

  const LsDiscretization disc(p, h, pol);
  const int q = n + pol.extra_directions;
  std::vector<double> angles(q);
  for (int a = 0; a < q; ++a) angles[a] = 2.0 * std::numbers::pi * a / q;
  const Eigen::MatrixXcd out_w = disc.outgoing_weights(angles);

  Eigen::MatrixXcd amp(q, q);  // amp(a, b) = I(φ_a, θ_b)
  std::vector<int> iters(q, 0);
  parallel_for(static_cast<std::size_t>(q), workers, [&](std::size_t b) {
    thread_local std::unique_ptr<LsDiscretization::Workspace> ws;
    thread_local int ws_size = 0;
    if (!ws || ws_size != disc.grid_size()) {
      ws = std::make_unique<LsDiscretization::Workspace>(disc.grid_size());
      ws_size = disc.grid_size();
    }
    linalg::GmresResult info;
    const Eigen::VectorXcd u = disc.solve(UnitDirection<2>::from_angle(angles[b]), pol.gmres, *ws, &info);
    amp.col(static_cast<Eigen::Index>(b)) = out_w * u;
    iters[b] = info.iterations;
  }, 1);

  Eigen::MatrixXcd four_out(n, q), four_in(q, n);
  for (int a = 0; a < q; ++a)
    for (int m = -M; m <= M; ++m) {
      four_out(m + M, a) = std::polar(1.0, -m * angles[a]);
      four_in(a, m + M) = std::polar(1.0, m * angles[a]);
    }
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Identity(n, n) + cplx{0.0, -0.5} / (static_cast<double>(q) * q) * (four_out * amp * four_in);
  auto result = ScatteringMatrix::dense(h, M, std::move(s), Backend::LippmannSchwinger, hash);
  const double defect = result.unitarity_defect();
  if (diag) {
    diag->grid_size = disc.grid_size();
    diag->spacing = disc.spacing();
    diag->unknowns = disc.unknowns();
    diag->directions = q;
    diag->max_iterations = *std::max_element(iters.begin(), iters.end());
    diag->unitarity_defect = defect;
  }
  if (!(defect <= pol.unitarity_tolerance))
    throw numeric_error("UnitarityFailure", "LS scattering matrix unitarity defect " + sci(defect));
  return result;
}

}  // namespace scatlab
