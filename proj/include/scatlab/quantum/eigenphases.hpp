#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "scatlab/core/errors.hpp"
#include "scatlab/core/phase_space.hpp"
#include "scatlab/quantum/smatrix.hpp"

namespace scatlab {

/// Eigenphases β_n ∈ (−π, π], ordered so |e^{iβ_n} − 1| = 2|sin(β_n/2)| is nonincreasing.
struct PhaseSpectrum {
  double h = 0.0;
  int M = 0;
  std::vector<double> phases;
  /// Largest ||λ| − 1| before projection to the circle.
  double modulus_defect = 0.0;

  std::size_t size() const { return phases.size(); }
};

inline double chord_from_one(double beta) { return 2.0 * std::abs(std::sin(0.5 * beta)); }

inline void sort_by_chord(std::vector<double>& phases) {
  std::stable_sort(phases.begin(), phases.end(), [](double a, double b) { return chord_from_one(a) > chord_from_one(b); });
}

inline PhaseSpectrum eigenphases(const ScatteringMatrix& s, double modulus_tolerance = 1e-6) {
  PhaseSpectrum out;
  out.h = s.h();
  out.M = s.M();
  out.phases.reserve(static_cast<std::size_t>(s.size()));
  if (s.is_diagonal()) {
    for (Eigen::Index i = 0; i < s.diagonal_entries().size(); ++i) {
      const cplx z = s.diagonal_entries()[i];
      out.modulus_defect = std::max(out.modulus_defect, std::abs(std::abs(z) - 1.0));
      out.phases.push_back(z == cplx(1.0, 0.0) ? 0.0 : wrap_angle(std::arg(z)));
    }
  } else {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(s.dense_entries(), false);
    if (es.info() != Eigen::Success) throw numeric_error("EigensolveFailure", "complex eigensolver did not converge");
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const cplx z = es.eigenvalues()[i];
      out.modulus_defect = std::max(out.modulus_defect, std::abs(std::abs(z) - 1.0));
      out.phases.push_back(wrap_angle(std::arg(z / std::abs(z))));
    }
    // Solver output order is arbitrary; fix a canonical order before the stable sort.
    std::sort(out.phases.begin(), out.phases.end());
  }
  if (!(out.modulus_defect <= modulus_tolerance))
    throw numeric_error("EigensolveFailure", "eigenvalue off the unit circle by " + sci(out.modulus_defect));
  sort_by_chord(out.phases);
  return out;
}

inline double circle_distance(double a, double b) { return std::abs(wrap_angle(a - b)); }

/// Largest per-phase distance under the best pairing of two multisets on the circle.
/// Both are sorted by angle; the optimal bottleneck pairing of equal-size point sets on a
/// circle is a cyclic shift of the sorted orders.
inline double match_phase_multisets(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size()) throw config_error("SizeMismatch", "phase multisets differ in size");
  if (a.empty()) return 0.0;
  for (auto& x : a) x = wrap_angle(x);
  for (auto& x : b) x = wrap_angle(x);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n = a.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t shift = 0; shift < n; ++shift) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n && worst < best; ++i) worst = std::max(worst, circle_distance(a[i], b[(i + shift) % n]));
    best = std::min(best, worst);
  }
  return best;
}

}  // namespace scatlab
