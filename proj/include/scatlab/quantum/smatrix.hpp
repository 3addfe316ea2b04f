#pragma once

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "scatlab/core/errors.hpp"

namespace scatlab {

using cplx = std::complex<double>;

/// Number of retained angular modes: S is represented on e^{imθ}, −M ≤ m ≤ M, with
///   M(h) = ⌈(R₀ + margin)/h⌉ + ⌈pad_coefficient·(R₀/h)^{1/3}⌉ + pad_constant.
struct TruncationPolicy {
  double margin = 0.5;
  double pad_coefficient = 3.0;
  int pad_constant = 10;
  /// When positive, overrides the formula (used for M-doubling checks).
  int fixed_modes = 0;

  int modes(double r0, double h) const {
    if (!(h > 0.0)) throw config_error("InvalidH", "h must be positive");
    if (fixed_modes > 0) return fixed_modes;
    if (margin < 0.0 || pad_coefficient < 0.0 || pad_constant < 0)
      throw config_error("InvalidTruncation", "truncation parameters must be nonnegative");
    const int m = static_cast<int>(std::ceil((r0 + margin) / h)) +
                  static_cast<int>(std::ceil(pad_coefficient * std::cbrt(r0 / h))) + pad_constant;
    return std::max(m, 1);
  }
};

enum class Backend { Radial, LippmannSchwinger };

inline const char* backend_name(Backend b) { return b == Backend::Radial ? "radial" : "lippmann-schwinger"; }

/// Truncated S_h on the basis {e^{imθ}: −M ≤ m ≤ M}; row/column n ↔ m = n − M.
/// Radial matrices are stored by their diagonal only.
class ScatteringMatrix {
 public:
  ScatteringMatrix() = default;

  static ScatteringMatrix diagonal(double h, int M, Eigen::VectorXcd d, Backend b, std::string hash) {
    ScatteringMatrix s;
    s.h_ = h;
    s.M_ = M;
    s.diag_ = std::move(d);
    s.is_diagonal_ = true;
    s.backend_ = b;
    s.hash_ = std::move(hash);
    return s;
  }

  static ScatteringMatrix dense(double h, int M, Eigen::MatrixXcd m, Backend b, std::string hash) {
    ScatteringMatrix s;
    s.h_ = h;
    s.M_ = M;
    s.dense_ = std::move(m);
    s.is_diagonal_ = false;
    s.backend_ = b;
    s.hash_ = std::move(hash);
    return s;
  }

  double h() const { return h_; }
  int M() const { return M_; }
  int size() const { return 2 * M_ + 1; }
  Backend backend() const { return backend_; }
  const std::string& potential_hash() const { return hash_; }
  bool is_diagonal() const { return is_diagonal_; }

  cplx operator()(int row, int col) const {
    if (is_diagonal_) return row == col ? diag_[row] : cplx{};
    return dense_(row, col);
  }
  cplx at_modes(int m_out, int m_in) const { return (*this)(m_out + M_, m_in + M_); }

  const Eigen::VectorXcd& diagonal_entries() const { return diag_; }
  const Eigen::MatrixXcd& dense_entries() const { return dense_; }

  Eigen::MatrixXcd to_dense() const {
    if (!is_diagonal_) return dense_;
    return diag_.asDiagonal();
  }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const {
    if (is_diagonal_) return diag_.cwiseProduct(v);
    return dense_ * v;
  }

  /// ‖S*S − I‖₂.
  double unitarity_defect() const {
    if (is_diagonal_) {
      double d = 0.0;
      for (Eigen::Index i = 0; i < diag_.size(); ++i) d = std::max(d, std::abs(std::norm(diag_[i]) - 1.0));
      return d;
    }
    const Eigen::MatrixXcd g = dense_.adjoint() * dense_ - Eigen::MatrixXcd::Identity(size(), size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }

  /// Frobenius norm of the off-diagonal part.
  double off_diagonal_mass() const {
    if (is_diagonal_) return 0.0;
    double s = 0.0;
    for (int j = 0; j < size(); ++j)
      for (int i = 0; i < size(); ++i)
        if (i != j) s += std::norm(dense_(i, j));
    return std::sqrt(s);
  }

 private:
  double h_ = 0.0;
  int M_ = 0;
  bool is_diagonal_ = true;
  Eigen::VectorXcd diag_;
  Eigen::MatrixXcd dense_;
  Backend backend_ = Backend::Radial;
  std::string hash_;
};

}  // namespace scatlab
