#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "scatlab/core/errors.hpp"

namespace scatlab::linalg {

struct GmresSettings {
  double tolerance = 1e-12;  // relative residual ‖b − Ax‖/‖b‖
  int restart = 120;
  int max_iterations = 3000;
};

struct GmresResult {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Restarted GMRES (modified Gram–Schmidt, Givens rotations) for a matrix-free operator
/// apply(in, out). Starts from x = 0; throws SolveFailure if the tolerance is not reached.
template <class Apply>
GmresResult gmres(Apply&& apply, const Eigen::VectorXcd& b, Eigen::VectorXcd& x, const GmresSettings& cfg) {
  using cplx = std::complex<double>;
  const Eigen::Index n = b.size();
  x.setZero(n);
  GmresResult res;
  const double bnorm = b.norm();
  if (bnorm == 0.0) return res;
  const int m = std::max(1, std::min<int>(cfg.restart, static_cast<int>(n)));
  Eigen::MatrixXcd basis(n, m + 1);
  Eigen::MatrixXcd hess = Eigen::MatrixXcd::Zero(m + 1, m);
  std::vector<cplx> cs(m), sn(m);
  Eigen::VectorXcd g(m + 1), w(n), r(n);

  while (res.iterations < cfg.max_iterations) {
    apply(x, r);
    r = b - r;
    double beta = r.norm();
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= cfg.tolerance) return res;
    basis.col(0) = r / beta;
    g.setZero();
    g[0] = beta;
    hess.setZero();
    int j = 0;
    for (; j < m && res.iterations < cfg.max_iterations; ++j) {
      ++res.iterations;
      apply(basis.col(j), w);
      for (int i = 0; i <= j; ++i) {
        hess(i, j) = basis.col(i).dot(w);
        w -= hess(i, j) * basis.col(i);
      }
      const double wn = w.norm();
      hess(j + 1, j) = wn;
      if (wn > 0.0) basis.col(j + 1) = w / wn;
      for (int i = 0; i < j; ++i) {
        const cplx t = std::conj(cs[i]) * hess(i, j) + std::conj(sn[i]) * hess(i + 1, j);
        hess(i + 1, j) = -sn[i] * hess(i, j) + cs[i] * hess(i + 1, j);
        hess(i, j) = t;
      }
      const double den = std::hypot(std::abs(hess(j, j)), wn);
      if (den == 0.0) throw numeric_error("SolveFailure", "GMRES breakdown");
      cs[j] = hess(j, j) / den;
      sn[j] = wn / den;
      hess(j, j) = den;
      hess(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = std::conj(cs[j]) * g[j];
      res.relative_residual = std::abs(g[j + 1]) / bnorm;
      if (res.relative_residual <= cfg.tolerance || wn == 0.0) {
        ++j;
        break;
      }
    }
    const Eigen::VectorXcd y =
        hess.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    x += basis.leftCols(j) * y;
    if (res.relative_residual <= cfg.tolerance) {
      // Confirm with the true residual; the recurrence can drift from it.
      apply(x, r);
      res.relative_residual = (b - r).norm() / bnorm;
      if (res.relative_residual <= 10.0 * cfg.tolerance) return res;
    }
  }
  throw numeric_error("SolveFailure", "GMRES did not converge: relative residual " +
                                          sci(res.relative_residual));
}

}  // namespace scatlab::linalg
