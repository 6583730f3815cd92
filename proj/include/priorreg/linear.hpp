#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "priorreg/errors.hpp"

namespace priorreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;

/// Relative singular-value cutoff below which a direction is treated as null
/// when computing minimum-norm least-squares solutions.
inline constexpr double kSingularValueCutoff = 1e-10;

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw input_error(std::string(what) + ": non-finite entries");
  }
}

inline void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    throw input_error(std::string(what) + ": non-finite entries");
  }
}

/// Checks the basic design-matrix contract: at least one row and one column,
/// every entry finite.
inline void require_design(const Matrix& X) {
  if (X.rows() < 1 || X.cols() < 1) {
    throw contract_error("design matrix must be at least 1x1");
  }
  require_finite(X, "design matrix");
}

inline void require_response(const Matrix& X, const Vector& y) {
  if (y.size() != X.rows()) {
    throw contract_error("response length does not match design rows");
  }
  require_finite(y, "response");
}

/// Penalized least-squares problem pulling the weights toward `prior`.
struct RidgeProblem {
  Matrix X;
  Vector y;
  Vector prior;
  double theta = 0.0;
};

namespace detail {

struct OlsSolution {
  Vector weights;
  Eigen::Index rank;
};

/// Minimum-norm least squares through a rank-revealing complete orthogonal
/// decomposition. Rank-deficient designs fall back to the pseudoinverse
/// solution implied by the singular-value cutoff.
inline OlsSolution ols_min_norm(const Matrix& X, const Vector& y) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(X.rows(), X.cols());
  cod.setThreshold(kSingularValueCutoff);
  cod.compute(X);
  return {cod.solve(y), cod.rank()};
}

}  // namespace detail

/// Ordinary least squares. When the normal matrix is singular the
/// minimum-norm solution is returned.
inline Vector solve_ols(const Matrix& X, const Vector& y) {
  require_design(X);
  require_response(X, y);
  return detail::ols_min_norm(X, y).weights;
}

/// Minimizer of ||y - Xw||^2 + theta * ||w - prior||^2.
///
/// For theta > 0 the normal matrix is positive definite and solved by
/// Cholesky, with a self-adjoint eigensolve as fallback. theta == 0 routes
/// through solve_ols so the two agree exactly in the unpenalized case.
inline Vector solve_ridge_with_prior(const RidgeProblem& p) {
  require_design(p.X);
  require_response(p.X, p.y);
  if (p.prior.size() != p.X.cols()) {
    throw contract_error("prior length does not match design columns");
  }
  require_finite(p.prior, "prior");
  if (!(p.theta >= 0.0)) {
    throw contract_error("theta must be non-negative");
  }
  if (p.theta == 0.0) {
    return solve_ols(p.X, p.y);
  }

  const Eigen::Index m = p.X.cols();
  Matrix A = p.X.transpose() * p.X;
  A.diagonal().array() += p.theta;
  Vector b = p.X.transpose() * p.y + p.theta * p.prior;

  Eigen::LLT<Matrix> llt(A);
  if (llt.info() == Eigen::Success) {
    Vector w = llt.solve(b);
    if (w.allFinite()) return w;
  }

  // Cholesky can only fail here through severe ill-conditioning; solve in
  // the eigenbasis with the same null-space cutoff as the OLS path.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
  if (eig.info() != Eigen::Success) {
    throw numeric_error("ridge solve failed in both Cholesky and eigensolver");
  }
  const Vector& d = eig.eigenvalues();
  double cutoff = kSingularValueCutoff * d(m - 1);
  Vector z = eig.eigenvectors().transpose() * b;
  for (Eigen::Index i = 0; i < m; ++i) {
    z(i) = d(i) > cutoff ? z(i) / d(i) : 0.0;
  }
  return eig.eigenvectors() * z;
}

/// Least-squares fit of a single scalar shared by all predictors along the
/// sign direction q: argmin_w ||y - X (q w)||^2 = (Xq)'y / ||Xq||^2.
inline double fit_shared_scalar(const Matrix& X, const Vector& y,
                                const Vector& q) {
  require_design(X);
  require_response(X, y);
  if (q.size() != X.cols()) {
    throw contract_error("direction length does not match design columns");
  }
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    if (q(j) != -1.0 && q(j) != 0.0 && q(j) != 1.0) {
      throw input_error("direction vector must have entries in {-1, 0, +1}");
    }
  }
  Vector collapsed = X * q;
  double denom = collapsed.squaredNorm();
  if (denom == 0.0) {
    throw degenerate_error("collapsed design X*q is the zero vector");
  }
  return collapsed.dot(y) / denom;
}

}  // namespace priorreg
