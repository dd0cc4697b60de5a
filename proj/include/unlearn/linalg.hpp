#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "unlearn/errors.hpp"

namespace unlearn {

/// Symmetric eigendecomposition with a deterministic convention: eigenvalues
/// nonincreasing, and each eigenvector's largest-magnitude coordinate (first
/// index on ties) positive.
struct SymmetricEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns match `values`
};

inline SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw ConfigError("matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) throw DegenerateError("eigendecomposition failed");
  const Eigen::Index d = a.rows();
  SymmetricEigen out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double mag = std::abs(out.vectors(i, j));
      if (mag > best * (1.0 + 1e-12)) {
        best = mag;
        arg = i;
      }
    }
    if (out.vectors(arg, j) < 0.0) out.vectors.col(j) *= -1.0;
  }
  return out;
}

inline double min_eigenvalue(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw DegenerateError("eigendecomposition failed");
  return solver.eigenvalues()(0);
}

inline double max_eigenvalue(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw DegenerateError("eigendecomposition failed");
  return solver.eigenvalues()(a.rows() - 1);
}

/// Spectral (operator) norm of a symmetric matrix.
inline double symmetric_operator_norm(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Projector onto the span of the top-k eigenvectors.
inline Eigen::MatrixXd top_k_projector(const Eigen::MatrixXd& symmetric, Eigen::Index k) {
  if (k < 1 || k > symmetric.rows()) throw ConfigError("k out of range");
  const SymmetricEigen eig = symmetric_eigen(0.5 * (symmetric + symmetric.transpose()));
  const Eigen::MatrixXd basis = eig.vectors.leftCols(k);
  return basis * basis.transpose();
}

}  // namespace unlearn
