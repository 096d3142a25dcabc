#pragma once

// Lowest eigenpair of the symmetric pencil A x = lambda M x, M diagonal
// positive, by restarted Lanczos on the shift-inverted operator
// T = (A - sigma M)^{-1} M, which is self-adjoint in the M inner product.

#include "lamlab/core.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace lamlab::detail {

struct EigenpairOutcome {
  double lambda = 0.0;
  NodeField vector;      // M-normalized, nonnegative mean
  double residual = 0.0; // ||M^{-1}(A x - lambda M x)||_M
  int iterations = 0;    // linear solves performed
  bool converged = false;
};

inline double pencil_residual(const Eigen::SparseMatrix<double>& A, const NodeField& m,
                              const NodeField& x, double lambda) {
  const NodeField r = A * x - lambda * m.cwiseProduct(x);
  return std::sqrt((r.array().square() / m.array()).sum());
}

/// `sigma` must lie strictly below the spectrum so A - sigma M is SPD.
inline EigenpairOutcome smallest_eigenpair(const Eigen::SparseMatrix<double>& A, const NodeField& m,
                                           double sigma, double tolerance, int krylov_dim,
                                           int max_restarts, NodeField start) {
  const Index n = A.rows();
  EigenpairOutcome out;
  if (n == 1) {
    out.lambda = A.coeff(0, 0) / m[0];
    out.vector = NodeField::Constant(1, 1.0 / std::sqrt(m[0]));
    out.converged = true;
    return out;
  }

  Eigen::SparseMatrix<double> shifted = A;
  for (Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= sigma * m[i];
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
  if (solver.info() != Eigen::Success)
    throw SolverError("shifted pencil is not positive definite; shift is not below the spectrum",
                      std::numeric_limits<double>::infinity());

  auto m_norm = [&m](const NodeField& v) { return std::sqrt((m.array() * v.array().square()).sum()); };

  NodeField x = std::move(start);
  x /= m_norm(x);
  const Index k_max = std::min<Index>(krylov_dim, n);
  Eigen::MatrixXd Q(n, k_max), W(n, k_max);
  double best = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < max_restarts; ++restart) {
    Q.col(0) = x;
    Index k = 0;
    for (Index j = 0; j < k_max; ++j) {
      W.col(j) = solver.solve(m.cwiseProduct(Q.col(j)));
      ++out.iterations;
      k = j + 1;
      if (j + 1 == k_max) break;
      NodeField v = W.col(j);
      const double wnorm = m_norm(v);
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd coeff = Q.leftCols(j + 1).transpose() * m.cwiseProduct(v);
        v -= Q.leftCols(j + 1) * coeff;
      }
      const double beta = m_norm(v);
      if (!(beta > 1e-13 * wnorm)) break;
      Q.col(j + 1) = v / beta;
    }

    // Rayleigh-Ritz on span(Q_k): H = Q^T M T Q.
    Eigen::MatrixXd H = Q.leftCols(k).transpose() * m.asDiagonal() * W.leftCols(k);
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(H);
    const Eigen::VectorXd s = ritz.eigenvectors().col(k - 1);

    // T applied to the Ritz vector comes for free as W s: one extra inverse step.
    NodeField z = W.leftCols(k) * s;
    z /= m_norm(z);
    if (m.dot(z) < 0.0) z = -z;
    const double lambda = z.dot(A * z) / (m.array() * z.array().square()).sum();
    const double res = pencil_residual(A, m, z, lambda);
    if (res < best) {
      best = res;
      out.lambda = lambda;
      out.vector = z;
      out.residual = res;
    }
    if (res <= tolerance) {
      out.converged = true;
      return out;
    }
    x = z;
  }
  return out;
}

}  // namespace lamlab::detail
