// SPDX-License-Identifier: Apache-2.0
//
// Dense Hermitian helpers shared by the covariance algebra, the precoder
// and the samplers. Everything is templated on the real scalar type and
// uses Eigen's self-adjoint machinery underneath.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace risopt {

template <typename Scalar>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
using RealVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using ComplexMatrixXd = ComplexMatrix<double>;
using ComplexVectorXd = ComplexVector<double>;

/// Thrown when a matrix that must be inverted is numerically singular.
class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (X + X^H)/2, the nearest Hermitian matrix in Frobenius norm.
template <typename Derived>
auto symmetrize(const Eigen::MatrixBase<Derived>& x) {
  return ((x + x.adjoint()) / 2).eval();
}

/// Largest entrywise deviation |X - X^H|.
template <typename Derived>
auto hermiticity_defect(const Eigen::MatrixBase<Derived>& x) {
  return (x - x.adjoint()).cwiseAbs().maxCoeff();
}

/// Smallest eigenvalue of a Hermitian matrix.
template <typename Scalar>
Scalar min_eigenvalue(const ComplexMatrix<Scalar>& x) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> eig(x, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

/// Reconstructs X with eigenvalues below zero clamped to zero.
template <typename Scalar>
ComplexMatrix<Scalar> clamp_psd(const ComplexMatrix<Scalar>& x) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> eig(x);
  RealVector<Scalar> lambda = eig.eigenvalues().cwiseMax(Scalar(0));
  return symmetrize(eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().adjoint());
}

/// Hermitian square root F with F F^H = X, via eigendecomposition.
/// Negative eigenvalues are clamped at zero, so rank-deficient PSD inputs
/// (where a Cholesky factorization would fail) are handled.
template <typename Scalar>
ComplexMatrix<Scalar> hermitian_sqrt(const ComplexMatrix<Scalar>& x) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> eig(x);
  RealVector<Scalar> lambda = eig.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return symmetrize(eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().adjoint());
}

/// Factorization wrapper for Hermitian positive definite systems.
///
/// Solves are done from the factorization with multiple right-hand sides;
/// the explicit inverse is only ever formed as solve(I). A reciprocal
/// condition estimate guards against near-singular inputs: anything with
/// an estimated condition number above `max_condition` throws instead of
/// silently returning garbage.
template <typename Scalar>
class HermitianSolver {
 public:
  explicit HermitianSolver(const ComplexMatrix<Scalar>& x,
                           Scalar max_condition = Scalar(1e14)) {
    if (x.rows() != x.cols()) {
      throw std::invalid_argument("HermitianSolver: matrix must be square");
    }
    ldlt_.compute(x);
    if (ldlt_.info() != Eigen::Success || !ldlt_.isPositive() ||
        ldlt_.rcond() < Scalar(1) / max_condition) {
      throw SingularMatrixError(
          "Hermitian solve rejected: matrix is singular or its condition "
          "estimate exceeds " + std::to_string(static_cast<double>(max_condition)));
    }
  }

  template <typename Rhs>
  ComplexMatrix<Scalar> solve(const Rhs& b) const {
    return ldlt_.solve(b);
  }

  /// Q^{-1} as solve(I), symmetrized to suppress round-off drift.
  ComplexMatrix<Scalar> inverse() const {
    const Eigen::Index n = ldlt_.rows();
    return symmetrize(ldlt_.solve(ComplexMatrix<Scalar>::Identity(n, n)));
  }

  /// tr(Q^{-1}); real and positive for positive definite Q.
  Scalar trace_inverse() const {
    const Eigen::Index n = ldlt_.rows();
    return ldlt_.solve(ComplexMatrix<Scalar>::Identity(n, n)).trace().real();
  }

 private:
  Eigen::LDLT<ComplexMatrix<Scalar>> ldlt_;
};

}  // namespace risopt
