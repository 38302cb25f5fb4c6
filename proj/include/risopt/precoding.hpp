// SPDX-License-Identifier: Apache-2.0
//
// Closed-form bilinear precoder and the worst-case-noise SNR lower bound.
//
// The transmit filter is p = A psi with psi the noisy channel observation.
// Treating the estimation error as worst-case Gaussian noise gives the SNR
// lower bound
//
//   gamma(A) = |tr(A C)|^2 / (tr(A Q A^H C) + sigma^2),
//
// maximized under the power constraint tr(A Q A^H) = P by A = eta Q^{-1}
// with eta = sqrt(P / tr(Q^{-1})). At the optimum the bound collapses to a
// scalar function of x = tr(Q^{-1} C) that is strictly increasing on
// (0, M), which is why the phase optimizers can work on tr(Q^{-1}) alone.

#pragma once

#include "risopt/hermitian.hpp"
#include "risopt/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace risopt {

/// Bilinear transform A and its power-normalization gain.
template <typename Scalar = double>
struct Precoder {
  ComplexMatrix<Scalar> transform;  // A, M x M
  Scalar gain = 0;                  // eta >= 0
};

/// SNR-optimal transform A = eta Q^{-1} under tx power budget `tx_power`.
/// The power constraint tr(A Q A^H) = eta^2 tr(Q^{-1}) is tight by
/// construction. tx_power = 0 yields the zero transform rather than an
/// error so power sweeps can include the origin.
template <typename Scalar>
Precoder<Scalar> optimal_transform(const ComplexMatrix<Scalar>& obs_cov, Scalar tx_power) {
  if (!(tx_power >= Scalar(0))) {
    throw std::invalid_argument("optimal_transform: tx_power must be >= 0");
  }
  const HermitianSolver<Scalar> solver(obs_cov);
  Precoder<Scalar> precoder;
  if (tx_power == Scalar(0)) {
    precoder.gain = Scalar(0);
    precoder.transform = ComplexMatrix<Scalar>::Zero(obs_cov.rows(), obs_cov.cols());
    return precoder;
  }
  const ComplexMatrix<Scalar> inverse = solver.inverse();
  precoder.gain = std::sqrt(tx_power / inverse.trace().real());
  precoder.transform = precoder.gain * inverse;
  return precoder;
}

/// Worst-case-noise SNR lower bound for an arbitrary transform,
/// |tr(A C)|^2 / (tr(A Q A^H C) + sigma^2).
template <typename Scalar>
Scalar snr_lower_bound_general(const ComplexMatrix<Scalar>& transform,
                               const ComplexMatrix<Scalar>& effective_cov,
                               const ComplexMatrix<Scalar>& obs_cov, Scalar noise_var) {
  const Eigen::Index m = transform.rows();
  if (transform.cols() != m || effective_cov.rows() != m || effective_cov.cols() != m ||
      obs_cov.rows() != m || obs_cov.cols() != m) {
    throw std::invalid_argument("snr_lower_bound_general: dimension mismatch");
  }
  if (!(noise_var > Scalar(0))) {
    throw std::invalid_argument("snr_lower_bound_general: noise_var must be > 0");
  }
  const std::complex<Scalar> signal = (transform * effective_cov).trace();
  const Scalar interference =
      (transform * obs_cov * transform.adjoint() * effective_cov).trace().real();
  return std::norm(signal) / (interference + noise_var);
}

/// SNR lower bound at the optimal transform,
/// x^2 / (x + sigma^2 tr(Q^{-1}) / P) with x = tr(Q^{-1} C).
/// tx_power = 0 returns 0 (the gain vanishes).
template <typename Scalar>
Scalar snr_lower_bound_optimal(const ComplexMatrix<Scalar>& effective_cov,
                               const ComplexMatrix<Scalar>& obs_cov, Scalar tx_power,
                               Scalar noise_var) {
  const HermitianSolver<Scalar> solver(obs_cov);
  if (tx_power == Scalar(0)) return Scalar(0);
  const Scalar x = solver.solve(effective_cov).trace().real();
  return x * x / (x + noise_var * solver.trace_inverse() / tx_power);
}

/// Scalar form of the optimal-transform bound when the observation noise
/// is white, obs_noise_cov = zeta^2 I. With x = tr(Q^{-1} C) and
/// tr(Q^{-1}) = (M - x)/zeta^2 the bound becomes
///
///   f(x) = x^2 / (k1 x + k2),
///   k1 = 1 - sigma^2/(P zeta^2), k2 = sigma^2 M / (P zeta^2),
///
/// which is strictly increasing on (0, M) regardless of the sign of k1.
template <typename Scalar>
Scalar scalar_snr(Scalar x, const SystemDims<Scalar>& dims) {
  if (!(x >= Scalar(0))) throw std::invalid_argument("scalar_snr: x must be >= 0");
  if (!(dims.tx_power > Scalar(0))) throw std::invalid_argument("scalar_snr: tx_power must be > 0");
  const Scalar ratio = dims.noise_var / (dims.tx_power * dims.obs_noise_var);
  const Scalar k1 = Scalar(1) - ratio;
  const Scalar k2 = ratio * Scalar(dims.bs_antennas);
  if (x == Scalar(0)) return Scalar(0);
  return x * x / (k1 * x + k2);
}

/// Achievable-rate lower bound log2(1 + gamma) in bits per channel use.
template <typename Scalar>
Scalar rate_lower_bound(Scalar gamma) {
  if (!(gamma >= Scalar(0))) throw std::invalid_argument("rate_lower_bound: gamma must be >= 0");
  return std::log1p(gamma) / std::numbers::ln2_v<Scalar>;
}

}  // namespace risopt
