// SPDX-License-Identifier: Apache-2.0
//
// Domain types for the RIS-aided single-user MISO downlink and the
// covariance algebra that maps a phase-shift vector to the second-order
// statistics of the effective channel.
//
// The channel model is zero mean throughout. The BS-RIS link follows a
// Kronecker correlation model with gain `ris_gain`, so the covariance of
// the effective channel collapses to
//
//   C(phi) = direct_cov + ris_gain * s(phi) * tx_corr,
//   s(phi) = phi^H (ris_corr o ris_user_cov^T) phi,
//
// with o the entrywise (Hadamard) product. The observation covariance is
// Q = C + obs_noise_cov. Everything downstream (precoder, optimizers,
// samplers) works on these two matrices and the coupling scalar s.

#pragma once

#include "risopt/hermitian.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace risopt {

/// Static link dimensions and power levels.
template <typename Scalar = double>
struct SystemDims {
  Eigen::Index bs_antennas = 0;   // M
  Eigen::Index ris_elements = 0;  // N
  Scalar tx_power = 1;            // P, linear scale
  Scalar noise_var = 1;           // receiver noise variance sigma^2
  Scalar obs_noise_var = 1;       // observation noise variance zeta^2

  friend bool operator==(const SystemDims&, const SystemDims&) = default;
};

template <typename Scalar>
void validate(const SystemDims<Scalar>& dims) {
  if (dims.bs_antennas < 1) throw std::invalid_argument("SystemDims: bs_antennas must be >= 1");
  if (dims.ris_elements < 1) throw std::invalid_argument("SystemDims: ris_elements must be >= 1");
  if (!(dims.tx_power >= Scalar(0))) throw std::invalid_argument("SystemDims: tx_power must be >= 0");
  if (!(dims.noise_var > Scalar(0))) throw std::invalid_argument("SystemDims: noise_var must be > 0");
  if (!(dims.obs_noise_var > Scalar(0))) throw std::invalid_argument("SystemDims: obs_noise_var must be > 0");
}

/// Per-element RIS phase shifts. Every coefficient lies on the unit
/// circle; construction rejects anything off it by more than 1e-12.
template <typename Scalar = double>
class PhaseVector {
 public:
  static constexpr Scalar unit_tolerance = Scalar(1e-12);

  explicit PhaseVector(ComplexVector<Scalar> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.size() == 0) {
      throw std::invalid_argument("PhaseVector: empty coefficient vector");
    }
    for (Eigen::Index n = 0; n < coeffs_.size(); ++n) {
      if (std::abs(std::abs(coeffs_[n]) - Scalar(1)) > unit_tolerance) {
        throw std::invalid_argument("PhaseVector: entry " + std::to_string(n) +
                                    " is not unit modulus");
      }
    }
  }

  static PhaseVector all_ones(Eigen::Index n) {
    return PhaseVector(ComplexVector<Scalar>::Ones(n));
  }

  const ComplexVector<Scalar>& coeffs() const { return coeffs_; }
  Eigen::Index size() const { return coeffs_.size(); }

 private:
  ComplexVector<Scalar> coeffs_;
};

/// Second-order statistics of all links. All matrices are Hermitian PSD;
/// `validate_model` normalizes and enforces the invariants after assembly.
template <typename Scalar = double>
struct StatisticalModel {
  ComplexMatrix<Scalar> direct_cov;    // BS-user channel covariance, M x M
  ComplexMatrix<Scalar> ris_user_cov;  // RIS-user channel covariance, N x N
  ComplexMatrix<Scalar> ris_corr;      // RIS-side correlation of the BS-RIS link, N x N
  ComplexMatrix<Scalar> tx_corr;       // BS-side correlation of the BS-RIS link, M x M
  Scalar ris_gain = 0;                 // Kronecker-model scaling, >= 0
  ComplexMatrix<Scalar> obs_noise_cov; // observation noise covariance, M x M

  Eigen::Index bs_antennas() const { return direct_cov.rows(); }
  Eigen::Index ris_elements() const { return ris_corr.rows(); }
};

namespace detail {

template <typename Scalar>
void normalize_covariance(ComplexMatrix<Scalar>& x, const char* name) {
  if (x.rows() != x.cols()) {
    throw std::invalid_argument(std::string(name) + ": covariance must be square");
  }
  const Scalar scale = std::max(Scalar(1), x.cwiseAbs().maxCoeff());
  if (hermiticity_defect(x) > Scalar(1e-12) * scale) {
    throw std::invalid_argument(std::string(name) + ": matrix is not Hermitian");
  }
  x = symmetrize(x);  // suppress floating-point drift
  const Scalar lambda_min = min_eigenvalue(x);
  if (lambda_min < Scalar(-1e-10) * scale) {
    throw std::invalid_argument(std::string(name) + ": matrix is not positive semidefinite");
  }
  if (lambda_min < Scalar(0)) {
    x = clamp_psd(x);
  }
}

}  // namespace detail

/// Symmetrizes, clamps stray negative eigenvalues at zero and checks the
/// model invariants. Throws std::invalid_argument on anything that cannot
/// be repaired (non-Hermitian inputs, genuinely indefinite matrices,
/// mismatched dimensions, violated trace convention tr(tx_corr) = tr(ris_corr)).
template <typename Scalar>
void validate_model(StatisticalModel<Scalar>& model) {
  detail::normalize_covariance(model.direct_cov, "direct_cov");
  detail::normalize_covariance(model.ris_user_cov, "ris_user_cov");
  detail::normalize_covariance(model.ris_corr, "ris_corr");
  detail::normalize_covariance(model.tx_corr, "tx_corr");
  detail::normalize_covariance(model.obs_noise_cov, "obs_noise_cov");

  const Eigen::Index m = model.direct_cov.rows();
  const Eigen::Index n = model.ris_corr.rows();
  if (model.tx_corr.rows() != m || model.obs_noise_cov.rows() != m) {
    throw std::invalid_argument("StatisticalModel: BS-side matrices disagree on antenna count");
  }
  if (model.ris_user_cov.rows() != n) {
    throw std::invalid_argument("StatisticalModel: RIS-side matrices disagree on element count");
  }
  if (!(model.ris_gain >= Scalar(0))) {
    throw std::invalid_argument("StatisticalModel: ris_gain must be >= 0");
  }
  const Scalar tr_tx = model.tx_corr.trace().real();
  const Scalar tr_ris = model.ris_corr.trace().real();
  if (std::abs(tr_tx - tr_ris) > Scalar(1e-9) * std::max(std::abs(tr_tx), Scalar(1))) {
    throw std::invalid_argument("StatisticalModel: tr(tx_corr) must equal tr(ris_corr)");
  }
}

/// Effective-channel statistics for one phase vector.
template <typename Scalar = double>
struct EffectiveStatistics {
  ComplexMatrix<Scalar> effective_cov;  // C = direct_cov + ris_gain * coupling * tx_corr
  ComplexMatrix<Scalar> obs_cov;        // Q = C + obs_noise_cov
  Scalar coupling = 0;                  // s = phi^H (ris_corr o ris_user_cov^T) phi, >= 0
};

/// One draw of the fading channel. `effective` satisfies
/// effective = direct + bs_ris^H diag(phi) ris_user by construction.
template <typename Scalar = double>
struct ChannelRealization {
  ComplexVector<Scalar> direct;    // h_d, length M
  ComplexVector<Scalar> ris_user;  // r, length N
  ComplexMatrix<Scalar> bs_ris;    // T, N x M
  ComplexVector<Scalar> effective; // h, length M
};

/// Noisy least-squares channel observation, estimate = effective + noise.
template <typename Scalar = double>
struct Observation {
  ComplexVector<Scalar> estimate;  // psi
  ComplexVector<Scalar> noise;     // n
};

/// Entrywise product ris_corr o ris_user_cov^T. Hermitian, and PSD by the
/// Schur product theorem. This is the only matrix through which the phase
/// vector enters the objective.
template <typename Scalar>
ComplexMatrix<Scalar> coupling_matrix(const StatisticalModel<Scalar>& model) {
  if (model.ris_corr.rows() != model.ris_user_cov.rows() ||
      model.ris_corr.cols() != model.ris_user_cov.cols()) {
    throw std::invalid_argument("coupling_matrix: ris_corr and ris_user_cov dimensions differ");
  }
  return model.ris_corr.cwiseProduct(model.ris_user_cov.transpose());
}

/// Coupling scalar s = phi^H (ris_corr o ris_user_cov^T) phi. The value is
/// real up to round-off; an imaginary residue beyond 1e-10 (relative)
/// signals corrupted inputs and throws.
template <typename Scalar>
Scalar coupling_scalar(const StatisticalModel<Scalar>& model, const PhaseVector<Scalar>& phases) {
  if (phases.size() != model.ris_corr.rows()) {
    throw std::invalid_argument("coupling_scalar: phase vector length does not match RIS size");
  }
  const ComplexMatrix<Scalar> k = coupling_matrix(model);
  const std::complex<Scalar> raw = phases.coeffs().dot(k * phases.coeffs());
  const Scalar tol = Scalar(1e-10) * std::max(Scalar(1), std::abs(raw));
  if (std::abs(raw.imag()) > tol) {
    throw std::invalid_argument("coupling_scalar: imaginary residue exceeds tolerance");
  }
  return std::max(raw.real(), Scalar(0));
}

/// Statistics for a directly supplied coupling scalar. Shared by the phase
/// optimizers and the exhaustive grid search, which evaluate many coupling
/// values against one model.
template <typename Scalar>
EffectiveStatistics<Scalar> effective_statistics_from_coupling(
    const StatisticalModel<Scalar>& model, Scalar coupling) {
  EffectiveStatistics<Scalar> stats;
  stats.coupling = coupling;
  stats.effective_cov =
      symmetrize(model.direct_cov + model.ris_gain * coupling * model.tx_corr);
  stats.obs_cov = symmetrize(stats.effective_cov + model.obs_noise_cov);
  return stats;
}

/// Effective and observation covariance for one phase vector,
/// C = direct_cov + ris_gain * s * tx_corr and Q = C + obs_noise_cov.
/// A singular Q is not rejected here; it surfaces as SingularMatrixError
/// at the first attempt to invert it.
template <typename Scalar>
EffectiveStatistics<Scalar> effective_covariance(const StatisticalModel<Scalar>& model,
                                                 const PhaseVector<Scalar>& phases) {
  return effective_statistics_from_coupling(model, coupling_scalar(model, phases));
}

}  // namespace risopt
