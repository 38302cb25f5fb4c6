// SPDX-License-Identifier: Apache-2.0
//
// Phase-shift optimizers for the RIS-aided MISO model.
//
// Both algorithms minimize the objective tr(Q(phi)^{-1}) over unit-modulus
// phases, the surrogate that maximizing the worst-case-noise SNR bound
// reduces to. The phase vector enters Q only through the coupling scalar
// s = phi^H K phi with K = ris_corr o ris_user_cov^T, and dQ/ds is the PSD
// matrix ris_gain * tx_corr, so tr(Q^{-1}) is nonincreasing in s. Two
// consequences are exploited below: the gradient of the objective is a
// negative real multiple of K phi, and the per-element subproblem has the
// closed-form global minimizer implemented by elementwise_update.

#pragma once

#include "risopt/hermitian.hpp"
#include "risopt/model.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace risopt {

enum class PhaseInit { AllOnes, Random };

template <typename Scalar = double>
struct OptimizerConfig {
  int max_iters = 100;             // accepted steps (gradient) or sweeps (element-wise)
  Scalar rel_tol = Scalar(1e-8);   // stop when the relative objective decrease falls below
  Scalar armijo_c = Scalar(1e-4);  // sufficient-decrease fraction, in (0,1)
  Scalar armijo_shrink = Scalar(0.5);    // backtracking factor, in (0,1)
  Scalar armijo_init_step = Scalar(1);   // dimensionless initial trial step
  int max_backtracks = 40;
  PhaseInit init = PhaseInit::AllOnes;
  std::uint64_t init_seed = 0;  // used when init == Random

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

template <typename Scalar>
void validate(const OptimizerConfig<Scalar>& cfg) {
  if (cfg.max_iters < 1) throw std::invalid_argument("OptimizerConfig: max_iters must be >= 1");
  if (!(cfg.rel_tol > Scalar(0))) throw std::invalid_argument("OptimizerConfig: rel_tol must be > 0");
  if (!(cfg.armijo_c > Scalar(0) && cfg.armijo_c < Scalar(1))) {
    throw std::invalid_argument("OptimizerConfig: armijo_c must lie in (0,1)");
  }
  if (!(cfg.armijo_shrink > Scalar(0) && cfg.armijo_shrink < Scalar(1))) {
    throw std::invalid_argument("OptimizerConfig: armijo_shrink must lie in (0,1)");
  }
  if (!(cfg.armijo_init_step > Scalar(0))) {
    throw std::invalid_argument("OptimizerConfig: armijo_init_step must be > 0");
  }
  if (cfg.max_backtracks < 1) {
    throw std::invalid_argument("OptimizerConfig: max_backtracks must be >= 1");
  }
}

/// Outcome of one optimizer run. objective_trace[0] is the objective at
/// the initial phases; one further entry is appended per accepted step
/// (gradient method) or per completed sweep (element-wise method), so
/// iterations == objective_trace.size() - 1. The trace is non-increasing.
template <typename Scalar = double>
struct OptimizerReport {
  PhaseVector<Scalar> phi_final;
  std::vector<Scalar> objective_trace;
  int iterations = 0;
  bool converged = false;
  std::chrono::duration<double> wall_time{0};
};

/// Optimization objective tr(Q(phi)^{-1}).
template <typename Scalar>
Scalar objective(const StatisticalModel<Scalar>& model, const PhaseVector<Scalar>& phases) {
  const EffectiveStatistics<Scalar> stats = effective_covariance(model, phases);
  return HermitianSolver<Scalar>(stats.obs_cov).trace_inverse();
}

/// Search direction d = K phi with K = ris_corr o ris_user_cov^T. The
/// conjugate-coordinate gradient of the objective is -ris_gain * t_R * d
/// with t_R = tr(Q^{-1} tx_corr Q^{-1}) >= 0; the nonnegative scalar is
/// folded into the line search, so d itself is the ascent direction used
/// by optimize_pgd.
template <typename Scalar>
ComplexVector<Scalar> ascent_direction(const StatisticalModel<Scalar>& model,
                                       const PhaseVector<Scalar>& phases) {
  return coupling_matrix(model) * phases.coeffs();
}

/// Smooth extension of the objective to arbitrary complex vectors. The
/// coupling quadratic form is well defined off the unit-modulus torus, so
/// derivative checks can probe the objective at perturbed points that the
/// PhaseVector type would reject.
template <typename Scalar>
Scalar objective(const StatisticalModel<Scalar>& model, const ComplexVector<Scalar>& coeffs) {
  if (coeffs.size() != model.ris_corr.rows()) {
    throw std::invalid_argument("objective: vector length does not match ris_corr");
  }
  const std::complex<Scalar> raw = coeffs.dot(coupling_matrix(model) * coeffs);
  const EffectiveStatistics<Scalar> stats =
      effective_statistics_from_coupling(model, std::max(raw.real(), Scalar(0)));
  return HermitianSolver<Scalar>(stats.obs_cov).trace_inverse();
}

/// Element-wise Euclidean projection onto the unit-modulus torus. Entries
/// with modulus <= 1e-15 have no nearest point; they map to 1.
template <typename Scalar>
PhaseVector<Scalar> project_unit_modulus(const ComplexVector<Scalar>& v) {
  ComplexVector<Scalar> out(v.size());
  for (Eigen::Index n = 0; n < v.size(); ++n) {
    const Scalar mag = std::abs(v[n]);
    out[n] = mag <= Scalar(1e-15) ? std::complex<Scalar>(1, 0) : v[n] / mag;
  }
  return PhaseVector<Scalar>(std::move(out));
}

namespace detail {

/// Assembles Q(s) = direct_cov + obs_noise_cov + ris_gain * s * tx_corr
/// without touching the phase vector; both optimizers and the grid oracle
/// evaluate the objective through this.
template <typename Scalar>
struct CouplingEvaluator {
  ComplexMatrix<Scalar> base;       // direct_cov + obs_noise_cov
  ComplexMatrix<Scalar> scaled_tx;  // ris_gain * tx_corr

  explicit CouplingEvaluator(const StatisticalModel<Scalar>& model)
      : base(symmetrize(ComplexMatrix<Scalar>(model.direct_cov + model.obs_noise_cov))),
        scaled_tx(model.ris_gain * model.tx_corr) {}

  ComplexMatrix<Scalar> obs_cov(Scalar coupling) const {
    return symmetrize(ComplexMatrix<Scalar>(base + coupling * scaled_tx));
  }

  Scalar trace_inverse(Scalar coupling) const {
    return HermitianSolver<Scalar>(obs_cov(coupling)).trace_inverse();
  }
};

template <typename Scalar>
Scalar coupling_quadratic_form(const ComplexMatrix<Scalar>& coupling_mat,
                               const ComplexVector<Scalar>& phi) {
  return std::max(phi.dot(coupling_mat * phi).real(), Scalar(0));
}

template <typename Scalar>
ComplexVector<Scalar> initial_phases(const OptimizerConfig<Scalar>& cfg, Eigen::Index n);

}  // namespace detail

/// I.i.d. uniform phases on the unit circle; deterministic given the seed.
template <typename Scalar = double>
PhaseVector<Scalar> random_phases(std::uint64_t seed, Eigen::Index n) {
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<Scalar> angle(Scalar(0), Scalar(2) * std::numbers::pi_v<Scalar>);
  ComplexVector<Scalar> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = std::polar(Scalar(1), angle(engine));
  }
  return PhaseVector<Scalar>(std::move(out));
}

namespace detail {

template <typename Scalar>
ComplexVector<Scalar> initial_phases(const OptimizerConfig<Scalar>& cfg, Eigen::Index n) {
  if (cfg.init == PhaseInit::Random) {
    return random_phases<Scalar>(cfg.init_seed, n).coeffs();
  }
  return ComplexVector<Scalar>::Ones(n);
}

}  // namespace detail

/// Projected gradient descent with Armijo backtracking.
///
/// Each iteration steps along d = K phi and projects back onto the torus.
/// The directional derivative of the objective per unit step is
/// -2 ris_gain t_R |d|^2, so the sufficient-decrease test accepts kappa
/// when f(project(phi + kappa d)) <= f(phi) - c kappa 2 ris_gain t_R |d|^2.
/// The first trial step is armijo_init_step * |phi| / |d|, which makes the
/// line search invariant to the overall scale of the coupling matrix.
/// A vanishing derivative, an exhausted backtrack budget, or a relative
/// decrease below rel_tol all terminate with converged = true; only
/// running into max_iters reports converged = false.
template <typename Scalar>
OptimizerReport<Scalar> optimize_pgd(const StatisticalModel<Scalar>& model,
                                     const OptimizerConfig<Scalar>& cfg) {
  validate(cfg);
  const auto t_start = std::chrono::steady_clock::now();

  const ComplexMatrix<Scalar> coupling_mat = coupling_matrix(model);
  const detail::CouplingEvaluator<Scalar> eval(model);

  ComplexVector<Scalar> phi = detail::initial_phases(cfg, model.ris_elements());
  Scalar coupling = detail::coupling_quadratic_form(coupling_mat, phi);
  HermitianSolver<Scalar> solver(eval.obs_cov(coupling));
  Scalar f = solver.trace_inverse();

  std::vector<Scalar> trace{f};
  bool converged = false;

  while (static_cast<int>(trace.size()) - 1 < cfg.max_iters) {
    const ComplexVector<Scalar> d = coupling_mat * phi;
    const Scalar t_r = solver.solve(solver.solve(model.tx_corr)).trace().real();
    const Scalar slope = Scalar(2) * model.ris_gain * t_r * d.squaredNorm();
    if (!(slope > Scalar(0))) {
      converged = true;  // gradient vanishes; phi is stationary
      break;
    }

    Scalar kappa = cfg.armijo_init_step * std::sqrt(Scalar(phi.size())) / d.norm();
    bool accepted = false;
    ComplexVector<Scalar> phi_next;
    Scalar coupling_next = 0;
    Scalar f_next = 0;
    for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
      phi_next = project_unit_modulus<Scalar>(phi + kappa * d).coeffs();
      coupling_next = detail::coupling_quadratic_form(coupling_mat, phi_next);
      f_next = eval.trace_inverse(coupling_next);
      if (f_next <= f - cfg.armijo_c * kappa * slope) {
        accepted = true;
        break;
      }
      kappa *= cfg.armijo_shrink;
    }
    if (!accepted) {
      converged = true;  // no improving step within the backtrack budget
      break;
    }

    const Scalar decrease = (f - f_next) / std::max(f, Scalar(1e-300));
    phi = std::move(phi_next);
    coupling = coupling_next;
    solver = HermitianSolver<Scalar>(eval.obs_cov(coupling));
    f = f_next;
    trace.push_back(f);
    if (decrease < cfg.rel_tol) {
      converged = true;
      break;
    }
  }

  const auto t_end = std::chrono::steady_clock::now();
  const int iterations = static_cast<int>(trace.size()) - 1;
  return OptimizerReport<Scalar>{PhaseVector<Scalar>(std::move(phi)), std::move(trace), iterations,
                                 converged, t_end - t_start};
}

/// Splits Q(phi) = D + phi_n B_n + conj(phi_n) B_n^H for element n
/// (0-based). B_n = ris_gain * b_n * tx_corr with
/// b_n = sum_{i != n} conj(phi_i) K_{i,n}; D collects everything that does
/// not depend on phi_n.
template <typename Scalar>
std::pair<ComplexMatrix<Scalar>, ComplexMatrix<Scalar>> elementwise_matrices(
    const StatisticalModel<Scalar>& model, const PhaseVector<Scalar>& phases, Eigen::Index n) {
  if (n < 0 || n >= phases.size()) {
    throw std::invalid_argument("elementwise_matrices: element index out of range");
  }
  const ComplexMatrix<Scalar> coupling_mat = coupling_matrix(model);
  const ComplexVector<Scalar>& phi = phases.coeffs();
  const std::complex<Scalar> b_n =
      phi.dot(coupling_mat.col(n)) - std::conj(phi[n]) * coupling_mat(n, n);
  const Scalar coupling = detail::coupling_quadratic_form(coupling_mat, phi);
  const Scalar coupling_rest = coupling - Scalar(2) * (phi[n] * b_n).real();
  ComplexMatrix<Scalar> d_mat = symmetrize(ComplexMatrix<Scalar>(
      model.direct_cov + model.obs_noise_cov +
      (model.ris_gain * coupling_rest) * model.tx_corr));
  ComplexMatrix<Scalar> b_mat = (model.ris_gain * b_n) * model.tx_corr;
  return {std::move(d_mat), std::move(b_mat)};
}

/// Closed-form optimizer of tr(Q^{-1}) over one phase,
/// t / |t| with t = tr(Q_bar^{-1} B_n^H Q_bar^{-1}). Q_bar is Q at the
/// current phases; since t is a positive real multiple of conj(b_n), the
/// result is the exact per-element global minimizer whatever phi_n went
/// into Q_bar. |t| <= 1e-14 means the objective is flat in this phase and
/// phi_prev is kept.
template <typename Scalar>
std::complex<Scalar> elementwise_update(const ComplexMatrix<Scalar>& obs_cov_current,
                                        const ComplexMatrix<Scalar>& b_mat,
                                        std::complex<Scalar> phi_prev) {
  const HermitianSolver<Scalar> solver(obs_cov_current);
  const std::complex<Scalar> t = solver.solve(solver.solve(b_mat.adjoint())).trace();
  const Scalar mag = std::abs(t);
  if (mag <= Scalar(1e-14)) return phi_prev;
  return t / mag;
}

/// Cyclic element-wise minimization. Each sweep visits n = 0..N-1 in
/// order; Q and the element split are rebuilt from the current phases
/// before every update, so each update is an exact coordinate minimization
/// and the sweep objective cannot increase. One trace entry is appended
/// per sweep. A sweep whose objective gain falls below rel_tol terminates
/// with converged = true.
template <typename Scalar>
OptimizerReport<Scalar> optimize_elementwise(const StatisticalModel<Scalar>& model,
                                             const OptimizerConfig<Scalar>& cfg) {
  validate(cfg);
  const auto t_start = std::chrono::steady_clock::now();

  const ComplexMatrix<Scalar> coupling_mat = coupling_matrix(model);
  const detail::CouplingEvaluator<Scalar> eval(model);
  const Eigen::Index n_elements = model.ris_elements();

  ComplexVector<Scalar> phi = detail::initial_phases(cfg, n_elements);
  Scalar coupling = detail::coupling_quadratic_form(coupling_mat, phi);
  Scalar f = eval.trace_inverse(coupling);

  std::vector<Scalar> trace{f};
  bool converged = false;

  while (static_cast<int>(trace.size()) - 1 < cfg.max_iters) {
    const ComplexVector<Scalar> phi_before = phi;
    for (Eigen::Index n = 0; n < n_elements; ++n) {
      const std::complex<Scalar> b_n =
          phi.dot(coupling_mat.col(n)) - std::conj(phi[n]) * coupling_mat(n, n);
      const ComplexMatrix<Scalar> b_mat = (model.ris_gain * b_n) * model.tx_corr;
      const std::complex<Scalar> phi_new =
          elementwise_update(eval.obs_cov(coupling), b_mat, phi[n]);
      coupling += Scalar(2) * ((phi_new - phi[n]) * b_n).real();
      phi[n] = phi_new;
    }
    coupling = detail::coupling_quadratic_form(coupling_mat, phi);
    const Scalar f_next = eval.trace_inverse(coupling);
    if (f_next > f) {
      // Round-off at numerical stationarity; the exact sweep cannot ascend.
      phi = phi_before;
      converged = true;
      break;
    }
    const Scalar decrease = (f - f_next) / std::max(f, Scalar(1e-300));
    f = f_next;
    trace.push_back(f);
    if (decrease < cfg.rel_tol) {
      converged = true;
      break;
    }
  }

  const auto t_end = std::chrono::steady_clock::now();
  const int iterations = static_cast<int>(trace.size()) - 1;
  return OptimizerReport<Scalar>{PhaseVector<Scalar>(std::move(phi)), std::move(trace), iterations,
                                 converged, t_end - t_start};
}

/// Exhaustive oracle: minimizes tr(Q^{-1}) over the per-element grid
/// {exp(2 pi i k / grid_points)} with the first element pinned to 1 (the
/// objective is invariant to a global phase). Enumeration is odometer
/// order with the last element fastest; ties keep the first enumerated
/// point, so the result is deterministic. Grids beyond 1e7 points are
/// rejected.
template <typename Scalar>
std::pair<PhaseVector<Scalar>, Scalar> brute_force_phases(const StatisticalModel<Scalar>& model,
                                                          int grid_points) {
  if (grid_points < 1) throw std::invalid_argument("brute_force_phases: grid_points must be >= 1");
  const Eigen::Index n_elements = model.ris_elements();
  double total = 1;
  for (Eigen::Index i = 0; i < n_elements; ++i) {
    total *= grid_points;
    if (total > 1e7) throw std::invalid_argument("brute_force_phases: grid too large");
  }

  std::vector<std::complex<Scalar>> wheel(static_cast<std::size_t>(grid_points));
  for (int k = 0; k < grid_points; ++k) {
    wheel[k] = std::polar(Scalar(1), Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(k) /
                                         Scalar(grid_points));
  }

  const ComplexMatrix<Scalar> coupling_mat = coupling_matrix(model);
  const detail::CouplingEvaluator<Scalar> eval(model);

  ComplexVector<Scalar> phi = ComplexVector<Scalar>::Ones(n_elements);
  ComplexVector<Scalar> best_phi = phi;
  Scalar best_f = eval.trace_inverse(detail::coupling_quadratic_form(coupling_mat, phi));

  std::vector<int> idx(static_cast<std::size_t>(n_elements), 0);
  while (true) {
    // Advance the odometer over elements 1..N-1, last element fastest.
    Eigen::Index pos = n_elements - 1;
    while (pos >= 1) {
      if (++idx[pos] < grid_points) break;
      idx[pos] = 0;
      --pos;
    }
    if (pos < 1) break;
    for (Eigen::Index i = 1; i < n_elements; ++i) phi[i] = wheel[idx[i]];
    const Scalar f = eval.trace_inverse(detail::coupling_quadratic_form(coupling_mat, phi));
    if (f < best_f) {
      best_f = f;
      best_phi = phi;
    }
  }
  return {PhaseVector<Scalar>(std::move(best_phi)), best_f};
}

}  // namespace risopt
