// SPDX-License-Identifier: Apache-2.0
//
// Scenario-driven covariance generation, channel/observation sampling and
// Monte-Carlo rate evaluation.
//
// Determinism contract: every random quantity is drawn from an engine
// seeded by substream_seed(seed, stream tag, indices), so a result is a
// pure function of (seed, indices) and never of thread scheduling.
// Monte-Carlo accumulation writes each sample into its own slot and
// reduces serially in index order, which makes the output bytes
// independent of the worker-thread count.

#pragma once

#include "risopt/hermitian.hpp"
#include "risopt/model.hpp"
#include "risopt/precoding.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <exception>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

namespace risopt {

/// Geometry and sampling parameters for one simulated deployment. The
/// user sits on the x-axis at the drawn distance from the BS.
template <typename Scalar = double>
struct Scenario {
  SystemDims<Scalar> dims;
  Eigen::Matrix<Scalar, 2, 1> bs_pos{Scalar(0), Scalar(0)};
  Eigen::Matrix<Scalar, 2, 1> ris_pos{Scalar(50), Scalar(10)};
  Scalar user_distance_min = Scalar(15);  // meters
  Scalar user_distance_max = Scalar(60);
  int n_scatterers_direct = 6;
  int n_scatterers_ris = 6;
  Scalar pathloss_exponent = Scalar(2.6);
  std::uint64_t seed = 1;
};

template <typename Scalar>
bool operator==(const Scenario<Scalar>& a, const Scenario<Scalar>& b) {
  return a.dims == b.dims && a.bs_pos.x() == b.bs_pos.x() && a.bs_pos.y() == b.bs_pos.y() &&
         a.ris_pos.x() == b.ris_pos.x() && a.ris_pos.y() == b.ris_pos.y() &&
         a.user_distance_min == b.user_distance_min &&
         a.user_distance_max == b.user_distance_max &&
         a.n_scatterers_direct == b.n_scatterers_direct &&
         a.n_scatterers_ris == b.n_scatterers_ris &&
         a.pathloss_exponent == b.pathloss_exponent && a.seed == b.seed;
}

template <typename Scalar>
void validate(const Scenario<Scalar>& scenario) {
  validate(scenario.dims);
  if (!(scenario.user_distance_min > Scalar(0)) ||
      !(scenario.user_distance_min <= scenario.user_distance_max)) {
    throw std::invalid_argument("Scenario: user distance range must satisfy 0 < min <= max");
  }
  if ((scenario.bs_pos - scenario.ris_pos).norm() == Scalar(0)) {
    throw std::invalid_argument("Scenario: BS and RIS positions must be distinct");
  }
  if (scenario.n_scatterers_direct < 1 || scenario.n_scatterers_ris < 1) {
    throw std::invalid_argument("Scenario: scatterer counts must be >= 1");
  }
  if (!(scenario.pathloss_exponent >= Scalar(0))) {
    throw std::invalid_argument("Scenario: pathloss_exponent must be >= 0");
  }
}

/// Monte-Carlo rate estimate with its standard error.
template <typename Scalar = double>
struct RateEstimate {
  Scalar mean_rate = 0;  // bits per channel use
  Scalar std_err = 0;
  Eigen::Index n_samples = 0;
};

/// Transmission schemes evaluated by monte_carlo_rate.
enum class McScheme {
  BilinearStat,       // p = A psi with the statistics-optimal A held fixed
  TtsMatchedFilter,   // phases fixed on the slow timescale, per-sample matched filter
  NoRis               // ris_gain forced to 0, statistics-optimal A on the direct link
};

namespace streams {
// Substream tags; each (tag, indices) pair owns an independent engine.
inline constexpr std::uint64_t covariance = 1;
inline constexpr std::uint64_t distance = 2;
inline constexpr std::uint64_t rate = 3;
inline constexpr std::uint64_t phases = 4;
}  // namespace streams

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Derives the seed of substream (tag, a, b) of a root seed. Each stage of
/// the chain is a full-avalanche mix, so neighboring indices give
/// unrelated streams.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t a,
                                    std::uint64_t b = 0) {
  std::uint64_t h = detail::splitmix64(seed);
  h = detail::splitmix64(h ^ tag);
  h = detail::splitmix64(h ^ a);
  h = detail::splitmix64(h ^ b);
  return h;
}

inline std::mt19937_64 substream_engine(std::uint64_t seed, std::uint64_t tag, std::uint64_t a,
                                        std::uint64_t b = 0) {
  return std::mt19937_64(substream_seed(seed, tag, a, b));
}

namespace detail {

/// Standard circularly-symmetric complex Gaussian vector, entries drawn
/// in index order as (real, imag) pairs.
template <typename Scalar, typename Engine>
ComplexVector<Scalar> standard_cscg(Eigen::Index n, Engine& engine) {
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  constexpr Scalar inv_sqrt2 = Scalar(1) / std::numbers::sqrt2_v<Scalar>;
  ComplexVector<Scalar> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar re = normal(engine);
    const Scalar im = normal(engine);
    out[i] = std::complex<Scalar>(re * inv_sqrt2, im * inv_sqrt2);
  }
  return out;
}

/// Runs fn(begin, end) over disjoint chunks of [0, n). n_threads < 1 uses
/// the hardware concurrency. The partition depends only on (n, n_threads).
template <typename Fn>
void parallel_for(Eigen::Index n, int n_threads, Fn&& fn) {
  if (n <= 0) return;
  Eigen::Index threads = n_threads < 1
                             ? static_cast<Eigen::Index>(
                                   std::max(1u, std::thread::hardware_concurrency()))
                             : static_cast<Eigen::Index>(n_threads);
  threads = std::min(threads, n);
  if (threads <= 1) {
    fn(Eigen::Index(0), n);
    return;
  }
  const Eigen::Index chunk = (n + threads - 1) / threads;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (Eigen::Index t = 0; t < threads; ++t) {
    const Eigen::Index begin = t * chunk;
    const Eigen::Index end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, &errors, t, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& worker : pool) worker.join();
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

}  // namespace detail

/// Half-wavelength uniform-linear-array response, entry k equal to
/// exp(i pi k sin(angle)).
template <typename Scalar>
ComplexVector<Scalar> steering_vector(Scalar angle, Eigen::Index n) {
  ComplexVector<Scalar> out(n);
  const Scalar phase_step = std::numbers::pi_v<Scalar> * std::sin(angle);
  for (Eigen::Index k = 0; k < n; ++k) {
    out[k] = std::polar(Scalar(1), phase_step * Scalar(k));
  }
  return out;
}

namespace detail {

/// Finite-scatterer covariance sum_p g_p a(theta_p) a(theta_p)^H with an
/// urban-micro style cluster power profile: the mean power of cluster p
/// decays geometrically with its index and each cluster carries its own
/// log-normal shadowing on top. Angles are drawn first, then the
/// per-scatterer shadowing factors, so the variate order is part of the
/// determinism contract.
template <typename Scalar, typename Engine>
ComplexMatrix<Scalar> scatter_covariance(Eigen::Index dim, int n_scatterers, Scalar link_gain,
                                         Engine& engine) {
  constexpr Scalar shadow_db = Scalar(4);         // per-cluster log-normal spread
  constexpr Scalar cluster_decay_db = Scalar(3);  // mean power drop per cluster index
  std::uniform_real_distribution<Scalar> angle(-std::numbers::pi_v<Scalar> / 2,
                                               std::numbers::pi_v<Scalar> / 2);
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  std::vector<Scalar> angles(static_cast<std::size_t>(n_scatterers));
  for (auto& a : angles) a = angle(engine);
  Scalar profile_sum = Scalar(0);
  for (int p = 0; p < n_scatterers; ++p) {
    profile_sum += std::pow(Scalar(10), -cluster_decay_db * Scalar(p) / Scalar(10));
  }
  ComplexMatrix<Scalar> cov = ComplexMatrix<Scalar>::Zero(dim, dim);
  for (int p = 0; p < n_scatterers; ++p) {
    const Scalar mean_power =
        std::pow(Scalar(10), -cluster_decay_db * Scalar(p) / Scalar(10)) / profile_sum;
    const Scalar weight = std::pow(Scalar(10), shadow_db * normal(engine) / Scalar(10));
    const ComplexVector<Scalar> steer = steering_vector(angles[static_cast<std::size_t>(p)], dim);
    cov += (link_gain * mean_power * weight) * (steer * steer.adjoint());
  }
  return symmetrize(cov);
}

}  // namespace detail

/// Builds the statistical model for one covariance draw.
///
/// Link budget (the reference system is deliberately RIS-friendly: the
/// direct link is shadowed, the RIS has line of sight on both hops):
///   pathloss(d)    = (max(d, 1m) / 50m)^(-pathloss_exponent)
///   direct link    = pathloss(BS-user) - 20 dB blockage
///   RIS-user link  = pathloss(RIS-user)
///   ris_gain       = (N/M) * pathloss(BS-RIS) - 10 dB reflection loss
/// tx_corr and ris_corr are pure correlation shapes, both rescaled to
/// trace M; the N/M factor in ris_gain restores the RIS aperture scaling.
/// Deterministic given (scenario.seed, draw_index); user_distance enters
/// only through the deterministic pathloss terms.
template <typename Scalar>
StatisticalModel<Scalar> generate_covariances(const Scenario<Scalar>& scenario,
                                              Scalar user_distance, std::uint64_t draw_index) {
  validate(scenario);
  if (!(user_distance >= scenario.user_distance_min &&
        user_distance <= scenario.user_distance_max)) {
    throw std::invalid_argument("generate_covariances: user_distance outside scenario range");
  }
  const Eigen::Matrix<Scalar, 2, 1> user_pos =
      scenario.bs_pos + Eigen::Matrix<Scalar, 2, 1>(user_distance, Scalar(0));
  const Scalar d_bs_user = user_distance;
  const Scalar d_bs_ris = (scenario.ris_pos - scenario.bs_pos).norm();
  const Scalar d_ris_user = (scenario.ris_pos - user_pos).norm();
  if (d_bs_user <= Scalar(0) || d_bs_ris <= Scalar(0) || d_ris_user <= Scalar(0)) {
    throw std::invalid_argument("generate_covariances: degenerate geometry (zero link distance)");
  }

  constexpr Scalar reference_distance = Scalar(50);
  constexpr Scalar direct_blockage = Scalar(0.01);   // -20 dB
  constexpr Scalar reflection_loss = Scalar(0.1);    // -10 dB
  const auto pathloss = [&](Scalar d) {
    return std::pow(std::max(d, Scalar(1)) / reference_distance, -scenario.pathloss_exponent);
  };

  auto engine = substream_engine(scenario.seed, streams::covariance, draw_index);
  const Eigen::Index m = scenario.dims.bs_antennas;
  const Eigen::Index n = scenario.dims.ris_elements;

  StatisticalModel<Scalar> model;
  model.direct_cov = detail::scatter_covariance(m, scenario.n_scatterers_direct,
                                                pathloss(d_bs_user) * direct_blockage, engine);
  model.ris_user_cov =
      detail::scatter_covariance(n, scenario.n_scatterers_ris, pathloss(d_ris_user), engine);
  ComplexMatrix<Scalar> ris_shape =
      detail::scatter_covariance(n, scenario.n_scatterers_ris, Scalar(1), engine);
  ComplexMatrix<Scalar> tx_shape =
      detail::scatter_covariance(m, scenario.n_scatterers_ris, Scalar(1), engine);
  model.ris_corr = ris_shape * (Scalar(m) / ris_shape.trace().real());
  model.tx_corr = tx_shape * (Scalar(m) / tx_shape.trace().real());
  model.ris_gain =
      (Scalar(n) / Scalar(m)) * pathloss(d_bs_ris) * reflection_loss;
  model.obs_noise_cov =
      scenario.dims.obs_noise_var * ComplexMatrix<Scalar>::Identity(m, m);
  validate_model(model);
  return model;
}

/// Draws channel realizations for a fixed (model, phases) pair with the
/// Hermitian covariance square roots precomputed once.
///
/// Variate order per draw: direct channel, then RIS-user channel, then
/// the BS-RIS factor column by column. A model with ris_gain = 0 has a
/// degenerate reflected path; its draws skip the RIS variates entirely
/// and return zero r and T.
template <typename Scalar = double>
class ChannelSampler {
 public:
  ChannelSampler(const StatisticalModel<Scalar>& model, const PhaseVector<Scalar>& phases)
      : bs_antennas_(model.bs_antennas()),
        ris_elements_(model.ris_elements()),
        has_ris_(model.ris_gain > Scalar(0)),
        sqrt_gain_(std::sqrt(model.ris_gain)),
        direct_root_(hermitian_sqrt(model.direct_cov)),
        obs_noise_root_(hermitian_sqrt(model.obs_noise_cov)),
        phases_(phases.coeffs()) {
    if (phases.size() != ris_elements_) {
      throw std::invalid_argument("ChannelSampler: phase vector length does not match model");
    }
    if (has_ris_) {
      ris_user_root_ = hermitian_sqrt(model.ris_user_cov);
      ris_corr_root_ = hermitian_sqrt(model.ris_corr);
      tx_corr_root_ = hermitian_sqrt(model.tx_corr);
    }
  }

  /// Full realization including the BS-RIS factor T.
  template <typename Engine>
  ChannelRealization<Scalar> sample(Engine& engine) const {
    ChannelRealization<Scalar> real;
    real.direct = direct_root_ * detail::standard_cscg<Scalar>(bs_antennas_, engine);
    if (!has_ris_) {
      real.ris_user = ComplexVector<Scalar>::Zero(ris_elements_);
      real.bs_ris = ComplexMatrix<Scalar>::Zero(ris_elements_, bs_antennas_);
      real.effective = real.direct;
      return real;
    }
    real.ris_user = ris_user_root_ * detail::standard_cscg<Scalar>(ris_elements_, engine);
    ComplexMatrix<Scalar> w(ris_elements_, bs_antennas_);
    for (Eigen::Index col = 0; col < bs_antennas_; ++col) {
      w.col(col) = detail::standard_cscg<Scalar>(ris_elements_, engine);
    }
    real.bs_ris = sqrt_gain_ * ris_corr_root_ * w * tx_corr_root_;
    real.effective =
        real.direct + real.bs_ris.adjoint() * (phases_.asDiagonal() * real.ris_user);
    return real;
  }

  /// Effective channel only. Consumes the same variates in the same order
  /// as sample(); the result differs from sample().effective only by
  /// floating-point association order.
  template <typename Engine>
  ComplexVector<Scalar> sample_effective(Engine& engine) const {
    ComplexVector<Scalar> h = direct_root_ * detail::standard_cscg<Scalar>(bs_antennas_, engine);
    if (!has_ris_) return h;
    const ComplexVector<Scalar> r =
        ris_user_root_ * detail::standard_cscg<Scalar>(ris_elements_, engine);
    const ComplexVector<Scalar> reflected = ris_corr_root_ * (phases_.asDiagonal() * r);
    ComplexVector<Scalar> mixed(bs_antennas_);
    for (Eigen::Index col = 0; col < bs_antennas_; ++col) {
      mixed[col] = detail::standard_cscg<Scalar>(ris_elements_, engine).dot(reflected);
    }
    h.noalias() += sqrt_gain_ * (tx_corr_root_ * mixed);
    return h;
  }

  /// Observation noise n with covariance obs_noise_cov.
  template <typename Engine>
  ComplexVector<Scalar> observation_noise(Engine& engine) const {
    return obs_noise_root_ * detail::standard_cscg<Scalar>(bs_antennas_, engine);
  }

 private:
  Eigen::Index bs_antennas_;
  Eigen::Index ris_elements_;
  bool has_ris_;
  Scalar sqrt_gain_;
  ComplexMatrix<Scalar> direct_root_;
  ComplexMatrix<Scalar> obs_noise_root_;
  ComplexMatrix<Scalar> ris_user_root_;
  ComplexMatrix<Scalar> ris_corr_root_;
  ComplexMatrix<Scalar> tx_corr_root_;
  ComplexVector<Scalar> phases_;
};

/// One channel draw; convenience wrapper over ChannelSampler.
template <typename Scalar, typename Engine>
ChannelRealization<Scalar> sample_channel(const StatisticalModel<Scalar>& model,
                                          const PhaseVector<Scalar>& phases, Engine& engine) {
  return ChannelSampler<Scalar>(model, phases).sample(engine);
}

/// Noisy observation psi = h + n with n ~ CSCG(0, obs_noise_cov).
template <typename Scalar, typename Engine>
Observation<Scalar> sample_observation(const ChannelRealization<Scalar>& real,
                                       const ComplexMatrix<Scalar>& obs_noise_cov,
                                       Engine& engine) {
  Observation<Scalar> obs;
  obs.noise = hermitian_sqrt(obs_noise_cov) *
              detail::standard_cscg<Scalar>(real.effective.size(), engine);
  obs.estimate = real.effective + obs.noise;
  return obs;
}

/// Achieved rate log2(1 + |h^H p|^2 / sigma^2) of precoder p on channel h.
template <typename Scalar>
Scalar precoded_rate(const ComplexVector<Scalar>& channel, const ComplexVector<Scalar>& precoder,
                     Scalar noise_var) {
  return rate_lower_bound(std::norm(channel.dot(precoder)) / noise_var);
}

/// Matched-filter rate log2(1 + P |h|^2 / sigma^2); a zero channel
/// carries no signal and yields rate 0.
template <typename Scalar>
Scalar matched_filter_rate(const ComplexVector<Scalar>& channel, Scalar tx_power,
                           Scalar noise_var) {
  const Scalar energy = channel.squaredNorm();
  if (energy <= Scalar(0)) return Scalar(0);
  return rate_lower_bound(tx_power * energy / noise_var);
}

/// Monte-Carlo estimate of the expected achieved rate of one scheme.
///
/// Sample i uses the engine for substream (seed, streams::rate, i), so
/// the estimate is a pure function of (model, phases, scheme, dims,
/// n_samples, seed); the thread count affects wall time only. The
/// BilinearStat and NoRis transforms are computed once from the
/// statistics; TtsMatchedFilter rebuilds the matched filter per draw
/// from the sampled (genie) channel.
template <typename Scalar>
RateEstimate<Scalar> monte_carlo_rate(const StatisticalModel<Scalar>& model,
                                      const PhaseVector<Scalar>& phases, McScheme scheme,
                                      const SystemDims<Scalar>& dims, Eigen::Index n_samples,
                                      std::uint64_t seed, int n_threads = 1) {
  if (n_samples < 1) {
    throw std::invalid_argument("monte_carlo_rate: n_samples must be >= 1");
  }
  StatisticalModel<Scalar> no_ris_model;
  const StatisticalModel<Scalar>* active = &model;
  if (scheme == McScheme::NoRis) {
    no_ris_model = model;
    no_ris_model.ris_gain = Scalar(0);
    active = &no_ris_model;
  }
  const ChannelSampler<Scalar> sampler(*active, phases);
  ComplexMatrix<Scalar> transform;
  if (scheme != McScheme::TtsMatchedFilter) {
    const EffectiveStatistics<Scalar> stats = effective_covariance(*active, phases);
    transform = optimal_transform(stats.obs_cov, dims.tx_power).transform;
  }

  std::vector<Scalar> rates(static_cast<std::size_t>(n_samples));
  detail::parallel_for(n_samples, n_threads, [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index i = begin; i < end; ++i) {
      auto engine = substream_engine(seed, streams::rate, static_cast<std::uint64_t>(i));
      const ComplexVector<Scalar> h = sampler.sample_effective(engine);
      if (scheme == McScheme::TtsMatchedFilter) {
        rates[static_cast<std::size_t>(i)] = matched_filter_rate(h, dims.tx_power, dims.noise_var);
      } else {
        const ComplexVector<Scalar> psi = h + sampler.observation_noise(engine);
        rates[static_cast<std::size_t>(i)] =
            precoded_rate<Scalar>(h, transform * psi, dims.noise_var);
      }
    }
  });

  RateEstimate<Scalar> estimate;
  estimate.n_samples = n_samples;
  Scalar sum = 0;
  for (const Scalar r : rates) sum += r;
  estimate.mean_rate = sum / Scalar(n_samples);
  if (n_samples > 1) {
    Scalar sq = 0;
    for (const Scalar r : rates) {
      const Scalar d = r - estimate.mean_rate;
      sq += d * d;
    }
    estimate.std_err = std::sqrt(sq / (Scalar(n_samples) * Scalar(n_samples - 1)));
  }
  return estimate;
}

}  // namespace risopt
