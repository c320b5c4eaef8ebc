#pragma once

#include "bip/measures.hpp"
#include "bip/random.hpp"
#include "bip/spectral.hpp"

namespace bip::heat {

/// Initial-condition inversion for dv/dt + Av = 0 on the Dirichlet box,
/// observed at time T with noise N(0, delta A^{-gamma}).
struct HeatProblem {
  Geometry geometry;
  double final_time;
  GaussianMeasure prior;
  double beta;
  double alpha;
  double noise_scale;     // delta
  double noise_exponent;  // gamma

  /// Validates alpha > d/2, gamma > d/2, T > 0, delta > 0.
  static HeatProblem make(const Geometry& g, double final_time, double beta, double alpha,
                          double noise_scale, double noise_exponent);
  static HeatProblem make(SpectralField prior_mean, double final_time, double beta, double alpha,
                          double noise_scale, double noise_exponent);

  double noise_variance(std::size_t i) const;
};

/// Observed field y; only meaningful on the problem's index set.
struct HeatData {
  SpectralField y;
};

/// u_k <- exp(-lambda_k T) u_k.
SpectralField heat_semigroup(const SpectralField& u, double t);

/// y = e^{-AT} u_true + eta.
HeatData synth_observation(const HeatProblem& p, const SpectralField& u_true, RandomSource& rng);

/// Phi(u; y) = 1/2 |C1^{-1/2} e^{-AT} u|^2 - <C1^{-1/2} e^{-AT} u, C1^{-1/2} y>.
double heat_potential(const HeatProblem& p, const SpectralField& u, const HeatData& data);

/// Same as heat_potential evaluated at P^N u.
double truncated_heat_potential(const HeatProblem& p, const SpectralField& u,
                                const HeatData& data, int cutoff);

/// Conjugate Gaussian posterior.
GaussianMeasure analytic_posterior(const HeatProblem& p, const HeatData& data);

/// Posterior of Phi(P^N u; y): analytic on |k|_inf <= N, prior beyond.
GaussianMeasure truncated_posterior(const HeatProblem& p, const HeatData& data, int cutoff);

/// |K_theta u| with K_theta = C1^{-1/2} e^{-theta A T}.
double smoothed_noise_norm(const HeatProblem& p, const SpectralField& u, double theta);

}  // namespace bip::heat
