#include "bip/heat.hpp"

#include <cmath>
#include <stdexcept>

namespace bip::heat {

HeatProblem HeatProblem::make(const Geometry& g, double final_time, double beta, double alpha,
                              double noise_scale, double noise_exponent) {
  return make(SpectralField(g), final_time, beta, alpha, noise_scale, noise_exponent);
}

HeatProblem HeatProblem::make(SpectralField prior_mean, double final_time, double beta,
                              double alpha, double noise_scale, double noise_exponent) {
  const Geometry g = prior_mean.geometry;
  if (g.is_torus()) throw GeometryMismatch("heat problem is posed on the Dirichlet box");
  const double half_d = 0.5 * g.dim();
  if (!(final_time > 0.0)) throw std::invalid_argument("observation time T must be > 0");
  if (!(alpha > half_d)) throw std::invalid_argument("prior exponent alpha must exceed d/2");
  if (!(noise_exponent > half_d)) throw std::invalid_argument("noise exponent gamma must exceed d/2");
  if (!(noise_scale > 0.0)) throw std::invalid_argument("noise scale delta must be > 0");
  return HeatProblem{g,    final_time, GaussianMeasure::power_law(std::move(prior_mean), beta, alpha),
                     beta, alpha,      noise_scale,
                     noise_exponent};
}

double HeatProblem::noise_variance(std::size_t i) const {
  return noise_scale * std::pow(geometry.eigenvalue(i), -noise_exponent);
}

SpectralField heat_semigroup(const SpectralField& u, double t) {
  if (t < 0.0) throw std::invalid_argument("heat semigroup time must be >= 0");
  SpectralField out = u;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i)
    out.coeffs[i] *= std::exp(-u.geometry.eigenvalue(i) * t);
  return out;
}

HeatData synth_observation(const HeatProblem& p, const SpectralField& u_true, RandomSource& rng) {
  require_same_geometry(p.geometry, u_true.geometry, "synth_observation");
  HeatData d{heat_semigroup(u_true, p.final_time)};
  for (std::size_t i = 0; i < d.y.coeffs.size(); ++i)
    d.y.coeffs[i] += std::sqrt(p.noise_variance(i)) * rng.normal();
  return d;
}

namespace {

double potential_sum(const HeatProblem& p, const SpectralField& u, const HeatData& data,
                     int cutoff) {
  require_same_geometry(p.geometry, u.geometry, "heat_potential");
  require_same_geometry(p.geometry, data.y.geometry, "heat_potential data");
  double phi = 0.0;
  for (std::size_t i = 0; i < u.coeffs.size(); ++i) {
    if (p.geometry.mode(i).sup_norm() > cutoff) continue;
    const double uk = u.coeffs[i].real();
    if (uk == 0.0) continue;
    const double decay = std::exp(-p.geometry.eigenvalue(i) * p.final_time);
    const double gu = decay * uk;
    phi += (0.5 * gu * gu - gu * data.y.coeffs[i].real()) / p.noise_variance(i);
  }
  return phi;
}

}  // namespace

double heat_potential(const HeatProblem& p, const SpectralField& u, const HeatData& data) {
  return potential_sum(p, u, data, p.geometry.resolution());
}

double truncated_heat_potential(const HeatProblem& p, const SpectralField& u,
                                const HeatData& data, int cutoff) {
  return potential_sum(p, u, data, cutoff);
}

GaussianMeasure truncated_posterior(const HeatProblem& p, const HeatData& data, int cutoff) {
  if (cutoff < 0) throw std::invalid_argument("truncation cutoff must be >= 0");
  require_same_geometry(p.geometry, data.y.geometry, "posterior data");
  const double ratio = p.beta / p.noise_scale;
  SpectralField mean = p.prior.mean();
  std::vector<double> var(p.prior.variance().begin(), p.prior.variance().end());
  for (std::size_t i = 0; i < var.size(); ++i) {
    if (p.geometry.mode(i).sup_norm() > cutoff) continue;
    const double lam = p.geometry.eigenvalue(i);
    const double decay = std::exp(-lam * p.final_time);
    const double gain = ratio * decay * std::pow(lam, p.noise_exponent - p.alpha);
    const double a = gain * decay;
    const double m0 = p.prior.mean().coeffs[i].real();
    var[i] = var[i] / (1.0 + a);
    mean.coeffs[i] = m0 + gain / (1.0 + a) * (data.y.coeffs[i].real() - decay * m0);
  }
  return GaussianMeasure(std::move(mean), std::move(var));
}

GaussianMeasure analytic_posterior(const HeatProblem& p, const HeatData& data) {
  return truncated_posterior(p, data, p.geometry.resolution());
}

double smoothed_noise_norm(const HeatProblem& p, const SpectralField& u, double theta) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.coeffs.size(); ++i) {
    const double decay = std::exp(-theta * p.geometry.eigenvalue(i) * p.final_time);
    s += decay * decay * std::norm(u.coeffs[i]) / p.noise_variance(i);
  }
  return std::sqrt(s);
}

}  // namespace bip::heat
