#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bip/measures.hpp"
#include "bip/random.hpp"
#include "bip/spectral.hpp"

namespace bip::inference {

using Potential = std::function<double(const SpectralField&)>;
using Functional = std::function<double(const SpectralField&)>;

class ChainAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Measure with density exp(-Phi(u)) / Z against a Gaussian prior.
class Posterior {
 public:
  /// Evaluates the potential on 10 prior draws and throws if any is non-finite.
  Posterior(GaussianMeasure prior, Potential potential, std::uint64_t check_seed = 0x5eed);

  const GaussianMeasure& prior() const { return prior_; }
  double potential(const SpectralField& u) const { return potential_(u); }

 private:
  GaussianMeasure prior_;
  Potential potential_;
};

/// min{1, exp(phi_current - phi_proposed)}.
double acceptance_probability(double phi_current, double phi_proposed);

struct PcnState {
  SpectralField field;
  double phi = 0.0;
};

struct PcnOutcome {
  PcnState state;
  bool accepted = false;
};

/// One preconditioned Crank-Nicolson step:
/// w = sqrt(1 - b^2) (u - m0) + m0 + b xi, xi ~ N(0, C0).
/// The accept uniform is drawn before xi, and xi in mode order, so two
/// fields on nested mode sets fed the same stream share both.
PcnOutcome pcn_step(const PcnState& current, double beta_pcn, const Posterior& post, RandomSource& rng);

struct RecordedFunctional {
  std::string name;
  Functional f;
};

/// Re of the torus amplitude at wavevector k, or the Dirichlet coefficient.
RecordedFunctional mode_real_part(const Wavevector& k);

struct ChainOptions {
  std::size_t steps = 100000;
  std::size_t burn_in = 20000;
  double beta_pcn = 0.2;
  std::uint64_t seed = 1;
  std::size_t keep_fields_every = 0;  // 0 keeps no fields
};

/// Integrated autocorrelation time with Geyer's initial positive sequence.
double integrated_autocorrelation_time(std::span<const double> x);
double effective_sample_size(std::span<const double> x);

struct ChainRecord {
  std::vector<std::string> names;
  std::vector<std::vector<double>> samples;  // per functional, one value per step
  std::vector<std::uint8_t> accepted;        // per step
  double beta_pcn = 0.0;
  std::uint64_t seed = 0;
  std::size_t burn_in = 0;
  std::vector<SpectralField> fields;  // post burn-in states at the thinning interval

  std::size_t steps() const { return accepted.size(); }
  /// Fraction of accepted proposals after burn-in.
  double acceptance_rate() const;
  std::span<const double> kept(std::size_t f) const;
  double mean(std::size_t f) const;
  double variance(std::size_t f) const;
  double ess(std::size_t f) const;
  double standard_error(std::size_t f) const;
};

/// Deterministic given options.seed; starts at `start` or the prior mean.
/// Step n draws from stream split(n) of the seed, so chains for different
/// truncations of one problem stay coupled through common random numbers.
ChainRecord run_chain(const Posterior& post, const ChainOptions& options,
                      const std::vector<RecordedFunctional>& recorded,
                      std::optional<SpectralField> start = std::nullopt);

struct ReweightedMean {
  double mean = 0.0;
  double weight_ess = 0.0;  // (sum w)^2 / sum w^2
};

/// Self-normalised importance estimate of E f under exp(-to) from samples
/// of exp(-from) against the same prior: weights exp(from - to).
ReweightedMean reweighted_mean(std::span<const SpectralField> samples, const Potential& from,
                               const Potential& to, const Functional& f);

struct GaussHermite {
  std::vector<double> nodes;    // for weight exp(-x^2)
  std::vector<double> weights;
};

GaussHermite gauss_hermite(int n);

struct QuadratureResult {
  double normalization = 0.0;  // Z
  double expectation = 0.0;    // E^mu f
};

/// Tensor Gauss-Hermite (nodes per dimension) over the listed real
/// coordinates of the prior; every other coordinate is held at its prior mean,
/// which is exact when the potential ignores them.
QuadratureResult quadrature_expectation(const Posterior& post, std::span<const std::size_t> active,
                                        const Functional& f, int nodes = 64);

struct AuditReport {
  std::vector<double> epsilons;
  std::vector<double> lower_constants;   // M(eps): Phi >= -eps |u|^2 - M(eps)
  std::vector<double> radii;
  std::vector<double> upper_constants;   // L(r): Phi <= L(r) on |u| <= r
  std::vector<double> forward_constants; // M_G(eps): |G|_Gamma <= exp(eps |u|^2 + M_G)
  bool ok = false;
};

struct AuditOptions {
  std::vector<double> epsilons{0.1, 1.0};
  std::vector<double> radii;  // empty selects sample norm quantiles 0.25, 0.5, 0.75, 1
  std::size_t samples = 1000;
  std::uint64_t seed = 7;
  Functional norm;            // defaults to the L2 norm
  std::function<double(const SpectralField&)> weighted_forward_norm;  // |G(u)|_Gamma, optional
};

/// Empirical stand-ins for the lower/upper bound constants over prior draws.
AuditReport audit_assumptions(const Posterior& post, const AuditOptions& options);

struct ConvergenceRow {
  int N = 0;
  double distance = 0.0;
  double mean_gap = 0.0;
  double cov_gap = 0.0;
  double acceptance = std::nan("");
  double ess = std::nan("");
  double moment_bound = 0.0;  // 2 (E|f|^2 + E'|f|^2)^{1/2} d_Hell
  bool moment_bound_holds = false;
  double chain_mean = std::nan("");
  double wall_s = 0.0;
};

/// Exact family: measure(N) returns the Gaussian approximation at cutoff N.
/// distance = d_Hell(mu^N, mu^ref), mean_gap = |m_N - m_ref|,
/// cov_gap = max_k |var_N - var_ref| (operator norm of the diagonal difference).
std::vector<ConvergenceRow> gaussian_convergence(const std::function<GaussianMeasure(int)>& measure,
                                                 std::span<const int> n_list, int reference_n);

struct ChainStudy {
  std::function<Posterior(int)> make_posterior;
  RecordedFunctional functional;
  ChainOptions chain;  // the same seed is used for every N
  int workers = 1;
};

struct ChainSummary {
  int N = 0;
  ChainRecord record;
  double wall_s = 0.0;
};

std::vector<ChainSummary> run_chains(const ChainStudy& study, std::span<const int> n_list);

/// Histogram comparison of two chains' recorded marginal: distance is the
/// pooled-bin Hellinger estimate; the moment check is evaluated on the binned
/// measures, where it holds exactly.
ConvergenceRow compare_marginals(const ChainSummary& a, const ChainSummary& b);

/// Chain family: every N in n_list is compared against reference_n.
std::vector<ConvergenceRow> chain_convergence(const ChainStudy& study, std::span<const int> n_list,
                                              int reference_n);

}  // namespace bip::inference
