#include "bip/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "bip/fft.hpp"
#include "bip/parallel.hpp"

namespace bip::inference {

Posterior::Posterior(GaussianMeasure prior, Potential potential, std::uint64_t check_seed)
    : prior_(std::move(prior)), potential_(std::move(potential)) {
  if (!potential_) throw std::invalid_argument("posterior needs a potential");
  RandomSource rng(check_seed);
  for (int i = 0; i < 10; ++i) {
    const double phi = potential_(sample_gaussian(prior_, rng));
    if (!std::isfinite(phi)) {
      throw std::invalid_argument("potential is not finite on prior draw " + std::to_string(i));
    }
  }
}

double acceptance_probability(double phi_current, double phi_proposed) {
  const double log_ratio = phi_current - phi_proposed;
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

PcnOutcome pcn_step(const PcnState& current, double beta_pcn, const Posterior& post,
                    RandomSource& rng) {
  if (!(beta_pcn > 0.0 && beta_pcn <= 1.0)) throw std::invalid_argument("pCN step must lie in (0, 1]");
  const auto& prior = post.prior();
  const double keep = std::sqrt(1.0 - beta_pcn * beta_pcn);
  const double coin = rng.uniform();
  SpectralField w = current.field;
  const bool cplx = prior.geometry().is_torus();
  for (std::size_t i = 0; i < w.coeffs.size(); ++i) {
    const Complex m = prior.mean().coeffs[i];
    const double sd = std::sqrt(prior.variance(i));
    Complex xi;
    if (cplx) {
      const double re = rng.normal();
      const double im = rng.normal();
      xi = sd * std::sqrt(0.5) * Complex(re, im);
    } else {
      xi = sd * rng.normal();
    }
    w.coeffs[i] = keep * (w.coeffs[i] - m) + m + beta_pcn * xi;
  }
  const double phi_w = post.potential(w);
  if (!std::isfinite(phi_w)) {
    throw ChainAborted("potential returned a non-finite value for a pCN proposal");
  }
  const double a = acceptance_probability(current.phi, phi_w);
  if (coin < a) return {PcnState{std::move(w), phi_w}, true};
  return {current, false};
}

RecordedFunctional mode_real_part(const Wavevector& k) {
  return {"re_u(" + std::to_string(k.k1) + "," + std::to_string(k.k2) + ")",
          [k](const SpectralField& u) { return u[k].real(); }};
}

double integrated_autocorrelation_time(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return 1.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = x[i] - mean;
  const auto acov = autocovariance(c);
  if (!(acov[0] > 0.0)) return 1.0;
  double sum = 0.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (acov[2 * m] + acov[2 * m + 1]) / acov[0];
    if (pair <= 0.0) break;
    sum += pair;
  }
  return std::max(-1.0 + 2.0 * sum, 1.0 / double(n));
}

double effective_sample_size(std::span<const double> x) {
  return double(x.size()) / integrated_autocorrelation_time(x);
}

double ChainRecord::acceptance_rate() const {
  if (accepted.size() <= burn_in) return 0.0;
  const auto n = std::accumulate(accepted.begin() + std::ptrdiff_t(burn_in), accepted.end(), std::size_t{0});
  return double(n) / double(accepted.size() - burn_in);
}

std::span<const double> ChainRecord::kept(std::size_t f) const {
  const auto& s = samples.at(f);
  return std::span<const double>(s).subspan(std::min(burn_in, s.size()));
}

double ChainRecord::mean(std::size_t f) const {
  const auto k = kept(f);
  return std::accumulate(k.begin(), k.end(), 0.0) / double(k.size());
}

double ChainRecord::variance(std::size_t f) const {
  const auto k = kept(f);
  const double m = mean(f);
  double s = 0.0;
  for (double x : k) s += (x - m) * (x - m);
  return s / double(k.size() > 1 ? k.size() - 1 : 1);
}

double ChainRecord::ess(std::size_t f) const { return effective_sample_size(kept(f)); }

double ChainRecord::standard_error(std::size_t f) const { return std::sqrt(variance(f) / ess(f)); }

ChainRecord run_chain(const Posterior& post, const ChainOptions& options,
                      const std::vector<RecordedFunctional>& recorded,
                      std::optional<SpectralField> start) {
  if (options.steps <= options.burn_in) throw std::invalid_argument("chain steps must exceed burn-in");
  const RandomSource base(options.seed);
  PcnState state{start ? std::move(*start) : post.prior().mean(), 0.0};
  require_same_geometry(state.field.geometry, post.prior().geometry(), "chain start");
  state.phi = post.potential(state.field);
  if (!std::isfinite(state.phi)) throw ChainAborted("potential is not finite at the chain start");

  ChainRecord rec;
  rec.beta_pcn = options.beta_pcn;
  rec.seed = options.seed;
  rec.burn_in = options.burn_in;
  for (const auto& r : recorded) {
    rec.names.push_back(r.name);
    rec.samples.emplace_back().reserve(options.steps);
  }
  rec.accepted.reserve(options.steps);
  for (std::size_t n = 0; n < options.steps; ++n) {
    RandomSource rng = base.split(n);
    auto out = pcn_step(state, options.beta_pcn, post, rng);
    rec.accepted.push_back(out.accepted ? 1 : 0);
    if (out.accepted) state = std::move(out.state);
    for (std::size_t f = 0; f < recorded.size(); ++f) rec.samples[f].push_back(recorded[f].f(state.field));
    if (options.keep_fields_every && n >= options.burn_in && (n - options.burn_in) % options.keep_fields_every == 0)
      rec.fields.push_back(state.field);
  }
  return rec;
}

ReweightedMean reweighted_mean(std::span<const SpectralField> samples, const Potential& from,
                               const Potential& to, const Functional& f) {
  if (samples.empty()) throw std::invalid_argument("reweighting needs samples");
  std::vector<double> logw(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    logw[i] = from(samples[i]) - to(samples[i]);
    if (!std::isfinite(logw[i])) throw ChainAborted("non-finite importance weight");
  }
  const double shift = *std::max_element(logw.begin(), logw.end());
  double sw = 0.0, sw2 = 0.0, swf = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double w = std::exp(logw[i] - shift);
    sw += w;
    sw2 += w * w;
    swf += w * f(samples[i]);
  }
  return {swf / sw, sw * sw / sw2};
}

GaussHermite gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Hermite needs at least one node");
  GaussHermite gh{std::vector<double>(n), std::vector<double>(n)};
  const double pim4 = std::pow(kPi, -0.25);
  double z = 0.0;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // standard asymptotic starting guesses for the largest roots first
    if (i == 0) z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1) z -= 1.14 * std::pow(double(n), 0.426) / z;
    else if (i == 2) z = 1.86 * z - 0.86 * gh.nodes[0];
    else if (i == 3) z = 1.91 * z - 0.91 * gh.nodes[1];
    else z = 2.0 * z - gh.nodes[i - 2];
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt(double(j - 1) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    gh.nodes[i] = z;
    gh.nodes[n - 1 - i] = -z;
    gh.weights[i] = 2.0 / (pp * pp);
    gh.weights[n - 1 - i] = gh.weights[i];
  }
  return gh;
}

QuadratureResult quadrature_expectation(const Posterior& post, std::span<const std::size_t> active,
                                        const Functional& f, int nodes) {
  const std::size_t d = active.size();
  if (d == 0 || d > 3) throw std::invalid_argument("quadrature supports 1 to 3 active coordinates");
  const auto& prior = post.prior();
  for (auto j : active)
    if (j >= prior.real_dimension()) throw std::invalid_argument("active coordinate out of range");
  const auto gh = gauss_hermite(nodes);
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= std::size_t(nodes);

  std::vector<double> log_w(total), phi(total), fv(total);
  SpectralField u = prior.mean();
  std::vector<int> idx(d, 0);
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t rem = t;
    double lw = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      idx[a] = int(rem % std::size_t(nodes));
      rem /= std::size_t(nodes);
      const std::size_t j = active[a];
      const double x = std::sqrt(2.0) * gh.nodes[idx[a]];
      set_coordinate(u, j, prior.coordinate_mean(j) + std::sqrt(prior.coordinate_variance(j)) * x);
      lw += std::log(gh.weights[idx[a]] / std::sqrt(kPi));
    }
    log_w[t] = lw;
    phi[t] = post.potential(u);
    fv[t] = f(u);
    if (!std::isfinite(phi[t]) || !std::isfinite(fv[t])) {
      throw std::invalid_argument("non-finite quadrature integrand");
    }
  }
  double shift = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < total; ++t) shift = std::min(shift, phi[t] - log_w[t]);
  double z = 0.0, zf = 0.0;
  for (std::size_t t = 0; t < total; ++t) {
    const double w = std::exp(log_w[t] - phi[t] + shift);
    z += w;
    zf += w * fv[t];
  }
  return {z * std::exp(-shift), zf / z};
}

AuditReport audit_assumptions(const Posterior& post, const AuditOptions& options) {
  RandomSource rng(options.seed);
  std::vector<double> norms, phis, log_g;
  norms.reserve(options.samples);
  for (std::size_t i = 0; i < options.samples; ++i) {
    const SpectralField u = sample_gaussian(post.prior(), rng);
    norms.push_back(options.norm ? options.norm(u) : l2_norm(u));
    phis.push_back(post.potential(u));
    if (options.weighted_forward_norm) log_g.push_back(std::log(options.weighted_forward_norm(u)));
  }
  AuditReport r;
  r.epsilons = options.epsilons;
  for (double eps : options.epsilons) {
    double m = 0.0;
    for (std::size_t i = 0; i < phis.size(); ++i) m = std::max(m, -phis[i] - eps * norms[i] * norms[i]);
    r.lower_constants.push_back(m);
    if (options.weighted_forward_norm) {
      double mg = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < log_g.size(); ++i) mg = std::max(mg, log_g[i] - eps * norms[i] * norms[i]);
      r.forward_constants.push_back(mg);
    }
  }
  r.radii = options.radii;
  if (r.radii.empty() && !norms.empty()) {
    std::vector<double> sorted = norms;
    std::sort(sorted.begin(), sorted.end());
    for (double q : {0.25, 0.5, 0.75, 1.0}) {
      const auto at = std::size_t(std::ceil(q * double(sorted.size()))) - 1;
      r.radii.push_back(sorted[std::min(at, sorted.size() - 1)]);
    }
  }
  for (double rad : r.radii) {
    double l = 0.0;
    for (std::size_t i = 0; i < phis.size(); ++i)
      if (norms[i] <= rad) l = std::max(l, phis[i]);
    r.upper_constants.push_back(l);
  }
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  r.ok = finite(r.lower_constants) && finite(r.upper_constants) && finite(r.forward_constants);
  return r;
}

std::vector<ConvergenceRow> gaussian_convergence(const std::function<GaussianMeasure(int)>& measure,
                                                 std::span<const int> n_list, int reference_n) {
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (i > 0 && n_list[i] <= n_list[i - 1]) throw std::invalid_argument("N list must be ascending");
    if (n_list[i] >= reference_n) throw std::invalid_argument("reference N must exceed every N");
  }
  const GaussianMeasure ref = measure(reference_n);
  std::vector<ConvergenceRow> rows;
  for (int n : n_list) {
    const auto t0 = std::chrono::steady_clock::now();
    const GaussianMeasure mu = measure(n);
    ConvergenceRow row;
    row.N = n;
    row.distance = hellinger_gaussian(mu, ref);
    row.mean_gap = l2_norm(mu.mean() - ref.mean());
    double cg = 0.0;
    for (std::size_t i = 0; i < mu.variance().size(); ++i)
      cg = std::max(cg, std::abs(mu.variance(i) - ref.variance(i)));
    row.cov_gap = cg;
    row.moment_bound = 2.0 * std::sqrt(mu.second_moment() + ref.second_moment()) * row.distance;
    row.moment_bound_holds = row.mean_gap <= row.moment_bound;
    row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(row);
  }
  return rows;
}

std::vector<ChainSummary> run_chains(const ChainStudy& study, std::span<const int> n_list) {
  std::vector<ChainSummary> out(n_list.size());
  parallel_for(n_list.size(), study.workers, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    const Posterior post = study.make_posterior(n_list[i]);
    out[i].N = n_list[i];
    out[i].record = run_chain(post, study.chain, {study.functional});
    out[i].wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  return out;
}

ConvergenceRow compare_marginals(const ChainSummary& a, const ChainSummary& b) {
  const auto sa = a.record.kept(0);
  const auto sb = b.record.kept(0);
  auto [ha, hb] = pooled_histograms(sa, sb);
  const auto pa = DiscreteMeasure::from_weights(ha.counts);
  const auto pb = DiscreteMeasure::from_weights(hb.counts);
  std::vector<std::vector<double>> centres(ha.counts.size());
  for (std::size_t i = 0; i < centres.size(); ++i) centres[i] = {ha.bin_center(i)};
  const auto bound = moment_difference_bound(pa, pb, centres);

  ConvergenceRow row;
  row.N = a.N;
  row.distance = hellinger_discrete(pa, pb);
  row.chain_mean = a.record.mean(0);
  row.mean_gap = std::abs(a.record.mean(0) - b.record.mean(0));
  row.cov_gap = std::abs(a.record.variance(0) - b.record.variance(0));
  row.acceptance = a.record.acceptance_rate();
  row.ess = a.record.ess(0);
  row.moment_bound = bound.mean_bound;
  row.moment_bound_holds = bound.holds;
  row.wall_s = a.wall_s;
  return row;
}

std::vector<ConvergenceRow> chain_convergence(const ChainStudy& study, std::span<const int> n_list,
                                              int reference_n) {
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (i > 0 && n_list[i] <= n_list[i - 1]) throw std::invalid_argument("N list must be ascending");
    if (n_list[i] >= reference_n) throw std::invalid_argument("reference N must exceed every N");
  }
  std::vector<int> all(n_list.begin(), n_list.end());
  all.push_back(reference_n);
  const auto chains = run_chains(study, all);
  std::vector<ConvergenceRow> rows;
  for (std::size_t i = 0; i + 1 < chains.size(); ++i) rows.push_back(compare_marginals(chains[i], chains.back()));
  return rows;
}

}  // namespace bip::inference
