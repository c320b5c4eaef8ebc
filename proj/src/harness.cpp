#include "bip/harness.hpp"

#include <fftw3.h>

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>

#include "bip/heat.hpp"
#include "bip/inference.hpp"
#include "bip/measures.hpp"
#include "bip/navier_stokes.hpp"
#include "bip/parallel.hpp"
#include "bip/random.hpp"
#include "bip/stokes.hpp"
#include "json.hpp"

namespace bip::harness {

namespace {

enum class Kind { Real, Int, Seed, Bool, Text, Reals, Ints };

struct KeySpec {
  const char* section;
  const char* key;
  Kind kind;
  const char* fallback;
  std::vector<std::string> choices{};
  bool hashed = true;
};

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> s = {
      {"run", "seed", Kind::Seed, "1"},
      {"run", "workers", Kind::Int, "1", {}, false},
      {"run", "out", Kind::Text, "results", {}, false},
      {"run", "timing", Kind::Bool, "false"},

      {"mcmc", "steps", Kind::Int, "100000"},
      {"mcmc", "burn_in", Kind::Int, "20000"},
      {"mcmc", "beta_pcn", Kind::Real, "0.1"},

      {"prior", "beta", Kind::Real, "400"},
      {"prior", "alpha", Kind::Real, "2"},
      {"prior", "mean", Kind::Reals, ""},

      {"heat", "dim", Kind::Int, "1"},
      {"heat", "final_time", Kind::Real, "0.1"},
      {"heat", "beta", Kind::Real, "1"},
      {"heat", "alpha", Kind::Real, "2"},
      {"heat", "noise_scale", Kind::Real, "0.01"},
      {"heat", "noise_exponent", Kind::Real, "1"},
      {"heat", "N_list", Kind::Ints, "2 4 6 8 10"},
      {"heat", "reference_N", Kind::Int, "64"},

      {"stokes", "study", Kind::Text, "modes", {"modes", "dt", "truncation", "interp"}},
      {"stokes", "viscosity", Kind::Real, "0.05"},
      {"stokes", "forcing", Kind::Reals, ""},
      {"stokes", "obs_times", Kind::Reals, "0.1"},
      {"stokes", "tracers", Kind::Int, "9"},
      {"stokes", "noise", Kind::Real, "0.01"},
      {"stokes", "modes", Kind::Ints, "16 64 144"},
      {"stokes", "reference_modes", Kind::Int, "256"},
      {"stokes", "dt", Kind::Real, "0.001"},
      {"stokes", "integrator", Kind::Text, "euler", {"euler", "rk4"}},
      {"stokes", "interp", Kind::Text, "bilinear", {"bilinear", "bicubic", "spectral"}},
      {"stokes", "grid_size", Kind::Int, "0"},
      {"stokes", "dt_list", Kind::Reals, "0.004 0.002 0.001"},
      {"stokes", "dt_modes", Kind::Int, "64"},
      {"stokes", "dt_thin", Kind::Int, "20"},
      {"stokes", "truncation_N", Kind::Ints, "8 16 32 64"},
      {"stokes", "truncation_resolution", Kind::Int, "128"},
      {"stokes", "truncation_draws", Kind::Int, "50"},
      {"stokes", "interp_modes", Kind::Int, "16"},
      {"stokes", "interp_draws", Kind::Int, "100"},
      {"stokes", "data_dt", Kind::Real, "0.001"},
      {"stokes", "data_integrator", Kind::Text, "rk4", {"euler", "rk4"}},
      {"stokes", "data_interp", Kind::Text, "spectral", {"bilinear", "bicubic", "spectral"}},

      {"ns", "viscosity", Kind::Real, "0.01"},
      {"ns", "forcing", Kind::Reals, ""},
      {"ns", "dt", Kind::Real, "0.001"},
      {"ns", "obs_time", Kind::Real, "0.05"},
      {"ns", "points", Kind::Int, "4"},
      {"ns", "noise", Kind::Real, "0.1"},
      {"ns", "scheme", Kind::Text, "euler", {"euler", "rk4"}},
      {"ns", "N_list", Kind::Ints, "8 16 32"},
      {"ns", "galerkin_draws", Kind::Int, "10"},
      {"ns", "data_resolution", Kind::Int, "64"},
      {"ns", "steps", Kind::Int, "10000"},
      {"ns", "burn_in", Kind::Int, "2000"},
      {"ns", "beta_pcn", Kind::Real, "0.1"},

      {"metric", "trials", Kind::Int, "1000"},
      {"metric", "support", Kind::Int, "8"},

      {"synth", "model", Kind::Text, "stokes", {"heat", "stokes", "ns"}},
      {"synth", "zero_noise", Kind::Bool, "false"},
  };
  return s;
}

const KeySpec& spec_for(const std::string& key) {
  for (const auto& k : schema())
    if (key == std::string(k.section) + "." + k.key) return k;
  throw ConfigError("unknown configuration key '" + key + "'");
}

std::string collapse(const std::string& s) {
  std::istringstream in(s);
  std::string out, word;
  while (in >> word) out += (out.empty() ? "" : " ") + word;
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

double parse_real(const std::string& key, const std::string& w) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(w, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != w.size() || !std::isfinite(x)) throw ConfigError(key + ": '" + w + "' is not a finite number");
  return x;
}

long long parse_int(const std::string& key, const std::string& w) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(w, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != w.size()) throw ConfigError(key + ": '" + w + "' is not an integer");
  return x;
}

std::uint64_t parse_seed(const std::string& key, const std::string& w) {
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    if (!w.empty() && w[0] != '-') x = std::stoull(w, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (w.empty() || used != w.size()) throw ConfigError(key + ": '" + w + "' is not an unsigned 64-bit seed");
  return x;
}

void check_value(const KeySpec& k, const std::string& key, const std::string& v) {
  const auto ws = words(v);
  switch (k.kind) {
    case Kind::Real:
    case Kind::Int:
    case Kind::Seed:
      if (ws.size() != 1) throw ConfigError(key + " needs exactly one value");
      if (k.kind == Kind::Real) parse_real(key, ws[0]);
      if (k.kind == Kind::Int) parse_int(key, ws[0]);
      if (k.kind == Kind::Seed) parse_seed(key, ws[0]);
      break;
    case Kind::Bool:
      if (v != "true" && v != "false") throw ConfigError(key + " must be true or false");
      break;
    case Kind::Text:
      if (!k.choices.empty() && std::find(k.choices.begin(), k.choices.end(), v) == k.choices.end()) {
        std::string list;
        for (const auto& c : k.choices) list += (list.empty() ? "" : ", ") + c;
        throw ConfigError(key + " must be one of: " + list);
      }
      break;
    case Kind::Reals:
      for (const auto& w : ws) parse_real(key, w);
      break;
    case Kind::Ints:
      for (const auto& w : ws) parse_int(key, w);
      break;
  }
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

int perfect_square_root(long long j) {
  const int r = int(std::lround(std::sqrt(double(j))));
  return (j > 0 && (long long)r * r == j) ? r : -1;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct LineFit {
  double slope = 0.0;
  double r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

// Chain and data streams derived from run.seed.
std::uint64_t chain_seed(const Config& cfg) { return mix_seed(cfg.seed() ^ 0xc4a1bULL); }
RandomSource data_rng(const Config& cfg) { return RandomSource(cfg.seed()).split(1); }

stokes::Integrator integrator_from(const std::string& s) {
  return s == "rk4" ? stokes::Integrator::RK4 : stokes::Integrator::Euler;
}

// ---------------------------------------------------------------- stokes

struct StokesSetup {
  stokes::StokesProblem problem;
  stokes::TracerEnsemble tracers;
  SpectralField mean;  // at reference resolution
  double beta;
  double alpha;
  int reference;
};

StokesSetup stokes_setup(const Config& cfg, int reference) {
  const auto times = cfg.reals("stokes.obs_times");
  std::optional<SpectralField> forcing;
  if (!cfg.reals("stokes.forcing").empty()) forcing = sparse_field(cfg.reals("stokes.forcing"), reference);
  auto problem = stokes::StokesProblem::make(cfg.real("stokes.viscosity"), forcing, times.back());
  auto tracers = stokes::TracerEnsemble::lattice(int(cfg.integer("stokes.tracers")), times);
  return {problem, tracers, sparse_field(cfg.reals("prior.mean"), reference), cfg.real("prior.beta"),
          cfg.real("prior.alpha"), reference};
}

GaussianMeasure prior_at(const SpectralField& mean, double beta, double alpha, int resolution) {
  return GaussianMeasure::power_law(resample(mean, resolution), beta, alpha);
}

struct StokesTruth {
  SpectralField u_true;
  stokes::LagrangianData data;
};

StokesTruth stokes_truth(const Config& cfg, const StokesSetup& s, bool zero_noise) {
  RandomSource rng = data_rng(cfg);
  const auto prior = prior_at(s.mean, s.beta, s.alpha, s.reference);
  SpectralField u = sample_gaussian(prior, rng);
  stokes::AdvectionOptions opt;
  opt.dt = cfg.real("stokes.data_dt");
  opt.integrator = integrator_from(cfg.text("stokes.data_integrator"));
  opt.order = stokes::interpolation_from_string(cfg.text("stokes.data_interp"));
  stokes::LagrangianModel model(s.problem, s.tracers, opt);
  stokes::LagrangianData data;
  data.noise_sd = zero_noise ? 0.0 : cfg.real("stokes.noise");
  data.y = model.forward(u);
  for (auto& y : data.y) y += data.noise_sd * rng.normal();
  data.noise_sd = cfg.real("stokes.noise");
  return {u, data};
}

stokes::AdvectionOptions chain_advection(const Config& cfg, double dt) {
  stokes::AdvectionOptions opt;
  opt.dt = dt;
  opt.integrator = integrator_from(cfg.text("stokes.integrator"));
  opt.order = stokes::interpolation_from_string(cfg.text("stokes.interp"));
  opt.grid_size = int(cfg.integer("stokes.grid_size"));
  return opt;
}

inference::Posterior stokes_posterior(const StokesSetup& s, const StokesTruth& truth, int cutoff,
                                      const stokes::AdvectionOptions& opt) {
  auto model = std::make_shared<stokes::LagrangianModel>(s.problem, s.tracers, opt);
  const auto* data = &truth.data;
  return inference::Posterior(prior_at(s.mean, s.beta, s.alpha, cutoff),
                              [model, data](const SpectralField& u) { return model->potential(u, *data); });
}

inference::ChainOptions chain_options(const Config& cfg, const char* section) {
  const std::string sec = section;
  inference::ChainOptions opt;
  opt.steps = std::size_t(cfg.integer(sec + ".steps"));
  opt.burn_in = std::size_t(cfg.integer(sec + ".burn_in"));
  opt.beta_pcn = cfg.real(sec + ".beta_pcn");
  opt.seed = chain_seed(cfg);
  return opt;
}

CsvRow chain_row(const std::string& experiment, const Config& cfg, const inference::ConvergenceRow& r) {
  CsvRow row;
  row.experiment = experiment;
  row.config_hash = cfg.hash();
  row.N = r.N;
  row.distance = r.distance;
  row.mean_gap = r.mean_gap;
  row.cov_gap = r.cov_gap;
  row.acceptance = r.acceptance;
  row.ess = r.ess;
  row.wall_s = cfg.flag("run.timing") ? r.wall_s : 0.0;
  return row;
}

Report stokes_modes(const Config& cfg) {
  const auto counts = cfg.integers("stokes.modes");
  const int ref_count = int(cfg.integer("stokes.reference_modes"));
  const int reference = cutoff_from_mode_count(ref_count);
  const auto s = stokes_setup(cfg, reference);
  const auto truth = stokes_truth(cfg, s, false);
  const auto adv = chain_advection(cfg, cfg.real("stokes.dt"));

  std::vector<int> cutoffs;
  for (int c : counts) cutoffs.push_back(cutoff_from_mode_count(c));
  inference::ChainStudy study;
  study.make_posterior = [&](int n) { return stokes_posterior(s, truth, n, adv); };
  study.functional = inference::mode_real_part({0, 1});
  study.chain = chain_options(cfg, "mcmc");
  study.workers = int(cfg.integer("run.workers"));
  const auto rows = inference::chain_convergence(study, cutoffs, reference);

  Report rep;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto row = chain_row("stokes-lagrangian/modes", cfg, rows[i]);
    row.N = counts[i];
    row.dt = adv.dt;
    row.interp = cfg.text("stokes.interp");
    rep.rows.push_back(row);
    const std::string tag = "modes_" + std::to_string(counts[i]);
    rep.summary.push_back({tag + "_cutoff", double(cutoffs[i])});
    rep.summary.push_back({tag + "_stored_modes", double(Geometry::torus(cutoffs[i]).size())});
    rep.summary.push_back({tag + "_chain_mean", rows[i].chain_mean});
    rep.summary.push_back({tag + "_moment_bound_holds", rows[i].moment_bound_holds ? 1.0 : 0.0});
  }
  rep.summary.push_back({"reference_cutoff", double(reference)});
  rep.summary.push_back({"reference_stored_modes", double(Geometry::torus(reference).size())});
  rep.notes.push_back({"mode_counting", "N counts grid points M^2; cutoff |k|_inf <= M/2"});
  rep.notes.push_back({"functional", study.functional.name});
  return rep;
}

Report stokes_dt(const Config& cfg) {
  const auto dts = cfg.reals("stokes.dt_list");
  const int count = int(cfg.integer("stokes.dt_modes"));
  const int cutoff = cutoff_from_mode_count(count);
  const int reference = cutoff_from_mode_count(int(cfg.integer("stokes.reference_modes")));
  const auto s = stokes_setup(cfg, std::max(reference, cutoff));
  const auto truth = stokes_truth(cfg, s, false);

  inference::ChainStudy study;
  study.make_posterior = [&](int i) { return stokes_posterior(s, truth, cutoff, chain_advection(cfg, dts[i])); };
  study.functional = inference::mode_real_part({0, 1});
  study.chain = chain_options(cfg, "mcmc");
  study.chain.keep_fields_every = std::size_t(cfg.integer("stokes.dt_thin"));
  study.workers = int(cfg.integer("run.workers"));
  std::vector<int> index(dts.size());
  std::iota(index.begin(), index.end(), 0);
  const auto chains = inference::run_chains(study, index);

  // Posterior means at every dt from the finest chain by importance weights.
  std::vector<stokes::LagrangianModel> models;
  for (double dt : dts) models.emplace_back(s.problem, s.tracers, chain_advection(cfg, dt));
  auto phi = [&](std::size_t i) {
    return [&, i](const SpectralField& u) { return models[i].potential(u, truth.data); };
  };
  const auto& fine = chains.back().record.fields;
  std::vector<inference::ReweightedMean> means;
  for (std::size_t i = 0; i < dts.size(); ++i)
    means.push_back(inference::reweighted_mean(fine, phi(dts.size() - 1), phi(i), study.functional.f));

  Report rep;
  for (std::size_t i = 0; i < chains.size(); ++i) {
    auto r = inference::compare_marginals(chains[i], chains.back());
    auto row = chain_row("stokes-lagrangian/dt", cfg, r);
    row.N = count;
    row.dt = dts[i];
    row.interp = cfg.text("stokes.interp");
    row.mean_gap = i == 0 ? std::nan("") : std::abs(means[i].mean - means[i - 1].mean);
    rep.rows.push_back(row);
    const std::string tag = "dt_" + format_double(dts[i]);
    rep.summary.push_back({tag + "_chain_mean", chains[i].record.mean(0)});
    rep.summary.push_back({tag + "_chain_se", chains[i].record.standard_error(0)});
    rep.summary.push_back({tag + "_reweighted_mean", means[i].mean});
    rep.summary.push_back({tag + "_weight_ess", means[i].weight_ess});
  }
  for (std::size_t i = 2; i < rep.rows.size(); ++i)
    rep.summary.push_back({"shift_ratio_" + std::to_string(i - 1), rep.rows[i - 1].mean_gap / rep.rows[i].mean_gap});
  rep.summary.push_back({"reweighting_samples", double(fine.size())});
  rep.notes.push_back({"mean_gap", "shift of the posterior mean of the recorded marginal against the previous dt, "
                                   "estimated by importance weights on the finest-dt chain"});
  rep.notes.push_back({"functional", study.functional.name});
  return rep;
}

double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

Report stokes_truncation(const Config& cfg) {
  const auto ns = cfg.integers("stokes.truncation_N");
  const int res = int(cfg.integer("stokes.truncation_resolution"));
  const int draws = int(cfg.integer("stokes.truncation_draws"));
  const auto s = stokes_setup(cfg, res);
  const auto prior = prior_at(s.mean, s.beta, s.alpha, res);
  const auto adv = chain_advection(cfg, cfg.real("stokes.dt"));

  std::vector<std::vector<double>> err(ns.size(), std::vector<double>(draws));
  const int workers = int(cfg.integer("run.workers"));
  parallel_for(std::size_t(draws), workers, [&](std::size_t d) {
    RandomSource rng = RandomSource(cfg.seed()).split(100 + d);
    stokes::LagrangianModel model(s.problem, s.tracers, adv);
    const auto u = sample_gaussian(prior, rng);
    const auto g = model.forward(u);
    for (std::size_t i = 0; i < ns.size(); ++i) err[i][d] = euclid(g, model.forward(project(u, ns[i])));
  });

  Report rep;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double mean = std::accumulate(err[i].begin(), err[i].end(), 0.0) / draws;
    CsvRow row;
    row.experiment = "stokes-lagrangian/truncation";
    row.config_hash = cfg.hash();
    row.N = ns[i];
    row.dt = adv.dt;
    row.interp = cfg.text("stokes.interp");
    row.distance = mean;
    rep.rows.push_back(row);
    x.push_back(std::log(double(ns[i])));
    y.push_back(std::log(mean));
  }
  const auto fit = fit_line(x, y);
  rep.summary.push_back({"loglog_slope", fit.slope});
  rep.summary.push_back({"loglog_r2", fit.r2});
  rep.notes.push_back({"distance", "mean over prior draws of |G(u) - G(P^N u)|"});
  return rep;
}

Report stokes_interp(const Config& cfg) {
  const int count = int(cfg.integer("stokes.interp_modes"));
  const int cutoff = cutoff_from_mode_count(count);
  const int draws = int(cfg.integer("stokes.interp_draws"));
  const auto s = stokes_setup(cfg, cutoff);
  const auto prior = prior_at(s.mean, s.beta, s.alpha, cutoff);
  const stokes::Interpolation orders[] = {stokes::Interpolation::Bilinear, stokes::Interpolation::Bicubic};

  std::vector<std::array<double, 2>> worst(draws);
  parallel_for(std::size_t(draws), int(cfg.integer("run.workers")), [&](std::size_t d) {
    RandomSource rng = RandomSource(cfg.seed()).split(200 + d);
    const auto u = sample_gaussian(prior, rng);
    auto opt = chain_advection(cfg, cfg.real("stokes.dt"));
    opt.order = stokes::Interpolation::Spectral;
    const auto truth = stokes::LagrangianModel(s.problem, s.tracers, opt).advect(u);
    for (int o = 0; o < 2; ++o) {
      opt.order = orders[o];
      const auto paths = stokes::LagrangianModel(s.problem, s.tracers, opt).advect(u);
      double w = 0.0;
      for (std::size_t k = 0; k < paths.positions.size(); ++k)
        for (std::size_t j = 0; j < paths.positions[k].size(); ++j)
          w = std::max(w, std::hypot(paths.positions[k][j][0] - truth.positions[k][j][0],
                                     paths.positions[k][j][1] - truth.positions[k][j][1]));
      worst[d][o] = w;
    }
  });

  Report rep;
  double maxes[2] = {0.0, 0.0};
  for (const auto& w : worst)
    for (int o = 0; o < 2; ++o) maxes[o] = std::max(maxes[o], w[o]);
  for (int o = 0; o < 2; ++o) {
    CsvRow row;
    row.experiment = "stokes-lagrangian/interp";
    row.config_hash = cfg.hash();
    row.N = count;
    row.dt = cfg.real("stokes.dt");
    row.interp = stokes::to_string(orders[o]);
    row.distance = maxes[o];
    rep.rows.push_back(row);
  }
  rep.summary.push_back({"bilinear_over_bicubic", maxes[0] / maxes[1]});
  rep.summary.push_back({"cutoff", double(cutoff)});
  rep.notes.push_back({"distance", "max tracer-position error against spectral evaluation over prior draws"});
  return rep;
}

// -------------------------------------------------------------------- ns

struct NsSetup {
  ns::NSProblem base;
  SpectralField mean{Geometry::torus(1)};
  double beta;
  double alpha;
  int data_resolution;
  double noise;
};

NsSetup ns_setup(const Config& cfg) {
  NsSetup s;
  s.data_resolution = int(cfg.integer("ns.data_resolution"));
  s.base.viscosity = cfg.real("ns.viscosity");
  if (!cfg.reals("ns.forcing").empty()) s.base.forcing = sparse_field(cfg.reals("ns.forcing"), s.data_resolution);
  s.base.dt = cfg.real("ns.dt");
  s.base.obs_time = cfg.real("ns.obs_time");
  s.base.obs_points = stokes::TracerEnsemble::lattice(int(cfg.integer("ns.points")), {1.0}).initial;
  s.base.scheme = cfg.text("ns.scheme") == "rk4" ? ns::TimeScheme::IntegratingFactorRK4
                                                 : ns::TimeScheme::IntegratingFactorEuler;
  s.base.cutoff = s.data_resolution;
  s.mean = sparse_field(cfg.reals("prior.mean"), s.data_resolution);
  s.beta = cfg.real("prior.beta");
  s.alpha = cfg.real("prior.alpha");
  s.noise = cfg.real("ns.noise");
  return s;
}

struct NsTruth {
  SpectralField u_true;
  ns::EulerianData data;
};

NsTruth ns_truth(const Config& cfg, const NsSetup& s, bool zero_noise) {
  RandomSource rng = data_rng(cfg);
  const auto u = sample_gaussian(prior_at(s.mean, s.beta, s.alpha, s.data_resolution), rng);
  ns::EulerianData data;
  data.y = ns::eulerian_forward(s.base, u);
  for (auto& y : data.y) y += (zero_noise ? 0.0 : s.noise) * rng.normal();
  data.noise_sd = s.noise;
  return {u, data};
}

Report ns_study(const Config& cfg) {
  const auto s = ns_setup(cfg);
  const auto n_list = cfg.integers("ns.N_list");
  const int draws = int(cfg.integer("ns.galerkin_draws"));
  const int workers = int(cfg.integer("run.workers"));
  Report rep;

  // Galerkin consistency |v^N(t) - v^2N(t)| on prior draws.
  std::vector<std::vector<double>> gaps(n_list.size(), std::vector<double>(draws));
  const auto prior = prior_at(s.mean, s.beta, s.alpha, s.data_resolution);
  parallel_for(std::size_t(draws), workers, [&](std::size_t d) {
    RandomSource rng = RandomSource(cfg.seed()).split(300 + d);
    const auto u = sample_gaussian(prior, rng);
    std::map<int, SpectralField> solved;
    auto solve = [&](int n) {
      auto it = solved.find(n);
      if (it != solved.end()) return it->second;
      ns::NSProblem p = s.base;
      p.cutoff = n;
      return solved.emplace(n, ns::ns_solve_galerkin(p, u)).first->second;
    };
    for (std::size_t i = 0; i < n_list.size(); ++i) {
      const int n = n_list[i];
      gaps[i][d] = l2_norm(resample(solve(n), 2 * n) - solve(2 * n));
    }
  });
  int monotone = 0;
  for (int d = 0; d < draws; ++d) {
    bool ok = true;
    for (std::size_t i = 1; i < n_list.size(); ++i) ok = ok && gaps[i][d] < gaps[i - 1][d];
    monotone += ok;
  }
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    CsvRow row;
    row.experiment = "ns-eulerian/galerkin";
    row.config_hash = cfg.hash();
    row.N = n_list[i];
    row.dt = s.base.dt;
    row.distance = std::accumulate(gaps[i].begin(), gaps[i].end(), 0.0) / draws;
    rep.rows.push_back(row);
  }
  rep.summary.push_back({"galerkin_monotone_draws", double(monotone)});
  rep.summary.push_back({"galerkin_draws", double(draws)});

  // Posterior marginals at successive cutoffs.
  const auto truth = ns_truth(cfg, s, false);
  inference::ChainStudy study;
  study.make_posterior = [&](int n) {
    ns::NSProblem p = s.base;
    p.cutoff = n;
    auto solver = std::make_shared<ns::GalerkinSolver>(p);
    const auto* data = &truth.data;
    return inference::Posterior(prior_at(s.mean, s.beta, s.alpha, n), [solver, data](const SpectralField& u) {
      const auto g = ns::observe_points(solver->solve(u), solver->problem().obs_points);
      return stokes::misfit_potential(data->y, g, data->noise_sd);
    });
  };
  study.functional = inference::mode_real_part({0, 1});
  study.chain = chain_options(cfg, "ns");
  study.workers = workers;
  const auto chains = inference::run_chains(study, n_list);
  for (std::size_t i = 0; i + 1 < chains.size(); ++i) {
    auto row = chain_row("ns-eulerian/chain", cfg, inference::compare_marginals(chains[i], chains[i + 1]));
    row.dt = s.base.dt;
    rep.rows.push_back(row);
    rep.summary.push_back({"chain_" + std::to_string(n_list[i]) + "_mean", chains[i].record.mean(0)});
  }
  rep.notes.push_back({"galerkin distance", "mean over prior draws of |v^N(t) - v^2N(t)|"});
  rep.notes.push_back({"chain distance", "histogram Hellinger between the marginals at N and the next N"});
  rep.notes.push_back({"functional", study.functional.name});
  return rep;
}

}  // namespace

// ------------------------------------------------------------------ config

Config Config::defaults() {
  Config c;
  for (const auto& k : schema()) c.values_[std::string(k.section) + "." + k.key] = k.fallback;
  return c;
}

Config Config::parse(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  Config c = defaults();
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' must sit inside a [section]");
    for (const auto& [key, value] : body) {
      if (!value.empty()) throw ConfigError("nested key under " + section + "." + key);
      c.set(section + "." + key, value.data());
    }
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  return parse(in);
}

void Config::set(const std::string& key, const std::string& value) {
  const auto& k = spec_for(key);
  const std::string v = collapse(value);
  check_value(k, key, v);
  values_[key] = v;
}

double Config::real(const std::string& key) const { return parse_real(key, values_.at(key)); }
long long Config::integer(const std::string& key) const { return parse_int(key, values_.at(key)); }
std::uint64_t Config::seed() const { return parse_seed("run.seed", values_.at("run.seed")); }
bool Config::flag(const std::string& key) const { return values_.at(key) == "true"; }
const std::string& Config::text(const std::string& key) const { return values_.at(key); }

std::vector<double> Config::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& w : words(values_.at(key))) out.push_back(parse_real(key, w));
  return out;
}

std::vector<int> Config::integers(const std::string& key) const {
  std::vector<int> out;
  for (const auto& w : words(values_.at(key))) out.push_back(int(parse_int(key, w)));
  return out;
}

std::string Config::echo() const {
  std::string out, section;
  for (const auto& k : schema()) {
    if (section != k.section) {
      section = k.section;
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += std::string(k.key) + " = " + values_.at(section + "." + k.key) + "\n";
  }
  return out;
}

std::string Config::hash() const {
  std::string text;
  for (const auto& k : schema()) {
    if (!k.hashed) continue;
    const std::string key = std::string(k.section) + "." + k.key;
    text += key + "=" + values_.at(key) + "\n";
  }
  return fnv1a_hex(text);
}

// --------------------------------------------------------------------- csv

const char* const kCsvHeader = "experiment,config_hash,N,dt,interp,distance,mean_gap,cov_gap,acceptance,ess,wall_s";

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_row(const CsvRow& r) {
  return r.experiment + "," + r.config_hash + "," + std::to_string(r.N) + "," + format_double(r.dt) + "," +
         r.interp + "," + format_double(r.distance) + "," + format_double(r.mean_gap) + "," +
         format_double(r.cov_gap) + "," + format_double(r.acceptance) + "," + format_double(r.ess) + "," +
         format_double(r.wall_s);
}

// ------------------------------------------------------------- experiments

Experiment experiment_from_string(const std::string& s) {
  if (s == "heat-rate") return Experiment::HeatRate;
  if (s == "stokes-lagrangian") return Experiment::StokesLagrangian;
  if (s == "ns-eulerian") return Experiment::NsEulerian;
  if (s == "metric-props") return Experiment::MetricProps;
  if (s == "synth") return Experiment::Synth;
  throw ConfigError("unknown experiment '" + s + "'");
}

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::HeatRate: return "heat-rate";
    case Experiment::StokesLagrangian: return "stokes-lagrangian";
    case Experiment::NsEulerian: return "ns-eulerian";
    case Experiment::MetricProps: return "metric-props";
    case Experiment::Synth: return "synth";
  }
  return "unknown";
}

int cutoff_from_mode_count(int modes) {
  const int m = perfect_square_root(modes);
  if (m < 2 || m % 2) throw ConfigError("mode count " + std::to_string(modes) + " is not M^2 for an even M >= 2");
  return m / 2;
}

SpectralField sparse_field(const std::vector<double>& entries, int resolution) {
  if (entries.size() % 4) throw ConfigError("coefficient lists hold groups of k1 k2 re im");
  const auto g = Geometry::torus(resolution);
  SpectralField f(g);
  for (std::size_t i = 0; i < entries.size(); i += 4) {
    const Wavevector k{int(entries[i]), int(entries[i + 1])};
    if (double(k.k1) != entries[i] || double(k.k2) != entries[i + 1])
      throw ConfigError("wavevector components must be integers");
    if (!g.contains(k)) throw ConfigError("wavevector outside the stored half-set or above the resolution");
    f[k] = Complex(entries[i + 2], entries[i + 3]);
  }
  return f;
}

namespace {

void validate_prior(const Config& cfg) {
  require(cfg.real("prior.beta") > 0, "prior.beta must be > 0");
  require(cfg.real("prior.alpha") > 1, "prior.alpha must exceed d/2 = 1");
  require(cfg.reals("prior.mean").size() % 4 == 0, "prior.mean holds groups of k1 k2 re im");
}

void validate_chain(const Config& cfg, const std::string& sec) {
  require(cfg.integer(sec + ".steps") > cfg.integer(sec + ".burn_in"), sec + ".steps must exceed burn_in");
  require(cfg.integer(sec + ".burn_in") >= 0, sec + ".burn_in must be >= 0");
  const double b = cfg.real(sec + ".beta_pcn");
  require(b > 0 && b <= 1, sec + ".beta_pcn must lie in (0, 1]");
}

void validate_ascending(const std::vector<int>& v, const std::string& key, int lo) {
  require(!v.empty(), key + " must not be empty");
  for (std::size_t i = 0; i < v.size(); ++i) {
    require(v[i] >= lo, key + " entries must be >= " + std::to_string(lo));
    require(i == 0 || v[i] > v[i - 1], key + " must be strictly ascending");
  }
}

void validate_stokes(const Config& cfg) {
  validate_prior(cfg);
  require(cfg.real("stokes.viscosity") > 0, "stokes.viscosity must be > 0");
  require(cfg.real("stokes.noise") > 0, "stokes.noise must be > 0");
  require(cfg.real("stokes.dt") > 0 && cfg.real("stokes.data_dt") > 0, "time steps must be > 0");
  require(perfect_square_root(cfg.integer("stokes.tracers")) > 0, "stokes.tracers must be a perfect square");
  const auto times = cfg.reals("stokes.obs_times");
  require(!times.empty(), "stokes.obs_times must not be empty");
  for (std::size_t i = 0; i < times.size(); ++i)
    require(times[i] > 0 && (i == 0 || times[i] > times[i - 1]), "stokes.obs_times must be positive and ascending");
  require(cfg.integer("stokes.grid_size") >= 0, "stokes.grid_size must be >= 0");
  const int reference = cutoff_from_mode_count(int(cfg.integer("stokes.reference_modes")));
  require(cfg.reals("stokes.forcing").size() % 4 == 0, "stokes.forcing holds groups of k1 k2 re im");
  const auto& study = cfg.text("stokes.study");
  if (study == "modes") {
    validate_chain(cfg, "mcmc");
    const auto m = cfg.integers("stokes.modes");
    validate_ascending(m, "stokes.modes", 4);
    for (int c : m) require(cutoff_from_mode_count(c) < reference, "stokes.modes must stay below reference_modes");
  } else if (study == "dt") {
    validate_chain(cfg, "mcmc");
    const auto dts = cfg.reals("stokes.dt_list");
    require(dts.size() >= 2, "stokes.dt_list needs at least two entries");
    for (std::size_t i = 0; i < dts.size(); ++i)
      require(dts[i] > 0 && (i == 0 || dts[i] < dts[i - 1]), "stokes.dt_list must be positive and descending");
    cutoff_from_mode_count(int(cfg.integer("stokes.dt_modes")));
    require(cfg.integer("stokes.dt_thin") >= 1, "stokes.dt_thin must be >= 1");
  } else if (study == "truncation") {
    const auto ns = cfg.integers("stokes.truncation_N");
    validate_ascending(ns, "stokes.truncation_N", 1);
    require(ns.back() < cfg.integer("stokes.truncation_resolution"), "truncation_N must stay below truncation_resolution");
    require(cfg.integer("stokes.truncation_draws") >= 1, "stokes.truncation_draws must be >= 1");
  } else {
    cutoff_from_mode_count(int(cfg.integer("stokes.interp_modes")));
    require(cfg.integer("stokes.interp_draws") >= 1, "stokes.interp_draws must be >= 1");
  }
}

void validate_ns(const Config& cfg) {
  validate_prior(cfg);
  validate_chain(cfg, "ns");
  require(cfg.real("ns.viscosity") > 0, "ns.viscosity must be > 0");
  require(cfg.real("ns.dt") > 0 && cfg.real("ns.obs_time") > 0, "ns.dt and ns.obs_time must be > 0");
  require(cfg.real("ns.noise") > 0, "ns.noise must be > 0");
  require(perfect_square_root(cfg.integer("ns.points")) > 0, "ns.points must be a perfect square");
  const auto n = cfg.integers("ns.N_list");
  validate_ascending(n, "ns.N_list", 1);
  require(2 * n.back() <= cfg.integer("ns.data_resolution"), "ns.data_resolution must be >= 2 max(N_list)");
  require(cfg.integer("ns.galerkin_draws") >= 1, "ns.galerkin_draws must be >= 1");
  require(cfg.reals("ns.forcing").size() % 4 == 0, "ns.forcing holds groups of k1 k2 re im");
}

void validate_heat(const Config& cfg) {
  const auto d = cfg.integer("heat.dim");
  require(d == 1 || d == 2, "heat.dim must be 1 or 2");
  require(cfg.real("heat.final_time") > 0, "heat.final_time must be > 0");
  require(cfg.real("heat.beta") > 0 && cfg.real("heat.noise_scale") > 0, "heat.beta and heat.noise_scale must be > 0");
  require(cfg.real("heat.alpha") > d / 2.0, "heat.alpha must exceed d/2");
  require(cfg.real("heat.noise_exponent") > d / 2.0, "heat.noise_exponent must exceed d/2");
  const auto n = cfg.integers("heat.N_list");
  validate_ascending(n, "heat.N_list", 0);
  require(n.back() < cfg.integer("heat.reference_N"), "heat.reference_N must exceed every N");
}

}  // namespace

void validate(Experiment e, const Config& cfg) {
  require(cfg.integer("run.workers") >= 1, "run.workers must be >= 1");
  switch (e) {
    case Experiment::HeatRate: validate_heat(cfg); break;
    case Experiment::StokesLagrangian: validate_stokes(cfg); break;
    case Experiment::NsEulerian: validate_ns(cfg); break;
    case Experiment::MetricProps:
      require(cfg.integer("metric.trials") >= 1, "metric.trials must be >= 1");
      require(cfg.integer("metric.support") >= 2, "metric.support must be >= 2");
      break;
    case Experiment::Synth: {
      const auto& m = cfg.text("synth.model");
      if (m == "heat") validate_heat(cfg);
      if (m == "stokes") validate_stokes(cfg);
      if (m == "ns") validate_ns(cfg);
      break;
    }
  }
}

Report heat_rate(const Config& cfg) {
  const int dim = int(cfg.integer("heat.dim"));
  const int reference = int(cfg.integer("heat.reference_N"));
  const auto n_list = cfg.integers("heat.N_list");
  const auto p = heat::HeatProblem::make(Geometry::dirichlet(dim, reference), cfg.real("heat.final_time"),
                                         cfg.real("heat.beta"), cfg.real("heat.alpha"),
                                         cfg.real("heat.noise_scale"), cfg.real("heat.noise_exponent"));
  RandomSource rng = data_rng(cfg);
  const auto u = sample_gaussian(p.prior, rng);
  const auto data = heat::synth_observation(p, u, rng);
  const auto rows = inference::gaussian_convergence(
      [&](int n) { return heat::truncated_posterior(p, data, n); }, n_list, reference);

  Report rep;
  std::vector<double> x, y;
  bool bounds = true;
  for (const auto& r : rows) {
    CsvRow row;
    row.experiment = "heat-rate";
    row.config_hash = cfg.hash();
    row.N = r.N;
    row.distance = r.distance;
    row.mean_gap = r.mean_gap;
    row.cov_gap = r.cov_gap;
    rep.rows.push_back(row);
    x.push_back(double(r.N) * r.N);
    y.push_back(std::log(r.distance));
    bounds = bounds && r.moment_bound_holds;
    rep.summary.push_back({"moment_bound_N" + std::to_string(r.N), r.moment_bound});
  }
  if (rows.size() >= 2) {
    const auto fit = fit_line(x, y);
    rep.summary.push_back({"log_distance_vs_N2_slope", fit.slope});
    rep.summary.push_back({"log_distance_vs_N2_r2", fit.r2});
  }
  rep.summary.push_back({"moment_bound_holds", bounds ? 1.0 : 0.0});
  return rep;
}

Report stokes_lagrangian(const Config& cfg) {
  const auto& study = cfg.text("stokes.study");
  if (study == "modes") return stokes_modes(cfg);
  if (study == "dt") return stokes_dt(cfg);
  if (study == "truncation") return stokes_truncation(cfg);
  return stokes_interp(cfg);
}

Report ns_eulerian(const Config& cfg) { return ns_study(cfg); }

Report metric_props(const Config& cfg) {
  const int trials = int(cfg.integer("metric.trials"));
  const int n = int(cfg.integer("metric.support"));
  RandomSource rng = data_rng(cfg);
  auto measure = [&] {
    std::vector<double> w(n);
    // occasional exact zeros exercise the disjoint-support edge
    for (auto& x : w) x = rng.uniform() < 0.15 ? 0.0 : -std::log(1.0 - rng.uniform());
    if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) w[0] = 1.0;
    return DiscreteMeasure::from_weights(w);
  };
  int relation_violations = 0, moment_violations = 0;
  double worst_ratio = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto p = measure();
    const auto q = measure();
    if (!check_metric_relation(p, q).holds) ++relation_violations;
    std::vector<std::vector<double>> f(n, std::vector<double>(2));
    for (auto& v : f)
      for (auto& x : v) x = 3.0 * rng.normal();
    const auto b = moment_difference_bound(p, q, f);
    if (!b.holds) ++moment_violations;
    if (b.mean_bound > 0) worst_ratio = std::max(worst_ratio, b.mean_gap / b.mean_bound);
  }
  Report rep;
  CsvRow rel;
  rel.experiment = "metric-props/relation";
  rel.config_hash = cfg.hash();
  rel.N = trials;
  rel.distance = double(relation_violations) / trials;
  rep.rows.push_back(rel);
  CsvRow mom = rel;
  mom.experiment = "metric-props/moments";
  mom.distance = double(moment_violations) / trials;
  mom.mean_gap = worst_ratio;
  rep.rows.push_back(mom);
  rep.summary.push_back({"relation_violations", double(relation_violations)});
  rep.summary.push_back({"moment_violations", double(moment_violations)});
  rep.summary.push_back({"worst_gap_over_bound", worst_ratio});
  rep.notes.push_back({"distance", "fraction of trials violating the inequality"});
  return rep;
}

namespace {

void write_field(std::ostringstream& out, const SpectralField& u) {
  out << "u_true " << u.coeffs.size() << "\n";
  for (std::size_t i = 0; i < u.coeffs.size(); ++i) {
    const auto& k = u.geometry.mode(i);
    out << k.k1 << " " << k.k2 << " " << format_double(u.coeffs[i].real()) << " "
        << format_double(u.coeffs[i].imag()) << "\n";
  }
}

void write_data(std::ostringstream& out, const std::vector<double>& y) {
  out << "y " << y.size() << "\n";
  for (double v : y) out << format_double(v) << "\n";
}

}  // namespace

Report synth(const Config& cfg) {
  const auto& model = cfg.text("synth.model");
  const bool zero = cfg.flag("synth.zero_noise");
  std::ostringstream out;
  out << "model " << model << "\nseed " << cfg.seed() << "\nconfig_hash " << cfg.hash() << "\n";
  std::size_t length = 0;
  if (model == "heat") {
    const int reference = int(cfg.integer("heat.reference_N"));
    const auto p = heat::HeatProblem::make(Geometry::dirichlet(int(cfg.integer("heat.dim")), reference),
                                           cfg.real("heat.final_time"), cfg.real("heat.beta"),
                                           cfg.real("heat.alpha"), cfg.real("heat.noise_scale"),
                                           cfg.real("heat.noise_exponent"));
    RandomSource rng = data_rng(cfg);
    const auto u = sample_gaussian(p.prior, rng);
    const auto y = zero ? heat::HeatData{heat::heat_semigroup(u, p.final_time)} : heat::synth_observation(p, u, rng);
    std::vector<double> v;
    for (const auto& c : y.y.coeffs) v.push_back(c.real());
    length = v.size();
    out << "noise_scale " << format_double(zero ? 0.0 : p.noise_scale) << "\n";
    write_data(out, v);
    out << "u_true " << u.coeffs.size() << "\n";
    for (std::size_t i = 0; i < u.coeffs.size(); ++i) {
      const auto& k = u.geometry.mode(i);
      out << k.k1 << " " << k.k2 << " " << format_double(u.coeffs[i].real()) << "\n";
    }
  } else if (model == "stokes") {
    const auto s = stokes_setup(cfg, cutoff_from_mode_count(int(cfg.integer("stokes.reference_modes"))));
    const auto truth = stokes_truth(cfg, s, zero);
    length = truth.data.y.size();
    out << "tracers " << s.tracers.initial.size() << "\nobs_times " << s.tracers.obs_times.size() << "\n";
    out << "noise_sd " << format_double(zero ? 0.0 : truth.data.noise_sd) << "\n";
    write_data(out, truth.data.y);
    write_field(out, truth.u_true);
  } else {
    const auto s = ns_setup(cfg);
    const auto truth = ns_truth(cfg, s, zero);
    length = truth.data.y.size();
    out << "points " << s.base.obs_points.size() << "\n";
    out << "noise_sd " << format_double(zero ? 0.0 : truth.data.noise_sd) << "\n";
    write_data(out, truth.data.y);
    write_field(out, truth.u_true);
  }
  Report rep;
  CsvRow row;
  row.experiment = "synth/" + model;
  row.config_hash = cfg.hash();
  row.N = (long long)length;
  rep.rows.push_back(row);
  rep.data_file = out.str();
  return rep;
}

Report run(Experiment e, const Config& cfg) {
  validate(e, cfg);
  switch (e) {
    case Experiment::HeatRate: return heat_rate(cfg);
    case Experiment::StokesLagrangian: return stokes_lagrangian(cfg);
    case Experiment::NsEulerian: return ns_eulerian(cfg);
    case Experiment::MetricProps: return metric_props(cfg);
    case Experiment::Synth: return synth(cfg);
  }
  throw ConfigError("unknown experiment");
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

int run_experiment(Experiment e, Config cfg, const RunOptions& options, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string seed_source = "config";
  Report rep;
  try {
    if (const char* env = std::getenv("BIP_SEED"); env && *env) {
      cfg.set("run.seed", env);
      seed_source = "BIP_SEED";
    }
    if (options.seed) {
      cfg.set("run.seed", std::to_string(*options.seed));
      seed_source = "--seed";
    }
    if (options.workers) cfg.set("run.workers", std::to_string(*options.workers));
    if (options.out_dir) cfg.set("run.out", *options.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(cfg.text("run.out"), ec);
    if (ec || !std::filesystem::is_directory(cfg.text("run.out")))
      throw ConfigError("cannot use output directory '" + cfg.text("run.out") + "'");
    rep = run(e, cfg);
  } catch (const ConfigError& ex) {
    err << "bip: invalid configuration: " << ex.what() << "\n";
    return kExitInvalid;
  } catch (const ns::SolverDivergence& ex) {
    err << "bip: numerical divergence: " << ex.what() << "\n";
    return kExitDiverged;
  } catch (const inference::ChainAborted& ex) {
    err << "bip: numerical divergence: " << ex.what() << "\n";
    return kExitDiverged;
  } catch (const std::invalid_argument& ex) {
    err << "bip: invalid configuration: " << ex.what() << "\n";
    return kExitInvalid;
  }

  const std::filesystem::path dir = cfg.text("run.out");
  std::string csv = std::string(kCsvHeader) + "\n";
  for (const auto& r : rep.rows) csv += format_row(r) + "\n";
  write_file(dir / "config.ini", cfg.echo());
  write_file(dir / "results.csv", csv);
  if (!rep.data_file.empty()) write_file(dir / "data.txt", rep.data_file);

  nlohmann::ordered_json m;
  m["experiment"] = to_string(e);
  m["config_hash"] = cfg.hash();
  m["seed"] = cfg.seed();
  m["seed_source"] = seed_source;
  m["workers"] = cfg.integer("run.workers");
  m["versions"]["bip"] = "1.0.0";
  m["versions"]["fftw"] = std::string(fftw_version);
  m["versions"]["compiler"] = std::string(__VERSION__);
  m["wall_time_s"] = seconds_since(t0);
  m["rows"] = rep.rows.size();
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  for (const auto& [k, v] : rep.summary) summary[k] = std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(format_double(v));
  m["summary"] = summary;
  nlohmann::ordered_json notes = nlohmann::ordered_json::object();
  for (const auto& [k, v] : rep.notes) notes[k] = v;
  m["notes"] = notes;
  write_file(dir / "manifest.json", m.dump(2) + "\n");
  return kExitOk;
}

}  // namespace bip::harness
