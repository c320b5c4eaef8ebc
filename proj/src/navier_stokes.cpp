#include "bip/navier_stokes.hpp"

#include <algorithm>
#include <cmath>

namespace bip::ns {

void NSProblem::validate() const {
  if (!(viscosity > 0.0)) throw std::invalid_argument("viscosity must be > 0");
  if (cutoff < 1) throw std::invalid_argument("Galerkin cutoff must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be > 0");
  if (!(obs_time > 0.0)) throw std::invalid_argument("observation time must be > 0");
  if (forcing && !forcing->geometry.is_torus()) throw GeometryMismatch("forcing must be a torus field");
}

int dealiased_grid_size(int cutoff) {
  auto smooth = [](int n) {
    for (int p : {2, 3, 5, 7})
      while (n % p == 0) n /= p;
    return n == 1;
  };
  int m = 3 * cutoff + 1;
  if (m % 2) ++m;
  while (!smooth(m)) m += 2;
  return m;
}

NonlinearTerm::NonlinearTerm(const Geometry& g)
    : geom_(g), m_(dealiased_grid_size(g.resolution())), transform_(g, m_) {
  if (!g.is_torus()) throw GeometryMismatch("nonlinear term needs a torus geometry");
  dirs_.resize(g.size());
  vorticity_factor_.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    dirs_[i] = mode_direction(g.mode(i));
    vorticity_factor_[i] = -2.0 * kPi * std::sqrt(double(g.mode(i).norm_squared()));
  }
  scratch_.resize(g.size());
  const std::size_t n = std::size_t(m_) * m_;
  u_.resize(n);
  v_.resize(n);
  w_.resize(n);
  p1_.resize(n);
  p2_.resize(n);
}

void NonlinearTerm::apply(std::span<const Complex> amps, std::span<Complex> out) {
  const std::size_t nm = amps.size();
  for (std::size_t i = 0; i < nm; ++i) scratch_[i] = amps[i] * dirs_[i][0];
  transform_.synthesize(scratch_, u_);
  for (std::size_t i = 0; i < nm; ++i) scratch_[i] = amps[i] * dirs_[i][1];
  transform_.synthesize(scratch_, v_);
  for (std::size_t i = 0; i < nm; ++i) scratch_[i] = amps[i] * vorticity_factor_[i];
  transform_.synthesize(scratch_, w_);
  for (std::size_t n = 0; n < u_.size(); ++n) {
    p1_[n] = -w_[n] * v_[n];
    p2_[n] = w_[n] * u_[n];
  }
  // analysis keeps only |k|_inf <= cutoff <= M/3: the 2/3-rule truncation
  transform_.analyze(p1_, out);
  std::copy(out.begin(), out.end(), scratch_.begin());
  transform_.analyze(p2_, out);
  for (std::size_t i = 0; i < nm; ++i)
    out[i] = std::conj(dirs_[i][0]) * scratch_[i] + std::conj(dirs_[i][1]) * out[i];
}

SpectralField NonlinearTerm::operator()(const SpectralField& v) {
  require_same_geometry(geom_, v.geometry, "nonlinear term");
  SpectralField out(geom_);
  apply(v.coeffs, out.coeffs);
  return out;
}

SpectralField nonlinear_term(const SpectralField& v) {
  NonlinearTerm b(v.geometry);
  return b(v);
}

GalerkinSolver::GalerkinSolver(NSProblem p)
    : problem_(std::move(p)),
      geom_(Geometry::torus(problem_.cutoff)),
      nonlinear_((problem_.validate(), geom_)) {
  const std::size_t n = geom_.size();
  forcing_.assign(n, Complex{});
  if (problem_.forcing) {
    const SpectralField f = resample(*problem_.forcing, problem_.cutoff);
    std::copy(f.coeffs.begin(), f.coeffs.end(), forcing_.begin());
  }
  for (auto* v : {&b_, &k1_, &k2_, &k3_, &k4_, &tmp_}) v->assign(n, Complex{});
}

void GalerkinSolver::step(std::vector<Complex>& a, double h) {
  const std::size_t n = a.size();
  if (h != decay_step_) {
    decay_.resize(n);
    half_decay_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double rate = problem_.viscosity * geom_.eigenvalue(i);
      decay_[i] = std::exp(-rate * h);
      half_decay_[i] = std::exp(-rate * 0.5 * h);
    }
    decay_step_ = h;
  }
  // N(a) = psi - B(a)
  auto rhs = [&](std::span<const Complex> x, std::vector<Complex>& out) {
    nonlinear_.apply(x, out);
    for (std::size_t i = 0; i < n; ++i) out[i] = forcing_[i] - out[i];
  };
  if (problem_.scheme == TimeScheme::IntegratingFactorEuler) {
    rhs(a, k1_);
    for (std::size_t i = 0; i < n; ++i) a[i] = decay_[i] * (a[i] + h * k1_[i]);
    return;
  }
  rhs(a, k1_);
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = half_decay_[i] * (a[i] + 0.5 * h * k1_[i]);
  rhs(tmp_, k2_);
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = half_decay_[i] * a[i] + 0.5 * h * k2_[i];
  rhs(tmp_, k3_);
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = decay_[i] * a[i] + h * half_decay_[i] * k3_[i];
  rhs(tmp_, k4_);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = decay_[i] * a[i] +
           h / 6.0 * (decay_[i] * k1_[i] + 2.0 * half_decay_[i] * (k2_[i] + k3_[i]) + k4_[i]);
  }
}

SpectralField GalerkinSolver::solve(const SpectralField& u) {
  return solve(u, [](double, const SpectralField&) {});
}

SpectralField ns_solve_galerkin(const NSProblem& p, const SpectralField& u) {
  GalerkinSolver solver(p);
  return solver.solve(u);
}

std::vector<double> observe_points(const SpectralField& v, std::span<const Point> points) {
  std::vector<double> g;
  g.reserve(2 * points.size());
  for (const auto& x : points) {
    const Point w = evaluate(v, x);
    g.push_back(w[0]);
    g.push_back(w[1]);
  }
  return g;
}

std::vector<double> eulerian_forward(const NSProblem& p, const SpectralField& u) {
  return observe_points(ns_solve_galerkin(p, u), p.obs_points);
}

double eulerian_potential(const NSProblem& p, const SpectralField& u, const EulerianData& data) {
  if (data.y.size() != 2 * p.obs_points.size()) {
    throw std::invalid_argument("Eulerian data length does not match 2K");
  }
  const auto g = eulerian_forward(p, u);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = data.y[i] - g[i];
    s += r * r;
  }
  return 0.5 * s / (data.noise_sd * data.noise_sd);
}

}  // namespace bip::ns
