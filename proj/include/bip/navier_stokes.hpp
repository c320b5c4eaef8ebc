#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bip/fft.hpp"
#include "bip/spectral.hpp"

namespace bip::ns {

class SolverDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TimeScheme { IntegratingFactorEuler, IntegratingFactorRK4 };

/// Galerkin-truncated 2-D Navier-Stokes on the unit torus,
/// dv/dt + nu A v + P^N B(v, v) = P^N psi, observed pointwise at obs_time.
struct NSProblem {
  double viscosity = 0.01;
  std::optional<SpectralField> forcing;
  int cutoff = 16;
  double dt = 1e-4;
  double obs_time = 0.1;
  std::vector<Point> obs_points;
  TimeScheme scheme = TimeScheme::IntegratingFactorEuler;

  void validate() const;
};

struct EulerianData {
  std::vector<double> y;
  double noise_sd = 0.1;
};

/// Even grid size that makes quadratic products exact on |k|_inf <= cutoff
/// once the top third is discarded (M >= 3 cutoff + 1), rounded up to a
/// 2-3-5-7-smooth length.
int dealiased_grid_size(int cutoff);

/// Pseudo-spectral B(v, v) = P((v . grad) v) with 2/3-rule dealiasing.
///
/// Uses (v . grad) v = grad(|v|^2 / 2) + omega (-v2, v1); the gradient part is
/// removed by the Leray projection, so only omega v^perp is transformed.
class NonlinearTerm {
 public:
  explicit NonlinearTerm(const Geometry& g);
  SpectralField operator()(const SpectralField& v);
  void apply(std::span<const Complex> amps, std::span<Complex> out);
  int grid_size() const { return m_; }

 private:
  Geometry geom_;
  int m_;
  TorusTransform transform_;
  std::vector<std::array<Complex, 2>> dirs_;
  std::vector<double> vorticity_factor_;  // omega_k = factor * a_k
  std::vector<Complex> scratch_;
  std::vector<double> u_, v_, w_, p1_, p2_;
};

SpectralField nonlinear_term(const SpectralField& v);

/// Integrates the Galerkin system from P^N u to obs_time.
/// Throws SolverDivergence when the state norm exceeds 1e6 or turns non-finite.
class GalerkinSolver {
 public:
  explicit GalerkinSolver(NSProblem p);

  SpectralField solve(const SpectralField& u);
  /// Calls observer(t, state) after every step (and once at t = 0).
  template <class Observer>
  SpectralField solve(const SpectralField& u, Observer&& observer);

  const NSProblem& problem() const { return problem_; }
  const Geometry& geometry() const { return geom_; }

 private:
  void step(std::vector<Complex>& a, double h);

  NSProblem problem_;
  Geometry geom_;
  NonlinearTerm nonlinear_;
  std::vector<double> decay_, half_decay_;
  double decay_step_ = -1.0;
  std::vector<Complex> forcing_;
  std::vector<Complex> b_, k1_, k2_, k3_, k4_, tmp_;
};

SpectralField ns_solve_galerkin(const NSProblem& p, const SpectralField& u);

/// (v(x_1, t), ..., v(x_K, t)) by exact spectral summation at each point.
std::vector<double> eulerian_forward(const NSProblem& p, const SpectralField& u);

/// |y - G(u)|^2 / (2 noise_sd^2).
double eulerian_potential(const NSProblem& p, const SpectralField& u, const EulerianData& data);

std::vector<double> observe_points(const SpectralField& v, std::span<const Point> points);

template <class Observer>
SpectralField GalerkinSolver::solve(const SpectralField& u, Observer&& observer) {
  if (!u.geometry.is_torus()) throw GeometryMismatch("Navier-Stokes needs a torus field");
  SpectralField state = resample(project(u, problem_.cutoff), geom_.resolution());
  const int steps = std::max(1, int(std::ceil(problem_.obs_time / problem_.dt - 1e-9)));
  const double h = problem_.obs_time / steps;
  observer(0.0, static_cast<const SpectralField&>(state));
  for (int n = 0; n < steps; ++n) {
    step(state.coeffs, h);
    double norm2 = 0.0;
    for (const auto& c : state.coeffs) norm2 += std::norm(c);
    if (!std::isfinite(norm2) || std::sqrt(2.0 * norm2) > 1e6) {
      throw SolverDivergence("Navier-Stokes solve diverged at t = " + std::to_string((n + 1) * h));
    }
    observer((n + 1) * h, static_cast<const SpectralField&>(state));
  }
  return state;
}

}  // namespace bip::ns
