#pragma once

#include <optional>
#include <vector>

#include "bip/fft.hpp"
#include "bip/spectral.hpp"

namespace bip::stokes {

/// Unsteady Stokes flow dv/dt + nu A v = psi on the unit torus with
/// time-constant forcing.
struct StokesProblem {
  double viscosity = 0.05;
  std::optional<SpectralField> forcing;
  double final_time = 1.0;

  static StokesProblem make(double viscosity, std::optional<SpectralField> forcing, double final_time);
};

/// Exact modal solution v_k(t) = e^{-nu l t} u_k + (1 - e^{-nu l t}) psi_k / (nu l).
/// The result lives on the finer of the geometries of u and the forcing.
SpectralField stokes_solve(const StokesProblem& p, const SpectralField& u, double t);

struct TracerEnsemble {
  std::vector<Point> initial;
  std::vector<double> obs_times;

  /// sqrt(J) x sqrt(J) cell-centred lattice; J must be a perfect square.
  static TracerEnsemble lattice(int count, std::vector<double> obs_times);
  void validate() const;
  std::size_t observation_size() const { return 2 * initial.size() * obs_times.size(); }
};

/// Noisy tracer positions, ordered (j, k) with coordinates interleaved.
struct LagrangianData {
  std::vector<double> y;
  double noise_sd = 0.01;
};

enum class Interpolation { Bilinear, Bicubic, Spectral };
enum class Integrator { Euler, RK4 };

const char* to_string(Interpolation order);
Interpolation interpolation_from_string(const std::string& s);

/// Velocity samples on an M x M grid, plus spectrally computed partial
/// derivatives (d/dx, d/dy, d2/dxdy) when built for bicubic use.
struct VelocityGrid {
  int size = 0;
  std::array<std::vector<double>, 2> value;
  std::array<std::vector<double>, 2> dx;
  std::array<std::vector<double>, 2> dy;
  std::array<std::vector<double>, 2> dxy;
  bool has_derivatives = false;
};

VelocityGrid velocity_grid(const SpectralField& v, int grid_size, bool with_derivatives);

/// Off-grid velocity; x is wrapped onto the torus first. Spectral order is not
/// available from a grid and throws.
Point velocity_at(const VelocityGrid& grid, const Point& x, Interpolation order);

Point wrap_to_torus(const Point& x);

struct AdvectionOptions {
  double dt = 1e-3;
  Interpolation order = Interpolation::Bilinear;
  Integrator integrator = Integrator::Euler;
  int grid_size = 0;  // 0 selects 2 * resolution + 2
};

/// Lifted (unwrapped) trajectories sampled at the observation times:
/// positions[k][j] is tracer j at t_k.
struct TracerPaths {
  std::vector<std::vector<Point>> positions;
  Point wrapped(std::size_t k, std::size_t j) const { return wrap_to_torus(positions[k][j]); }
};

/// Reusable Lagrangian forward model with its own transform workspaces.
/// Not thread-safe; give each worker its own instance.
class LagrangianModel {
 public:
  LagrangianModel(StokesProblem problem, TracerEnsemble tracers, AdvectionOptions options);

  TracerPaths advect(const SpectralField& u);
  std::vector<double> forward(const SpectralField& u);
  double potential(const SpectralField& u, const LagrangianData& data);

  const StokesProblem& problem() const { return problem_; }
  const TracerEnsemble& tracers() const { return tracers_; }
  const AdvectionOptions& options() const { return options_; }

 private:
  void prepare(const Geometry& g);
  void fill_grid(std::span<const Complex> amps);
  Point velocity(const SpectralField& state, const Point& z);

  StokesProblem problem_;
  TracerEnsemble tracers_;
  AdvectionOptions options_;
  std::optional<Geometry> geometry_;
  std::optional<TorusTransform> transform_;
  std::vector<std::array<Complex, 2>> directions_;
  std::vector<Complex> scratch_;
  std::vector<Complex> steady_;  // psi_k / (nu lambda_k)
  std::vector<double> rate_;     // nu lambda_k
  VelocityGrid grid_;
};

TracerPaths advect_tracers(const StokesProblem& p, const SpectralField& u, const TracerEnsemble& e,
                           const AdvectionOptions& options);

std::vector<double> lagrangian_forward(const StokesProblem& p, const SpectralField& u,
                                       const TracerEnsemble& e, const AdvectionOptions& options);

/// 1/2 |y - G(u)|^2 / noise_sd^2.
double lagrangian_potential(const StokesProblem& p, const SpectralField& u,
                            const LagrangianData& data, const TracerEnsemble& e,
                            const AdvectionOptions& options);

double misfit_potential(std::span<const double> y, std::span<const double> g, double noise_sd);

}  // namespace bip::stokes
