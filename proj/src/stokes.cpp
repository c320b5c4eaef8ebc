#include "bip/stokes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bip::stokes {

StokesProblem StokesProblem::make(double viscosity, std::optional<SpectralField> forcing,
                                  double final_time) {
  if (!(viscosity > 0.0)) throw std::invalid_argument("viscosity must be > 0");
  if (!(final_time > 0.0)) throw std::invalid_argument("final time must be > 0");
  if (forcing && !forcing->geometry.is_torus()) {
    throw GeometryMismatch("Stokes forcing must be a torus field");
  }
  return StokesProblem{viscosity, std::move(forcing), final_time};
}

namespace {

int working_resolution(const StokesProblem& p, const Geometry& g) {
  return p.forcing ? std::max(g.resolution(), p.forcing->geometry.resolution()) : g.resolution();
}

}  // namespace

SpectralField stokes_solve(const StokesProblem& p, const SpectralField& u, double t) {
  if (!u.geometry.is_torus()) throw GeometryMismatch("Stokes solve needs a torus field");
  if (t < 0.0 || t > p.final_time) {
    throw std::invalid_argument("Stokes solve time " + std::to_string(t) + " outside [0, " +
                                std::to_string(p.final_time) + "]");
  }
  SpectralField v = resample(u, working_resolution(p, u.geometry));
  const SpectralField psi = p.forcing ? resample(*p.forcing, v.geometry.resolution())
                                      : SpectralField(v.geometry);
  for (std::size_t i = 0; i < v.coeffs.size(); ++i) {
    const double rate = p.viscosity * v.geometry.eigenvalue(i);
    const double decay = std::exp(-rate * t);
    v.coeffs[i] = decay * v.coeffs[i] + (-std::expm1(-rate * t)) * psi.coeffs[i] / rate;
  }
  return v;
}

TracerEnsemble TracerEnsemble::lattice(int count, std::vector<double> obs_times) {
  const int side = int(std::lround(std::sqrt(double(count))));
  if (count < 1 || side * side != count) {
    throw std::invalid_argument("lattice tracer count must be a positive perfect square");
  }
  TracerEnsemble e;
  for (int a = 0; a < side; ++a)
    for (int b = 0; b < side; ++b) e.initial.push_back({(a + 0.5) / side, (b + 0.5) / side});
  e.obs_times = std::move(obs_times);
  e.validate();
  return e;
}

void TracerEnsemble::validate() const {
  if (initial.empty()) throw std::invalid_argument("need at least one tracer");
  if (obs_times.empty()) throw std::invalid_argument("need at least one observation time");
  double prev = 0.0;
  for (double t : obs_times) {
    if (!(t > prev)) throw std::invalid_argument("observation times must be positive and increasing");
    prev = t;
  }
  for (const auto& z : initial) {
    if (!(z[0] >= 0.0 && z[0] < 1.0 && z[1] >= 0.0 && z[1] < 1.0)) {
      throw std::invalid_argument("tracer initial positions must lie in [0,1)^2");
    }
  }
}

const char* to_string(Interpolation order) {
  switch (order) {
    case Interpolation::Bilinear: return "bilinear";
    case Interpolation::Bicubic: return "bicubic";
    case Interpolation::Spectral: return "spectral";
  }
  return "?";
}

Interpolation interpolation_from_string(const std::string& s) {
  if (s == "bilinear") return Interpolation::Bilinear;
  if (s == "bicubic") return Interpolation::Bicubic;
  if (s == "spectral") return Interpolation::Spectral;
  throw std::invalid_argument("unknown interpolation order '" + s + "'");
}

Point wrap_to_torus(const Point& x) {
  Point w;
  for (int c = 0; c < 2; ++c) {
    w[c] = x[c] - std::floor(x[c]);
    if (w[c] >= 1.0) w[c] = 0.0;
  }
  return w;
}

namespace {

void synthesize_component(TorusTransform& tf, std::span<const Complex> amps,
                          const std::vector<std::array<Complex, 2>>& dirs, int comp,
                          Complex (*multiplier)(const Wavevector&), std::vector<Complex>& scratch,
                          std::vector<double>& out) {
  const auto& g = tf.geometry();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    Complex c = amps[i] * dirs[i][comp];
    if (multiplier) c *= multiplier(g.mode(i));
    scratch[i] = c;
  }
  out.resize(std::size_t(tf.grid_size()) * tf.grid_size());
  tf.synthesize(scratch, out);
}

Complex d_dx(const Wavevector& k) { return Complex(0.0, 2.0 * kPi * k.k1); }
Complex d_dy(const Wavevector& k) { return Complex(0.0, 2.0 * kPi * k.k2); }
Complex d_dxy(const Wavevector& k) { return Complex(-4.0 * kPi * kPi * k.k1 * k.k2, 0.0); }

std::vector<std::array<Complex, 2>> directions(const Geometry& g) {
  std::vector<std::array<Complex, 2>> d(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) d[i] = mode_direction(g.mode(i));
  return d;
}

// Hermite basis on [0,1]: value at 0, value at 1, slope at 0, slope at 1
inline void hermite(double t, double& v0, double& v1, double& s0, double& s1) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  v0 = 2.0 * t3 - 3.0 * t2 + 1.0;
  v1 = -2.0 * t3 + 3.0 * t2;
  s0 = t3 - 2.0 * t2 + t;
  s1 = t3 - t2;
}

}  // namespace

VelocityGrid velocity_grid(const SpectralField& v, int grid_size, bool with_derivatives) {
  TorusTransform tf(v.geometry, grid_size);
  const auto dirs = directions(v.geometry);
  std::vector<Complex> scratch(v.geometry.size());
  VelocityGrid grid;
  grid.size = grid_size;
  grid.has_derivatives = with_derivatives;
  for (int c = 0; c < 2; ++c) {
    synthesize_component(tf, v.coeffs, dirs, c, nullptr, scratch, grid.value[c]);
    if (with_derivatives) {
      synthesize_component(tf, v.coeffs, dirs, c, d_dx, scratch, grid.dx[c]);
      synthesize_component(tf, v.coeffs, dirs, c, d_dy, scratch, grid.dy[c]);
      synthesize_component(tf, v.coeffs, dirs, c, d_dxy, scratch, grid.dxy[c]);
    }
  }
  return grid;
}

Point velocity_at(const VelocityGrid& grid, const Point& x, Interpolation order) {
  const int m = grid.size;
  const Point w = wrap_to_torus(x);
  const double xs = w[0] * m;
  const double ys = w[1] * m;
  int i0 = int(std::floor(xs));
  int j0 = int(std::floor(ys));
  const double fx = xs - i0;
  const double fy = ys - j0;
  i0 %= m;
  j0 %= m;
  const int i1 = (i0 + 1) % m;
  const int j1 = (j0 + 1) % m;
  const std::size_t c00 = std::size_t(i0) * m + j0, c01 = std::size_t(i0) * m + j1;
  const std::size_t c10 = std::size_t(i1) * m + j0, c11 = std::size_t(i1) * m + j1;
  Point out{};
  switch (order) {
    case Interpolation::Bilinear:
      for (int c = 0; c < 2; ++c) {
        const auto& f = grid.value[c];
        out[c] = (1 - fx) * ((1 - fy) * f[c00] + fy * f[c01]) + fx * ((1 - fy) * f[c10] + fy * f[c11]);
      }
      return out;
    case Interpolation::Bicubic: {
      if (!grid.has_derivatives) throw std::invalid_argument("bicubic needs derivative grids");
      const double h = 1.0 / m;
      double ax0, ax1, bx0, bx1, ay0, ay1, by0, by1;
      hermite(fx, ax0, ax1, bx0, bx1);
      hermite(fy, ay0, ay1, by0, by1);
      for (int c = 0; c < 2; ++c) {
        const auto& f = grid.value[c];
        const auto& gx = grid.dx[c];
        const auto& gy = grid.dy[c];
        const auto& gxy = grid.dxy[c];
        auto corner = [&](std::size_t idx, double wx, double sx, double wy, double sy) {
          return f[idx] * wx * wy + h * gx[idx] * sx * wy + h * gy[idx] * wx * sy +
                 h * h * gxy[idx] * sx * sy;
        };
        out[c] = corner(c00, ax0, bx0, ay0, by0) + corner(c01, ax0, bx0, ay1, by1) +
                 corner(c10, ax1, bx1, ay0, by0) + corner(c11, ax1, bx1, ay1, by1);
      }
      return out;
    }
    case Interpolation::Spectral:
      break;
  }
  throw std::invalid_argument("spectral evaluation is not available from a velocity grid");
}

LagrangianModel::LagrangianModel(StokesProblem problem, TracerEnsemble tracers,
                                 AdvectionOptions options)
    : problem_(std::move(problem)), tracers_(std::move(tracers)), options_(options) {
  tracers_.validate();
  if (!(options_.dt > 0.0)) throw std::invalid_argument("advection time step must be > 0");
  double prev = 0.0;
  for (double t : tracers_.obs_times) {
    if (options_.dt > (t - prev) * (1.0 + 1e-12)) {
      throw std::invalid_argument("time step exceeds the spacing of observation times");
    }
    if (t > problem_.final_time * (1.0 + 1e-12)) {
      throw std::invalid_argument("observation time beyond the problem's final time");
    }
    prev = t;
  }
}

void LagrangianModel::prepare(const Geometry& g) {
  const int res = working_resolution(problem_, g);
  if (geometry_ && geometry_->resolution() == res) return;
  geometry_ = g.with_resolution(res);
  const int m = options_.grid_size > 0 ? options_.grid_size : geometry_->min_grid_size();
  transform_.emplace(*geometry_, m);
  directions_ = directions(*geometry_);
  scratch_.assign(geometry_->size(), Complex{});
  rate_.resize(geometry_->size());
  steady_.assign(geometry_->size(), Complex{});
  const SpectralField psi = problem_.forcing ? resample(*problem_.forcing, res) : SpectralField(*geometry_);
  for (std::size_t i = 0; i < rate_.size(); ++i) {
    rate_[i] = problem_.viscosity * geometry_->eigenvalue(i);
    steady_[i] = psi.coeffs[i] / rate_[i];
  }
  grid_ = VelocityGrid{};
  grid_.size = m;
  grid_.has_derivatives = options_.order == Interpolation::Bicubic;
}

void LagrangianModel::fill_grid(std::span<const Complex> amps) {
  auto& tf = *transform_;
  for (int c = 0; c < 2; ++c) {
    synthesize_component(tf, amps, directions_, c, nullptr, scratch_, grid_.value[c]);
    if (grid_.has_derivatives) {
      synthesize_component(tf, amps, directions_, c, d_dx, scratch_, grid_.dx[c]);
      synthesize_component(tf, amps, directions_, c, d_dy, scratch_, grid_.dy[c]);
      synthesize_component(tf, amps, directions_, c, d_dxy, scratch_, grid_.dxy[c]);
    }
  }
}

Point LagrangianModel::velocity(const SpectralField& state, const Point& z) {
  if (options_.order != Interpolation::Spectral) return velocity_at(grid_, z, options_.order);
  return evaluate(state, z);
}

TracerPaths LagrangianModel::advect(const SpectralField& u) {
  if (!u.geometry.is_torus()) throw GeometryMismatch("tracer advection needs a torus field");
  prepare(u.geometry);
  SpectralField state = resample(u, geometry_->resolution());
  const std::size_t nmodes = state.coeffs.size();
  const std::size_t ntr = tracers_.initial.size();
  const bool grid_based = options_.order != Interpolation::Spectral;

  std::vector<Point> z(tracers_.initial.begin(), tracers_.initial.end());
  TracerPaths paths;
  paths.positions.reserve(tracers_.obs_times.size());

  auto eval_all = [&](const SpectralField& s, const std::vector<Point>& at, std::vector<Point>& out) {
    if (grid_based) fill_grid(s.coeffs);
    for (std::size_t j = 0; j < ntr; ++j) out[j] = velocity(s, wrap_to_torus(at[j]));
  };
  // advance modal amplitudes by an exact Stokes step with decay factors r
  auto advance = [&](const SpectralField& from, const std::vector<double>& r, SpectralField& to) {
    for (std::size_t i = 0; i < nmodes; ++i)
      to.coeffs[i] = r[i] * from.coeffs[i] + (1.0 - r[i]) * steady_[i];
  };

  std::vector<Point> k1(ntr), k2(ntr), k3(ntr), k4(ntr), ztmp(ntr);
  std::vector<double> r_full(nmodes), r_half(nmodes);
  SpectralField next = state;
  SpectralField mid = state;
  double t_prev = 0.0;
  for (double t_obs : tracers_.obs_times) {
    const double span = t_obs - t_prev;
    const int steps = std::max(1, int(std::ceil(span / options_.dt - 1e-9)));
    const double h = span / steps;
    for (std::size_t i = 0; i < nmodes; ++i) {
      r_full[i] = std::exp(-rate_[i] * h);
      r_half[i] = std::exp(-rate_[i] * 0.5 * h);
    }
    for (int n = 0; n < steps; ++n) {
      if (options_.integrator == Integrator::Euler) {
        eval_all(state, z, k1);
        for (std::size_t j = 0; j < ntr; ++j) {
          z[j][0] += h * k1[j][0];
          z[j][1] += h * k1[j][1];
        }
        advance(state, r_full, next);
      } else {
        advance(state, r_half, mid);
        advance(state, r_full, next);
        eval_all(state, z, k1);
        for (std::size_t j = 0; j < ntr; ++j)
          ztmp[j] = {z[j][0] + 0.5 * h * k1[j][0], z[j][1] + 0.5 * h * k1[j][1]};
        eval_all(mid, ztmp, k2);
        for (std::size_t j = 0; j < ntr; ++j)
          ztmp[j] = {z[j][0] + 0.5 * h * k2[j][0], z[j][1] + 0.5 * h * k2[j][1]};
        // the grid for `mid` is still loaded
        for (std::size_t j = 0; j < ntr; ++j) k3[j] = velocity(mid, wrap_to_torus(ztmp[j]));
        for (std::size_t j = 0; j < ntr; ++j)
          ztmp[j] = {z[j][0] + h * k3[j][0], z[j][1] + h * k3[j][1]};
        eval_all(next, ztmp, k4);
        for (std::size_t j = 0; j < ntr; ++j)
          for (int c = 0; c < 2; ++c)
            z[j][c] += h / 6.0 * (k1[j][c] + 2.0 * k2[j][c] + 2.0 * k3[j][c] + k4[j][c]);
      }
      std::swap(state, next);
    }
    paths.positions.push_back(z);
    t_prev = t_obs;
  }
  return paths;
}

std::vector<double> LagrangianModel::forward(const SpectralField& u) {
  const TracerPaths paths = advect(u);
  const std::size_t ntr = tracers_.initial.size();
  const std::size_t nobs = tracers_.obs_times.size();
  std::vector<double> g(2 * ntr * nobs);
  for (std::size_t j = 0; j < ntr; ++j)
    for (std::size_t k = 0; k < nobs; ++k) {
      g[2 * (j * nobs + k)] = paths.positions[k][j][0];
      g[2 * (j * nobs + k) + 1] = paths.positions[k][j][1];
    }
  return g;
}

double misfit_potential(std::span<const double> y, std::span<const double> g, double noise_sd) {
  if (y.size() != g.size()) {
    throw std::invalid_argument("data length " + std::to_string(y.size()) +
                                " does not match forward output length " + std::to_string(g.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - g[i];
    s += r * r;
  }
  return 0.5 * s / (noise_sd * noise_sd);
}

double LagrangianModel::potential(const SpectralField& u, const LagrangianData& data) {
  if (data.y.size() != tracers_.observation_size()) {
    throw std::invalid_argument("Lagrangian data length does not match 2JK");
  }
  return misfit_potential(data.y, forward(u), data.noise_sd);
}

TracerPaths advect_tracers(const StokesProblem& p, const SpectralField& u, const TracerEnsemble& e,
                           const AdvectionOptions& options) {
  LagrangianModel model(p, e, options);
  return model.advect(u);
}

std::vector<double> lagrangian_forward(const StokesProblem& p, const SpectralField& u,
                                       const TracerEnsemble& e, const AdvectionOptions& options) {
  LagrangianModel model(p, e, options);
  return model.forward(u);
}

double lagrangian_potential(const StokesProblem& p, const SpectralField& u,
                            const LagrangianData& data, const TracerEnsemble& e,
                            const AdvectionOptions& options) {
  LagrangianModel model(p, e, options);
  return model.potential(u, data);
}

}  // namespace bip::stokes
