#include "bip/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <tuple>

#include "bip/fft.hpp"

namespace bip {

int Wavevector::sup_norm() const { return std::max(std::abs(k1), std::abs(k2)); }

Geometry::Geometry(GeometryKind kind, int dim, int resolution)
    : kind_(kind), dim_(dim), resolution_(resolution) {
  if (resolution < 1) throw std::invalid_argument("geometry resolution must be >= 1");
  auto table = std::make_shared<Table>();
  const int r = resolution;
  if (kind == GeometryKind::DirichletBox) {
    if (dim == 1) {
      for (int k = 1; k <= r; ++k) table->modes.push_back({k, 0});
    } else {
      for (int a = 1; a <= r; ++a)
        for (int b = 1; b <= r; ++b) table->modes.push_back({a, b});
    }
  } else {
    for (int a = -r; a <= r; ++a)
      for (int b = 0; b <= r; ++b)
        if (b > 0 || a > 0) table->modes.push_back({a, b});
  }
  std::stable_sort(table->modes.begin(), table->modes.end(),
                   [](const Wavevector& x, const Wavevector& y) {
                     return std::make_tuple(x.sup_norm(), x.k1, x.k2) <
                            std::make_tuple(y.sup_norm(), y.k1, y.k2);
                   });
  const double scale = kind == GeometryKind::DirichletBox ? kPi * kPi : 4.0 * kPi * kPi;
  table->eigenvalues.reserve(table->modes.size());
  for (const auto& k : table->modes) table->eigenvalues.push_back(scale * k.norm_squared());

  const int side = 2 * r + 1;
  table->lookup.assign(std::size_t(side) * side, -1);
  for (std::size_t i = 0; i < table->modes.size(); ++i) {
    const auto& k = table->modes[i];
    table->lookup[std::size_t(k.k1 + r) * side + (k.k2 + r)] = int(i);
  }
  table_ = std::move(table);
}

Geometry Geometry::dirichlet(int dim, int resolution) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("DirichletBox supports d in {1, 2}");
  return Geometry(GeometryKind::DirichletBox, dim, resolution);
}

Geometry Geometry::torus(int resolution) { return Geometry(GeometryKind::Torus2D, 2, resolution); }

Geometry Geometry::with_resolution(int resolution) const {
  return Geometry(kind_, dim_, resolution);
}

int Geometry::lookup_slot(const Wavevector& k) const {
  const int r = resolution_;
  if (std::abs(k.k1) > r || std::abs(k.k2) > r) return -1;
  const int side = 2 * r + 1;
  return table_->lookup[std::size_t(k.k1 + r) * side + (k.k2 + r)];
}

bool Geometry::contains(const Wavevector& k) const { return lookup_slot(k) >= 0; }

std::size_t Geometry::index_of(const Wavevector& k) const {
  const int slot = lookup_slot(k);
  if (slot < 0) {
    throw InvalidWavevector("wavevector (" + std::to_string(k.k1) + "," + std::to_string(k.k2) +
                            ") is not in the index set of " + describe());
  }
  return std::size_t(slot);
}

std::string Geometry::describe() const {
  if (is_torus()) return "Torus2D(resolution=" + std::to_string(resolution_) + ")";
  return "DirichletBox(d=" + std::to_string(dim_) + ", resolution=" + std::to_string(resolution_) +
         ")";
}

double eigenvalue(const Wavevector& k, const Geometry& g) { return g.eigenvalue(g.index_of(k)); }

SpectralField::SpectralField(Geometry g, std::vector<Complex> c)
    : geometry(std::move(g)), coeffs(std::move(c)) {
  if (coeffs.size() != geometry.size()) {
    throw GeometryMismatch("coefficient count does not match " + geometry.describe());
  }
}

SpectralField SpectralField::basis(const Geometry& g, const Wavevector& k, Complex value) {
  SpectralField f(g);
  f[k] = value;
  return f;
}

void require_same_geometry(const Geometry& a, const Geometry& b, const char* what) {
  if (!(a == b)) {
    throw GeometryMismatch(std::string(what) + ": " + a.describe() + " vs " + b.describe());
  }
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  require_same_geometry(geometry, o.geometry, "field addition");
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += o.coeffs[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  require_same_geometry(geometry, o.geometry, "field subtraction");
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] -= o.coeffs[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (auto& c : coeffs) c *= s;
  return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

SpectralField apply_fractional_power(const SpectralField& f, double a) {
  SpectralField out = f;
  if (a == 0.0) return out;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i)
    out.coeffs[i] *= std::pow(f.geometry.eigenvalue(i), a);
  return out;
}

double sobolev_norm(const SpectralField& f, double s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
    const double w = s == 0.0 ? 1.0 : std::pow(f.geometry.eigenvalue(i), s);
    sum += w * std::norm(f.coeffs[i]);
  }
  return std::sqrt(f.geometry.norm_weight() * sum);
}

double inner_product(const SpectralField& a, const SpectralField& b) {
  require_same_geometry(a.geometry, b.geometry, "inner product");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.coeffs.size(); ++i)
    sum += (std::conj(a.coeffs[i]) * b.coeffs[i]).real();
  return a.geometry.norm_weight() * sum;
}

SpectralField project(const SpectralField& f, int cutoff) {
  if (cutoff < 0) throw std::invalid_argument("projection cutoff must be >= 0");
  SpectralField out = f;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i)
    if (f.geometry.mode(i).sup_norm() > cutoff) out.coeffs[i] = 0.0;
  return out;
}

SpectralField resample(const SpectralField& f, int resolution) {
  SpectralField out(f.geometry.with_resolution(resolution));
  for (std::size_t i = 0; i < out.coeffs.size(); ++i) {
    const auto& k = out.geometry.mode(i);
    if (f.geometry.contains(k)) out.coeffs[i] = f.coeffs[f.geometry.index_of(k)];
  }
  return out;
}

std::array<Complex, 2> mode_direction(const Wavevector& k) {
  const double n = std::sqrt(double(k.norm_squared()));
  return {Complex(0.0, -k.k2 / n), Complex(0.0, k.k1 / n)};
}

VectorSpectrum velocity_coefficients(const SpectralField& f) {
  if (!f.geometry.is_torus()) throw GeometryMismatch("velocity coefficients need a torus field");
  VectorSpectrum v{f.geometry, std::vector<std::array<Complex, 2>>(f.coeffs.size())};
  for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
    const auto e = mode_direction(f.geometry.mode(i));
    v.coeffs[i] = {f.coeffs[i] * e[0], f.coeffs[i] * e[1]};
  }
  return v;
}

SpectralField leray_project(const VectorSpectrum& vhat) {
  if (!vhat.geometry.is_torus()) throw GeometryMismatch("Leray projection needs a torus geometry");
  SpectralField out(vhat.geometry);
  for (std::size_t i = 0; i < out.coeffs.size(); ++i) {
    const auto e = mode_direction(vhat.geometry.mode(i));
    out.coeffs[i] = std::conj(e[0]) * vhat.coeffs[i][0] + std::conj(e[1]) * vhat.coeffs[i][1];
  }
  return out;
}

double max_divergence(const SpectralField& f) {
  if (!f.geometry.is_torus()) return 0.0;
  double worst = 0.0;
  const auto v = velocity_coefficients(f);
  for (std::size_t i = 0; i < v.coeffs.size(); ++i) {
    const auto& k = f.geometry.mode(i);
    worst = std::max(worst, std::abs(double(k.k1) * v.coeffs[i][0] + double(k.k2) * v.coeffs[i][1]));
  }
  return worst;
}

Point evaluate(const SpectralField& f, const Point& x) {
  const auto& g = f.geometry;
  Point out{0.0, 0.0};
  if (g.is_torus()) {
    for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
      const auto& k = g.mode(i);
      const double phase = 2.0 * kPi * (k.k1 * x[0] + k.k2 * x[1]);
      const Complex w = f.coeffs[i] * Complex(std::cos(phase), std::sin(phase));
      const auto e = mode_direction(k);
      out[0] += 2.0 * (w * e[0]).real();
      out[1] += 2.0 * (w * e[1]).real();
    }
    return out;
  }
  for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
    const auto& k = g.mode(i);
    double phi = std::sqrt(2.0) * std::sin(kPi * k.k1 * x[0]);
    if (g.dim() == 2) phi *= std::sqrt(2.0) * std::sin(kPi * k.k2 * x[1]);
    out[0] += f.coeffs[i].real() * phi;
  }
  return out;
}

namespace {

// sqrt(2) sin(pi k j / M) for k in 1..R, j in 0..M-1
std::vector<double> sine_table(int resolution, int m) {
  std::vector<double> t(std::size_t(resolution + 1) * m, 0.0);
  for (int k = 1; k <= resolution; ++k)
    for (int j = 0; j < m; ++j)
      t[std::size_t(k) * m + j] = std::sqrt(2.0) * std::sin(kPi * k * j / double(m));
  return t;
}

}  // namespace

GridField to_grid(const SpectralField& f, int grid_size) {
  const auto& g = f.geometry;
  const int m = grid_size;
  if (m < g.min_grid_size()) {
    throw AliasingError("grid size " + std::to_string(m) + " aliases modes of " + g.describe() +
                        " (need >= " + std::to_string(g.min_grid_size()) + ")");
  }
  GridField grid{g, m, {}};
  if (g.is_torus()) {
    TorusTransform tf(g, m);
    const auto v = velocity_coefficients(f);
    std::vector<Complex> c(g.size());
    for (int comp = 0; comp < 2; ++comp) {
      for (std::size_t i = 0; i < c.size(); ++i) c[i] = v.coeffs[i][comp];
      std::vector<double> values(std::size_t(m) * m);
      tf.synthesize(c, values);
      grid.components.push_back(std::move(values));
    }
    return grid;
  }
  const auto table = sine_table(g.resolution(), m);
  if (g.dim() == 1) {
    std::vector<double> values(m, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const int k = g.mode(i).k1;
      for (int j = 0; j < m; ++j) values[j] += f.coeffs[i].real() * table[std::size_t(k) * m + j];
    }
    grid.components.push_back(std::move(values));
    return grid;
  }
  std::vector<double> values(std::size_t(m) * m, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& k = g.mode(i);
    const double c = f.coeffs[i].real();
    for (int a = 0; a < m; ++a) {
      const double sa = c * table[std::size_t(k.k1) * m + a];
      for (int b = 0; b < m; ++b) values[std::size_t(a) * m + b] += sa * table[std::size_t(k.k2) * m + b];
    }
  }
  grid.components.push_back(std::move(values));
  return grid;
}

SpectralField from_grid(const GridField& grid) {
  const auto& g = grid.geometry;
  const int m = grid.size;
  if (m < g.min_grid_size()) throw AliasingError("grid too small for " + g.describe());
  if (g.is_torus()) {
    if (grid.components.size() != 2) throw GeometryMismatch("torus grid needs two components");
    TorusTransform tf(g, m);
    VectorSpectrum v{g, std::vector<std::array<Complex, 2>>(g.size())};
    std::vector<Complex> c(g.size());
    for (int comp = 0; comp < 2; ++comp) {
      tf.analyze(grid.components[comp], c);
      for (std::size_t i = 0; i < c.size(); ++i) v.coeffs[i][comp] = c[i];
    }
    return leray_project(v);
  }
  const auto table = sine_table(g.resolution(), m);
  const auto& values = grid.components.at(0);
  SpectralField f(g);
  if (g.dim() == 1) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const int k = g.mode(i).k1;
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += values[j] * table[std::size_t(k) * m + j];
      f.coeffs[i] = s / m;
    }
    return f;
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& k = g.mode(i);
    double s = 0.0;
    for (int a = 0; a < m; ++a) {
      double row = 0.0;
      for (int b = 0; b < m; ++b) row += values[std::size_t(a) * m + b] * table[std::size_t(k.k2) * m + b];
      s += row * table[std::size_t(k.k1) * m + a];
    }
    f.coeffs[i] = s / (double(m) * m);
  }
  return f;
}

}  // namespace bip
