#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bip {

using Complex = std::complex<double>;
using Point = std::array<double, 2>;

inline constexpr double kPi = 3.14159265358979323846;

class InvalidWavevector : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class AliasingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class GeometryMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Integer wavevector. One-dimensional Dirichlet problems leave k2 = 0.
struct Wavevector {
  int k1 = 0;
  int k2 = 0;

  int sup_norm() const;
  int norm_squared() const { return k1 * k1 + k2 * k2; }
  friend bool operator==(const Wavevector&, const Wavevector&) = default;
};

enum class GeometryKind { DirichletBox, Torus2D };

/// Eigenbasis bookkeeping for one of the two model operators.
///
/// DirichletBox(d): -Laplacian on (0,1)^d with homogeneous Dirichlet data,
///   eigenfunctions prod_i sqrt(2) sin(pi k_i x_i), eigenvalues pi^2 |k|^2,
///   k_i in 1..resolution.
/// Torus2D: Stokes operator on the unit torus restricted to zero-mean
///   divergence-free fields, eigenvalues 4 pi^2 |k|^2, k in Z^2 \ {0} with
///   |k|_inf <= resolution. Only the half-set (k2 > 0, or k2 == 0 and k1 > 0)
///   is stored; the partner -k is implied by conjugate symmetry.
///
/// Modes are enumerated lexicographically by (|k|_inf, k1, k2).
class Geometry {
 public:
  static Geometry dirichlet(int dim, int resolution);
  static Geometry torus(int resolution);

  GeometryKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  bool is_torus() const { return kind_ == GeometryKind::Torus2D; }

  std::size_t size() const { return table_->modes.size(); }
  std::span<const Wavevector> modes() const { return table_->modes; }
  const Wavevector& mode(std::size_t i) const { return table_->modes[i]; }
  double eigenvalue(std::size_t i) const { return table_->eigenvalues[i]; }
  std::span<const double> eigenvalues() const { return table_->eigenvalues; }

  /// Throws InvalidWavevector when k is not in the stored index set.
  std::size_t index_of(const Wavevector& k) const;
  bool contains(const Wavevector& k) const;

  /// Weight of a stored coefficient in L2 sums: 2 on the torus (k and -k),
  /// 1 for Dirichlet modes.
  double norm_weight() const { return is_torus() ? 2.0 : 1.0; }

  /// Same operator, different truncation.
  Geometry with_resolution(int resolution) const;

  /// Smallest grid size that represents every stored mode without aliasing.
  int min_grid_size() const { return 2 * resolution_ + 2; }

  std::string describe() const;

  friend bool operator==(const Geometry& a, const Geometry& b) {
    return a.kind_ == b.kind_ && a.dim_ == b.dim_ && a.resolution_ == b.resolution_;
  }

 private:
  struct Table {
    std::vector<Wavevector> modes;
    std::vector<double> eigenvalues;
    std::vector<int> lookup;  // dense map over the bounding box, -1 if absent
  };

  Geometry(GeometryKind kind, int dim, int resolution);
  int lookup_slot(const Wavevector& k) const;

  GeometryKind kind_;
  int dim_;
  int resolution_;
  std::shared_ptr<const Table> table_;
};

/// Eigenvalue of the operator for wavevector k; throws for k outside the index
/// set (including k = 0 on the torus and the implied lower half-plane).
double eigenvalue(const Wavevector& k, const Geometry& g);

/// A field expanded in the eigenbasis of its geometry.
///
/// On the torus each coefficient is the complex amplitude a_k of the
/// divergence-free mode a_k e_k exp(2 pi i k.x) with e_k = i k^perp / |k|,
/// k^perp = (-k2, k1). The real field is sum over the stored half-set of
/// 2 Re(a_k e_k exp(2 pi i k.x)). Dirichlet coefficients are real and kept in
/// the real part.
struct SpectralField {
  Geometry geometry;
  std::vector<Complex> coeffs;

  explicit SpectralField(Geometry g) : geometry(std::move(g)), coeffs(geometry.size()) {}
  SpectralField(Geometry g, std::vector<Complex> c);

  static SpectralField basis(const Geometry& g, const Wavevector& k, Complex value = 1.0);

  Complex& operator[](const Wavevector& k) { return coeffs[geometry.index_of(k)]; }
  Complex operator[](const Wavevector& k) const { return coeffs[geometry.index_of(k)]; }

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double s);
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

void require_same_geometry(const Geometry& a, const Geometry& b, const char* what);

/// Multiply each coefficient by lambda_k^a.
SpectralField apply_fractional_power(const SpectralField& f, double a);

/// (sum_k lambda_k^s |<u, phi_k>|^2)^{1/2}, sum taken over the full index set.
double sobolev_norm(const SpectralField& f, double s);
inline double l2_norm(const SpectralField& f) { return sobolev_norm(f, 0.0); }
double inner_product(const SpectralField& a, const SpectralField& b);

/// Zero every coefficient with |k|_inf > cutoff. Geometry is unchanged.
SpectralField project(const SpectralField& f, int cutoff);

/// Change the stored truncation: drops modes above the new resolution or pads
/// with zeros.
SpectralField resample(const SpectralField& f, int resolution);

/// Velocity coefficient v_k = a_k e_k of a torus mode.
std::array<Complex, 2> mode_direction(const Wavevector& k);

/// Per-mode 2-vector Fourier coefficients v_k over a torus half-set.
struct VectorSpectrum {
  Geometry geometry;
  std::vector<std::array<Complex, 2>> coeffs;
};

VectorSpectrum velocity_coefficients(const SpectralField& f);

/// Apply I - k k^T / |k|^2 per mode and return the divergence-free amplitude.
SpectralField leray_project(const VectorSpectrum& vhat);

/// Largest |k . v_k| over stored modes (zero up to rounding by construction).
double max_divergence(const SpectralField& f);

/// Exact pointwise value: velocity on the torus, scalar (in [0]) for
/// Dirichlet geometries.
Point evaluate(const SpectralField& f, const Point& x);

/// Values on a uniform collocation grid.
///
/// Torus: components {v1, v2}, each M*M row-major with index i*M + j at
/// x = (i/M, j/M). DirichletBox: one component; d = 1 stores M values at
/// x_j = j/M, d = 2 stores M*M values (index i*M + j); boundary samples are 0.
struct GridField {
  Geometry geometry;
  int size = 0;
  std::vector<std::vector<double>> components;
};

/// Throws AliasingError if M < geometry.min_grid_size().
GridField to_grid(const SpectralField& f, int grid_size);
SpectralField from_grid(const GridField& grid);

}  // namespace bip
