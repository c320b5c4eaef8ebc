#pragma once

#include <complex>
#include <span>
#include <vector>

#include "bip/spectral.hpp"

namespace bip {

/// Real <-> half-complex transforms on an M x M periodic grid, backed by FFTW.
///
/// Plans are created once per grid size under a global lock and executed
/// through the new-array interface, so one plan serves every thread. Each
/// TorusTransform instance owns its scratch buffers and must not be shared
/// between threads.
class TorusTransform {
 public:
  TorusTransform(const Geometry& g, int grid_size);

  int grid_size() const { return m_; }
  const Geometry& geometry() const { return geom_; }

  /// Grid values of sum over stored k of 2 Re(c_k exp(2 pi i k.x)).
  void synthesize(std::span<const Complex> coeffs, std::span<double> out);

  /// Inverse of synthesize for grids whose spectrum lies on the stored modes.
  void analyze(std::span<const double> grid, std::span<Complex> coeffs);

 private:
  Geometry geom_;
  int m_;
  int half_;
  std::vector<int> slot_;       // buffer position of each stored k
  std::vector<int> conj_slot_;  // position of -k when it also lands in the buffer, else -1
  std::vector<Complex> spectrum_;
  std::vector<double> real_;
};

/// Circular autocovariance helper for chain diagnostics: returns the
/// (biased) autocovariance at lags 0..n-1 of a centred series.
std::vector<double> autocovariance(std::span<const double> centred);

}  // namespace bip
