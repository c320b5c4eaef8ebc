#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "bip/measures.hpp"
#include "bip/random.hpp"
#include "bip/spectral.hpp"

namespace testing {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
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
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

// Field with independent standard normal coefficients (complex on the torus).
inline bip::SpectralField random_field(const bip::Geometry& g, bip::RandomSource& rng) {
  bip::SpectralField f(g);
  for (auto& c : f.coeffs) {
    const double re = rng.normal();
    c = g.is_torus() ? bip::Complex(re, rng.normal()) : bip::Complex(re, 0.0);
  }
  return f;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double euclid(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

}  // namespace testing
