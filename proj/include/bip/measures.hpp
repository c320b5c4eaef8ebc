#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bip/random.hpp"
#include "bip/spectral.hpp"

namespace bip {

/// Gaussian measure N(m, C) with C diagonal in the eigenbasis.
///
/// variance[i] is E|u_i - m_i|^2 for stored mode i. On the torus the real and
/// imaginary parts are independent with variance[i] / 2 each, which makes the
/// measure a Gaussian on the real Hilbert space with eigenvalue variance[i]
/// along both real directions of the mode.
class GaussianMeasure {
 public:
  GaussianMeasure(SpectralField mean, std::vector<double> variance);

  /// N(mean, beta A^{-alpha}); zero mean when none is given.
  static GaussianMeasure power_law(const Geometry& g, double beta, double alpha);
  static GaussianMeasure power_law(SpectralField mean, double beta, double alpha);

  const Geometry& geometry() const { return mean_.geometry; }
  const SpectralField& mean() const { return mean_; }
  std::span<const double> variance() const { return variance_; }
  double variance(std::size_t i) const { return variance_[i]; }

  /// E ||u - m||^2 over the truncated index set.
  double trace() const;
  /// E ||u||^2.
  double second_moment() const;

  std::size_t real_dimension() const;
  double coordinate_mean(std::size_t j) const;
  double coordinate_variance(std::size_t j) const;

  /// Exact marginal on the modes with |k|_inf <= resolution.
  GaussianMeasure restrict_to(int resolution) const;

 private:
  SpectralField mean_;
  std::vector<double> variance_;
};

/// Real coordinate view of a field: Dirichlet modes contribute one coordinate,
/// torus modes two (real part, imaginary part).
std::size_t real_dimension(const Geometry& g);
double coordinate(const SpectralField& f, std::size_t j);
void set_coordinate(SpectralField& f, std::size_t j, double value);

/// Karhunen-Loeve draw m + sum_k sigma_k xi_k phi_k.
SpectralField sample_gaussian(const GaussianMeasure& m, RandomSource& rng);

/// Closed-form Hellinger distance between diagonal Gaussians on the same
/// index set; evaluated through log-Bhattacharyya sums so that distances far
/// below sqrt(machine epsilon) are resolved.
double hellinger_gaussian(const GaussianMeasure& a, const GaussianMeasure& b);

class DiscreteMeasure {
 public:
  explicit DiscreteMeasure(std::vector<double> p);
  static DiscreteMeasure from_weights(std::span<const double> w);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> probabilities() const { return p_; }

 private:
  std::vector<double> p_;
};

double tv_discrete(const DiscreteMeasure& p, const DiscreteMeasure& q);
double hellinger_discrete(const DiscreteMeasure& p, const DiscreteMeasure& q);

/// Equal-width binned counts on [lo, hi]; samples outside the range are
/// counted in the edge bins and non-finite samples are dropped.
struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> counts;

  double total() const;
  double bin_width() const { return (hi - lo) / double(counts.size()); }
  double bin_center(std::size_t b) const { return lo + (double(b) + 0.5) * bin_width(); }
};

inline constexpr int kDefaultHistogramBins = 50;

Histogram make_histogram(std::span<const double> samples, double lo, double hi, int bins);

/// Two histograms on shared bins spanning the pooled sample range.
std::pair<Histogram, Histogram> pooled_histograms(std::span<const double> a,
                                                  std::span<const double> b,
                                                  int bins = kDefaultHistogramBins);

double hellinger_from_histograms(const Histogram& a, const Histogram& b);

/// Histogram Hellinger of two sample sets over pooled bins.
double hellinger_from_samples(std::span<const double> a, std::span<const double> b,
                              int bins = kDefaultHistogramBins);

struct MetricRelationReport {
  double tv = 0.0;
  double hellinger = 0.0;
  double lower = 0.0;  // tv / sqrt(2)
  double upper = 0.0;  // sqrt(tv)
  bool holds = false;
};

/// tv/sqrt(2) <= hellinger <= sqrt(tv).
MetricRelationReport check_metric_relation(const DiscreteMeasure& p, const DiscreteMeasure& q);

struct MomentBoundReport {
  double mean_gap = 0.0;         // |E^p f - E^q f|
  double mean_bound = 0.0;       // 2 (E^p|f|^2 + E^q|f|^2)^{1/2} d_Hell
  double tensor_gap = 0.0;       // |E^p f(x)f - E^q f(x)f|_HS
  double tensor_bound = 0.0;     // 2 (E^p|f|^4 + E^q|f|^4)^{1/2} d_Hell
  bool holds = false;
};

/// Expectation-gap bounds for a vector-valued f given at each support point.
MomentBoundReport moment_difference_bound(const DiscreteMeasure& p, const DiscreteMeasure& q,
                                          const std::vector<std::vector<double>>& f);

struct FerniqueReport {
  double empirical_mean = 0.0;
  double exact = 0.0;     // closed-form Gaussian integral, +inf when not integrable
  bool integrable = false;
  bool ok = false;        // integrable and the sample average is finite
};

/// Sample average of exp(a ||x||^2) under m.
FerniqueReport fernique_check(const GaussianMeasure& m, double a, std::size_t n, RandomSource& rng);

}  // namespace bip
