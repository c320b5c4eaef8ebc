#include "bip/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace bip {

GaussianMeasure::GaussianMeasure(SpectralField mean, std::vector<double> variance)
    : mean_(std::move(mean)), variance_(std::move(variance)) {
  if (variance_.size() != mean_.coeffs.size()) {
    throw GeometryMismatch("variance spectrum length does not match the mean field");
  }
  for (double v : variance_) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("Gaussian variance spectrum must be positive and finite");
    }
  }
}

GaussianMeasure GaussianMeasure::power_law(const Geometry& g, double beta, double alpha) {
  return power_law(SpectralField(g), beta, alpha);
}

GaussianMeasure GaussianMeasure::power_law(SpectralField mean, double beta, double alpha) {
  if (!(beta > 0.0)) throw std::invalid_argument("prior scale beta must be > 0");
  const auto& g = mean.geometry;
  std::vector<double> var(g.size());
  for (std::size_t i = 0; i < var.size(); ++i) var[i] = beta * std::pow(g.eigenvalue(i), -alpha);
  return GaussianMeasure(std::move(mean), std::move(var));
}

double GaussianMeasure::trace() const {
  return geometry().norm_weight() * std::accumulate(variance_.begin(), variance_.end(), 0.0);
}

double GaussianMeasure::second_moment() const {
  const double m = l2_norm(mean_);
  return m * m + trace();
}

std::size_t real_dimension(const Geometry& g) { return g.is_torus() ? 2 * g.size() : g.size(); }

double coordinate(const SpectralField& f, std::size_t j) {
  if (!f.geometry.is_torus()) return f.coeffs[j].real();
  const Complex c = f.coeffs[j / 2];
  return j % 2 == 0 ? c.real() : c.imag();
}

void set_coordinate(SpectralField& f, std::size_t j, double value) {
  if (!f.geometry.is_torus()) {
    f.coeffs[j] = value;
    return;
  }
  Complex& c = f.coeffs[j / 2];
  c = j % 2 == 0 ? Complex(value, c.imag()) : Complex(c.real(), value);
}

std::size_t GaussianMeasure::real_dimension() const { return bip::real_dimension(geometry()); }

double GaussianMeasure::coordinate_mean(std::size_t j) const { return coordinate(mean_, j); }

double GaussianMeasure::coordinate_variance(std::size_t j) const {
  return geometry().is_torus() ? 0.5 * variance_[j / 2] : variance_[j];
}

GaussianMeasure GaussianMeasure::restrict_to(int resolution) const {
  if (resolution > geometry().resolution()) {
    throw std::invalid_argument("cannot restrict a Gaussian measure to a finer truncation");
  }
  SpectralField m = resample(mean_, resolution);
  std::vector<double> var(m.geometry.size());
  for (std::size_t i = 0; i < var.size(); ++i)
    var[i] = variance_[geometry().index_of(m.geometry.mode(i))];
  return GaussianMeasure(std::move(m), std::move(var));
}

SpectralField sample_gaussian(const GaussianMeasure& m, RandomSource& rng) {
  SpectralField u = m.mean();
  const bool cplx = m.geometry().is_torus();
  for (std::size_t i = 0; i < u.coeffs.size(); ++i) {
    const double sd = std::sqrt(m.variance(i));
    if (cplx) {
      const double re = rng.normal();
      const double im = rng.normal();
      u.coeffs[i] += sd * std::sqrt(0.5) * Complex(re, im);
    } else {
      u.coeffs[i] += sd * rng.normal();
    }
  }
  return u;
}

double hellinger_gaussian(const GaussianMeasure& a, const GaussianMeasure& b) {
  require_same_geometry(a.geometry(), b.geometry(), "hellinger_gaussian");
  // log of the Bhattacharyya coefficient, summed over independent coordinates
  double log_bc = 0.0;
  for (std::size_t j = 0; j < a.real_dimension(); ++j) {
    const double s2 = a.coordinate_variance(j);
    const double t2 = b.coordinate_variance(j);
    const double s = std::sqrt(s2);
    const double t = std::sqrt(t2);
    const double sum2 = s2 + t2;
    const double diff = (s2 - t2) / (s + t);
    const double dm = a.coordinate_mean(j) - b.coordinate_mean(j);
    log_bc += 0.5 * std::log1p(-diff * diff / sum2) - dm * dm / (4.0 * sum2);
  }
  const double d2 = -std::expm1(log_bc);
  return std::sqrt(std::clamp(d2, 0.0, 1.0));
}

DiscreteMeasure::DiscreteMeasure(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw std::invalid_argument("discrete measure needs at least one atom");
  double total = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("discrete measure entries must be finite and nonnegative");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("discrete measure must sum to 1 (got " + std::to_string(total) + ")");
  }
}

DiscreteMeasure DiscreteMeasure::from_weights(std::span<const double> w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("weights must have positive total");
  std::vector<double> p(w.begin(), w.end());
  for (auto& v : p) v /= total;
  // renormalise once more so the sum is 1 to rounding
  const double again = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= again;
  return DiscreteMeasure(std::move(p));
}

namespace {
void require_same_size(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  if (p.size() != q.size()) throw std::invalid_argument("discrete measures differ in length");
}
}  // namespace

double tv_discrete(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  require_same_size(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return std::min(1.0, 0.5 * s);
}

double hellinger_discrete(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  require_same_size(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    s += d * d;
  }
  return std::min(1.0, std::sqrt(0.5 * s));
}

double Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

Histogram make_histogram(std::span<const double> samples, double lo, double hi, int bins) {
  if (bins < 1) throw std::invalid_argument("histogram needs at least one bin");
  if (!(hi > lo)) {
    // degenerate range: widen symmetrically so every sample lands in a bin
    const double pad = std::max(1e-12, std::abs(lo) * 1e-12);
    lo -= pad;
    hi += pad;
  }
  Histogram h{lo, hi, std::vector<double>(bins, 0.0)};
  const double w = h.bin_width();
  for (double x : samples) {
    if (!std::isfinite(x)) continue;
    int b = int(std::floor((x - lo) / w));
    b = std::clamp(b, 0, bins - 1);
    h.counts[b] += 1.0;
  }
  return h;
}

std::pair<Histogram, Histogram> pooled_histograms(std::span<const double> a,
                                                  std::span<const double> b, int bins) {
  if (a.empty() || b.empty()) throw std::invalid_argument("histogram of an empty sample");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (auto s : {a, b})
    for (double x : s) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  if (hi == lo) {
    const double pad = std::max(1e-12, std::abs(lo) * 1e-12);
    lo -= pad;
    hi += pad;
  }
  return {make_histogram(a, lo, hi, bins), make_histogram(b, lo, hi, bins)};
}

double hellinger_from_histograms(const Histogram& a, const Histogram& b) {
  if (a.counts.size() != b.counts.size() || a.lo != b.lo || a.hi != b.hi) {
    throw std::invalid_argument("histograms must share bin edges");
  }
  if (!(a.total() > 0.0) || !(b.total() > 0.0)) throw std::invalid_argument("empty histogram");
  return hellinger_discrete(DiscreteMeasure::from_weights(a.counts),
                            DiscreteMeasure::from_weights(b.counts));
}

double hellinger_from_samples(std::span<const double> a, std::span<const double> b, int bins) {
  auto [ha, hb] = pooled_histograms(a, b, bins);
  return hellinger_from_histograms(ha, hb);
}

MetricRelationReport check_metric_relation(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  MetricRelationReport r;
  r.tv = tv_discrete(p, q);
  r.hellinger = hellinger_discrete(p, q);
  r.lower = r.tv / std::sqrt(2.0);
  r.upper = std::sqrt(r.tv);
  constexpr double slack = 1e-14;
  r.holds = r.lower <= r.hellinger + slack && r.hellinger <= r.upper + slack;
  return r;
}

MomentBoundReport moment_difference_bound(const DiscreteMeasure& p, const DiscreteMeasure& q,
                                          const std::vector<std::vector<double>>& f) {
  if (f.size() != p.size() || p.size() != q.size()) {
    throw std::invalid_argument("f must have one value per support point");
  }
  const std::size_t dim = f.empty() ? 0 : f.front().size();
  std::vector<double> mean_diff(dim, 0.0);
  std::vector<double> tensor_diff(dim * dim, 0.0);
  double m2p = 0.0, m2q = 0.0, m4p = 0.0, m4q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (f[i].size() != dim) throw std::invalid_argument("f values must share a dimension");
    const double w = p[i] - q[i];
    double n2 = 0.0;
    for (std::size_t a = 0; a < dim; ++a) {
      mean_diff[a] += w * f[i][a];
      n2 += f[i][a] * f[i][a];
      for (std::size_t b = 0; b < dim; ++b) tensor_diff[a * dim + b] += w * f[i][a] * f[i][b];
    }
    m2p += p[i] * n2;
    m2q += q[i] * n2;
    m4p += p[i] * n2 * n2;
    m4q += q[i] * n2 * n2;
  }
  auto norm = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  const double dh = hellinger_discrete(p, q);
  MomentBoundReport r;
  r.mean_gap = norm(mean_diff);
  r.mean_bound = 2.0 * std::sqrt(m2p + m2q) * dh;
  r.tensor_gap = norm(tensor_diff);
  r.tensor_bound = 2.0 * std::sqrt(m4p + m4q) * dh;
  constexpr double rel = 1e-12;
  r.holds = r.mean_gap <= r.mean_bound * (1.0 + rel) + 1e-300 &&
            r.tensor_gap <= r.tensor_bound * (1.0 + rel) + 1e-300;
  return r;
}

FerniqueReport fernique_check(const GaussianMeasure& m, double a, std::size_t n, RandomSource& rng) {
  if (a < 0.0) throw std::invalid_argument("Fernique exponent must be >= 0");
  FerniqueReport r;
  if (a == 0.0) {
    r.empirical_mean = 1.0;
    r.exact = 1.0;
    r.integrable = true;
    r.ok = true;
    return r;
  }
  // exact value for centred measures: prod over real directions of (1 - 2 a s^2)^{-1/2}
  const double weight = m.geometry().norm_weight();
  double log_exact = 0.0;
  r.integrable = true;
  for (std::size_t j = 0; j < m.real_dimension(); ++j) {
    const double s2 = weight * m.coordinate_variance(j);
    if (2.0 * a * s2 >= 1.0) {
      r.integrable = false;
      break;
    }
    log_exact += -0.5 * std::log1p(-2.0 * a * s2);
  }
  const double mnorm = l2_norm(m.mean());
  r.exact = r.integrable && mnorm == 0.0 ? std::exp(log_exact)
                                         : std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = l2_norm(sample_gaussian(m, rng));
    sum += std::exp(a * x * x);
  }
  r.empirical_mean = sum / double(n);
  r.ok = r.integrable && std::isfinite(r.empirical_mean);
  return r;
}

}  // namespace bip
