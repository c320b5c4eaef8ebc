#include <cmath>
#include <random>

#include "bip/measures.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bip;

namespace {

constexpr double pi = 3.14159265358979323846;

GaussianMeasure scalar_gaussian(double mean, double var) {
  const auto g = Geometry::dirichlet(1, 1);
  SpectralField m(g);
  m.coeffs[0] = mean;
  return GaussianMeasure(m, {var});
}

double normal_pdf(double x, double m, double v) {
  return std::exp(-(x - m) * (x - m) / (2 * v)) / std::sqrt(2 * pi * v);
}

// Definition by quadrature: d^2 = 1/2 int (sqrt p - sqrt q)^2
double hellinger_quadrature(double m1, double v1, double m2, double v2) {
  const double lo = -40.0, hi = 40.0;
  const int n = 400000;
  const double h = (hi - lo) / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + i * h;
    const double d = std::sqrt(normal_pdf(x, m1, v1)) - std::sqrt(normal_pdf(x, m2, v2));
    s += (i == 0 || i == n ? 0.5 : 1.0) * d * d;
  }
  return std::sqrt(0.5 * s * h);
}

DiscreteMeasure random_dirichlet(std::size_t n, std::mt19937_64& eng, double shape) {
  std::gamma_distribution<double> gamma(shape, 1.0);
  std::vector<double> w(n);
  for (auto& x : w) x = gamma(eng);
  return DiscreteMeasure::from_weights(w);
}

}  // namespace

TEST_SUITE("measures") {

TEST_CASE("power-law priors") {
  const auto g = Geometry::torus(3);
  const auto mu = GaussianMeasure::power_law(g, 400.0, 2.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double lam = 4 * pi * pi * g.mode(i).norm_squared();
    CHECK(mu.variance(i) == doctest::Approx(400.0 / (lam * lam)).epsilon(1e-14));
  }
  CHECK(real_dimension(g) == 2 * g.size());
  CHECK(real_dimension(Geometry::dirichlet(2, 3)) == 9);
  CHECK_THROWS(GaussianMeasure(SpectralField(g), std::vector<double>(g.size(), 0.0)));
  CHECK_THROWS(GaussianMeasure(SpectralField(g), std::vector<double>(2, 1.0)));
  auto restricted = mu.restrict_to(2);
  CHECK(restricted.geometry().resolution() == 2);
  CHECK(restricted.variance(0) == mu.variance(0));
}

TEST_CASE("sampling reproduces per-mode variances") {
  const int n = 10000;
  for (const auto& g : {Geometry::dirichlet(1, 6), Geometry::torus(2)}) {
    const auto mu = GaussianMeasure::power_law(g, 3.0, 1.5);
    RandomSource rng(42);
    std::vector<double> sum2(g.size(), 0.0);
    for (int s = 0; s < n; ++s) {
      const auto u = sample_gaussian(mu, rng);
      for (std::size_t i = 0; i < g.size(); ++i) sum2[i] += std::norm(u.coeffs[i]);
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double est = sum2[i] / n;
      // |xi|^2 is sigma^2 chi^2_1 (Dirichlet) or sigma^2 Exp(1) (complex)
      const double se = mu.variance(i) * (g.is_torus() ? 1.0 : std::sqrt(2.0)) / std::sqrt(double(n));
      CHECK(std::abs(est - mu.variance(i)) < 5 * se);
    }
  }
}

TEST_CASE("tiny variances give the mean") {
  const auto g = Geometry::torus(3);
  RandomSource src(1);
  const auto m0 = testing::random_field(g, src);
  GaussianMeasure mu(m0, std::vector<double>(g.size(), 1e-30));
  RandomSource rng(2);
  const auto u = sample_gaussian(mu, rng);
  CHECK(l2_norm(u - m0) < 1e-13);
}

TEST_CASE("sampling is deterministic given the seed") {
  const auto mu = GaussianMeasure::power_law(Geometry::torus(4), 1.0, 2.0);
  RandomSource a(9), b(9), c(10);
  const auto ua = sample_gaussian(mu, a);
  const auto ub = sample_gaussian(mu, b);
  const auto uc = sample_gaussian(mu, c);
  for (std::size_t i = 0; i < ua.coeffs.size(); ++i) CHECK(ua.coeffs[i] == ub.coeffs[i]);
  CHECK(l2_norm(ua - uc) > 0.0);
}

TEST_CASE("Sobolev regularity of prior draws") {
  // alpha = 2 on the torus: |u|_s is finite for s < 1 and diverges with N for s > 1
  auto mean_sq_norm = [](int res, double s) {
    const auto mu = GaussianMeasure::power_law(Geometry::torus(res), 1.0, 2.0);
    RandomSource rng(77);
    double acc = 0.0;
    const int draws = 200;
    for (int i = 0; i < draws; ++i) {
      const double nrm = sobolev_norm(sample_gaussian(mu, rng), s);
      acc += nrm * nrm;
    }
    return acc / draws;
  };
  const double a8 = mean_sq_norm(8, 0.5), a16 = mean_sq_norm(16, 0.5), a32 = mean_sq_norm(32, 0.5);
  CHECK(std::abs(a32 / a16 - 1.0) < 0.1);
  CHECK(std::abs(a16 / a8 - 1.0) < 0.15);
  const double b8 = mean_sq_norm(8, 1.5), b16 = mean_sq_norm(16, 1.5), b32 = mean_sq_norm(32, 1.5);
  CHECK(b16 / b8 > 1.5);
  CHECK(b32 / b16 > 1.5);
}

TEST_CASE("Gaussian Hellinger distance") {
  SUBCASE("equal measures") {
    const auto mu = GaussianMeasure::power_law(Geometry::torus(5), 2.0, 2.0);
    CHECK(hellinger_gaussian(mu, mu) == 0.0);
  }
  SUBCASE("shifted mean") {
    const double q = hellinger_quadrature(0, 1, 1, 1);
    CHECK(q == doctest::Approx(0.342787).epsilon(1e-5));
    CHECK(hellinger_gaussian(scalar_gaussian(0, 1), scalar_gaussian(1, 1)) == doctest::Approx(q).epsilon(1e-9));
    CHECK(hellinger_gaussian(scalar_gaussian(0, 1), scalar_gaussian(1, 1)) ==
          doctest::Approx(std::sqrt(1 - std::exp(-0.125))).epsilon(1e-14));
  }
  SUBCASE("scaled variance") {
    const double q = hellinger_quadrature(0, 1, 0, 4);
    CHECK(q == doctest::Approx(0.324920).epsilon(1e-5));
    CHECK(q == doctest::Approx(std::sqrt(1 - std::sqrt(0.8))).epsilon(1e-9));
    CHECK(hellinger_gaussian(scalar_gaussian(0, 1), scalar_gaussian(0, 4)) == doctest::Approx(q).epsilon(1e-9));
  }
  SUBCASE("product measures factor through the Bhattacharyya coefficient") {
    const auto g = Geometry::dirichlet(1, 3);
    SpectralField m1(g), m2(g);
    m2.coeffs = {0.3, -0.2, 0.1};
    GaussianMeasure a(m1, {1.0, 0.5, 0.2});
    GaussianMeasure b(m2, {1.2, 0.4, 0.2});
    double bc = 1.0;
    for (int i = 0; i < 3; ++i) {
      const double h = hellinger_quadrature(m1.coeffs[i].real(), a.variance(i), m2.coeffs[i].real(), b.variance(i));
      bc *= 1.0 - h * h;
    }
    CHECK(hellinger_gaussian(a, b) == doctest::Approx(std::sqrt(1 - bc)).epsilon(1e-8));
  }
  SUBCASE("tiny distances are resolved") {
    const auto g = Geometry::dirichlet(1, 1);
    SpectralField m2(g);
    m2.coeffs[0] = 1e-20;
    // d ~ |dm| / sqrt(8 var)
    const double d = hellinger_gaussian(GaussianMeasure(SpectralField(g), {1.0}), GaussianMeasure(m2, {1.0}));
    CHECK(d == doctest::Approx(1e-20 / std::sqrt(8.0)).epsilon(1e-10));
  }
  SUBCASE("torus modes carry two real directions") {
    const auto g = Geometry::torus(1);
    SpectralField m2(g);
    m2.coeffs[0] = Complex(1.0, 0.0);
    GaussianMeasure a(SpectralField(g), std::vector<double>(g.size(), 2.0));
    GaussianMeasure b(m2, std::vector<double>(g.size(), 2.0));
    // real part of mode 0 has variance 1 and moves by 1
    CHECK(hellinger_gaussian(a, b) == doctest::Approx(std::sqrt(1 - std::exp(-0.125))).epsilon(1e-14));
  }
  SUBCASE("mismatched index sets throw") {
    CHECK_THROWS_AS(hellinger_gaussian(GaussianMeasure::power_law(Geometry::torus(2), 1, 2),
                                       GaussianMeasure::power_law(Geometry::torus(3), 1, 2)),
                    GeometryMismatch);
  }
}

TEST_CASE("Gaussian Hellinger agrees with finely binned densities") {
  for (auto [m1, v1, m2, v2] : {std::array{0.0, 1.0, 1.0, 1.0}, std::array{0.0, 1.0, 0.0, 4.0},
                                std::array{0.5, 0.3, -0.2, 2.0}}) {
    const int bins = 20000;
    const double lo = -20, hi = 20, h = (hi - lo) / bins;
    std::vector<double> p(bins), q(bins);
    for (int b = 0; b < bins; ++b) {
      const double x = lo + (b + 0.5) * h;
      p[b] = normal_pdf(x, m1, v1);
      q[b] = normal_pdf(x, m2, v2);
    }
    const double disc = hellinger_discrete(DiscreteMeasure::from_weights(p), DiscreteMeasure::from_weights(q));
    CHECK(std::abs(disc - hellinger_gaussian(scalar_gaussian(m1, v1), scalar_gaussian(m2, v2))) < 1e-3);
  }
}

TEST_CASE("discrete metrics") {
  const DiscreteMeasure p({0.5, 0.5});
  const DiscreteMeasure q({0.25, 0.75});
  CHECK(tv_discrete(p, p) == 0.0);
  CHECK(hellinger_discrete(p, p) == 0.0);
  CHECK(tv_discrete(DiscreteMeasure({1, 0}), DiscreteMeasure({0, 1})) == doctest::Approx(1.0));
  CHECK(hellinger_discrete(DiscreteMeasure({1, 0}), DiscreteMeasure({0, 1})) == doctest::Approx(1.0));
  CHECK(tv_discrete(p, q) == doctest::Approx(0.25).epsilon(1e-15));
  const double a = std::sqrt(0.5) - std::sqrt(0.25), b = std::sqrt(0.5) - std::sqrt(0.75);
  CHECK(hellinger_discrete(p, q) == doctest::Approx(std::sqrt(0.5 * (a * a + b * b))).epsilon(1e-14));
  CHECK_THROWS(tv_discrete(p, DiscreteMeasure({0.2, 0.3, 0.5})));
  CHECK_THROWS(hellinger_discrete(p, DiscreteMeasure({0.2, 0.3, 0.5})));
  CHECK_THROWS(DiscreteMeasure({0.5, 0.6}));
  CHECK_THROWS(DiscreteMeasure({1.5, -0.5}));
}

TEST_CASE("discrete metric properties on random triples") {
  std::mt19937_64 eng(123);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + trial % 9;
    const auto p = random_dirichlet(n, eng, 0.7);
    const auto q = random_dirichlet(n, eng, 0.7);
    const auto r = random_dirichlet(n, eng, 0.7);
    const double hpq = hellinger_discrete(p, q), hqp = hellinger_discrete(q, p);
    CHECK(hpq == doctest::Approx(hqp).epsilon(1e-14));
    CHECK(tv_discrete(p, q) == doctest::Approx(tv_discrete(q, p)).epsilon(1e-14));
    CHECK(hpq >= 0.0);
    CHECK(hpq <= 1.0);
    CHECK(tv_discrete(p, q) <= 1.0);
    CHECK(hpq > 0.0);
    CHECK(hpq <= hellinger_discrete(p, r) + hellinger_discrete(r, q) + 1e-15);
  }
}

TEST_CASE("histogram Hellinger") {
  std::mt19937_64 eng(2024);
  std::normal_distribution<double> z;
  const int n = 100000;
  std::vector<double> a(n), b(n), c(n);
  for (int i = 0; i < n; ++i) {
    a[i] = z(eng);
    b[i] = z(eng);
    c[i] = 1.0 + z(eng);
  }
  const auto [ha, hb] = pooled_histograms(a, b);
  CHECK(ha.counts.size() == 50);
  CHECK(ha.lo == hb.lo);
  CHECK(ha.total() == doctest::Approx(n));
  CHECK(hellinger_from_histograms(ha, ha) == 0.0);
  CHECK(hellinger_from_samples(a, b) < 0.03);
  CHECK(std::abs(hellinger_from_samples(a, c) - hellinger_quadrature(0, 1, 1, 1)) < 0.03);

  Histogram empty{0.0, 1.0, std::vector<double>(50, 0.0)};
  CHECK_THROWS(hellinger_from_histograms(empty, empty));
  Histogram other = ha;
  other.hi += 1.0;
  CHECK_THROWS(hellinger_from_histograms(ha, other));
  CHECK_THROWS(pooled_histograms(std::vector<double>{}, b));
  const auto h = make_histogram(std::vector<double>{0.0, 0.5, 1.0, 2.0}, 0.0, 1.0, 4);
  CHECK(h.counts[0] == 1);
  CHECK(h.counts[2] == 1);
  CHECK(h.counts[3] == 2);
}

TEST_CASE("metric relation") {
  const DiscreteMeasure p({0.2, 0.3, 0.5});
  auto r = check_metric_relation(p, p);
  CHECK(r.holds);
  CHECK(r.tv == 0.0);
  CHECK(r.hellinger == 0.0);
  r = check_metric_relation(DiscreteMeasure({1, 0}), DiscreteMeasure({0, 1}));
  CHECK(r.holds);
  CHECK(r.lower == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(r.upper == doctest::Approx(1.0));
  std::mt19937_64 eng(99);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto a = random_dirichlet(2 + trial % 15, eng, 1.0);
    const auto b = random_dirichlet(2 + trial % 15, eng, 1.0);
    const auto rep = check_metric_relation(a, b);
    const double tv = tv_discrete(a, b), h = hellinger_discrete(a, b);
    if (!(tv / std::sqrt(2.0) <= h + 1e-15 && h <= std::sqrt(tv) + 1e-15)) ++violations;
    CHECK(rep.holds);
  }
  CHECK(violations == 0);
}

TEST_CASE("moment difference bound") {
  const DiscreteMeasure p({0.4, 0.6});
  auto rep = moment_difference_bound(p, p, {{1.0, 2.0}, {3.0, -1.0}});
  CHECK(rep.mean_gap == 0.0);
  CHECK(rep.holds);
  rep = moment_difference_bound(DiscreteMeasure({1, 0}), DiscreteMeasure({0, 1}), {{0.0}, {1.0}});
  CHECK(rep.mean_gap == doctest::Approx(1.0));
  CHECK(rep.mean_bound == doctest::Approx(2.0));
  CHECK(rep.holds);
  std::mt19937_64 eng(7);
  std::normal_distribution<double> z;
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + trial % 12, dim = 1 + trial % 4;
    const auto a = random_dirichlet(n, eng, 0.5);
    const auto b = random_dirichlet(n, eng, 0.5);
    std::vector<std::vector<double>> f(n, std::vector<double>(dim));
    for (auto& v : f)
      for (auto& x : v) x = 3.0 * z(eng);
    const auto r = moment_difference_bound(a, b, f);
    // independent evaluation of both sides
    std::vector<double> ea(dim, 0.0), eb(dim, 0.0);
    double m2a = 0.0, m2b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double nn = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        ea[c] += a[i] * f[i][c];
        eb[c] += b[i] * f[i][c];
        nn += f[i][c] * f[i][c];
      }
      m2a += a[i] * nn;
      m2b += b[i] * nn;
    }
    double gap = 0.0;
    for (std::size_t c = 0; c < dim; ++c) gap += (ea[c] - eb[c]) * (ea[c] - eb[c]);
    gap = std::sqrt(gap);
    CHECK(r.mean_gap == doctest::Approx(gap).epsilon(1e-12));
    if (gap > 2 * std::sqrt(m2a + m2b) * hellinger_discrete(a, b) * (1 + 1e-12)) ++violations;
    if (r.tensor_gap > r.tensor_bound * (1 + 1e-12)) ++violations;
    CHECK(r.holds);
  }
  CHECK(violations == 0);
}

TEST_CASE("Fernique integrability") {
  RandomSource rng(5);
  const auto one = scalar_gaussian(0.0, 1.0);
  auto r = fernique_check(one, 0.0, 1000, rng);
  CHECK(r.empirical_mean == 1.0);
  CHECK(r.ok);
  r = fernique_check(one, 0.1, 200000, rng);
  CHECK(r.ok);
  CHECK(r.exact == doctest::Approx(1 / std::sqrt(0.8)).epsilon(1e-14));
  CHECK(std::abs(r.empirical_mean - 1.118) < 0.01);
  r = fernique_check(one, 0.6, 1000, rng);
  CHECK_FALSE(r.integrable);
  CHECK_FALSE(r.ok);
  CHECK(std::isinf(r.exact));
  CHECK_THROWS(fernique_check(one, -0.1, 10, rng));
}

}
