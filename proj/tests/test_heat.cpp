#include <cmath>

#include "bip/heat.hpp"
#include "bip/inference.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bip;
using namespace bip::heat;

namespace {

constexpr double pi = 3.14159265358979323846;

HeatProblem default_problem(int res = 64) {
  return HeatProblem::make(Geometry::dirichlet(1, res), 0.1, 1.0, 2.0, 0.01, 1.0);
}

HeatData synth(const HeatProblem& p, std::uint64_t seed) {
  RandomSource rng(seed);
  const auto u = sample_gaussian(p.prior, rng);
  return synth_observation(p, u, rng);
}

}  // namespace

TEST_SUITE("heat") {

TEST_CASE("problem validation") {
  const auto g = Geometry::dirichlet(1, 8);
  CHECK_NOTHROW(HeatProblem::make(g, 0.1, 1.0, 2.0, 0.01, 1.0));
  CHECK_THROWS(HeatProblem::make(g, 0.1, 1.0, 0.5, 0.01, 1.0));
  CHECK_THROWS(HeatProblem::make(g, 0.1, 1.0, 2.0, 0.01, 0.5));
  CHECK_THROWS(HeatProblem::make(g, 0.0, 1.0, 2.0, 0.01, 1.0));
  CHECK_THROWS(HeatProblem::make(g, 0.1, 1.0, 2.0, 0.0, 1.0));
  CHECK_THROWS(HeatProblem::make(Geometry::dirichlet(2, 4), 0.1, 1.0, 1.0, 0.01, 2.0));
  CHECK_NOTHROW(HeatProblem::make(Geometry::dirichlet(2, 4), 0.1, 1.0, 1.5, 0.01, 1.5));
  CHECK_THROWS_AS(HeatProblem::make(Geometry::torus(4), 0.1, 1.0, 2.0, 0.01, 2.0), GeometryMismatch);
}

TEST_CASE("heat semigroup") {
  const auto g = Geometry::dirichlet(1, 6);
  RandomSource rng(1);
  const auto u = testing::random_field(g, rng);
  CHECK(l2_norm(heat_semigroup(u, 0.0) - u) == 0.0);
  const auto phi1 = SpectralField::basis(g, {1, 0});
  CHECK(heat_semigroup(phi1, 0.1)[{1, 0}].real() == doctest::Approx(0.37274).epsilon(1e-4));
  CHECK(heat_semigroup(phi1, 0.1)[{1, 0}].real() == doctest::Approx(std::exp(-0.1 * pi * pi)).epsilon(1e-15));
  for (int t = 0; t < 20; ++t) {
    const auto w = testing::random_field(Geometry::dirichlet(2, 5), rng);
    CHECK(l2_norm(heat_semigroup(w, 0.01 * t)) <= l2_norm(w));
  }
  CHECK_THROWS(heat_semigroup(u, -1e-3));
}

TEST_CASE("semigroup smoothing bound") {
  // |e^{-At} u|_2 <= sup_l l e^{-l t} |u|_0 = |u|_0 / (e t)
  RandomSource rng(2);
  for (const auto& g : {Geometry::dirichlet(1, 64), Geometry::dirichlet(2, 16), Geometry::torus(16)}) {
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const auto u = testing::random_field(g, rng);
      for (double t : {0.01, 0.1}) {
        auto v = u;
        for (std::size_t i = 0; i < g.size(); ++i) v.coeffs[i] *= std::exp(-g.eigenvalue(i) * t);
        worst = std::max(worst, sobolev_norm(v, 2.0) * t / l2_norm(u));
      }
    }
    CHECK(worst <= std::exp(-1.0));
    CHECK(worst > 0.0);
  }
}

TEST_CASE("synthetic observations") {
  const auto g = Geometry::dirichlet(1, 5);
  RandomSource rng(3);
  const auto u = testing::random_field(g, rng);
  auto tiny = HeatProblem::make(g, 0.1, 1.0, 2.0, 1e-30, 1.0);
  const auto d = synth_observation(tiny, u, rng);
  CHECK(l2_norm(d.y - heat_semigroup(u, 0.1)) < 1e-14);

  const auto p = HeatProblem::make(g, 0.1, 1.0, 2.0, 0.01, 1.0);
  const int n = 10000;
  std::vector<double> s2(g.size(), 0.0);
  std::vector<double> s1(g.size(), 0.0);
  const SpectralField zero(g);
  for (int i = 0; i < n; ++i) {
    const auto y = synth_observation(p, zero, rng).y;
    for (std::size_t k = 0; k < g.size(); ++k) {
      s2[k] += std::norm(y.coeffs[k]);
      s1[k] += y.coeffs[k].real();
    }
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double var = 0.01 / g.eigenvalue(k);
    CHECK(std::abs(s2[k] / n - var) < 5 * var * std::sqrt(2.0 / n));
    CHECK(std::abs(s1[k] / n) < 5 * std::sqrt(var / n));
  }
}

TEST_CASE("heat potential") {
  const auto p = default_problem(16);
  const auto data = synth(p, 4);
  CHECK(heat_potential(p, SpectralField(p.geometry), data) == 0.0);

  const auto one = HeatProblem::make(Geometry::dirichlet(1, 1), 0.1, 1.0, 2.0, 1.0, 1.0);
  HeatData zero{SpectralField(one.geometry)};
  const auto u = SpectralField::basis(one.geometry, {1, 0});
  CHECK(heat_potential(one, u, zero) == doctest::Approx(0.68556).epsilon(1e-4));
  CHECK(heat_potential(one, u, zero) == doctest::Approx(0.5 * pi * pi * std::exp(-0.2 * pi * pi)).epsilon(1e-14));

  // truncation only sees P^N u
  RandomSource rng(5);
  const auto w = sample_gaussian(p.prior, rng);
  CHECK(truncated_heat_potential(p, w, data, 4) == doctest::Approx(heat_potential(p, project(w, 4), data)).epsilon(1e-14));
}

TEST_CASE("heat potential is locally Lipschitz") {
  const auto p = default_problem(32);
  const auto data = synth(p, 6);
  RandomSource rng(7);
  // K_theta = C1^{-1/2} e^{-theta A T}, evaluated per mode
  auto k_norm = [&](const SpectralField& f, double theta) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.geometry.size(); ++i) {
      const double lam = pi * pi * p.geometry.mode(i).k1 * p.geometry.mode(i).k1;
      const double c1 = 0.01 / lam;
      s += std::exp(-2 * theta * lam * 0.1) * std::norm(f.coeffs[i]) / c1;
    }
    return std::sqrt(s);
  };
  for (int trial = 0; trial < 200; ++trial) {
    const auto u = sample_gaussian(p.prior, rng);
    const auto w = sample_gaussian(p.prior, rng);
    for (double eps : {0.25, 0.5, 0.75}) {
      const double lhs = std::abs(heat_potential(p, u, data) - heat_potential(p, w, data));
      const double rhs = (k_norm(u, 1) + k_norm(w, 1) + k_norm(data.y, eps)) * k_norm(u - w, 1 - eps);
      CHECK(lhs <= rhs * (1 + 1e-12));
      CHECK(smoothed_noise_norm(p, u - w, 1 - eps) == doctest::Approx(k_norm(u - w, 1 - eps)).epsilon(1e-12));
    }
  }
}

TEST_CASE("analytic posterior") {
  SUBCASE("consistent noise-free data leaves the mean at m0") {
    const auto g = Geometry::dirichlet(1, 8);
    RandomSource rng(8);
    const auto m0 = testing::random_field(g, rng);
    const auto p = HeatProblem::make(m0, 0.1, 1.0, 2.0, 0.01, 1.0);
    const auto post = analytic_posterior(p, HeatData{heat_semigroup(m0, 0.1)});
    CHECK(l2_norm(post.mean() - m0) < 1e-14 * l2_norm(m0));
  }
  SUBCASE("huge noise returns the prior") {
    const auto p = HeatProblem::make(Geometry::dirichlet(1, 8), 0.1, 1.0, 2.0, 1e300, 1.0);
    const auto post = analytic_posterior(p, synth(p, 9));
    for (std::size_t i = 0; i < p.geometry.size(); ++i) {
      CHECK(post.variance(i) == doctest::Approx(p.prior.variance(i)).epsilon(1e-15));
      CHECK(std::abs(post.mean().coeffs[i]) < 1e-100);
    }
  }
  SUBCASE("single mode matches the scalar conjugate update") {
    const auto p = HeatProblem::make(Geometry::dirichlet(1, 1), 0.1, 1.0, 2.0, 0.01, 1.0);
    HeatData d{SpectralField(p.geometry)};
    d.y.coeffs[0] = 0.5;
    const auto post = analytic_posterior(p, d);
    // prior N(0, s0), y = g u + eta, eta ~ N(0, se)
    const double lam = pi * pi;
    const double s0 = 1.0 / (lam * lam), se = 0.01 / lam, gfac = std::exp(-0.1 * lam);
    const double prec = 1.0 / s0 + gfac * gfac / se;
    const double mean = (gfac * 0.5 / se) / prec;
    CHECK(post.variance(0) == doctest::Approx(1.0 / prec).epsilon(1e-13));
    CHECK(post.mean().coeffs[0].real() == doctest::Approx(mean).epsilon(1e-13));
  }
  SUBCASE("every mode matches the conjugate update with a nonzero prior mean") {
    const auto g = Geometry::dirichlet(2, 4);
    RandomSource rng(10);
    const auto m0 = testing::random_field(g, rng);
    const auto p = HeatProblem::make(m0, 0.05, 2.0, 1.5, 0.02, 1.2);
    const auto d = synth(p, 11);
    const auto post = analytic_posterior(p, d);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto& k = g.mode(i);
      const double lam = pi * pi * (k.k1 * k.k1 + k.k2 * k.k2);
      const double s0 = 2.0 * std::pow(lam, -1.5), se = 0.02 * std::pow(lam, -1.2), gf = std::exp(-0.05 * lam);
      const double prec = 1.0 / s0 + gf * gf / se;
      const double mean = (m0.coeffs[i].real() / s0 + gf * d.y.coeffs[i].real() / se) / prec;
      CHECK(post.variance(i) == doctest::Approx(1.0 / prec).epsilon(1e-12));
      CHECK(post.mean().coeffs[i].real() == doctest::Approx(mean).epsilon(1e-12));
    }
  }
}

TEST_CASE("truncated posterior") {
  const auto p = default_problem(64);
  const auto d = synth(p, 12);
  const auto full = analytic_posterior(p, d);
  const auto at_res = truncated_posterior(p, d, 64);
  const auto beyond = truncated_posterior(p, d, 100);
  for (std::size_t i = 0; i < p.geometry.size(); ++i) {
    CHECK(at_res.variance(i) == full.variance(i));
    CHECK(beyond.mean().coeffs[i] == full.mean().coeffs[i]);
  }
  const auto none = truncated_posterior(p, d, 0);
  CHECK(hellinger_gaussian(none, p.prior) == 0.0);
  CHECK_THROWS(truncated_posterior(p, d, -1));

  double last = 2.0;
  for (int n : {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}) {
    const double dh = hellinger_gaussian(truncated_posterior(p, d, n), full);
    CHECK(dh < last);
    CHECK(dh > 0.0);
    last = dh;
  }
}

TEST_CASE("exponential rate in N squared") {
  const auto p = default_problem(64);
  const auto d = synth(p, 13);
  const std::vector<int> ns{2, 4, 6, 8, 10};
  std::vector<double> x, y;
  for (int n : ns) {
    x.push_back(double(n) * n);
    y.push_back(std::log(hellinger_gaussian(truncated_posterior(p, d, n), truncated_posterior(p, d, 64))));
  }
  const auto fit = testing::fit_line(x, y);
  CHECK(fit.slope < 0.0);
  CHECK(fit.r2 >= 0.95);
}

TEST_CASE("mean gaps are controlled by the Hellinger distance") {
  const auto p = default_problem(64);
  const auto d = synth(p, 14);
  const std::vector<int> ns{2, 4, 6, 8, 10};
  const auto rows = inference::gaussian_convergence(
      [&](int n) { return truncated_posterior(p, d, n); }, ns, 64);
  REQUIRE(rows.size() == ns.size());
  const double c = rows.front().mean_gap / rows.front().distance;
  for (const auto& r : rows) {
    CHECK(r.moment_bound_holds);
    CHECK(r.mean_gap <= c * r.distance * (1 + 1e-9));
  }
}

TEST_CASE("potential bounds over prior draws") {
  const auto p = default_problem(64);
  const auto d = synth(p, 15);
  const inference::Posterior post(p.prior, [&](const SpectralField& u) { return heat_potential(p, u, d); });
  // completing the square per mode: Phi >= -|C1^{-1/2} y|^2 / 2
  const double floor_bound = 0.5 * std::pow(smoothed_noise_norm(p, d.y, 0.0), 2);
  inference::AuditOptions opt;
  opt.samples = 1000;
  const auto a = inference::audit_assumptions(post, opt);
  opt.samples = 2000;
  const auto b = inference::audit_assumptions(post, opt);
  REQUIRE(a.ok);
  REQUIRE(b.ok);
  for (std::size_t e = 0; e < a.epsilons.size(); ++e) {
    CHECK(std::isfinite(a.lower_constants[e]));
    CHECK(a.lower_constants[e] <= floor_bound);
    CHECK(b.lower_constants[e] <= floor_bound);
    CHECK(b.lower_constants[e] >= a.lower_constants[e]);
  }
  // Phi <= (k^2/2 + k |K_0 y|)(1 + |u|^2), k = max_k C1^{-1/2} e^{-lambda T}
  double kappa = 0.0;
  for (std::size_t i = 0; i < p.geometry.size(); ++i)
    kappa = std::max(kappa, std::exp(-p.geometry.eigenvalue(i) * 0.1) / std::sqrt(p.noise_variance(i)));
  const double c = 0.5 * kappa * kappa + kappa * smoothed_noise_norm(p, d.y, 0.0);
  RandomSource rng(16);
  for (int i = 0; i < 1000; ++i) {
    const auto u = sample_gaussian(p.prior, rng);
    const double nu = l2_norm(u);
    CHECK(heat_potential(p, u, d) <= c * (1 + nu * nu));
  }
}

}
