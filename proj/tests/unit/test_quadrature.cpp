#include <doctest.h>

#include <cmath>

#include "priorlens/errors.hpp"
#include "priorlens/quadrature.hpp"

using namespace priorlens;

namespace {

// int x^{2m} exp(-x^2) dx = Gamma(m + 1/2)
double even_moment(int m) { return std::tgamma(m + 0.5); }

}  // namespace

TEST_CASE("rule basics") {
  CHECK_THROWS_AS((void)gauss_hermite(0), OutOfDomain);
  const HermiteRule r = gauss_hermite(31);
  REQUIRE(r.nodes.size() == 31);
  REQUIRE(r.weights.size() == 31);
  double sum = 0.0;
  for (double w : r.weights) {
    CHECK(w > 0.0);
    sum += w;
  }
  CHECK(sum == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-13));
  for (std::size_t i = 1; i < r.nodes.size(); ++i) {
    CHECK(r.nodes[i] > r.nodes[i - 1]);
  }
  // Symmetric rule: odd moments vanish.
  double odd = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    odd += r.weights[i] * r.nodes[i] * r.nodes[i] * r.nodes[i];
  }
  CHECK(std::abs(odd) < 1e-13);
}

TEST_CASE("polynomial exactness up to degree 2k-1") {
  for (int k : {5, 12, 24}) {
    const HermiteRule r = gauss_hermite(k);
    for (int m = 0; 2 * m <= 2 * k - 1; ++m) {
      double got = 0.0;
      for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        got += r.weights[i] * std::pow(r.nodes[i], 2 * m);
      }
      // High moments reach ~1e21; pow/tgamma rounding dominates there, so the
      // bound is loose in ulps while still far below any non-exactness error.
      CHECK(got == doctest::Approx(even_moment(m)).epsilon(1e-8));
    }
  }
}

TEST_CASE("normal expectation closed forms") {
  const HermiteRule r = gauss_hermite(40);
  const double mu = 0.7, sd = 1.3;
  const double m2 =
      normal_expectation(r, mu, sd, [](double x) { return x * x; });
  CHECK(m2 == doctest::Approx(mu * mu + sd * sd).epsilon(1e-13));
  const double me =
      normal_expectation(r, mu, sd, [](double x) { return std::exp(x); });
  CHECK(me == doctest::Approx(std::exp(mu + 0.5 * sd * sd)).epsilon(1e-12));
  const double p3 = normal_expectation(
      r, mu, sd, [](double x) { return x * x * x; });
  CHECK(p3 ==
        doctest::Approx(mu * mu * mu + 3.0 * mu * sd * sd).epsilon(1e-12));
}
