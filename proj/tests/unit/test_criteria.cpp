#include <doctest.h>

#include <cmath>

#include "priorlens/conjugate.hpp"
#include "priorlens/criteria.hpp"
#include "priorlens/errors.hpp"
#include "priorlens/estimate.hpp"
#include "priorlens/rng.hpp"
#include "support/oracles.hpp"

using namespace priorlens;

namespace {

Data make_data(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  return generate_normal_data(1.0, 1.0, n, rng);
}

// Forwards the closed-form evaluator but hides its analytic derivatives, so
// the base-class finite-difference fallback is exercised.
class FdOnly final : public PosteriorEvaluator {
 public:
  explicit FdOnly(const NormalExactEvaluator& inner) : inner_(inner) {}
  double log_expect_alpha(const Sample& s, double alpha) const override {
    return inner_.log_expect_alpha(s, alpha);
  }
  Vec posterior_mean() const override { return inner_.posterior_mean(); }

 private:
  const NormalExactEvaluator& inner_;
};

}  // namespace

TEST_CASE("cumulant vanishes identically at alpha zero") {
  const Data data = make_data(601, 20);
  const NormalExactEvaluator ev(data, NormalHyper{0.4, -0.3, 0.2});
  for (const Sample& p : data) {
    CHECK(ev.log_expect_alpha(p, 0.0) == 0.0);
  }
  CHECK(functional_cumulant(ev, data, 0.0) == 0.0);
}

TEST_CASE("waic identity is exact in floating point") {
  const Data data = make_data(602, 25);
  for (const NormalHyper h : {NormalHyper{0.0, 0.0, 0.0},
                              NormalHyper{0.01, -1.0, 0.01},
                              NormalHyper{0.5, 1.2, 0.8}}) {
    const NormalExactEvaluator ev(data, h);
    const double t = training_error(ev, data);
    const double v = functional_variance(ev, data);
    CHECK(waic(ev, data) == t + v / static_cast<double>(data.size()));
  }
}

TEST_CASE("alpha derivatives agree with finite differences") {
  const Data data = make_data(603, 15);
  const NormalExactEvaluator ev(data, NormalHyper{0.3, 0.6, 0.7});
  REQUIRE(ev.has_analytic_derivatives());
  const FdOnly fd(ev);
  REQUIRE_FALSE(fd.has_analytic_derivatives());
  for (const Sample& p : data) {
    const auto f = [&](double a) { return ev.log_expect_alpha(p, a); };
    CHECK(ev.dalpha_at0(p) ==
          doctest::Approx(testing::fd1(f, 0.0, 1e-4)).epsilon(1e-7));
    CHECK(ev.d2alpha_at0(p) ==
          doctest::Approx(testing::fd2(f, 0.0, 1e-3)).epsilon(1e-5));
    // The fallback path reproduces the analytic values as well.
    CHECK(fd.dalpha_at0(p) ==
          doctest::Approx(ev.dalpha_at0(p)).epsilon(1e-6));
    CHECK(fd.d2alpha_at0(p) ==
          doctest::Approx(ev.d2alpha_at0(p)).epsilon(1e-4));
  }
}

TEST_CASE("posterior variance of the log density is positive") {
  const Data data = make_data(604, 25);
  const NormalExactEvaluator ev(data, NormalHyper{0.2, 0.0, 0.3});
  for (const Sample& p : data) CHECK(ev.d2alpha_at0(p) > 0.0);
  CHECK(functional_variance(ev, data) > 0.0);
}

TEST_CASE("dic matches its defining formula") {
  const Data data = make_data(605, 12);
  const auto model = model_family_normal();
  const NormalExactEvaluator ev(data, NormalHyper{0.4, 0.5, 0.6});
  const Vec post_mean = ev.posterior_mean();
  double want = 0.0;
  for (const Sample& p : data) {
    want += -2.0 * ev.dalpha_at0(p) + model->log_density(p, post_mean);
  }
  want /= static_cast<double>(data.size());
  CHECK(dic(ev, *model, data) == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("free energy propriety gate and empty-data identity") {
  const auto prior = prior_family_normal();
  const Data data = make_data(606, 10);
  {
    const NormalExactEvaluator ev(data, NormalHyper{0.0, 0.0, 0.0});
    CHECK_THROWS_AS(
        (void)free_energy(ev, *prior, NormalHyper{0.0, 0.0, 0.0}.to_hyper()),
        ImproperPrior);
  }
  {
    // With no observations the marginal equals the prior mass, so the free
    // energy is exactly zero. The evaluator needs lambda > 1 and mu > 0 here
    // so that its alpha = -1 cache stays proper at n = 0.
    const NormalHyper h{1.5, 0.4, 1.1};
    const NormalExactEvaluator ev(Data{}, h);
    CHECK(std::abs(free_energy(ev, *prior, h.to_hyper())) < 1e-12);
  }
}

TEST_CASE("generalization loss by quadrature hits the closed form") {
  const double mu_p = 0.3, sd_p = 1.2;
  const auto pred = [&](const Sample& s) {
    const double r = s.x(0) - mu_p;
    return -0.5 * std::log(2.0 * M_PI * sd_p * sd_p) -
           0.5 * r * r / (sd_p * sd_p);
  };
  const double want = 0.5 * std::log(2.0 * M_PI * sd_p * sd_p) +
                      (1.0 + mu_p * mu_p) / (2.0 * sd_p * sd_p);
  CHECK(generalization_loss_quadrature(pred, 0.0, 1.0) ==
        doctest::Approx(want).epsilon(1e-12));

  Rng rng(607);
  const double mc = generalization_loss_mc(
      pred,
      [](Rng& r) { return Sample::scalar(r.normal()); }, 200000, rng);
  CHECK(std::abs(mc - want) < 5e-3);
}

TEST_CASE("second-order posterior expectations") {
  const auto model = model_family_normal();
  const auto prior = prior_family_normal();
  const std::size_t n = 30;
  const Data data = make_data(608, n);
  double mean = 0.0, m2 = 0.0;
  for (const Sample& p : data) mean += p.x(0);
  mean /= static_cast<double>(n);
  for (const Sample& p : data) {
    m2 += (p.x(0) - mean) * (p.x(0) - mean);
  }
  m2 /= static_cast<double>(n);
  Vec init(2);
  init << mean, 1.0 / m2;
  const Vec w_hat = find_map(*model, *prior, data, init);
  const EmpiricalTensors t = assemble_tensors(*model, *prior, data, w_hat);
  const double nn = static_cast<double>(n);

  ScalarField coord_m{[](const Vec& w) { return w(0); },
                      [](const Vec& w) {
                        Vec g = Vec::Zero(2);
                        g(0) = 1.0;
                        (void)w;
                        return g;
                      },
                      [](const Vec&) { return SymMatrix(2); }};
  ScalarField coord_s{[](const Vec& w) { return w(1); },
                      [](const Vec& w) {
                        Vec g = Vec::Zero(2);
                        g(1) = 1.0;
                        (void)w;
                        return g;
                      },
                      [](const Vec&) { return SymMatrix(2); }};

  // Exact conjugate moments under the flat base prior: E[m] = sample mean,
  // E[s] = (n+1)/(n m2). Both are reproduced by the second-order formula
  // without error for this family.
  CHECK(laplace_expectation(coord_m, t, n) ==
        doctest::Approx(mean).epsilon(1e-10));
  CHECK(laplace_expectation(coord_s, t, n) ==
        doctest::Approx((nn + 1.0) / (nn * m2)).epsilon(1e-9));

  // The cubic location moment carries a genuine second-order error with a
  // known closed form: exact - approx = 3 mean m2 / (n (n-1)).
  ScalarField cubic{[](const Vec& w) { return w(0) * w(0) * w(0); },
                    [](const Vec& w) {
                      Vec g = Vec::Zero(2);
                      g(0) = 3.0 * w(0) * w(0);
                      return g;
                    },
                    [](const Vec& w) {
                      SymMatrix h(2);
                      h.set(0, 0, 6.0 * w(0));
                      return h;
                    }};
  const double exact = mean * mean * mean + 3.0 * mean * m2 / (nn - 1.0);
  const double got = laplace_expectation(cubic, t, n);
  const double want_err = 3.0 * mean * m2 / (nn * (nn - 1.0));
  CHECK(exact - got == doctest::Approx(want_err).epsilon(1e-6));
}

TEST_CASE("report bundles the scalar criteria consistently") {
  const auto model = model_family_normal();
  const Data data = make_data(609, 18);
  const NormalHyper h{0.2, -0.4, 0.5};
  const NormalExactEvaluator ev(data, h);
  const CriterionReport rep = compute_report(ev, *model, data, h.to_hyper());
  CHECK(rep.n == data.size());
  CHECK(rep.cv == cv(ev, data));
  CHECK(rep.waic ==
        rep.training_error + rep.functional_variance / static_cast<double>(rep.n));
  CHECK(rep.dic == dic(ev, *model, data));
  CHECK_FALSE(rep.free_energy.has_value());
  CHECK_FALSE(rep.gen_loss.has_value());
  REQUIRE(rep.hyper.values.size() == 3);
  CHECK(rep.hyper.values[1] == -0.4);
}
