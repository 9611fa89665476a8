#include "priorlens/criteria.hpp"

#include <cmath>

#include "priorlens/errors.hpp"
#include "priorlens/quadrature.hpp"

namespace priorlens {

namespace {
constexpr double kFdStep = 1e-3;
}

double PosteriorEvaluator::dalpha_at0(const Sample& s) const {
  return (log_expect_alpha(s, kFdStep) - log_expect_alpha(s, -kFdStep)) /
         (2.0 * kFdStep);
}

double PosteriorEvaluator::d2alpha_at0(const Sample& s) const {
  return (log_expect_alpha(s, kFdStep) - 2.0 * log_expect_alpha(s, 0.0) +
          log_expect_alpha(s, -kFdStep)) /
         (kFdStep * kFdStep);
}

double PosteriorEvaluator::log_marginal() const {
  throw NoExpectationPath("PosteriorEvaluator: no marginal likelihood path");
}

double functional_cumulant(const PosteriorEvaluator& ev, const Data& data,
                           double alpha) {
  if (data.empty()) throw OutOfDomain("functional_cumulant: empty data");
  double acc = 0.0;
  for (const Sample& s : data) acc += ev.log_expect_alpha(s, alpha);
  const double out = acc / static_cast<double>(data.size());
  if (!std::isfinite(out)) {
    throw NonFinite("functional_cumulant: non-finite accumulation");
  }
  return out;
}

double cv(const PosteriorEvaluator& ev, const Data& data) {
  return functional_cumulant(ev, data, -1.0);
}

double training_error(const PosteriorEvaluator& ev, const Data& data) {
  return -functional_cumulant(ev, data, 1.0);
}

double functional_variance(const PosteriorEvaluator& ev, const Data& data) {
  if (data.empty()) throw OutOfDomain("functional_variance: empty data");
  double acc = 0.0;
  for (const Sample& s : data) acc += ev.d2alpha_at0(s);
  if (!std::isfinite(acc)) {
    throw NonFinite("functional_variance: non-finite accumulation");
  }
  return acc;
}

double waic(const PosteriorEvaluator& ev, const Data& data) {
  return training_error(ev, data) +
         functional_variance(ev, data) / static_cast<double>(data.size());
}

double dic(const PosteriorEvaluator& ev, const ModelFamily& model,
           const Data& data) {
  if (data.empty()) throw OutOfDomain("dic: empty data");
  const Vec mean = ev.posterior_mean();
  double acc = 0.0;
  for (const Sample& s : data) {
    acc += -2.0 * ev.dalpha_at0(s) + model.log_density(s, mean);
  }
  const double out = acc / static_cast<double>(data.size());
  if (!std::isfinite(out)) throw NonFinite("dic: non-finite accumulation");
  return out;
}

double free_energy(const PosteriorEvaluator& ev, const PriorFamily& prior,
                   const Hyper& h) {
  const auto norm = prior.log_normalizer(h);
  if (!norm) {
    throw ImproperPrior("free_energy: prior has no finite normalizer");
  }
  return -ev.log_marginal() + *norm;
}

double generalization_loss_quadrature(
    const std::function<double(const Sample&)>& predictive_logp,
    double truth_mean, double truth_sd, int order) {
  const HermiteRule rule = gauss_hermite(order);
  const double val = normal_expectation(rule, truth_mean, truth_sd,
                                        [&](double x) {
                                          return predictive_logp(
                                              Sample::scalar(x));
                                        });
  return -val;
}

double generalization_loss_mc(
    const std::function<double(const Sample&)>& predictive_logp,
    const std::function<Sample(Rng&)>& truth_sampler, std::size_t budget,
    Rng& rng) {
  if (budget == 0) throw OutOfDomain("generalization_loss_mc: zero budget");
  double acc = 0.0;
  for (std::size_t k = 0; k < budget; ++k) {
    acc += predictive_logp(truth_sampler(rng));
  }
  return -acc / static_cast<double>(budget);
}

double laplace_expectation(const ScalarField& f, const EmpiricalTensors& t,
                           std::size_t n) {
  if (n == 0) throw OutOfDomain("laplace_expectation: n must be positive");
  const SymMatrix& J = t.inv_hess;
  const Vec drift =
      contract_JJT(J, J, t.loss_third, ContractionPattern::AdjacentPair);
  const double r1 = 0.5 * trace_product(f.hess(t.w_hat), J) -
                    0.5 * f.grad(t.w_hat).dot(drift);
  return f.value(t.w_hat) + r1 / static_cast<double>(n);
}

CriterionReport compute_report(const PosteriorEvaluator& ev,
                               const ModelFamily& model, const Data& data,
                               const Hyper& h) {
  CriterionReport r;
  r.n = data.size();
  r.hyper = h;
  r.cv = cv(ev, data);
  r.training_error = training_error(ev, data);
  r.functional_variance = functional_variance(ev, data);
  r.waic = r.training_error + r.functional_variance / static_cast<double>(r.n);
  r.dic = dic(ev, model, data);
  return r;
}

}  // namespace priorlens
