#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include "priorlens/estimate.hpp"
#include "priorlens/model.hpp"
#include "priorlens/rng.hpp"

namespace priorlens {

/// Posterior-integral access shared by every criterion: the per-sample
/// log-expectation log E_posterior[ p(sample|w)^alpha ]. Implementations are
/// either closed-form (conjugate families) or sample-path (MCMC draws).
class PosteriorEvaluator {
 public:
  virtual ~PosteriorEvaluator() = default;

  virtual double log_expect_alpha(const Sample& s, double alpha) const = 0;

  /// True when the alpha-derivatives below are closed-form rather than the
  /// default central differences (step 1e-3).
  virtual bool has_analytic_derivatives() const { return false; }

  /// d/dalpha log E[p^alpha] at alpha = 0, i.e. E_posterior[log p(s|w)].
  virtual double dalpha_at0(const Sample& s) const;

  /// d2/dalpha2 at alpha = 0, i.e. Var_posterior[log p(s|w)].
  virtual double d2alpha_at0(const Sample& s) const;

  virtual Vec posterior_mean() const = 0;

  /// log marginal likelihood of the data under the (unnormalized) prior.
  /// Throws NoExpectationPath when the implementation cannot provide it.
  virtual double log_marginal() const;
};

/// All per-dataset criterion values at one hyperparameter.
struct CriterionReport {
  double cv = 0.0;
  double waic = 0.0;
  double training_error = 0.0;
  double functional_variance = 0.0;
  double dic = 0.0;
  std::optional<double> free_energy;
  std::optional<double> gen_loss;
  std::size_t n = 0;
  Hyper hyper;
};

/// (1/n) sum_i log E_posterior[p(X_i|w)^alpha]. Zero at alpha = 0 by
/// construction; throws NonFinite when any term overflows.
double functional_cumulant(const PosteriorEvaluator& ev, const Data& data,
                           double alpha);

/// Cross validation: the functional cumulant at alpha = -1.
double cv(const PosteriorEvaluator& ev, const Data& data);

/// Training error: minus the functional cumulant at alpha = +1.
double training_error(const PosteriorEvaluator& ev, const Data& data);

/// Functional variance: sum_i Var_posterior[log p(X_i|w)].
double functional_variance(const PosteriorEvaluator& ev, const Data& data);

/// waic = training_error + functional_variance / n, exactly that sum.
double waic(const PosteriorEvaluator& ev, const Data& data);

/// Deviance criterion: (1/n) sum_i { -2 E_posterior[log p(X_i|w)]
///                                   + log p(X_i | posterior mean) }.
double dic(const PosteriorEvaluator& ev, const ModelFamily& model,
           const Data& data);

/// Minus log marginal likelihood plus the prior's log normalizer.
/// Throws ImproperPrior when the prior has no finite normalizer.
double free_energy(const PosteriorEvaluator& ev, const PriorFamily& prior,
                   const Hyper& h);

/// Expected negative log predictive density under a scalar Gaussian truth,
/// by Gauss-Hermite quadrature (deterministic).
double generalization_loss_quadrature(
    const std::function<double(const Sample&)>& predictive_logp,
    double truth_mean, double truth_sd, int order = 128);

/// Same under an arbitrary truth sampler, by plain Monte Carlo.
double generalization_loss_mc(
    const std::function<double(const Sample&)>& predictive_logp,
    const std::function<Sample(Rng&)>& truth_sampler, std::size_t budget,
    Rng& rng);

/// Scalar function of the parameter with its derivative stack, for the
/// second-order posterior-expectation approximation.
struct ScalarField {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
  std::function<SymMatrix(const Vec&)> hess;
};

/// E_posterior[f] to second order around the estimator:
///   f(w_hat) + (1/n) * ( tr(f'' J)/2 - f' . V / 2 ),
/// with V the J-J contraction of the loss third derivative.
double laplace_expectation(const ScalarField& f, const EmpiricalTensors& t,
                           std::size_t n);

/// Convenience: cv/waic/T/V/dic in one pass (free energy and generalization
/// loss are attached by the caller when available).
CriterionReport compute_report(const PosteriorEvaluator& ev,
                               const ModelFamily& model, const Data& data,
                               const Hyper& h);

}  // namespace priorlens
