#pragma once

#include <memory>
#include <optional>
#include <utility>

#include "priorlens/criteria.hpp"
#include "priorlens/model.hpp"
#include "priorlens/rng.hpp"
#include "priorlens/tensor.hpp"

namespace priorlens {

/// Hyperparameters of the conjugate prior for the normal mean-precision
/// model: log phi(m, s) = -lambda s m^2 / 2 + mu log s - epsilon s / 2.
struct NormalHyper {
  double lambda = 0.0;
  double mu = 0.0;
  double epsilon = 0.0;

  bool proper() const {
    return lambda > 0.0 && mu > -0.5 && epsilon > 0.0;
  }
  Hyper to_hyper() const {
    return {{lambda, mu, epsilon}, {"lambda", "mu", "epsilon"}};
  }
  static NormalHyper from_hyper(const Hyper& h);
};

/// Gaussian shrinkage prior for ridge regression:
/// log phi(w) = -lambda |w|^2 / 2.
struct RidgeHyper {
  double lambda = 0.0;

  bool proper() const { return lambda > 0.0; }
  Hyper to_hyper() const { return {{lambda}, {"lambda"}}; }
  static RidgeHyper from_hyper(const Hyper& h);
};

struct NormalSuffStats {
  double n = 0.0;
  double sum_x = 0.0;
  double sum_x2 = 0.0;

  static NormalSuffStats from_data(const Data& data);
};

struct RidgeSuffStats {
  double n = 0.0;
  SymMatrix gram;    // sum x x'
  Vec xty;           // sum y x
  double yty = 0.0;  // sum y^2

  static RidgeSuffStats from_data(const Data& data);
};

/// log of the partition function Z_n(X, alpha): the integral over (m, s) of
/// prod_i p(X_i | m,s) * p(X | m,s)^alpha * phi(m,s | h). The extra point is
/// required whenever alpha != 0. Throws OutOfDomain when the integral is
/// improper (nonpositive a, c, or d).
double normal_log_Z(const NormalSuffStats& stats, const NormalHyper& h,
                    std::optional<double> extra_x, double alpha);

/// First and second alpha-derivatives of normal_log_Z at alpha = 0, closed
/// form (polygamma based).
void normal_log_Z_dalpha(const NormalSuffStats& stats, const NormalHyper& h,
                         double extra_x, double* d1, double* d2);

/// Posterior mean (m_bar, s_bar) of the conjugate normal posterior.
std::pair<double, double> normal_posterior_mean(const NormalSuffStats& stats,
                                                const NormalHyper& h);

/// One exact posterior draw (m, s).
Vec normal_posterior_draw(const NormalSuffStats& stats, const NormalHyper& h,
                          Rng& rng);

/// Same partition function for ridge regression with noise scale sigma; the
/// extra point carries (x, y). The alpha-independent prefactor is fixed so
/// the n = 0, alpha = 0 value equals the integral of the prior over w.
double ridge_log_Z(const RidgeSuffStats& stats, const RidgeHyper& h,
                   double sigma, const Sample* extra, double alpha);

Vec ridge_posterior_mean(const RidgeSuffStats& stats, const RidgeHyper& h,
                         double sigma);

Vec ridge_posterior_draw(const RidgeSuffStats& stats, const RidgeHyper& h,
                         double sigma, Rng& rng);

/// Closed-form posterior evaluator for the normal model. All alpha-paths are
/// exact; construction caches the alpha in {-1, 0, +1} constants so the
/// criteria loops stay cheap.
class NormalExactEvaluator final : public PosteriorEvaluator {
 public:
  NormalExactEvaluator(const Data& data, const NormalHyper& h);
  NormalExactEvaluator(const NormalSuffStats& stats, const NormalHyper& h);

  double log_expect_alpha(const Sample& s, double alpha) const override;
  bool has_analytic_derivatives() const override { return true; }
  double dalpha_at0(const Sample& s) const override;
  double d2alpha_at0(const Sample& s) const override;
  Vec posterior_mean() const override;
  double log_marginal() const override { return lz0_; }

 private:
  struct AlphaConsts {
    double alpha, a, c, base;  // base = -(n+alpha-1)/2 log 2pi - log(a)/2 + lgamma(c)
  };
  double lz_at(double x, const AlphaConsts& k) const;

  NormalSuffStats stats_;
  NormalHyper h_;
  AlphaConsts minus_, zero_, plus_;
  double lz0_ = 0.0;
  double digamma_c0_ = 0.0, trigamma_c0_ = 0.0;
  double a0_ = 0.0, b0_ = 0.0, c0_ = 0.0, d0_ = 0.0;
};

/// Closed-form posterior evaluator for ridge regression. Per-sample values
/// use rank-one updates against the cached posterior precision inverse.
class RidgeExactEvaluator final : public PosteriorEvaluator {
 public:
  RidgeExactEvaluator(const Data& data, const RidgeHyper& h, double sigma);

  double log_expect_alpha(const Sample& s, double alpha) const override;
  bool has_analytic_derivatives() const override { return true; }
  double dalpha_at0(const Sample& s) const override;
  double d2alpha_at0(const Sample& s) const override;
  Vec posterior_mean() const override { return mean_; }
  double log_marginal() const override { return lz0_; }

  /// Predictive mean and variance of y at input x.
  std::pair<double, double> predictive_moments(const Vec& x) const;

 private:
  void leverage(const Sample& s, double* t, double* r) const;

  RidgeSuffStats stats_;
  RidgeHyper h_;
  double sigma_ = 0.0;
  SymMatrix a0_inv_;
  Vec mean_;
  double lz0_ = 0.0;
  double log_2pi_s2_ = 0.0;
};

/// i.i.d. draws from a scalar normal truth.
Data generate_normal_data(double true_mean, double true_sd, std::size_t n,
                          Rng& rng);

/// Regression draws: x ~ Normal(a0, I), y = w0 . x + Normal(0, sigma^2).
Data generate_ridge_data(const Vec& a0, const Vec& w0, double sigma,
                         std::size_t n, Rng& rng);

/// Mean-precision normal model with its full derivative stack and analytic
/// self-expectations.
std::shared_ptr<const ModelFamily> model_family_normal();

/// Fixed-noise linear regression model in `dim` inputs; self-expectations
/// condition on the observed inputs.
std::shared_ptr<const ModelFamily> model_family_ridge(double sigma, int dim);

/// Conjugate prior families over a flat base prior.
std::shared_ptr<const PriorFamily> prior_family_normal();
std::shared_ptr<const PriorFamily> prior_family_ridge(int dim);

}  // namespace priorlens
