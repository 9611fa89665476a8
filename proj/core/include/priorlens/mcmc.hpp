#pragma once

#include <cstdint>
#include <vector>

#include "priorlens/criteria.hpp"
#include "priorlens/model.hpp"

namespace priorlens {

struct ChainConfig {
  std::size_t steps = 100000;
  std::size_t burn_in = 0;   // 0 selects steps / 5
  std::size_t thin = 5;
  double step_scale = 0.0;   // <= 0 selects 2.4 / sqrt(dim)
  std::uint64_t seed = 0;
};

struct SampleSet {
  std::vector<Vec> draws;
  double acceptance_rate = 0.0;
};

/// Random-walk Metropolis over the posterior of model x (prior ratio at h)
/// x base prior. Proposals are componentwise Gaussian, scaled by the
/// posterior standard deviation implied by the empirical curvature at the
/// MAP point. Throws NotInterior if the posterior is not finite at init,
/// AllRejected if the acceptance rate ends below 1%.
SampleSet rw_metropolis(const ModelFamily& model, const PriorFamily& prior,
                        const Hyper& h, const Data& data,
                        const ChainConfig& cfg, const Vec& init);

/// Importance-sampling cross validation from posterior draws:
/// (1/n) sum_i log[ (1/T) sum_t p(X_i|w_t)^{-1} ], max-shifted.
/// Throws UnstableWeights when any per-point effective sample size is < 10;
/// the per-point sizes are reported through ess_out when given.
double is_cv_from_samples(const SampleSet& samples, const ModelFamily& model,
                          const Data& data,
                          std::vector<double>* ess_out = nullptr);

/// Sample-path posterior evaluator over a fixed draw set. Alpha-derivatives
/// are the exact cumulants of the empirical measure, so the WAIC identity
/// holds exactly on this path too.
class SampleSetEvaluator final : public PosteriorEvaluator {
 public:
  SampleSetEvaluator(SampleSet samples, const ModelFamily& model);

  double log_expect_alpha(const Sample& s, double alpha) const override;
  bool has_analytic_derivatives() const override { return true; }
  double dalpha_at0(const Sample& s) const override;
  double d2alpha_at0(const Sample& s) const override;
  Vec posterior_mean() const override;

 private:
  std::vector<double> logp_at(const Sample& s) const;

  SampleSet samples_;
  const ModelFamily& model_;
};

}  // namespace priorlens
