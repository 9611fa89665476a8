#include "priorlens/mcmc.hpp"

#include <cmath>
#include <limits>

#include "priorlens/errors.hpp"
#include "priorlens/estimate.hpp"

namespace priorlens {

namespace {

// Log posterior up to a constant. The likelihood is evaluated first and
// short-circuits, so prior callbacks never see points outside the support.
double log_target(const ModelFamily& model, const PriorFamily& prior,
                  const Hyper& h, const Data& data, const Vec& w) {
  double lik = 0.0;
  for (const Sample& s : data) {
    lik += model.log_density(s, w);
    if (!std::isfinite(lik)) {
      return -std::numeric_limits<double>::infinity();
    }
  }
  return lik + prior.log_ratio(w, h) + prior.log_base(w);
}

}  // namespace

SampleSet rw_metropolis(const ModelFamily& model, const PriorFamily& prior,
                        const Hyper& h, const Data& data,
                        const ChainConfig& cfg, const Vec& init) {
  const int d = model.param_dim();
  const std::size_t burn = (cfg.burn_in == 0) ? cfg.steps / 5 : cfg.burn_in;
  const std::size_t thin = (cfg.thin == 0) ? 1 : cfg.thin;
  if (cfg.steps <= burn) {
    throw OutOfDomain("rw_metropolis: steps must exceed burn_in");
  }
  const double scale =
      (cfg.step_scale > 0.0) ? cfg.step_scale : 2.4 / std::sqrt(double(d));

  // Proposal widths from the curvature at the MAP point: the inverse
  // per-sample Hessian over n approximates the posterior covariance.
  const Vec w_map = find_map(model, prior, data, init);
  const EmpiricalTensors t = assemble_tensors(model, prior, data, w_map);
  Vec widths(d);
  for (int k = 0; k < d; ++k) {
    widths(k) =
        scale * std::sqrt(t.inv_hess(k, k) / static_cast<double>(data.size()));
  }

  Rng rng(cfg.seed);
  Vec w = init;
  double lt = log_target(model, prior, h, data, w);
  if (!std::isfinite(lt)) {
    throw NotInterior("rw_metropolis: posterior not finite at init");
  }

  SampleSet out;
  out.draws.reserve((cfg.steps - burn) / thin + 1);
  std::size_t accepted = 0;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    Vec prop = w;
    for (int k = 0; k < d; ++k) prop(k) += widths(k) * rng.normal();
    const double lp = log_target(model, prior, h, data, prop);
    if (std::isfinite(lp) && std::log(1.0 - rng.uniform()) < lp - lt) {
      w = prop;
      lt = lp;
      ++accepted;
    }
    if (step >= burn && (step - burn) % thin == 0) {
      out.draws.push_back(w);
    }
  }
  out.acceptance_rate =
      static_cast<double>(accepted) / static_cast<double>(cfg.steps);
  if (out.acceptance_rate < 0.01) {
    throw AllRejected("rw_metropolis: acceptance rate below 1%");
  }
  return out;
}

double is_cv_from_samples(const SampleSet& samples, const ModelFamily& model,
                          const Data& data, std::vector<double>* ess_out) {
  if (samples.draws.empty()) {
    throw OutOfDomain("is_cv_from_samples: empty draw set");
  }
  if (data.empty()) throw OutOfDomain("is_cv_from_samples: empty data");
  const double T = static_cast<double>(samples.draws.size());
  if (ess_out != nullptr) ess_out->clear();
  double acc = 0.0;
  std::vector<double> u(samples.draws.size());
  for (const Sample& s : data) {
    for (std::size_t t = 0; t < samples.draws.size(); ++t) {
      u[t] = -model.log_density(s, samples.draws[t]);  // log 1/p
    }
    double mx = u[0];
    for (double v : u) mx = std::max(mx, v);
    double sum = 0.0, sumsq = 0.0;
    for (double v : u) {
      const double e = std::exp(v - mx);
      sum += e;
      sumsq += e * e;
    }
    const double ess = sum * sum / sumsq;
    if (ess_out != nullptr) ess_out->push_back(ess);
    if (ess < 10.0) {
      throw UnstableWeights(
          "is_cv_from_samples: per-point effective sample size below 10");
    }
    acc += mx + std::log(sum) - std::log(T);
  }
  return acc / static_cast<double>(data.size());
}

SampleSetEvaluator::SampleSetEvaluator(SampleSet samples,
                                       const ModelFamily& model)
    : samples_(std::move(samples)), model_(model) {
  if (samples_.draws.empty()) {
    throw OutOfDomain("SampleSetEvaluator: empty draw set");
  }
}

std::vector<double> SampleSetEvaluator::logp_at(const Sample& s) const {
  std::vector<double> u(samples_.draws.size());
  for (std::size_t t = 0; t < samples_.draws.size(); ++t) {
    u[t] = model_.log_density(s, samples_.draws[t]);
  }
  return u;
}

double SampleSetEvaluator::log_expect_alpha(const Sample& s,
                                            double alpha) const {
  const std::vector<double> u = logp_at(s);
  const double T = static_cast<double>(u.size());
  double mx = alpha * u[0];
  for (double v : u) mx = std::max(mx, alpha * v);
  double sum = 0.0, sumsq = 0.0;
  for (double v : u) {
    const double e = std::exp(alpha * v - mx);
    sum += e;
    sumsq += e * e;
  }
  if (alpha < 0.0 && sum * sum / sumsq < 10.0) {
    throw UnstableWeights(
        "SampleSetEvaluator: importance weights too heavy-tailed");
  }
  return mx + std::log(sum) - std::log(T);
}

double SampleSetEvaluator::dalpha_at0(const Sample& s) const {
  const std::vector<double> u = logp_at(s);
  double mean = 0.0;
  for (double v : u) mean += v;
  return mean / static_cast<double>(u.size());
}

double SampleSetEvaluator::d2alpha_at0(const Sample& s) const {
  const std::vector<double> u = logp_at(s);
  const double T = static_cast<double>(u.size());
  double mean = 0.0;
  for (double v : u) mean += v;
  mean /= T;
  double var = 0.0;
  for (double v : u) var += (v - mean) * (v - mean);
  return var / T;  // exact second cumulant of the empirical measure
}

Vec SampleSetEvaluator::posterior_mean() const {
  const int d = static_cast<int>(samples_.draws.front().size());
  Vec mean = Vec::Zero(d);
  for (const Vec& w : samples_.draws) mean += w;
  return mean / static_cast<double>(samples_.draws.size());
}

}  // namespace priorlens
