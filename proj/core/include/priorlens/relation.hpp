#pragma once

#include <cstddef>
#include <functional>

#include "priorlens/estimate.hpp"
#include "priorlens/model.hpp"
#include "priorlens/rng.hpp"
#include "priorlens/tensor.hpp"

namespace priorlens {

/// Which expectation the coefficients were assembled under.
enum class RelationFlavor { Empirical, SelfAverage, Average };

/// Coefficients of the quadratic form in the log prior ratio:
///   value(phi) = quad : (g x g) + hess : H + grad . g
/// where g and H are the gradient and Hessian of log phi at the estimator.
struct RelationCoefficients {
  SymMatrix quad;   // contracts grad log phi twice
  SymMatrix hess;   // contracts the log phi Hessian
  Vec grad;         // contracts grad log phi once
  RelationFlavor flavor = RelationFlavor::Empirical;
};

/// Coefficients from the empirical loss derivatives at w_hat.
RelationCoefficients relation_coefficients(const EmpiricalTensors& t);

/// Coefficients under model self-expectations at w (realizable case). Uses the
/// family's analytic expectations when present; otherwise falls back to Monte
/// Carlo with mc_budget fresh draws (requires a sampler and rng). The identity
/// between the score covariance and the loss curvature collapses the curvature
/// coefficient to exactly twice the quadratic one on this path.
RelationCoefficients self_average_coefficients(const ModelFamily& model,
                                               const Vec& w, const Data& data,
                                               std::size_t mc_budget = 100000,
                                               Rng* rng = nullptr);

/// Coefficients under caller-supplied truth expectations (general case).
RelationCoefficients average_coefficients(const SymMatrix& L2_bar,
                                          const SymTensor3& L3_bar,
                                          const SymMatrix& F2_bar,
                                          const SymTensor3& F21_bar);

/// Evaluates the quadratic form at (g, H) = (grad, hess) of the log ratio.
double relation_value(const RelationCoefficients& c, const Vec& g,
                      const SymMatrix& H);

/// Second-order criteria: the relation value scaled by n^2. waicr takes the
/// empirical-flavor value, waicrs the self-average one.
double waicr(double relation_val, std::size_t n);
double waicrs(double relation_val, std::size_t n);

/// Closed-form minimizer of the self-average relation over the Gaussian
/// shrinkage family exp(-lambda |w|^2 / 2): trace(J) / (w_hat' J w_hat).
/// Throws DegenerateEstimate when the denominator is <= 1e-14.
double optimal_ridge_lambda(const EmpiricalTensors& t);

struct BootstrapEstimate {
  double estimate;   // mean over replications
  double std_error;  // sample std / sqrt(replications)
  std::size_t replications;
};

/// Replicates criterion(sampler(n)) and reports mean and Monte Carlo error.
BootstrapEstimate bootstrap_relation(
    const std::function<double(const Data&)>& criterion,
    const std::function<Data(std::size_t, Rng&)>& sampler, std::size_t n,
    std::size_t replications, Rng& rng);

}  // namespace priorlens
