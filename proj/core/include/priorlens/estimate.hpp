#pragma once

#include <cstddef>

#include "priorlens/model.hpp"
#include "priorlens/tensor.hpp"

namespace priorlens {

/// Derivative summaries of the empirical loss at its minimizer. The loss is
///   L(w) = -(1/n) sum_i log p(X_i|w) - (1/n) log phi0(w),
/// so loss_hess / loss_third carry a sign flip relative to log-density
/// derivatives. score_outer and hess_score average over log p alone.
struct EmpiricalTensors {
  Vec w_hat;
  std::size_t n = 0;
  SymMatrix loss_hess;    // second derivative of L at w_hat
  SymTensor3 loss_third;  // third derivative of L at w_hat
  SymMatrix inv_hess;     // loss_hess^{-1}
  SymMatrix score_outer;  // (1/n) sum grad log p x grad log p
  SymTensor3 hess_score;  // (1/n) sum hess log p x grad log p
};

/// Empirical loss (negative mean log-likelihood plus the base-prior term).
double empirical_loss(const ModelFamily& model, const PriorFamily& prior,
                      const Data& data, const Vec& w);

/// Minimizes the empirical loss by damped Newton iteration with Armijo
/// backtracking. Throws NotInterior when the loss is not finite at init,
/// NoConvergence when the iteration budget runs out.
Vec find_map(const ModelFamily& model, const PriorFamily& prior,
             const Data& data, const Vec& init);

/// Evaluates all loss-derivative summaries at w_hat in one pass.
EmpiricalTensors assemble_tensors(const ModelFamily& model,
                                  const PriorFamily& prior, const Data& data,
                                  const Vec& w_hat);

}  // namespace priorlens
