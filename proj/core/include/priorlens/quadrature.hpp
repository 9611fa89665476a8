#pragma once

#include <functional>
#include <vector>

namespace priorlens {

/// Gauss-Hermite rule: nodes t_k and weights w_k for
/// integral of exp(-t^2) f(t) dt ~ sum_k w_k f(t_k).
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Builds the order-n rule via the Golub-Welsch symmetric tridiagonal
/// eigenproblem. Exact for polynomials up to degree 2n-1.
HermiteRule gauss_hermite(int order);

/// E[f(X)] for X ~ Normal(mean, sd) using the substitution x = mean + sqrt(2) sd t.
double normal_expectation(const HermiteRule& rule, double mean, double sd,
                          const std::function<double(double)>& f);

}  // namespace priorlens
