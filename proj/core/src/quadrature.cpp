#include "priorlens/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "priorlens/errors.hpp"

namespace priorlens {

HermiteRule gauss_hermite(int order) {
  if (order < 1) throw OutOfDomain("gauss_hermite: order must be >= 1");
  const int n = order;
  // Jacobi matrix for Hermite polynomials: zero diagonal,
  // off-diagonal sqrt(k/2), k = 1..n-1.
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(0.5 * k);
    jac(k, k - 1) = b;
    jac(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  if (es.info() != Eigen::Success) {
    throw NoConvergence("gauss_hermite: eigensolver failed");
  }
  HermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double sqrt_pi = std::sqrt(M_PI);
  for (int k = 0; k < n; ++k) {
    rule.nodes[k] = es.eigenvalues()(k);
    const double v0 = es.eigenvectors()(0, k);
    rule.weights[k] = sqrt_pi * v0 * v0;
  }
  return rule;
}

double normal_expectation(const HermiteRule& rule, double mean, double sd,
                          const std::function<double(double)>& f) {
  const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
  const double scale = std::sqrt(2.0) * sd;
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    acc += rule.weights[k] * f(mean + scale * rule.nodes[k]);
  }
  return acc * inv_sqrt_pi;
}

}  // namespace priorlens
