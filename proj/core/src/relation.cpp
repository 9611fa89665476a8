#include "priorlens/relation.hpp"

#include <cmath>

#include "priorlens/errors.hpp"

namespace priorlens {

namespace {

// Shared assembly: A = J/2, B = (J + J F2 J)/2, and the three-term linear
// coefficient. Works for the empirical and the general-average flavors.
RelationCoefficients assemble(const SymMatrix& J, const SymTensor3& L3,
                              const SymMatrix& F2, const SymTensor3& F21,
                              RelationFlavor flavor) {
  RelationCoefficients c;
  c.flavor = flavor;
  c.quad = J.scaled(0.5);
  const SymMatrix jf2j = sandwich(J, F2);
  c.hess = (J + jf2j).scaled(0.5);
  c.grad = contract_JJT(J, J, F21, ContractionPattern::BridgedPair) -
           0.5 * contract_JJT(J, J, L3, ContractionPattern::AdjacentPair) -
           0.5 * contract_JJT(J, jf2j, L3, ContractionPattern::AdjacentPair);
  return c;
}

}  // namespace

RelationCoefficients relation_coefficients(const EmpiricalTensors& t) {
  return assemble(t.inv_hess, t.loss_third, t.score_outer, t.hess_score,
                  RelationFlavor::Empirical);
}

RelationCoefficients self_average_coefficients(const ModelFamily& model,
                                               const Vec& w, const Data& data,
                                               std::size_t mc_budget,
                                               Rng* rng) {
  SelfExpectations se;
  if (auto analytic = model.self_expectations(w, data)) {
    se = *analytic;
  } else if (model.has_sampler() && rng != nullptr) {
    if (mc_budget == 0) {
      throw OutOfDomain("self_average_coefficients: mc_budget must be > 0");
    }
    if (data.empty()) {
      throw OutOfDomain("self_average_coefficients: need covariate shapes");
    }
    const int d = model.param_dim();
    Eigen::MatrixXd l2 = Eigen::MatrixXd::Zero(d, d);
    SymTensor3 l3(d, Sym3::Full), f21(d, Sym3::FirstPair);
    for (std::size_t m = 0; m < mc_budget; ++m) {
      const Sample s =
          model.sample_from(data[m % data.size()], w, *rng);
      const Vec g = model.grad_log_density(s, w);
      const SymMatrix H = model.hess_log_density(s, w);
      const SymTensor3 T = model.third_log_density(s, w);
      l2 -= H.mat();
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          for (int cc = 0; cc < d; ++cc) {
            l3.add(a, b, cc, -T(a, b, cc));
            f21.add(a, b, cc, H.mat()(a, b) * g(cc));
          }
    }
    const double inv = 1.0 / static_cast<double>(mc_budget);
    se.L2 = SymMatrix::from_dense(l2 * inv, 1e-8);
    l3.scale(inv);
    f21.scale(inv);
    se.L3 = l3;
    se.F21 = f21;
  } else {
    throw NoExpectationPath(
        "self_average_coefficients: no analytic expectations and no sampler");
  }

  const SymMatrix J = invert_spd(se.L2);
  RelationCoefficients c;
  c.flavor = RelationFlavor::SelfAverage;
  c.quad = J.scaled(0.5);
  // Score covariance equals loss curvature at the truth, so the curvature
  // coefficient is exactly twice the quadratic one; the same identity merges
  // two of the three linear terms.
  c.hess = c.quad.scaled(2.0);
  c.grad = contract_JJT(J, J, se.F21, ContractionPattern::BridgedPair) -
           contract_JJT(J, J, se.L3, ContractionPattern::AdjacentPair);
  return c;
}

RelationCoefficients average_coefficients(const SymMatrix& L2_bar,
                                          const SymTensor3& L3_bar,
                                          const SymMatrix& F2_bar,
                                          const SymTensor3& F21_bar) {
  return assemble(invert_spd(L2_bar), L3_bar, F2_bar, F21_bar,
                  RelationFlavor::Average);
}

double relation_value(const RelationCoefficients& c, const Vec& g,
                      const SymMatrix& H) {
  if (g.size() != c.quad.dim() || H.dim() != c.quad.dim()) {
    throw DimMismatch("relation_value: operand dims differ");
  }
  return quad_form(c.quad, g, g) + trace_product(c.hess, H) + c.grad.dot(g);
}

double waicr(double relation_val, std::size_t n) {
  const double nn = static_cast<double>(n);
  return relation_val / (nn * nn);
}

double waicrs(double relation_val, std::size_t n) {
  const double nn = static_cast<double>(n);
  return relation_val / (nn * nn);
}

double optimal_ridge_lambda(const EmpiricalTensors& t) {
  const double quad = quad_form(t.inv_hess, t.w_hat, t.w_hat);
  if (quad <= 1e-14) {
    throw DegenerateEstimate(
        "optimal_ridge_lambda: estimator quadratic form vanishes");
  }
  return t.inv_hess.trace() / quad;
}

BootstrapEstimate bootstrap_relation(
    const std::function<double(const Data&)>& criterion,
    const std::function<Data(std::size_t, Rng&)>& sampler, std::size_t n,
    std::size_t replications, Rng& rng) {
  if (replications < 2) {
    throw OutOfDomain("bootstrap_relation: need at least 2 replications");
  }
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t r = 0; r < replications; ++r) {
    const double v = criterion(sampler(n, rng));
    if (!std::isfinite(v)) {
      throw NonFinite("bootstrap_relation: criterion returned non-finite");
    }
    sum += v;
    sumsq += v * v;
  }
  const double R = static_cast<double>(replications);
  const double mean = sum / R;
  const double var = std::max(0.0, (sumsq - R * mean * mean) / (R - 1.0));
  return {mean, std::sqrt(var / R), replications};
}

}  // namespace priorlens
