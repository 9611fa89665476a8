#include "priorlens/estimate.hpp"

#include <cmath>
#include <limits>

#include "priorlens/errors.hpp"

namespace priorlens {

double empirical_loss(const ModelFamily& model, const PriorFamily& prior,
                      const Data& data, const Vec& w) {
  const double n = static_cast<double>(data.size());
  double acc = 0.0;
  for (const Sample& s : data) acc += model.log_density(s, w);
  acc += prior.log_base(w);
  return -acc / n;
}

namespace {

Vec loss_grad(const ModelFamily& model, const PriorFamily& prior,
              const Data& data, const Vec& w) {
  const double n = static_cast<double>(data.size());
  Vec g = Vec::Zero(w.size());
  for (const Sample& s : data) g += model.grad_log_density(s, w);
  g += prior.grad_log_base(w);
  return -g / n;
}

SymMatrix loss_hess(const ModelFamily& model, const PriorFamily& prior,
                    const Data& data, const Vec& w) {
  const double n = static_cast<double>(data.size());
  const int d = static_cast<int>(w.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  for (const Sample& s : data) h += model.hess_log_density(s, w).mat();
  h += prior.hess_log_base(w).mat();
  return SymMatrix::from_dense(-h / n);
}

}  // namespace

Vec find_map(const ModelFamily& model, const PriorFamily& prior,
             const Data& data, const Vec& init) {
  if (data.empty()) throw OutOfDomain("find_map: empty data");
  constexpr int kMaxIter = 200;
  constexpr int kMaxHalvings = 40;
  constexpr double kArmijo = 1e-4;

  Vec w = init;
  double L = empirical_loss(model, prior, data, w);
  if (!std::isfinite(L)) {
    throw NotInterior("find_map: loss not finite at the initial point");
  }
  for (int iter = 0; iter < kMaxIter; ++iter) {
    const Vec g = loss_grad(model, prior, data, w);
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    if (gnorm <= 1e-10 * (1.0 + std::abs(L))) return w;

    Vec dir;
    bool newton_ok = true;
    try {
      const SymMatrix H = loss_hess(model, prior, data, w);
      dir = -(invert_spd(H).mat() * g);
    } catch (const SingularMatrix&) {
      newton_ok = false;
    }
    if (!newton_ok || !dir.allFinite() || dir.dot(g) >= 0.0) {
      dir = -g;  // fall back to steepest descent when curvature is unusable
    }

    const double slope = dir.dot(g);
    // Once the predicted decrease falls below the rounding of the loss
    // itself, backtracking cannot certify progress any more. One free
    // curvature step lands on the float-attainable optimum whenever the
    // quadratic model holds; keep it only if the gradient shrinks.
    if (std::abs(slope) <
        2.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(L))) {
      double gn = gnorm;
      const Vec trial = w + dir;
      const Vec gt = loss_grad(model, prior, data, trial);
      const double gtn = gt.lpNorm<Eigen::Infinity>();
      if (std::isfinite(gtn) && gtn < gn) {
        w = trial;
        gn = gtn;
      }
      if (gn <= 1e-7 * (1.0 + std::abs(L))) return w;
      throw NoConvergence("find_map: stalled above the gradient target");
    }
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings; ++h) {
      const Vec trial = w + step * dir;
      const double Lt = empirical_loss(model, prior, data, trial);
      if (std::isfinite(Lt) && Lt <= L + kArmijo * step * slope) {
        w = trial;
        L = Lt;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      throw NoConvergence("find_map: line search failed to make progress");
    }
  }
  throw NoConvergence("find_map: iteration budget exhausted");
}

EmpiricalTensors assemble_tensors(const ModelFamily& model,
                                  const PriorFamily& prior, const Data& data,
                                  const Vec& w_hat) {
  if (data.empty()) throw OutOfDomain("assemble_tensors: empty data");
  const int d = static_cast<int>(w_hat.size());
  const double n = static_cast<double>(data.size());

  EmpiricalTensors t;
  t.w_hat = w_hat;
  t.n = data.size();

  Eigen::MatrixXd h2 = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd f2 = Eigen::MatrixXd::Zero(d, d);
  SymTensor3 h3(d, Sym3::Full), f21(d, Sym3::FirstPair);
  for (const Sample& s : data) {
    const Vec g = model.grad_log_density(s, w_hat);
    const SymMatrix H = model.hess_log_density(s, w_hat);
    const SymTensor3 T = model.third_log_density(s, w_hat);
    h2 += H.mat();
    f2 += g * g.transpose();
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c) {
          h3.add(a, b, c, T(a, b, c));
          f21.add(a, b, c, H.mat()(a, b) * g(c));
        }
  }
  h2 += prior.hess_log_base(w_hat).mat();
  const SymTensor3 bT = prior.third_log_base(w_hat);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) h3.add(a, b, c, bT(a, b, c));

  t.loss_hess = SymMatrix::from_dense(-h2 / n);
  t.loss_third = h3;
  t.loss_third.scale(-1.0 / n);
  t.inv_hess = invert_spd(t.loss_hess);
  t.score_outer = SymMatrix::from_dense(f2 / n);
  t.hess_score = f21;
  t.hess_score.scale(1.0 / n);
  return t;
}

}  // namespace priorlens
