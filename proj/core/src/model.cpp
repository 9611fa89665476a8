#include "priorlens/model.hpp"

#include <cmath>

#include "priorlens/errors.hpp"
#include "priorlens/quadrature.hpp"

namespace priorlens {

Sample ModelFamily::sample_from(const Sample&, const Vec&, Rng&) const {
  throw NoExpectationPath("ModelFamily::sample_from not provided");
}

namespace {

constexpr double kPassTol = 1e-4;

double fd_step(double coord) { return 1e-5 * (1.0 + std::abs(coord)); }

double rel_err(double got, double ref) {
  return std::abs(got - ref) / (1.0 + std::abs(ref));
}

// Central difference of a scalar function of w along coordinate k.
template <typename F>
double central(F&& f, const Vec& w, int k) {
  const double h = fd_step(w(k));
  Vec wp = w, wm = w;
  wp(k) += h;
  wm(k) -= h;
  return (f(wp) - f(wm)) / (2.0 * h);
}

struct Check {
  std::string what;
  double max_err = 0.0;

  void record(double got, double ref) {
    max_err = std::max(max_err, rel_err(got, ref));
  }
};

void push(DiagnosticsReport& rep, Check& c) {
  rep.entries.push_back({c.what, c.max_err, c.max_err <= kPassTol});
}

}  // namespace

DiagnosticsReport check_derivatives(const ModelFamily& model,
                                    const PriorFamily& prior,
                                    const std::vector<ProbePoint>& probes) {
  const int d = model.param_dim();
  DiagnosticsReport rep;
  Check m_grad{"model grad"}, m_hess{"model hess"}, m_third{"model third"};
  Check r_grad{"prior ratio grad"}, r_hess{"prior ratio hess"};
  Check b_grad{"prior base grad"}, b_hess{"prior base hess"},
      b_third{"prior base third"};
  Check norm{"density normalization"};
  const HermiteRule rule = gauss_hermite(64);

  for (const ProbePoint& p : probes) {
    const Vec& w = p.w;
    const Vec g = model.grad_log_density(p.sample, w);
    const SymMatrix H = model.hess_log_density(p.sample, w);
    const SymTensor3 T = model.third_log_density(p.sample, w);
    for (int k = 0; k < d; ++k) {
      m_grad.record(g(k),
                    central([&](const Vec& v) {
                      return model.log_density(p.sample, v);
                    }, w, k));
      for (int j = 0; j < d; ++j) {
        m_hess.record(H.mat()(j, k),
                      central([&](const Vec& v) {
                        return model.grad_log_density(p.sample, v)(j);
                      }, w, k));
        for (int i = 0; i < d; ++i) {
          m_third.record(T(i, j, k),
                         central([&](const Vec& v) {
                           return model.hess_log_density(p.sample, v).mat()(i, j);
                         }, w, k));
        }
      }
    }

    const Vec rg = prior.grad_log_ratio(w, p.h);
    const SymMatrix rH = prior.hess_log_ratio(w, p.h);
    const Vec bg = prior.grad_log_base(w);
    const SymMatrix bH = prior.hess_log_base(w);
    const SymTensor3 bT = prior.third_log_base(w);
    for (int k = 0; k < d; ++k) {
      r_grad.record(rg(k), central([&](const Vec& v) {
                      return prior.log_ratio(v, p.h);
                    }, w, k));
      b_grad.record(bg(k), central([&](const Vec& v) {
                      return prior.log_base(v);
                    }, w, k));
      for (int j = 0; j < d; ++j) {
        r_hess.record(rH.mat()(j, k), central([&](const Vec& v) {
                        return prior.grad_log_ratio(v, p.h)(j);
                      }, w, k));
        b_hess.record(bH.mat()(j, k), central([&](const Vec& v) {
                        return prior.grad_log_base(v)(j);
                      }, w, k));
        for (int i = 0; i < d; ++i) {
          b_third.record(bT(i, j, k), central([&](const Vec& v) {
                           return prior.hess_log_base(v).mat()(i, j);
                         }, w, k));
        }
      }
    }

    // Normalization over the scalar observable: the response for regression
    // samples, the observation itself otherwise. Integrate p against a wide
    // Gaussian envelope centered at a model-typical location.
    {
      auto density_at = [&](double obs) {
        Sample s = p.sample;
        if (s.has_response) {
          s.y = obs;
        } else {
          s.x(0) = obs;
        }
        return std::exp(model.log_density(s, w));
      };
      // Curvature of log p in the observable sets the natural scale. A wide
      // step keeps roundoff negligible and is exact when log p is quadratic
      // in the observable.
      const double obs0 =
          p.sample.has_response ? p.sample.y : p.sample.x(0);
      const double h = 0.5 * (1.0 + std::abs(obs0));
      const double l0 = std::log(density_at(obs0));
      const double lp = std::log(density_at(obs0 + h));
      const double lm = std::log(density_at(obs0 - h));
      const double curv = -(lp - 2.0 * l0 + lm) / (h * h);
      const double sd = (curv > 0.0) ? 1.0 / std::sqrt(curv) : 1.0;
      const double d1 = (lp - lm) / (2.0 * h);
      const double center = obs0 + d1 / std::max(curv, 1e-12);
      // E_{N(center, sd)}[ p / N(center, sd) ] = integral of p.
      const double total = normal_expectation(
          rule, center, sd, [&](double t) {
            const double z = (t - center) / sd;
            const double lognorm =
                -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
            return density_at(t) / std::exp(lognorm);
          });
      norm.max_err = std::max(norm.max_err, std::abs(total - 1.0));
    }
  }

  push(rep, m_grad);
  push(rep, m_hess);
  push(rep, m_third);
  push(rep, r_grad);
  push(rep, r_hess);
  push(rep, b_grad);
  push(rep, b_hess);
  push(rep, b_third);
  rep.entries.push_back({norm.what, norm.max_err, norm.max_err <= 1e-10});
  rep.pass = true;
  for (const auto& e : rep.entries) rep.pass = rep.pass && e.pass;
  return rep;
}

}  // namespace priorlens
