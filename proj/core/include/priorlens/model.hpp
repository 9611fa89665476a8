#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "priorlens/rng.hpp"
#include "priorlens/tensor.hpp"

namespace priorlens {

/// One observation. Covariate-free models use x alone (a 1-vector for scalar
/// data); regression samples carry the input vector and a response.
struct Sample {
  Vec x;
  double y = 0.0;
  bool has_response = false;

  static Sample scalar(double value) {
    Sample s;
    s.x = Vec::Constant(1, value);
    return s;
  }
  static Sample regression(Vec input, double response) {
    Sample s;
    s.x = std::move(input);
    s.y = response;
    s.has_response = true;
    return s;
  }
};

using Data = std::vector<Sample>;

/// Parameterized-prior coordinates with display labels for reporting.
struct Hyper {
  std::vector<double> values;
  std::vector<std::string> labels;
};

/// Model-side expectations at a parameter point (realizable case):
///   L2  = E[-d2 log p]      (also equals E[grad x grad] there, not stored twice)
///   L3  = E[-d3 log p]
///   F21 = E[d2 log p x d1 log p]   (symmetric in the first index pair)
struct SelfExpectations {
  SymMatrix L2;
  SymTensor3 L3;
  SymTensor3 F21;
};

/// A parametric sampling model p(sample | w) with its log-density derivative
/// stack. All derivative callbacks are with respect to w.
class ModelFamily {
 public:
  virtual ~ModelFamily() = default;

  virtual int param_dim() const = 0;
  virtual double log_density(const Sample& s, const Vec& w) const = 0;
  virtual Vec grad_log_density(const Sample& s, const Vec& w) const = 0;
  virtual SymMatrix hess_log_density(const Sample& s, const Vec& w) const = 0;
  virtual SymTensor3 third_log_density(const Sample& s, const Vec& w) const = 0;

  /// Analytic self-expectations at w when the family provides them. Regression
  /// models condition on the observed inputs and therefore receive the data;
  /// covariate-free models ignore it. Empty when no closed form exists.
  virtual std::optional<SelfExpectations> self_expectations(
      const Vec& w, const Data& data) const {
    (void)w;
    (void)data;
    return std::nullopt;
  }

  /// True when the family can draw fresh observations at a given w.
  virtual bool has_sampler() const { return false; }

  /// Draws one observation from p(. | w). Conditional models take covariates
  /// from `shape`; covariate-free models ignore it.
  virtual Sample sample_from(const Sample& shape, const Vec& w, Rng& rng) const;
};

/// A prior family phi(w | h) relative to a fixed base prior phi0(w). The ratio
/// callbacks describe log phi (candidate over base); the base callbacks
/// describe log phi0 itself, which enters the empirical loss.
class PriorFamily {
 public:
  virtual ~PriorFamily() = default;

  virtual int hyper_dim() const = 0;

  virtual double log_ratio(const Vec& w, const Hyper& h) const = 0;
  virtual Vec grad_log_ratio(const Vec& w, const Hyper& h) const = 0;
  virtual SymMatrix hess_log_ratio(const Vec& w, const Hyper& h) const = 0;

  virtual double log_base(const Vec& w) const = 0;
  virtual Vec grad_log_base(const Vec& w) const = 0;
  virtual SymMatrix hess_log_base(const Vec& w) const = 0;
  virtual SymTensor3 third_log_base(const Vec& w) const = 0;

  /// log of the total mass of the unnormalized prior phi(w|h) phi0(w), when
  /// finite and known in closed form. Empty for improper hypers.
  virtual std::optional<double> log_normalizer(const Hyper& h) const {
    (void)h;
    return std::nullopt;
  }
};

/// One probe location for the finite-difference diagnostics.
struct ProbePoint {
  Sample sample;
  Vec w;
  Hyper h;
};

struct DiagnosticsEntry {
  std::string what;
  double max_err;  // worst |analytic - reference| / (1 + |reference|)
  bool pass;
};

struct DiagnosticsReport {
  std::vector<DiagnosticsEntry> entries;
  bool pass;
};

/// Central-difference check of every derivative callback at each probe, step
/// 1e-5 * (1 + |coordinate|), pass threshold 1e-4 per entry. Also verifies the
/// density normalization (integral of p over the scalar observable, quadrature
/// order 64) to 1e-10.
DiagnosticsReport check_derivatives(const ModelFamily& model,
                                    const PriorFamily& prior,
                                    const std::vector<ProbePoint>& probes);

}  // namespace priorlens
