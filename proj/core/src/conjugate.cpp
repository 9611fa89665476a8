#include "priorlens/conjugate.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <limits>

#include "priorlens/errors.hpp"

namespace priorlens {

namespace {
const double kLog2Pi = std::log(2.0 * M_PI);
}

NormalHyper NormalHyper::from_hyper(const Hyper& h) {
  if (h.values.size() != 3) {
    throw DimMismatch("NormalHyper: expected 3 hyper coordinates");
  }
  return {h.values[0], h.values[1], h.values[2]};
}

RidgeHyper RidgeHyper::from_hyper(const Hyper& h) {
  if (h.values.size() != 1) {
    throw DimMismatch("RidgeHyper: expected 1 hyper coordinate");
  }
  return {h.values[0]};
}

NormalSuffStats NormalSuffStats::from_data(const Data& data) {
  NormalSuffStats s;
  s.n = static_cast<double>(data.size());
  for (const Sample& p : data) {
    const double x = p.x(0);
    s.sum_x += x;
    s.sum_x2 += x * x;
  }
  return s;
}

RidgeSuffStats RidgeSuffStats::from_data(const Data& data) {
  if (data.empty()) throw OutOfDomain("RidgeSuffStats: empty data");
  const int d = static_cast<int>(data.front().x.size());
  RidgeSuffStats s;
  s.n = static_cast<double>(data.size());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
  s.xty = Vec::Zero(d);
  for (const Sample& p : data) {
    if (!p.has_response || p.x.size() != d) {
      throw DimMismatch("RidgeSuffStats: inconsistent regression sample");
    }
    g += p.x * p.x.transpose();
    s.xty += p.y * p.x;
    s.yty += p.y * p.y;
  }
  s.gram = SymMatrix::from_dense(g, 1e-8);
  return s;
}

// Shared kernel: both the with-extra and the plain partition function go
// through this one expression sequence so that the alpha = 0 values coincide
// bit for bit.
static double normal_log_Z_impl(const NormalSuffStats& st,
                                const NormalHyper& h, double X, double alpha) {
  const double a = alpha + h.lambda + st.n;
  const double b = alpha * X + st.sum_x;
  const double c = h.mu + (alpha + st.n + 1.0) / 2.0;
  if (!(a > 0.0)) throw OutOfDomain("normal_log_Z: a(alpha) <= 0");
  if (!(c > 0.0)) throw OutOfDomain("normal_log_Z: c(alpha) <= 0");
  const double d =
      0.5 * (alpha * X * X + st.sum_x2 - b * b / a + h.epsilon);
  if (!(d > 0.0)) throw OutOfDomain("normal_log_Z: d(alpha) <= 0");
  return -0.5 * (st.n + alpha - 1.0) * kLog2Pi - 0.5 * std::log(a) -
         c * std::log(d) + std::lgamma(c);
}

double normal_log_Z(const NormalSuffStats& stats, const NormalHyper& h,
                    std::optional<double> extra_x, double alpha) {
  if (!extra_x && alpha != 0.0) {
    throw OutOfDomain("normal_log_Z: alpha != 0 requires the extra point");
  }
  return normal_log_Z_impl(stats, h, extra_x.value_or(0.0), alpha);
}

void normal_log_Z_dalpha(const NormalSuffStats& stats, const NormalHyper& h,
                         double extra_x, double* d1, double* d2) {
  const double a0 = h.lambda + stats.n;
  const double b0 = stats.sum_x;
  const double c0 = h.mu + (stats.n + 1.0) / 2.0;
  const double d0 = 0.5 * (stats.sum_x2 - b0 * b0 / a0 + h.epsilon);
  if (!(a0 > 0.0 && c0 > 0.0 && d0 > 0.0)) {
    throw OutOfDomain("normal_log_Z_dalpha: improper posterior");
  }
  const double res = extra_x - b0 / a0;
  const double dp = 0.5 * res * res;        // d'(0)
  const double dpp = -res * res / a0;       // d''(0)
  if (d1 != nullptr) {
    *d1 = -0.5 * kLog2Pi - 0.5 / a0 - 0.5 * std::log(d0) - c0 * dp / d0 +
          0.5 * boost::math::digamma(c0);
  }
  if (d2 != nullptr) {
    *d2 = 0.5 / (a0 * a0) - dp / d0 - c0 * dpp / d0 +
          c0 * (dp / d0) * (dp / d0) + 0.25 * boost::math::trigamma(c0);
  }
}

std::pair<double, double> normal_posterior_mean(const NormalSuffStats& stats,
                                                const NormalHyper& h) {
  const double a0 = h.lambda + stats.n;
  const double c0 = h.mu + (stats.n + 1.0) / 2.0;
  if (!(a0 > 0.0 && c0 > 0.0)) {
    throw OutOfDomain("normal_posterior_mean: improper posterior");
  }
  const double b0 = stats.sum_x;
  const double d0 = 0.5 * (stats.sum_x2 - b0 * b0 / a0 + h.epsilon);
  if (!(d0 > 0.0)) {
    throw OutOfDomain("normal_posterior_mean: scale integral improper");
  }
  return {b0 / a0, c0 / d0};
}

Vec normal_posterior_draw(const NormalSuffStats& stats, const NormalHyper& h,
                          Rng& rng) {
  const auto [m_bar, s_bar] = normal_posterior_mean(stats, h);
  (void)s_bar;
  const double a0 = h.lambda + stats.n;
  const double c0 = h.mu + (stats.n + 1.0) / 2.0;
  const double d0 =
      0.5 * (stats.sum_x2 - stats.sum_x * stats.sum_x / a0 + h.epsilon);
  const double s = rng.gamma(c0, d0);
  const double m = m_bar + rng.normal() / std::sqrt(s * a0);
  Vec w(2);
  w << m, s;
  return w;
}

double ridge_log_Z(const RidgeSuffStats& stats, const RidgeHyper& h,
                   double sigma, const Sample* extra, double alpha) {
  if (extra == nullptr && alpha != 0.0) {
    throw OutOfDomain("ridge_log_Z: alpha != 0 requires the extra point");
  }
  const int d = stats.gram.dim();
  const double s2 = sigma * sigma;
  Eigen::MatrixXd A = stats.gram.mat();
  A.diagonal().array() += s2 * h.lambda;
  Vec b = stats.xty;
  double e = stats.yty;
  if (extra != nullptr) {
    if (!extra->has_response || extra->x.size() != d) {
      throw DimMismatch("ridge_log_Z: bad extra sample");
    }
    A += alpha * extra->x * extra->x.transpose();
    b += alpha * extra->y * extra->x;
    e += alpha * extra->y * extra->y;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrix("ridge_log_Z: posterior precision not PD");
  }
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  const double quad = b.dot(llt.solve(b));
  const double log_2pi_s2 = std::log(2.0 * M_PI * s2);
  return 0.5 * d * log_2pi_s2 + (quad - e) / (2.0 * s2) -
         0.5 * (stats.n + alpha) * log_2pi_s2 - 0.5 * logdet;
}

Vec ridge_posterior_mean(const RidgeSuffStats& stats, const RidgeHyper& h,
                         double sigma) {
  Eigen::MatrixXd A = stats.gram.mat();
  A.diagonal().array() += sigma * sigma * h.lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrix("ridge_posterior_mean: precision not PD");
  }
  return llt.solve(stats.xty);
}

Vec ridge_posterior_draw(const RidgeSuffStats& stats, const RidgeHyper& h,
                         double sigma, Rng& rng) {
  const int d = stats.gram.dim();
  Eigen::MatrixXd A = stats.gram.mat();
  A.diagonal().array() += sigma * sigma * h.lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrix("ridge_posterior_draw: precision not PD");
  }
  const Vec mean = llt.solve(stats.xty);
  Vec z(d);
  for (int i = 0; i < d; ++i) z(i) = rng.normal();
  // cov = sigma^2 A^{-1} = sigma^2 L^{-T} L^{-1}
  const Vec u = llt.matrixU().solve(z);
  return mean + sigma * u;
}

// ---------------------------------------------------------------------------
// Normal evaluator

NormalExactEvaluator::NormalExactEvaluator(const Data& data,
                                           const NormalHyper& h)
    : NormalExactEvaluator(NormalSuffStats::from_data(data), h) {}

NormalExactEvaluator::NormalExactEvaluator(const NormalSuffStats& stats,
                                           const NormalHyper& h)
    : stats_(stats), h_(h) {
  auto consts = [&](double alpha) {
    AlphaConsts k;
    k.alpha = alpha;
    k.a = alpha + h_.lambda + stats_.n;
    k.c = h_.mu + (alpha + stats_.n + 1.0) / 2.0;
    if (!(k.a > 0.0 && k.c > 0.0)) {
      throw OutOfDomain("NormalExactEvaluator: improper alpha-integral");
    }
    k.base = -0.5 * (stats_.n + alpha - 1.0) * kLog2Pi -
             0.5 * std::log(k.a) + std::lgamma(k.c);
    return k;
  };
  minus_ = consts(-1.0);
  zero_ = consts(0.0);
  plus_ = consts(1.0);
  lz0_ = lz_at(0.0, zero_);

  a0_ = zero_.a;
  b0_ = stats_.sum_x;
  c0_ = zero_.c;
  d0_ = 0.5 * (stats_.sum_x2 - b0_ * b0_ / a0_ + h_.epsilon);
  if (!(d0_ > 0.0)) {
    throw OutOfDomain("NormalExactEvaluator: scale integral improper");
  }
  digamma_c0_ = boost::math::digamma(c0_);
  trigamma_c0_ = boost::math::trigamma(c0_);
}

double NormalExactEvaluator::lz_at(double x, const AlphaConsts& k) const {
  const double b = k.alpha * x + stats_.sum_x;
  const double d =
      0.5 * (k.alpha * x * x + stats_.sum_x2 - b * b / k.a + h_.epsilon);
  if (!(d > 0.0)) throw OutOfDomain("NormalExactEvaluator: d(alpha) <= 0");
  return k.base - k.c * std::log(d);
}

double NormalExactEvaluator::log_expect_alpha(const Sample& s,
                                              double alpha) const {
  const double x = s.x(0);
  if (alpha == -1.0) return lz_at(x, minus_) - lz0_;
  if (alpha == 0.0) return lz_at(x, zero_) - lz0_;
  if (alpha == 1.0) return lz_at(x, plus_) - lz0_;
  AlphaConsts k;
  k.alpha = alpha;
  k.a = alpha + h_.lambda + stats_.n;
  k.c = h_.mu + (alpha + stats_.n + 1.0) / 2.0;
  if (!(k.a > 0.0 && k.c > 0.0)) {
    throw OutOfDomain("NormalExactEvaluator: improper alpha-integral");
  }
  k.base = -0.5 * (stats_.n + alpha - 1.0) * kLog2Pi - 0.5 * std::log(k.a) +
           std::lgamma(k.c);
  return lz_at(x, k) - lz0_;
}

double NormalExactEvaluator::dalpha_at0(const Sample& s) const {
  const double res = s.x(0) - b0_ / a0_;
  const double dp = 0.5 * res * res;
  return -0.5 * kLog2Pi - 0.5 / a0_ - 0.5 * std::log(d0_) - c0_ * dp / d0_ +
         0.5 * digamma_c0_;
}

double NormalExactEvaluator::d2alpha_at0(const Sample& s) const {
  const double res = s.x(0) - b0_ / a0_;
  const double dp = 0.5 * res * res;
  const double dpp = -res * res / a0_;
  return 0.5 / (a0_ * a0_) - dp / d0_ - c0_ * dpp / d0_ +
         c0_ * (dp / d0_) * (dp / d0_) + 0.25 * trigamma_c0_;
}

Vec NormalExactEvaluator::posterior_mean() const {
  Vec w(2);
  w << b0_ / a0_, c0_ / d0_;
  return w;
}

// ---------------------------------------------------------------------------
// Ridge evaluator

RidgeExactEvaluator::RidgeExactEvaluator(const Data& data, const RidgeHyper& h,
                                         double sigma)
    : stats_(RidgeSuffStats::from_data(data)), h_(h), sigma_(sigma) {
  const int d = stats_.gram.dim();
  Eigen::MatrixXd A = stats_.gram.mat();
  A.diagonal().array() += sigma * sigma * h.lambda;
  a0_inv_ = invert_spd(SymMatrix::from_dense(A, 1e-8));
  mean_ = a0_inv_.mat() * stats_.xty;
  lz0_ = ridge_log_Z(stats_, h_, sigma_, nullptr, 0.0);
  log_2pi_s2_ = std::log(2.0 * M_PI * sigma * sigma);
  (void)d;
}

void RidgeExactEvaluator::leverage(const Sample& s, double* t,
                                   double* r) const {
  if (!s.has_response || s.x.size() != stats_.gram.dim()) {
    throw DimMismatch("RidgeExactEvaluator: bad sample");
  }
  *t = mean_.dot(s.x);
  *r = s.x.dot(a0_inv_.mat() * s.x);
}

double RidgeExactEvaluator::log_expect_alpha(const Sample& s,
                                             double alpha) const {
  double t, r;
  leverage(s, &t, &r);
  const double den = 1.0 + alpha * r;
  if (!(den > 0.0)) {
    throw OutOfDomain("RidgeExactEvaluator: alpha-downdate not PD");
  }
  const double Y = s.y;
  const double s2 = sigma_ * sigma_;
  const double corr = t + alpha * Y * r;
  const double bab =
      2.0 * alpha * Y * t + alpha * alpha * Y * Y * r - alpha * corr * corr / den;
  return (bab - alpha * Y * Y) / (2.0 * s2) - 0.5 * alpha * log_2pi_s2_ -
         0.5 * std::log1p(alpha * r);
}

double RidgeExactEvaluator::dalpha_at0(const Sample& s) const {
  double t, r;
  leverage(s, &t, &r);
  const double res = s.y - t;
  return -res * res / (2.0 * sigma_ * sigma_) - 0.5 * log_2pi_s2_ - 0.5 * r;
}

double RidgeExactEvaluator::d2alpha_at0(const Sample& s) const {
  double t, r;
  leverage(s, &t, &r);
  const double res = s.y - t;
  return r * res * res / (sigma_ * sigma_) + 0.5 * r * r;
}

std::pair<double, double> RidgeExactEvaluator::predictive_moments(
    const Vec& x) const {
  const double t = mean_.dot(x);
  const double r = x.dot(a0_inv_.mat() * x);
  return {t, sigma_ * sigma_ * (1.0 + r)};
}

// ---------------------------------------------------------------------------
// Generators

Data generate_normal_data(double true_mean, double true_sd, std::size_t n,
                          Rng& rng) {
  if (n == 0) throw OutOfDomain("generate_normal_data: n must be >= 1");
  Data data;
  data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    data.push_back(Sample::scalar(true_mean + true_sd * rng.normal()));
  }
  return data;
}

Data generate_ridge_data(const Vec& a0, const Vec& w0, double sigma,
                         std::size_t n, Rng& rng) {
  if (n == 0) throw OutOfDomain("generate_ridge_data: n must be >= 1");
  if (a0.size() != w0.size()) {
    throw DimMismatch("generate_ridge_data: a0 and w0 lengths differ");
  }
  if (!(sigma > 0.0)) throw OutOfDomain("generate_ridge_data: sigma <= 0");
  const int d = static_cast<int>(a0.size());
  Data data;
  data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec x(d);
    for (int k = 0; k < d; ++k) x(k) = a0(k) + rng.normal();
    const double y = w0.dot(x) + sigma * rng.normal();
    data.push_back(Sample::regression(std::move(x), y));
  }
  return data;
}

// ---------------------------------------------------------------------------
// Model families

namespace {

class NormalModel final : public ModelFamily {
 public:
  int param_dim() const override { return 2; }

  double log_density(const Sample& p, const Vec& w) const override {
    const double m = w(0), s = w(1);
    if (!(s > 0.0)) return -std::numeric_limits<double>::infinity();
    const double res = p.x(0) - m;
    return 0.5 * std::log(s) - 0.5 * kLog2Pi - 0.5 * s * res * res;
  }

  Vec grad_log_density(const Sample& p, const Vec& w) const override {
    const double m = w(0), s = w(1);
    if (!(s > 0.0)) throw OutOfDomain("NormalModel: precision <= 0");
    const double res = p.x(0) - m;
    Vec g(2);
    g << s * res, 0.5 / s - 0.5 * res * res;
    return g;
  }

  SymMatrix hess_log_density(const Sample& p, const Vec& w) const override {
    const double m = w(0), s = w(1);
    if (!(s > 0.0)) throw OutOfDomain("NormalModel: precision <= 0");
    const double res = p.x(0) - m;
    SymMatrix h(2);
    h.set(0, 0, -s);
    h.set(0, 1, res);
    h.set(1, 1, -0.5 / (s * s));
    return h;
  }

  SymTensor3 third_log_density(const Sample&, const Vec& w) const override {
    const double s = w(1);
    if (!(s > 0.0)) throw OutOfDomain("NormalModel: precision <= 0");
    SymTensor3 t(2, Sym3::Full);
    t.set(0, 0, 1, -1.0);
    t.set(0, 1, 0, -1.0);
    t.set(1, 0, 0, -1.0);
    t.set(1, 1, 1, 1.0 / (s * s * s));
    return t;
  }

  std::optional<SelfExpectations> self_expectations(
      const Vec& w, const Data&) const override {
    const double s = w(1);
    if (!(s > 0.0)) throw OutOfDomain("NormalModel: precision <= 0");
    SelfExpectations se;
    Vec diag(2);
    diag << s, 0.5 / (s * s);
    se.L2 = SymMatrix::diagonal(diag);
    se.L3 = SymTensor3(2, Sym3::Full);
    se.L3.set(0, 0, 1, 1.0);
    se.L3.set(0, 1, 0, 1.0);
    se.L3.set(1, 0, 0, 1.0);
    se.L3.set(1, 1, 1, -1.0 / (s * s * s));
    se.F21 = SymTensor3(2, Sym3::FirstPair);
    se.F21.set(0, 1, 0, 1.0);
    se.F21.set(1, 0, 0, 1.0);
    return se;
  }

  bool has_sampler() const override { return true; }

  Sample sample_from(const Sample&, const Vec& w, Rng& rng) const override {
    const double m = w(0), s = w(1);
    if (!(s > 0.0)) throw OutOfDomain("NormalModel: precision <= 0");
    return Sample::scalar(m + rng.normal() / std::sqrt(s));
  }
};

class RidgeModel final : public ModelFamily {
 public:
  RidgeModel(double sigma, int dim) : sigma_(sigma), dim_(dim) {
    if (!(sigma > 0.0)) throw OutOfDomain("RidgeModel: sigma <= 0");
    if (dim < 1) throw OutOfDomain("RidgeModel: dim < 1");
  }

  int param_dim() const override { return dim_; }

  double log_density(const Sample& p, const Vec& w) const override {
    check(p);
    const double res = p.y - w.dot(p.x);
    const double s2 = sigma_ * sigma_;
    return -0.5 * std::log(2.0 * M_PI * s2) - 0.5 * res * res / s2;
  }

  Vec grad_log_density(const Sample& p, const Vec& w) const override {
    check(p);
    const double res = p.y - w.dot(p.x);
    return (res / (sigma_ * sigma_)) * p.x;
  }

  SymMatrix hess_log_density(const Sample& p, const Vec&) const override {
    check(p);
    return SymMatrix::from_dense(
        (-1.0 / (sigma_ * sigma_)) * (p.x * p.x.transpose()), 1e-8);
  }

  SymTensor3 third_log_density(const Sample& p, const Vec&) const override {
    check(p);
    return SymTensor3(dim_, Sym3::Full);
  }

  std::optional<SelfExpectations> self_expectations(
      const Vec&, const Data& data) const override {
    if (data.empty()) return std::nullopt;  // nothing to condition on
    SelfExpectations se;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim_, dim_);
    for (const Sample& p : data) {
      check(p);
      g += p.x * p.x.transpose();
    }
    const double n = static_cast<double>(data.size());
    se.L2 = SymMatrix::from_dense(g / (n * sigma_ * sigma_), 1e-8);
    se.L3 = SymTensor3(dim_, Sym3::Full);
    se.F21 = SymTensor3(dim_, Sym3::FirstPair);
    return se;
  }

  bool has_sampler() const override { return true; }

  Sample sample_from(const Sample& shape, const Vec& w,
                     Rng& rng) const override {
    if (shape.x.size() != dim_) {
      throw DimMismatch("RidgeModel: shape covariate dim");
    }
    return Sample::regression(shape.x, w.dot(shape.x) + sigma_ * rng.normal());
  }

 private:
  void check(const Sample& p) const {
    if (!p.has_response || p.x.size() != dim_) {
      throw DimMismatch("RidgeModel: sample is not a regression pair");
    }
  }
  double sigma_;
  int dim_;
};

class NormalPrior final : public PriorFamily {
 public:
  int hyper_dim() const override { return 3; }

  double log_ratio(const Vec& w, const Hyper& h) const override {
    const NormalHyper nh = NormalHyper::from_hyper(h);
    const double m = w(0), s = w(1);
    if (!(s > 0.0)) throw OutOfDomain("NormalPrior: precision <= 0");
    return -0.5 * nh.lambda * s * m * m + nh.mu * std::log(s) -
           0.5 * nh.epsilon * s;
  }

  Vec grad_log_ratio(const Vec& w, const Hyper& h) const override {
    const NormalHyper nh = NormalHyper::from_hyper(h);
    const double m = w(0), s = w(1);
    if (!(s > 0.0)) throw OutOfDomain("NormalPrior: precision <= 0");
    Vec g(2);
    g << -nh.lambda * s * m,
        -0.5 * nh.lambda * m * m + nh.mu / s - 0.5 * nh.epsilon;
    return g;
  }

  SymMatrix hess_log_ratio(const Vec& w, const Hyper& h) const override {
    const NormalHyper nh = NormalHyper::from_hyper(h);
    const double m = w(0), s = w(1);
    if (!(s > 0.0)) throw OutOfDomain("NormalPrior: precision <= 0");
    SymMatrix out(2);
    out.set(0, 0, -nh.lambda * s);
    out.set(0, 1, -nh.lambda * m);
    out.set(1, 1, -nh.mu / (s * s));
    return out;
  }

  double log_base(const Vec&) const override { return 0.0; }
  Vec grad_log_base(const Vec& w) const override { return Vec::Zero(w.size()); }
  SymMatrix hess_log_base(const Vec&) const override { return SymMatrix(2); }
  SymTensor3 third_log_base(const Vec&) const override {
    return SymTensor3(2, Sym3::Full);
  }

  std::optional<double> log_normalizer(const Hyper& h) const override {
    const NormalHyper nh = NormalHyper::from_hyper(h);
    if (!nh.proper()) return std::nullopt;
    return 0.5 * std::log(2.0 * M_PI / nh.lambda) -
           (nh.mu + 0.5) * std::log(0.5 * nh.epsilon) +
           std::lgamma(nh.mu + 0.5);
  }
};

class RidgePrior final : public PriorFamily {
 public:
  explicit RidgePrior(int dim) : dim_(dim) {}

  int hyper_dim() const override { return 1; }

  double log_ratio(const Vec& w, const Hyper& h) const override {
    return -0.5 * RidgeHyper::from_hyper(h).lambda * w.squaredNorm();
  }
  Vec grad_log_ratio(const Vec& w, const Hyper& h) const override {
    return -RidgeHyper::from_hyper(h).lambda * w;
  }
  SymMatrix hess_log_ratio(const Vec&, const Hyper& h) const override {
    return SymMatrix::identity(dim_).scaled(-RidgeHyper::from_hyper(h).lambda);
  }

  double log_base(const Vec&) const override { return 0.0; }
  Vec grad_log_base(const Vec& w) const override { return Vec::Zero(w.size()); }
  SymMatrix hess_log_base(const Vec&) const override {
    return SymMatrix(dim_);
  }
  SymTensor3 third_log_base(const Vec&) const override {
    return SymTensor3(dim_, Sym3::Full);
  }

  std::optional<double> log_normalizer(const Hyper& h) const override {
    const RidgeHyper rh = RidgeHyper::from_hyper(h);
    if (!rh.proper()) return std::nullopt;
    return 0.5 * dim_ * std::log(2.0 * M_PI / rh.lambda);
  }

 private:
  int dim_;
};

}  // namespace

std::shared_ptr<const ModelFamily> model_family_normal() {
  return std::make_shared<NormalModel>();
}

std::shared_ptr<const ModelFamily> model_family_ridge(double sigma, int dim) {
  return std::make_shared<RidgeModel>(sigma, dim);
}

std::shared_ptr<const PriorFamily> prior_family_normal() {
  return std::make_shared<NormalPrior>();
}

std::shared_ptr<const PriorFamily> prior_family_ridge(int dim) {
  return std::make_shared<RidgePrior>(dim);
}

}  // namespace priorlens
