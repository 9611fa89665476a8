#include "priorlens/tensor.hpp"

#include <cmath>
#include <string>

namespace priorlens {

SymMatrix SymMatrix::from_dense(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw DimMismatch("from_dense: matrix must be square and nonempty");
  }
  const double scale = m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > rel_tol * (1.0 + scale)) {
    throw DimMismatch("from_dense: matrix is not symmetric");
  }
  SymMatrix out(static_cast<int>(m.rows()));
  out.m_ = 0.5 * (m + m.transpose());
  return out;
}

SymMatrix SymMatrix::identity(int dim) {
  SymMatrix out(dim);
  out.m_ = Eigen::MatrixXd::Identity(dim, dim);
  return out;
}

SymMatrix SymMatrix::diagonal(const Vec& d) {
  SymMatrix out(static_cast<int>(d.size()));
  out.m_ = d.asDiagonal();
  return out;
}

void SymMatrix::add(int i, int j, double v) {
  m_(i, j) += v;
  if (i != j) m_(j, i) += v;
}

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
  if (dim() != o.dim()) throw DimMismatch("SymMatrix +: dims differ");
  SymMatrix out(dim());
  out.m_ = m_ + o.m_;
  return out;
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
  if (dim() != o.dim()) throw DimMismatch("SymMatrix -: dims differ");
  SymMatrix out(dim());
  out.m_ = m_ - o.m_;
  return out;
}

SymMatrix SymMatrix::scaled(double a) const {
  SymMatrix out(dim());
  out.m_ = a * m_;
  return out;
}

SymTensor3::SymTensor3(int dim, Sym3 sym)
    : dim_(dim), sym_(sym), v_(static_cast<std::size_t>(dim) * dim * dim, 0.0) {
  if (dim < 1) throw DimMismatch("SymTensor3: dim must be positive");
}

void SymTensor3::scale(double a) {
  for (double& x : v_) x *= a;
}

bool SymTensor3::symmetry_holds(double abs_tol) const {
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      for (int k = 0; k < dim_; ++k) {
        const double x = (*this)(i, j, k);
        if (std::abs(x - (*this)(j, i, k)) > abs_tol) return false;
        if (sym_ == Sym3::Full) {
          if (std::abs(x - (*this)(i, k, j)) > abs_tol) return false;
          if (std::abs(x - (*this)(k, j, i)) > abs_tol) return false;
        }
      }
    }
  }
  return true;
}

SymMatrix invert_spd(const SymMatrix& m) {
  const int d = m.dim();
  const double pivot_floor = 1e-12 * m.trace() / d;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    double diag = m(j, j);
    for (int k = 0; k < j; ++k) diag -= L(j, k) * L(j, k);
    if (!(diag > pivot_floor)) {
      throw SingularMatrix("invert_spd: pivot " + std::to_string(diag) +
                           " below threshold at column " + std::to_string(j));
    }
    L(j, j) = std::sqrt(diag);
    for (int i = j + 1; i < d; ++i) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }
  // m = L L^T, so m^{-1} = L^{-T} L^{-1}; solve against the identity.
  Eigen::MatrixXd inv = L.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(d, d));
  inv = L.transpose().triangularView<Eigen::Upper>().solve(inv);
  return SymMatrix::from_dense(0.5 * (inv + inv.transpose()), 1e-8);
}

double quad_form(const SymMatrix& j, const Vec& u, const Vec& v) {
  if (u.size() != j.dim() || v.size() != j.dim()) {
    throw DimMismatch("quad_form: vector length does not match matrix dim");
  }
  return u.dot(j.mat() * v);
}

Vec contract_JJT(const SymMatrix& j, const SymMatrix& k, const SymTensor3& t,
                 ContractionPattern pattern) {
  const int d = j.dim();
  if (k.dim() != d || t.dim() != d) {
    throw DimMismatch("contract_JJT: operand dims differ");
  }
  // Collapse K against the tensor first, then apply J: out = J * inner.
  Vec inner = Vec::Zero(d);
  switch (pattern) {
    case ContractionPattern::BridgedPair:
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c)
          for (int e = 0; e < d; ++e) inner[b] += k(c, e) * t(b, e, c);
      break;
    case ContractionPattern::AdjacentPair:
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c)
          for (int e = 0; e < d; ++e) inner[b] += k(c, e) * t(b, c, e);
      break;
    default:
      throw UnknownPattern("contract_JJT: unhandled pattern");
  }
  return j.mat() * inner;
}

SymMatrix sandwich(const SymMatrix& j, const SymMatrix& f) {
  if (j.dim() != f.dim()) throw DimMismatch("sandwich: dims differ");
  Eigen::MatrixXd out = j.mat() * f.mat() * j.mat();
  return SymMatrix::from_dense(0.5 * (out + out.transpose()), 1e-8);
}

double trace_product(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw DimMismatch("trace_product: dims differ");
  return a.mat().cwiseProduct(b.mat()).sum();
}

}  // namespace priorlens
