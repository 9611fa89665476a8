#pragma once

#include <Eigen/Dense>
#include <vector>

#include "priorlens/errors.hpp"

namespace priorlens {

using Vec = Eigen::VectorXd;

/// Dense symmetric matrix. Writes mirror both triangles so the symmetry
/// invariant holds by construction.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim) : m_(Eigen::MatrixXd::Zero(dim, dim)) {}

  /// Wraps a dense matrix, checking symmetry to a relative tolerance.
  static SymMatrix from_dense(const Eigen::MatrixXd& m, double rel_tol = 1e-12);

  static SymMatrix identity(int dim);
  static SymMatrix diagonal(const Vec& d);

  int dim() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  void set(int i, int j, double v) { m_(i, j) = m_(j, i) = v; }
  void add(int i, int j, double v);

  const Eigen::MatrixXd& mat() const { return m_; }
  double trace() const { return m_.trace(); }

  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix operator-(const SymMatrix& o) const;
  SymMatrix scaled(double a) const;

 private:
  Eigen::MatrixXd m_;
};

/// Symmetry class of a rank-3 tensor: fully symmetric (third-derivative case)
/// or symmetric in the first index pair only (hessian-times-gradient case).
enum class Sym3 { Full, FirstPair };

/// Dense d x d x d tensor with a declared symmetry class. Storage is the full
/// cube; entries are written raw and the class is checked on demand.
class SymTensor3 {
 public:
  SymTensor3() = default;
  SymTensor3(int dim, Sym3 sym);

  int dim() const { return dim_; }
  Sym3 sym() const { return sym_; }

  double operator()(int i, int j, int k) const { return v_[idx(i, j, k)]; }
  void set(int i, int j, int k, double x) { v_[idx(i, j, k)] = x; }
  void add(int i, int j, int k, double x) { v_[idx(i, j, k)] += x; }
  void scale(double a);

  /// True if the stored entries satisfy the declared symmetry class.
  bool symmetry_holds(double abs_tol = 1e-12) const;

 private:
  std::size_t idx(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * dim_ + j) * dim_ + k;
  }
  int dim_ = 0;
  Sym3 sym_ = Sym3::Full;
  std::vector<double> v_;
};

/// Contraction templates over two symmetric matrices and a rank-3 tensor.
///   BridgedPair:  out_a = sum_{bcd} J_ab * K_cd * T(b, d, c)
///   AdjacentPair: out_a = sum_{bcd} J_ab * K_cd * T(b, c, d)
/// For symmetric K the two coincide; both are kept because they mirror the
/// two index layouts the relation's linear coefficient is written in.
enum class ContractionPattern { BridgedPair, AdjacentPair };

/// Inverse of a symmetric positive definite matrix via Cholesky.
/// Throws SingularMatrix if a pivot falls below 1e-12 * trace(m) / d.
SymMatrix invert_spd(const SymMatrix& m);

/// J^{ab} u_a v_b.
double quad_form(const SymMatrix& j, const Vec& u, const Vec& v);

/// Applies one of the enumerated contraction templates.
Vec contract_JJT(const SymMatrix& j, const SymMatrix& k, const SymTensor3& t,
                 ContractionPattern pattern);

/// J * F * J (the sandwich appearing in the curvature coefficient).
SymMatrix sandwich(const SymMatrix& j, const SymMatrix& f);

/// sum_{ab} A_ab B_ab = tr(A * B) for symmetric A, B.
double trace_product(const SymMatrix& a, const SymMatrix& b);

}  // namespace priorlens
