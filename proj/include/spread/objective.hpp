#ifndef SPREAD_OBJECTIVE_HPP
#define SPREAD_OBJECTIVE_HPP

#include <algorithm>
#include <string>

#include <Eigen/Dense>

#include "spread/error.hpp"
#include "spread/linalg.hpp"
#include "spread/manifold.hpp"

namespace spread {

/// Validates an activation batch H (p × N): non-empty and finite.
template <typename Scalar>
void validate_activations(const Matrix<Scalar>& h) {
  if (h.rows() < 1 || h.cols() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "activation batch must have p >= 1 and N >= 1");
  }
  for (Eigen::Index i = 0; i < h.cols(); ++i) {
    if (!h.col(i).allFinite()) {
      throw Error(ErrorCode::NonFinite, "activation column " + std::to_string(i) + " is not finite",
                  i);
    }
  }
}

/// Working state of the solver: S = H + V, M = I + SᵀS and its Cholesky factor.
///
/// A block update refreshes column i of S and then row/column i of M from
/// fresh dot products before refactorizing; M is never patched by low-rank
/// update formulas.
template <typename Scalar>
class GramState {
 public:
  GramState(const Matrix<Scalar>& h, const Matrix<Scalar>& v) {
    require_same_shape(h, v, "GramState");
    s_ = h + v;
    require_finite(s_, "H + V");
    m_ = identity_plus_gram(s_);
    factor_.compute(m_);
  }

  Eigen::Index rows() const { return s_.rows(); }
  Eigen::Index cols() const { return s_.cols(); }

  const Matrix<Scalar>& sum() const { return s_; }
  const Matrix<Scalar>& gram() const { return m_; }
  const SpdFactorization<Scalar>& factorization() const { return factor_; }

  Scalar log_det() const { return factor_.log_determinant(); }
  Scalar objective() const { return -factor_.log_determinant(); }

  /// Replaces column i of S with `column` and refactorizes M.
  template <typename Derived>
  void replace_column(Eigen::Index i, const Eigen::MatrixBase<Derived>& column) {
    s_.col(i) = column;
    if (!s_.col(i).allFinite()) {
      throw Error(ErrorCode::NonFinite, "column " + std::to_string(i) + " of H + V is not finite",
                  i);
    }
    for (Eigen::Index j = 0; j < s_.cols(); ++j) {
      const Eigen::Index hi = std::max(i, j);
      const Eigen::Index lo = std::min(i, j);
      const Scalar d = s_.col(hi).dot(s_.col(lo));
      m_(i, j) = d;
      m_(j, i) = d;
    }
    m_(i, i) += Scalar(1);
    factor_.compute(m_);
  }

  /// g_i = −2 S M⁻¹ e_i
  Vector<Scalar> block_gradient(Eigen::Index i) const {
    return Scalar(-2) * (s_ * factor_.solve_unit(i));
  }

  /// ∇ℓ = −2 S M⁻¹
  Matrix<Scalar> euclidean_gradient() const {
    Matrix<Scalar> g(s_.rows(), s_.cols());
    for (Eigen::Index i = 0; i < s_.cols(); ++i) {
      g.col(i) = block_gradient(i);
    }
    return g;
  }

 private:
  Matrix<Scalar> s_;
  Matrix<Scalar> m_;
  SpdFactorization<Scalar> factor_;
};

/// ℓ(V) = −log det[I + (H+V)ᵀ(H+V)]. V may be off the manifold.
template <typename Scalar>
Scalar objective_value(const Matrix<Scalar>& h, const Matrix<Scalar>& v) {
  require_same_shape(h, v, "objective_value");
  require_finite(h, "H");
  require_finite(v, "V");
  return GramState<Scalar>(h, v).objective();
}

/// Column i equals −2 (H+V) M⁻¹ e_i.
template <typename Scalar>
Matrix<Scalar> euclidean_gradient(const Matrix<Scalar>& h, const Matrix<Scalar>& v) {
  require_same_shape(h, v, "euclidean_gradient");
  return GramState<Scalar>(h, v).euclidean_gradient();
}

/// Tangent projection of the Euclidean gradient, one sphere per column.
template <typename Scalar>
Matrix<Scalar> riemannian_gradient(const Matrix<Scalar>& h, const Matrix<Scalar>& v,
                                   const Vector<Scalar>& alphas) {
  if (alphas.size() != v.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "riemannian_gradient: one radius per column required");
  }
  return project_tangent_columns(v, alphas, euclidean_gradient(h, v));
}

/// ∇²ℓ(V)[U] = −2 U M⁻¹ + 2 S M⁻¹ (UᵀS + SᵀU) M⁻¹ on the ambient space.
template <typename Scalar>
Matrix<Scalar> euclidean_hessian_action(const Matrix<Scalar>& h, const Matrix<Scalar>& v,
                                        const Matrix<Scalar>& u) {
  require_same_shape(h, v, "euclidean_hessian_action");
  require_same_shape(v, u, "euclidean_hessian_action");
  const GramState<Scalar> state(h, v);
  const Matrix<Scalar> m_inv = state.factorization().inverse();
  const Matrix<Scalar>& s = state.sum();
  const Matrix<Scalar> ut_s = u.transpose() * s;
  const Matrix<Scalar> sym = ut_s + ut_s.transpose();
  return Scalar(-2) * u * m_inv + Scalar(2) * (s * m_inv) * sym * m_inv;
}

/// Riemannian Hessian applied to a tangent U:
/// Proj_{T_V}(∇²ℓ(V)[U]) + U Λ with Λ_ii = −g_iᵀ v_i / α_i.
template <typename Scalar>
Matrix<Scalar> hessian_action(const Matrix<Scalar>& h, const Matrix<Scalar>& v,
                              const Vector<Scalar>& alphas, const Matrix<Scalar>& u) {
  require_same_shape(v, u, "hessian_action");
  if (alphas.size() != v.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "hessian_action: one radius per column required");
  }
  for (Eigen::Index i = 0; i < u.cols(); ++i) {
    if (!Sphere<Scalar>(alphas(i)).is_tangent(v.col(i), u.col(i))) {
      throw Error(ErrorCode::TangencyViolation,
                  "column " + std::to_string(i) + " of U is not tangent at v_i", i);
    }
  }
  const Matrix<Scalar> g = euclidean_gradient(h, v);
  Matrix<Scalar> out = project_tangent_columns(v, alphas, euclidean_hessian_action(h, v, u));
  for (Eigen::Index i = 0; i < u.cols(); ++i) {
    const Scalar lambda = -g.col(i).dot(v.col(i)) / alphas(i);
    out.col(i) += lambda * u.col(i);
  }
  return out;
}

}  // namespace spread

#endif  // SPREAD_OBJECTIVE_HPP
