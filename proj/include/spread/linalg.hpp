#ifndef SPREAD_LINALG_HPP
#define SPREAD_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "spread/error.hpp"

namespace spread {

// Column-major so that the per-sequence columns h_i, v_i are contiguous.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::NonFinite, std::string(what) + " contains NaN or Inf");
  }
}

template <typename DerivedA, typename DerivedB>
void require_same_shape(const Eigen::MatrixBase<DerivedA>& a,
                        const Eigen::MatrixBase<DerivedB>& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                    "x" + std::to_string(b.cols()));
  }
}

/// ‖a − b‖_F / max(‖b‖_F, floor)
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar relative_error(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b,
                                         typename DerivedA::Scalar floor = 1e-300) {
  using std::max;
  return (a - b).norm() / max(b.norm(), floor);
}

/// Cholesky factor A = L Lᵀ of a symmetric positive-definite matrix,
/// with the log-determinant accumulated from the factor diagonal.
template <typename Scalar>
class SpdFactorization {
 public:
  SpdFactorization() = default;

  explicit SpdFactorization(const Matrix<Scalar>& a) { compute(a); }

  void compute(const Matrix<Scalar>& a) {
    if (a.rows() != a.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "spd_factorize expects a square matrix");
    }
    require_finite(a, "spd_factorize input");
    const Scalar tol = Scalar(1e-12) * a.norm();
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      for (Eigen::Index i = j + 1; i < a.rows(); ++i) {
        if (std::abs(a(i, j) - a(j, i)) > tol) {
          throw Error(ErrorCode::NotSymmetric,
                      "asymmetry " + std::to_string(std::abs(a(i, j) - a(j, i))) +
                          " at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
      }
    }
    llt_.compute(a);
    if (llt_.info() != Eigen::Success) {
      throw Error(ErrorCode::NotPositiveDefinite, "non-positive pivot in Cholesky factorization");
    }
    const auto diag = llt_.matrixLLT().diagonal();
    log_det_ = Scalar(0);
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
      if (!(diag(i) > Scalar(0))) {
        throw Error(ErrorCode::NotPositiveDefinite, "non-positive pivot", i);
      }
      log_det_ += Scalar(2) * std::log(diag(i));
    }
  }

  Eigen::Index dimension() const { return llt_.matrixLLT().rows(); }
  Scalar log_determinant() const { return log_det_; }

  Matrix<Scalar> lower() const { return llt_.matrixL(); }

  Matrix<Scalar> reconstruct() const { return llt_.reconstructedMatrix(); }

  template <typename Rhs>
  Matrix<Scalar> solve(const Eigen::MatrixBase<Rhs>& b) const {
    if (b.rows() != dimension()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "spd_solve: rhs has " + std::to_string(b.rows()) + " rows, factor is " +
                      std::to_string(dimension()));
    }
    return llt_.solve(b);
  }

  /// Solves A x = e_col.
  Vector<Scalar> solve_unit(Eigen::Index col) const {
    Vector<Scalar> e = Vector<Scalar>::Zero(dimension());
    e(col) = Scalar(1);
    return llt_.solve(e);
  }

  Matrix<Scalar> inverse() const {
    return llt_.solve(Matrix<Scalar>::Identity(dimension(), dimension()));
  }

 private:
  Eigen::LLT<Matrix<Scalar>> llt_;
  Scalar log_det_ = Scalar(0);
};

template <typename Scalar>
SpdFactorization<Scalar> spd_factorize(const Matrix<Scalar>& a) {
  return SpdFactorization<Scalar>(a);
}

template <typename Scalar, typename Rhs>
Vector<Scalar> spd_solve(const SpdFactorization<Scalar>& f, const Eigen::MatrixBase<Rhs>& b) {
  return f.solve(b);
}

/// log det(A) for SPD A.
template <typename Scalar>
Scalar log_det_spd(const Matrix<Scalar>& a) {
  return SpdFactorization<Scalar>(a).log_determinant();
}

/// Gram matrix I + SᵀS assembled column pair by column pair, so that a
/// single column refresh reproduces the full build bit for bit.
template <typename Derived>
Matrix<typename Derived::Scalar> identity_plus_gram(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = s.cols();
  Matrix<Scalar> m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const Scalar d = s.col(i).dot(s.col(j));
      m(i, j) = d;
      m(j, i) = d;
    }
    m(j, j) += Scalar(1);
  }
  return m;
}

}  // namespace spread

#endif  // SPREAD_LINALG_HPP
