#ifndef SPREAD_MANIFOLD_HPP
#define SPREAD_MANIFOLD_HPP

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "spread/error.hpp"
#include "spread/linalg.hpp"

namespace spread {

/// Feasibility tolerance on |‖v‖² − α| relative to α.
inline constexpr double kSphereTolerance = 1e-9;
/// Directions shorter than this (relative to √α) are treated as zero.
inline constexpr double kZeroDirection = 1e-12;

/// The sphere {v ∈ R^p : ‖v‖² = α}.
template <typename Scalar>
class Sphere {
 public:
  explicit Sphere(Scalar radius_sq) : alpha_(radius_sq), radius_(std::sqrt(radius_sq)) {
    if (!(radius_sq > Scalar(0)) || !std::isfinite(radius_sq)) {
      throw Error(ErrorCode::InvalidArgument, "sphere radius_sq must be positive and finite");
    }
  }

  Scalar radius_sq() const { return alpha_; }
  Scalar radius() const { return radius_; }

  template <typename Derived>
  Scalar feasibility_residual(const Eigen::MatrixBase<Derived>& v) const {
    return std::abs(v.squaredNorm() - alpha_);
  }

  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& v, Scalar rel_tol = Scalar(kSphereTolerance)) const {
    return feasibility_residual(v) <= rel_tol * alpha_;
  }

  template <typename DerivedV, typename DerivedZ>
  bool is_tangent(const Eigen::MatrixBase<DerivedV>& v, const Eigen::MatrixBase<DerivedZ>& z,
                  Scalar rel_tol = Scalar(kSphereTolerance)) const {
    return std::abs(z.dot(v)) <= rel_tol * z.norm() * v.norm();
  }

  /// (I − v vᵀ/α) g
  template <typename DerivedV, typename DerivedG>
  Vector<Scalar> project_tangent(const Eigen::MatrixBase<DerivedV>& v,
                                 const Eigen::MatrixBase<DerivedG>& g) const {
    if (v.size() != g.size()) {
      throw Error(ErrorCode::DimensionMismatch, "project_tangent: point and vector lengths differ");
    }
    // In one dimension the sphere is two points and the tangent space is {0}.
    if (v.size() == 1) return Vector<Scalar>::Zero(1);
    return g - (g.dot(v) / alpha_) * v;
  }

  /// Geodesic step from v along tangent direction d with step size `step`.
  /// The result is rescaled onto the sphere to stop drift across iterations.
  template <typename DerivedV, typename DerivedD>
  Vector<Scalar> exp_map(const Eigen::MatrixBase<DerivedV>& v, const Eigen::MatrixBase<DerivedD>& d,
                         Scalar step) const {
    if (v.size() != d.size()) {
      throw Error(ErrorCode::DimensionMismatch, "exp_map: point and direction lengths differ");
    }
    const Scalar d_norm = d.norm();
    if (d_norm < Scalar(kZeroDirection) * radius_ || step == Scalar(0)) {
      return v;
    }
    const Scalar angle = step * d_norm / radius_;
    Vector<Scalar> out = std::cos(angle) * v + (std::sin(angle) * radius_ / d_norm) * d;
    out *= radius_ / out.norm();
    return out;
  }

  /// Transports w ∈ T_v along the geodesic t ↦ Exp_v(t u), t ∈ [0, 1].
  template <typename DerivedV, typename DerivedU, typename DerivedW>
  Vector<Scalar> parallel_transport(const Eigen::MatrixBase<DerivedV>& v,
                                    const Eigen::MatrixBase<DerivedU>& u,
                                    const Eigen::MatrixBase<DerivedW>& w) const {
    if (v.size() != u.size() || v.size() != w.size()) {
      throw Error(ErrorCode::DimensionMismatch, "parallel_transport: lengths differ");
    }
    const Scalar u_norm = u.norm();
    if (u_norm < Scalar(kZeroDirection) * radius_) {
      return w;
    }
    const Scalar angle = u_norm / radius_;
    const Vector<Scalar> u_hat = u / u_norm;
    const Scalar along = u_hat.dot(w);
    return w + along * ((std::cos(angle) - Scalar(1)) * u_hat - (std::sin(angle) / radius_) * v);
  }

 private:
  Scalar alpha_;
  Scalar radius_;
};

template <typename DerivedV, typename DerivedG>
auto project_tangent(const Eigen::MatrixBase<DerivedV>& v, typename DerivedV::Scalar alpha,
                     const Eigen::MatrixBase<DerivedG>& g) {
  return Sphere<typename DerivedV::Scalar>(alpha).project_tangent(v, g);
}

template <typename DerivedV, typename DerivedD>
auto exp_map(const Eigen::MatrixBase<DerivedV>& v, typename DerivedV::Scalar alpha,
             const Eigen::MatrixBase<DerivedD>& d, typename DerivedV::Scalar step) {
  return Sphere<typename DerivedV::Scalar>(alpha).exp_map(v, d, step);
}

template <typename DerivedV, typename DerivedU, typename DerivedW>
auto parallel_transport(const Eigen::MatrixBase<DerivedV>& v, typename DerivedV::Scalar alpha,
                        const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedW>& w) {
  return Sphere<typename DerivedV::Scalar>(alpha).parallel_transport(v, u, w);
}

// Product manifold M_1 × … × M_N: one sphere per column.

template <typename Scalar>
Matrix<Scalar> project_tangent_columns(const Matrix<Scalar>& v, const Vector<Scalar>& alphas,
                                       const Matrix<Scalar>& g) {
  require_same_shape(v, g, "project_tangent_columns");
  Matrix<Scalar> out(g.rows(), g.cols());
  for (Eigen::Index i = 0; i < v.cols(); ++i) {
    out.col(i) = Sphere<Scalar>(alphas(i)).project_tangent(v.col(i), g.col(i));
  }
  return out;
}

/// Exp_V(step · D), column by column.
template <typename Scalar>
Matrix<Scalar> exp_map_columns(const Matrix<Scalar>& v, const Vector<Scalar>& alphas,
                               const Matrix<Scalar>& d, Scalar step = Scalar(1)) {
  require_same_shape(v, d, "exp_map_columns");
  Matrix<Scalar> out(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.cols(); ++i) {
    out.col(i) = Sphere<Scalar>(alphas(i)).exp_map(v.col(i), d.col(i), step);
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> parallel_transport_columns(const Matrix<Scalar>& v, const Vector<Scalar>& alphas,
                                          const Matrix<Scalar>& u, const Matrix<Scalar>& w) {
  require_same_shape(v, u, "parallel_transport_columns");
  require_same_shape(v, w, "parallel_transport_columns");
  Matrix<Scalar> out(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.cols(); ++i) {
    out.col(i) = Sphere<Scalar>(alphas(i)).parallel_transport(v.col(i), u.col(i), w.col(i));
  }
  return out;
}

/// max_i |‖v_i‖² − α_i|
template <typename Scalar>
Scalar feasibility_residual(const Matrix<Scalar>& v, const Vector<Scalar>& alphas) {
  Scalar worst = Scalar(0);
  for (Eigen::Index i = 0; i < v.cols(); ++i) {
    worst = std::max(worst, std::abs(v.col(i).squaredNorm() - alphas(i)));
  }
  return worst;
}

/// max_i |‖v_i‖² − α_i| / α_i
template <typename Scalar>
Scalar relative_feasibility_residual(const Matrix<Scalar>& v, const Vector<Scalar>& alphas) {
  Scalar worst = Scalar(0);
  for (Eigen::Index i = 0; i < v.cols(); ++i) {
    worst = std::max(worst, std::abs(v.col(i).squaredNorm() - alphas(i)) / alphas(i));
  }
  return worst;
}

}  // namespace spread

#endif  // SPREAD_MANIFOLD_HPP
