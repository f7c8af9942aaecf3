#ifndef SPREAD_ORACLE_HPP
#define SPREAD_ORACLE_HPP

// Brute-force references for the solver's formulas, independent of the fast
// paths they are compared against.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spread/error.hpp"
#include "spread/linalg.hpp"
#include "spread/manifold.hpp"
#include "spread/objective.hpp"

namespace spread {

inline constexpr int kMaxSubsetColumns = 20;

/// Determinant of a small dense matrix: cofactor expansion up to 3×3,
/// Gaussian elimination with partial pivoting beyond. The 0×0 determinant is 1.
template <typename Scalar>
Scalar small_determinant(Matrix<Scalar> a) {
  const Eigen::Index n = a.rows();
  switch (n) {
    case 0: return Scalar(1);
    case 1: return a(0, 0);
    case 2: return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    case 3:
      return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
             a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
             a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
    default: break;
  }
  Scalar det = Scalar(1);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index pivot = k;
    for (Eigen::Index r = k + 1; r < n; ++r) {
      if (std::abs(a(r, k)) > std::abs(a(pivot, k))) pivot = r;
    }
    if (a(pivot, k) == Scalar(0)) return Scalar(0);
    if (pivot != k) {
      a.row(k).swap(a.row(pivot));
      det = -det;
    }
    det *= a(k, k);
    for (Eigen::Index r = k + 1; r < n; ++r) {
      const Scalar factor = a(r, k) / a(k, k);
      for (Eigen::Index c = k; c < n; ++c) a(r, c) -= factor * a(k, c);
    }
  }
  return det;
}

/// Fixed-order pairwise sum.
template <typename Scalar>
Scalar pairwise_sum(const std::vector<Scalar>& values, std::size_t begin, std::size_t end) {
  if (end - begin == 0) return Scalar(0);
  if (end - begin == 1) return values[begin];
  const std::size_t mid = begin + (end - begin) / 2;
  return pairwise_sum(values, begin, mid) + pairwise_sum(values, mid, end);
}

template <typename Scalar>
struct SubsetVolumeReport {
  int n = 0;
  std::vector<Scalar> squared_volumes;  // indexed by column bitmask
  Scalar total = 0;
  Scalar logdet_value = 0;  // log det(I + SᵀS) via the SPD path
  Scalar max_relative_discrepancy = 0;
};

/// Σ over all column subsets I of det(S_Iᵀ S_I), compared with det(I + SᵀS).
template <typename Scalar>
SubsetVolumeReport<Scalar> subset_volume_sum(const Matrix<Scalar>& s) {
  if (s.cols() > kMaxSubsetColumns) {
    throw Error(ErrorCode::TooLarge, "subset enumeration limited to N <= " +
                                         std::to_string(kMaxSubsetColumns) + ", got " +
                                         std::to_string(s.cols()));
  }
  require_finite(s, "subset_volume_sum input");
  SubsetVolumeReport<Scalar> report;
  report.n = static_cast<int>(s.cols());
  const std::uint32_t count = 1u << report.n;
  report.squared_volumes.resize(count);
  const Matrix<Scalar> gram = s.transpose() * s;
  std::vector<Eigen::Index> picked;
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    picked.clear();
    for (int i = 0; i < report.n; ++i) {
      if (mask & (1u << i)) picked.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(picked.size());
    Matrix<Scalar> sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = gram(picked[a], picked[b]);
    }
    report.squared_volumes[mask] = small_determinant(std::move(sub));
  }
  report.total = pairwise_sum(report.squared_volumes, 0, report.squared_volumes.size());
  report.logdet_value = log_det_spd<Scalar>(identity_plus_gram(s));
  const Scalar identity_side = std::exp(report.logdet_value);
  report.max_relative_discrepancy = std::abs(report.total - identity_side) / identity_side;
  return report;
}

/// ℓ through the p × p form −log det(I + S Sᵀ).
template <typename Scalar>
Scalar objective_value_row_space(const Matrix<Scalar>& h, const Matrix<Scalar>& v) {
  require_same_shape(h, v, "objective_value_row_space");
  const Matrix<Scalar> s = h + v;
  const Matrix<Scalar> outer =
      Matrix<Scalar>::Identity(s.rows(), s.rows()) + s * s.transpose();
  // Symmetrize the product so the factorization's symmetry check sees exact symmetry.
  return -log_det_spd<Scalar>(Scalar(0.5) * (outer + outer.transpose()));
}

/// Central difference of ℓ in coordinate (row, col) of V.
template <typename Scalar>
Scalar fd_gradient_entry(const Matrix<Scalar>& h, const Matrix<Scalar>& v, Scalar step,
                         Eigen::Index row, Eigen::Index col) {
  Matrix<Scalar> probe = v;
  probe(row, col) = v(row, col) + step;
  const Scalar plus = objective_value(h, probe);
  probe(row, col) = v(row, col) - step;
  const Scalar minus = objective_value(h, probe);
  return (plus - minus) / (Scalar(2) * step);
}

/// Central differences of ℓ over every ambient coordinate of V.
template <typename Scalar>
Matrix<Scalar> fd_gradient(const Matrix<Scalar>& h, const Matrix<Scalar>& v, Scalar step) {
  if (!(step > Scalar(0))) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be > 0");
  require_same_shape(h, v, "fd_gradient");
  Matrix<Scalar> g(v.rows(), v.cols());
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    for (Eigen::Index r = 0; r < v.rows(); ++r) g(r, c) = fd_gradient_entry(h, v, step, r, c);
  }
  return g;
}

/// (Γ⁻¹ grad ℓ(Exp_V(tU)) − grad ℓ(V)) / t, transporting back along the
/// same geodesic.
template <typename Scalar>
Matrix<Scalar> fd_hessian_action(const Matrix<Scalar>& h, const Matrix<Scalar>& v,
                                 const Vector<Scalar>& alphas, const Matrix<Scalar>& u, Scalar t) {
  if (!(t > Scalar(0))) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be > 0");
  require_same_shape(v, u, "fd_hessian_action");
  const Matrix<Scalar> tu = t * u;
  const Matrix<Scalar> z = exp_map_columns(v, alphas, tu);
  const Matrix<Scalar> grad_z = riemannian_gradient(h, z, alphas);
  const Matrix<Scalar> grad_v = riemannian_gradient(h, v, alphas);
  // The geodesic's velocity at z, reversed, leads back to v.
  const Matrix<Scalar> back = -parallel_transport_columns(v, alphas, tu, tu);
  const Matrix<Scalar> pulled = parallel_transport_columns(z, alphas, back, grad_z);
  return (pulled - grad_v) / t;
}

/// One Richardson step on fd_hessian_action: 2 D(t/2) − D(t).
template <typename Scalar>
Matrix<Scalar> fd_hessian_action_extrapolated(const Matrix<Scalar>& h, const Matrix<Scalar>& v,
                                              const Vector<Scalar>& alphas,
                                              const Matrix<Scalar>& u, Scalar t) {
  return Scalar(2) * fd_hessian_action(h, v, alphas, u, t / Scalar(2)) -
         fd_hessian_action(h, v, alphas, u, t);
}

}  // namespace spread

#endif  // SPREAD_ORACLE_HPP
