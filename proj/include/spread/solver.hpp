#ifndef SPREAD_SOLVER_HPP
#define SPREAD_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spread/error.hpp"
#include "spread/linalg.hpp"
#include "spread/manifold.hpp"
#include "spread/objective.hpp"

namespace spread {

/// Columns with ‖h_i‖ below this cannot define a radius.
inline constexpr double kDegenerateNorm = 1e-12;
/// Maximum number of noise redraws per column during initialization.
inline constexpr int kInitResamples = 16;

/// Squared sphere radii α_i with cached totals.
template <typename Scalar>
struct RadiusSchedule {
  Vector<Scalar> alphas;
  Vector<Scalar> radii;  // √α_i
  Scalar total = 0;      // ᾱ = Σ α_i
  Scalar min = 0;        // α_min

  RadiusSchedule() = default;

  explicit RadiusSchedule(Vector<Scalar> a) : alphas(std::move(a)) {
    if (alphas.size() < 1) {
      throw Error(ErrorCode::InvalidArgument, "radius schedule must be non-empty");
    }
    for (Eigen::Index i = 0; i < alphas.size(); ++i) {
      if (!(alphas(i) > Scalar(0)) || !std::isfinite(alphas(i))) {
        throw Error(ErrorCode::DegenerateColumn,
                    "alpha_" + std::to_string(i) + " must be positive and finite", i);
      }
    }
    radii = alphas.cwiseSqrt();
    total = alphas.sum();
    min = alphas.minCoeff();
  }

  Eigen::Index size() const { return alphas.size(); }
};

/// α_i = C ‖h_i‖₂ / p
template <typename Scalar>
RadiusSchedule<Scalar> radii_from_hidden(const Matrix<Scalar>& h, Scalar scale) {
  if (!(scale > Scalar(0))) {
    throw Error(ErrorCode::InvalidArgument, "radius scale C must be positive");
  }
  validate_activations(h);
  Vector<Scalar> alphas(h.cols());
  const Scalar p = static_cast<Scalar>(h.rows());
  for (Eigen::Index i = 0; i < h.cols(); ++i) {
    const Scalar norm = h.col(i).norm();
    if (norm < Scalar(kDegenerateNorm)) {
      throw Error(ErrorCode::DegenerateColumn,
                  "hidden column " + std::to_string(i) + " has zero norm", i);
    }
    alphas(i) = scale * norm / p;
  }
  return RadiusSchedule<Scalar>(std::move(alphas));
}

/// Block constants L_i, the global constant L and the rate constant of the
/// convergence guarantee, plus the analytic lower bound on ℓ over the manifold.
template <typename Scalar>
struct SmoothnessConstants {
  Vector<Scalar> block;  // L_i
  Scalar global = 0;     // L (α_min in place of α_i)
  Scalar min = 0;
  Scalar max = 0;
  Scalar rate = 0;       // L_min² / (4 L_max (L_min² + L² N (N−1)))
  Scalar euclidean_hessian_bound = 0;  // 2 + 4 (‖H‖_F + √ᾱ)²
  Scalar objective_lower_bound = 0;  // −N log(1 + (‖H‖_F + √ᾱ)²)

  Vector<Scalar> step_sizes() const { return block.cwiseInverse(); }

  /// √((ℓ₀ − ℓ_lb) / (rate · k)), the bound on min_{s≤k} ‖grad ℓ(V^(s))‖_F.
  Scalar envelope(Scalar initial_objective, long k) const {
    return std::sqrt((initial_objective - objective_lower_bound) / (rate * static_cast<Scalar>(k)));
  }
};

template <typename Scalar>
SmoothnessConstants<Scalar> smoothness_constants(const Matrix<Scalar>& h,
                                                 const RadiusSchedule<Scalar>& radii) {
  if (radii.size() != h.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "one radius per activation column required");
  }
  const Scalar reach = h.norm() + std::sqrt(radii.total);  // ‖H‖_F + √ᾱ
  const Scalar base = Scalar(2) + Scalar(4) * reach * reach;
  SmoothnessConstants<Scalar> c;
  c.block.resize(radii.size());
  for (Eigen::Index i = 0; i < radii.size(); ++i) {
    c.block(i) = base + Scalar(2) / radii.radii(i) * reach;
  }
  c.euclidean_hessian_bound = base;
  c.global = base + Scalar(2) / std::sqrt(radii.min) * reach;
  c.min = c.block.minCoeff();
  c.max = c.block.maxCoeff();
  const Scalar n = static_cast<Scalar>(radii.size());
  c.rate = (c.min * c.min) /
           (Scalar(4) * c.max * (c.min * c.min + c.global * c.global * n * (n - Scalar(1))));
  c.objective_lower_bound = -n * std::log1p(reach * reach);
  return c;
}

struct StepPolicy {
  enum class Kind { TheoremRate, Fixed };
  Kind kind = Kind::TheoremRate;
  double fixed_step = 0.0;

  static StepPolicy theorem_rate() { return {}; }
  static StepPolicy fixed(double step) { return {Kind::Fixed, step}; }
};

struct SolverConfig {
  int iters = 20;
  double radius_scale = 1.0;
  std::optional<double> init_noise_sigma;  // unset: scaled to the data
  std::uint64_t seed = 42;
  StepPolicy step_policy;
  double early_stop_grad_tol = 0.0;
  std::optional<VectorXd> explicit_alphas;
  double z_offset = 0.0;  // running diversity proxy carried in from earlier solves

  void validate() const {
    if (iters < 0) throw Error(ErrorCode::InvalidArgument, "iters must be >= 0");
    if (!(radius_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius_scale must be > 0");
    if (init_noise_sigma && !(*init_noise_sigma >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "init_noise_sigma must be >= 0");
    }
    if (step_policy.kind == StepPolicy::Kind::Fixed && !(step_policy.fixed_step > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "fixed step must be > 0");
    }
    if (!(early_stop_grad_tol >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "early_stop_grad_tol must be >= 0");
    }
  }
};

/// One record per outer iteration; record 0 is the initialization.
template <typename Scalar>
struct TraceRecord {
  long iteration = 0;
  Scalar objective = 0;
  Scalar grad_norm = 0;             // ‖grad ℓ(V^(k))‖_F
  Scalar feasibility_residual = 0;  // max_i |‖v_i‖² − α_i|
  Scalar relative_feasibility = 0;  // max_i |‖v_i‖² − α_i| / α_i
  Scalar z = 0;                     // z_offset − ℓ(V^(k))
  std::vector<Scalar> step_norms;        // η_i ‖d_i‖ per block
  std::vector<Scalar> block_objectives;  // ℓ after each block update
  Scalar max_block_relative_feasibility = 0;
  Scalar max_direction_tangency = 0;  // max_i |⟨d_i, v_i⟩| / (‖d_i‖ √α_i)
};

template <typename Scalar>
struct SolveTrace {
  std::vector<TraceRecord<Scalar>> records;
  bool early_stopped = false;
};

template <typename Scalar>
struct SolveResult {
  Matrix<Scalar> steering;
  RadiusSchedule<Scalar> radii;
  SolveTrace<Scalar> trace;
  SmoothnessConstants<Scalar> constants;
};

template <typename Scalar>
Scalar median(std::vector<Scalar> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / Scalar(2);
}

/// 0.01 · median_i ‖h_i‖ / √p
template <typename Scalar>
Scalar default_init_noise(const Matrix<Scalar>& h) {
  std::vector<Scalar> norms(static_cast<std::size_t>(h.cols()));
  for (Eigen::Index i = 0; i < h.cols(); ++i) norms[static_cast<std::size_t>(i)] = h.col(i).norm();
  return Scalar(0.01) * median(std::move(norms)) / std::sqrt(static_cast<Scalar>(h.rows()));
}

/// v_i⁰ = √α_i (h_i + ε_i − h̄) / ‖h_i + ε_i − h̄‖ with ε_i ~ N(0, σ² I).
template <typename Scalar>
Matrix<Scalar> init_steering(const Matrix<Scalar>& h, const RadiusSchedule<Scalar>& radii,
                             Scalar sigma, std::uint64_t seed) {
  validate_activations(h);
  if (radii.size() != h.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "one radius per activation column required");
  }
  if (!(sigma >= Scalar(0))) {
    throw Error(ErrorCode::InvalidArgument, "init noise sigma must be >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  const Vector<Scalar> centroid = h.rowwise().mean();
  Matrix<Scalar> v(h.rows(), h.cols());
  Vector<Scalar> direction(h.rows());
  for (Eigen::Index i = 0; i < h.cols(); ++i) {
    bool placed = false;
    for (int attempt = 0; attempt <= kInitResamples && !placed; ++attempt) {
      for (Eigen::Index r = 0; r < h.rows(); ++r) {
        direction(r) = h(r, i) + sigma * normal(rng) - centroid(r);
      }
      const Scalar norm = direction.norm();
      if (norm >= Scalar(kDegenerateNorm)) {
        v.col(i) = (radii.radii(i) / norm) * direction;
        placed = true;
      }
    }
    if (!placed) {
      throw Error(ErrorCode::DegenerateInit,
                  "column " + std::to_string(i) + " coincides with the centroid", i);
    }
  }
  return v;
}

template <typename Scalar>
Scalar riemannian_gradient_norm(const GramState<Scalar>& state, const Matrix<Scalar>& v,
                                const Vector<Scalar>& alphas) {
  return project_tangent_columns(v, alphas, state.euclidean_gradient()).norm();
}

/// Riemannian block coordinate descent from a given feasible start.
///
/// Blocks are visited in ascending order. Each block gradient is taken at
/// the most recent iterate (Gauss-Seidel), so M is refactorized after every
/// block update.
template <typename Scalar>
SolveResult<Scalar> solve_from(const Matrix<Scalar>& h, const RadiusSchedule<Scalar>& radii,
                               Matrix<Scalar> v, const SolverConfig& config) {
  config.validate();
  validate_activations(h);
  require_same_shape(h, v, "solve_from");
  if (radii.size() != h.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "one radius per activation column required");
  }
  if (relative_feasibility_residual(v, radii.alphas) > Scalar(kSphereTolerance)) {
    throw Error(ErrorCode::InvalidArgument, "initial steering is not on the product of spheres");
  }

  SolveResult<Scalar> result;
  result.radii = radii;
  result.constants = smoothness_constants(h, radii);
  const Eigen::Index n = h.cols();
  Vector<Scalar> steps(n);
  if (config.step_policy.kind == StepPolicy::Kind::TheoremRate) {
    steps = result.constants.step_sizes();
  } else {
    steps.setConstant(static_cast<Scalar>(config.step_policy.fixed_step));
  }
  std::vector<Sphere<Scalar>> spheres;
  spheres.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) spheres.emplace_back(radii.alphas(i));

  auto fail_at = [](long k, const Error& e) {
    return Error(ErrorCode::NonFinite, "iteration " + std::to_string(k) + ": " + e.what(), k);
  };
  auto is_numeric = [](const Error& e) {
    return e.code() == ErrorCode::NonFinite || e.code() == ErrorCode::NotPositiveDefinite;
  };
  std::optional<GramState<Scalar>> initial;
  try {
    initial.emplace(h, v);
  } catch (const Error& e) {
    if (is_numeric(e)) throw fail_at(0, e);
    throw;
  }
  GramState<Scalar>& state = *initial;
  auto make_record = [&](long k) {
    TraceRecord<Scalar> rec;
    rec.iteration = k;
    rec.objective = state.objective();
    rec.grad_norm = riemannian_gradient_norm(state, v, radii.alphas);
    rec.feasibility_residual = feasibility_residual(v, radii.alphas);
    rec.relative_feasibility = relative_feasibility_residual(v, radii.alphas);
    rec.z = static_cast<Scalar>(config.z_offset) - rec.objective;
    if (!std::isfinite(rec.objective) || !std::isfinite(rec.grad_norm)) {
      throw Error(ErrorCode::NonFinite, "non-finite objective at iteration " + std::to_string(k), k);
    }
    return rec;
  };
  result.trace.records.push_back(make_record(0));

  for (long k = 1; k <= config.iters; ++k) {
    std::vector<Scalar> step_norms;
    std::vector<Scalar> block_objectives;
    Scalar worst_feasibility = 0;
    Scalar worst_tangency = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      try {
        const Vector<Scalar> g = state.block_gradient(i);
        const auto vi = v.col(i);
        const Vector<Scalar> d = -g + (vi.dot(g) / radii.alphas(i)) * vi;
        if (!d.allFinite()) {
          throw Error(ErrorCode::NonFinite, "non-finite descent direction");
        }
        const Scalar d_norm = d.norm();
        if (d_norm > Scalar(0)) {
          worst_tangency =
              std::max(worst_tangency, std::abs(d.dot(vi)) / (d_norm * radii.radii(i)));
        }
        v.col(i) = spheres[static_cast<std::size_t>(i)].exp_map(vi, d, steps(i));
        state.replace_column(i, h.col(i) + v.col(i));
        step_norms.push_back(steps(i) * d_norm);
        block_objectives.push_back(state.objective());
        worst_feasibility =
            std::max(worst_feasibility, relative_feasibility_residual(v, radii.alphas));
      } catch (const Error& e) {
        if (is_numeric(e)) throw fail_at(k, e);
        throw;
      }
    }
    auto rec = make_record(k);
    rec.step_norms = std::move(step_norms);
    rec.block_objectives = std::move(block_objectives);
    rec.max_block_relative_feasibility = worst_feasibility;
    rec.max_direction_tangency = worst_tangency;
    const bool stop =
        config.early_stop_grad_tol > 0.0 && rec.grad_norm <= Scalar(config.early_stop_grad_tol);
    result.trace.records.push_back(std::move(rec));
    if (stop) {
      result.trace.early_stopped = true;
      break;
    }
  }
  result.steering = std::move(v);
  return result;
}

template <typename Scalar>
RadiusSchedule<Scalar> resolve_radii(const Matrix<Scalar>& h, const SolverConfig& config) {
  if (config.explicit_alphas) {
    if (config.explicit_alphas->size() != h.cols()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "explicit_alphas has " + std::to_string(config.explicit_alphas->size()) +
                      " entries, input has " + std::to_string(h.cols()) + " columns");
    }
    return RadiusSchedule<Scalar>(config.explicit_alphas->template cast<Scalar>());
  }
  return radii_from_hidden(h, static_cast<Scalar>(config.radius_scale));
}

/// Radii, initialization and block coordinate descent in one call.
template <typename Scalar>
SolveResult<Scalar> solve(const Matrix<Scalar>& h, const SolverConfig& config) {
  config.validate();
  validate_activations(h);
  const RadiusSchedule<Scalar> radii = resolve_radii(h, config);
  const Scalar sigma = config.init_noise_sigma ? static_cast<Scalar>(*config.init_noise_sigma)
                                               : default_init_noise(h);
  Matrix<Scalar> v0 = init_steering(h, radii, sigma, config.seed);
  return solve_from(h, radii, std::move(v0), config);
}

struct StationarityReport {
  double final_grad_norm = 0;
  bool final_grad_ok = false;
  bool envelope_ok = true;
  std::vector<long> envelope_violations;
  double max_envelope_ratio = 0;  // max_k min_{s≤k} grad_s / envelope_k
  bool monotone_ok = true;
  long monotone_violations = 0;
  double max_monotone_excess = 0;  // largest increase beyond the slack

  bool passed() const { return final_grad_ok && envelope_ok && monotone_ok; }
};

/// Relative slack on monotone descent: 1e-8 (1 + |ℓ|).
inline constexpr double kDescentSlack = 1e-8;

/// Checks a trace solved with 1/L_i steps: final gradient tolerance, the rate envelope
/// with ℓ* replaced by the analytic lower bound, and monotone descent at
/// block granularity where the trace carries it.
template <typename Scalar>
StationarityReport certify_stationarity(const SolveTrace<Scalar>& trace,
                                        const SmoothnessConstants<Scalar>& constants, double tol) {
  StationarityReport report;
  if (trace.records.empty()) {
    report.envelope_ok = false;
    return report;
  }
  const auto& first = trace.records.front();
  report.final_grad_norm = static_cast<double>(trace.records.back().grad_norm);
  report.final_grad_ok = report.final_grad_norm <= tol;

  Scalar best = first.grad_norm;
  for (const auto& rec : trace.records) {
    best = std::min(best, rec.grad_norm);
    if (rec.iteration < 1) continue;
    const Scalar bound = constants.envelope(first.objective, rec.iteration);
    const double ratio = static_cast<double>(best / bound);
    report.max_envelope_ratio = std::max(report.max_envelope_ratio, ratio);
    if (!(best <= bound)) {
      report.envelope_ok = false;
      report.envelope_violations.push_back(rec.iteration);
    }
  }

  Scalar previous = first.objective;
  auto check = [&](Scalar next) {
    const Scalar slack = Scalar(kDescentSlack) * (Scalar(1) + std::abs(previous));
    const Scalar excess = next - previous - slack;
    if (excess > Scalar(0)) {
      report.monotone_ok = false;
      ++report.monotone_violations;
      report.max_monotone_excess = std::max(report.max_monotone_excess, static_cast<double>(excess));
    }
    previous = next;
  };
  for (std::size_t r = 1; r < trace.records.size(); ++r) {
    const auto& rec = trace.records[r];
    for (Scalar b : rec.block_objectives) check(b);
    check(rec.objective);
  }
  return report;
}

/// H_new = H + V for feasible V.
template <typename Scalar>
Matrix<Scalar> apply_steering(const Matrix<Scalar>& h, const Matrix<Scalar>& v,
                              const RadiusSchedule<Scalar>& radii) {
  require_same_shape(h, v, "apply_steering");
  if (radii.size() != v.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "one radius per steering column required");
  }
  for (Eigen::Index i = 0; i < v.cols(); ++i) {
    if (!Sphere<Scalar>(radii.alphas(i)).contains(v.col(i))) {
      throw Error(ErrorCode::InvalidArgument,
                  "steering column " + std::to_string(i) + " is off its sphere", i);
    }
  }
  return h + v;
}

}  // namespace spread

#endif  // SPREAD_SOLVER_HPP
