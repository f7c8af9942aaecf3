// spread: command-line front end for the steering solver.
//
//   spread solve  --input H.sprd [--config run.json] --out-v V.sprd --out-trace trace.jsonl
//   spread radii  --input H.sprd [-C 1]
//   spread verify --input H.sprd --steering V.sprd [--config run.json] [--trace trace.jsonl]
//   spread bench  [--p-list ...] [--n-list ...] [-K 20] [--repeats 30] [--json out.jsonl]
//   spread trace  --input H.sprd --trace trace.jsonl [--config run.json] [--tol 1e-6]
//
// Exit codes: 0 ok, 1 internal error, 2 parse/usage error, 3 degenerate
// input, 4 non-finite value, 5 failed check.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spread/bench.hpp"
#include "spread/error.hpp"
#include "spread/io.hpp"
#include "spread/objective.hpp"
#include "spread/oracle.hpp"
#include "spread/solver.hpp"

namespace {

using spread::ErrorCode;
using spread::MatrixXd;
using spread::VectorXd;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitParse = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitNonFinite = 4;
constexpr int kExitCheckFailed = 5;

// Tolerances for `verify`.
constexpr double kVerifyFeasibility = 1e-9;  // relative to α_i
constexpr double kVerifySubset = 1e-9;
constexpr double kVerifyGradient = 1e-6;
constexpr double kVerifyFdStep = 1e-5;
constexpr int kVerifyGradientSamples = 64;
constexpr int kVerifyHessianProbes = 8;

int exit_code_for(const spread::Error& e) {
  switch (e.code()) {
    case ErrorCode::Parse:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InvalidArgument:
    case ErrorCode::TooLarge:
      return kExitParse;
    case ErrorCode::DegenerateColumn:
    case ErrorCode::DegenerateInit:
      return kExitDegenerate;
    case ErrorCode::NonFinite:
    case ErrorCode::NotPositiveDefinite:
      return kExitNonFinite;
    default:
      return kExitInternal;
  }
}

struct CommonOptions {
  std::string input;
  std::string config;
  std::optional<double> scale;
  std::optional<int> iters;
  std::optional<std::uint64_t> seed;
};

void add_config_options(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "JSON run configuration");
  cmd->add_option("-C,--scale", opts.scale, "radius scale C in alpha_i = C ||h_i|| / p");
  cmd->add_option("-K,--iters", opts.iters, "outer iterations");
  cmd->add_option("--seed", opts.seed, "initialization seed");
}

spread::SolverConfig resolve_config(const CommonOptions& opts) {
  spread::SolverConfig config =
      opts.config.empty() ? spread::SolverConfig{} : spread::io::load_run_config(opts.config);
  if (opts.scale) config.radius_scale = *opts.scale;
  if (opts.iters) config.iters = *opts.iters;
  if (opts.seed) config.seed = *opts.seed;
  try {
    config.validate();
  } catch (const spread::Error& e) {
    throw spread::Error(ErrorCode::Parse, e.what());
  }
  return config;
}

int run_solve(const CommonOptions& opts, const std::string& out_v, const std::string& out_trace,
              double z_offset) {
  auto config = resolve_config(opts);
  config.z_offset = z_offset;
  const auto input = spread::io::read_activation_file(opts.input);
  const auto result = spread::solve(input.values, config);

  spread::io::ActivationFile v_file;
  v_file.dtype = spread::io::Dtype::Float64;
  v_file.values = result.steering;
  spread::io::write_activation_file(out_v, v_file);
  spread::io::write_trace_file(out_trace, result.trace);

  const auto& last = result.trace.records.back();
  std::cerr << "solve: p=" << input.values.rows() << " N=" << input.values.cols()
            << " K=" << last.iteration << " ell=" << std::setprecision(12) << last.objective
            << " grad_norm=" << last.grad_norm << '\n';
  return kExitOk;
}

int run_radii(const CommonOptions& opts) {
  const auto config = resolve_config(opts);
  const auto input = spread::io::read_activation_file(opts.input);
  const auto radii = spread::resolve_radii(input.values, config);
  for (Eigen::Index i = 0; i < radii.size(); ++i) {
    nlohmann::ordered_json line;
    line["i"] = i;
    line["alpha"] = radii.alphas(i);
    std::cout << line.dump() << '\n';
  }
  return kExitOk;
}

void print_check(const char* name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
}

std::string sci(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3e", x);
  return buf;
}

int run_verify(const CommonOptions& opts, const std::string& steering_path,
               const std::string& trace_path) {
  const auto config = resolve_config(opts);
  const MatrixXd h = spread::io::read_activation_file(opts.input).values;
  const MatrixXd v = spread::io::read_activation_file(steering_path).values;
  spread::require_same_shape(h, v, "verify: activations vs steering");
  const auto radii = spread::resolve_radii(h, config);
  const auto constants = spread::smoothness_constants(h, radii);
  bool all_ok = true;

  const double feas = spread::relative_feasibility_residual(v, radii.alphas);
  const bool feas_ok = feas <= kVerifyFeasibility;
  print_check("feasibility", feas_ok, "max |‖v_i‖²−α_i|/α_i = " + sci(feas));
  all_ok &= feas_ok;

  const MatrixXd s = h + v;
  if (s.cols() <= spread::kMaxSubsetColumns) {
    const auto report = spread::subset_volume_sum(s);
    const bool ok = report.max_relative_discrepancy <= kVerifySubset;
    print_check("subset-identity", ok,
                "relative discrepancy " + sci(report.max_relative_discrepancy) + " over " +
                    std::to_string(report.squared_volumes.size()) + " subsets");
    all_ok &= ok;
  } else {
    std::cout << "SKIP subset-identity: N = " << s.cols() << " exceeds the enumeration limit of "
              << spread::kMaxSubsetColumns << '\n';
  }

  // Sampled central differences against the analytic Euclidean gradient.
  {
    const MatrixXd g = spread::euclidean_gradient(h, v);
    const Eigen::Index total = v.size();
    const Eigen::Index samples = std::min<Eigen::Index>(kVerifyGradientSamples, total);
    VectorXd analytic(samples), numeric(samples);
    for (Eigen::Index k = 0; k < samples; ++k) {
      const Eigen::Index flat = samples == total ? k : (k * 7919) % total;
      const Eigen::Index row = flat % v.rows();
      const Eigen::Index col = flat / v.rows();
      analytic(k) = g(row, col);
      numeric(k) = spread::fd_gradient_entry(h, v, kVerifyFdStep, row, col);
    }
    const double err = spread::relative_error(numeric, analytic, 1e-8);
    const bool ok = err <= kVerifyGradient;
    print_check("gradient", ok,
                "relative error " + sci(err) + " over " + std::to_string(samples) + " coordinates");
    all_ok &= ok;
  }

  // Riemannian and Euclidean Hessian bounds on random unit tangent directions.
  if (feas_ok) {
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double euclid_bound = constants.euclidean_hessian_bound;
    double worst_riem = 0, worst_euclid = 0;
    for (int probe = 0; probe < kVerifyHessianProbes; ++probe) {
      MatrixXd u(v.rows(), v.cols());
      for (Eigen::Index k = 0; k < u.size(); ++k) u.data()[k] = normal(rng);
      u = spread::project_tangent_columns(v, radii.alphas, u);
      u /= u.norm();
      worst_riem = std::max(worst_riem, spread::hessian_action(h, v, radii.alphas, u).norm());
      worst_euclid = std::max(worst_euclid, spread::euclidean_hessian_action(h, v, u).norm());
    }
    const double margin = constants.global - worst_riem;
    const bool ok = margin >= 0.0 && worst_euclid <= euclid_bound;
    print_check("hessian-bound", ok,
                "L − max‖Hess[U]‖ = " + sci(margin) + ", Euclidean margin " +
                    sci(euclid_bound - worst_euclid));
    all_ok &= ok;
  } else {
    std::cout << "SKIP hessian-bound: steering is off the manifold\n";
  }

  if (!trace_path.empty()) {
    const auto trace = spread::io::read_trace_file(trace_path);
    const auto report = spread::certify_stationarity(trace, constants,
                                                     std::numeric_limits<double>::infinity());
    const bool ok = report.envelope_ok && report.monotone_ok;
    print_check("trace", ok,
                "envelope " + std::string(report.envelope_ok ? "held" : "violated") +
                    " (max ratio " + sci(report.max_envelope_ratio) + "), descent " +
                    (report.monotone_ok ? "monotone" : "non-monotone"));
    all_ok &= ok;
  }
  return all_ok ? kExitOk : kExitCheckFailed;
}

int run_trace(const CommonOptions& opts, const std::string& trace_path, std::optional<double> tol) {
  const auto config = resolve_config(opts);
  const MatrixXd h = spread::io::read_activation_file(opts.input).values;
  const auto radii = spread::resolve_radii(h, config);
  const auto constants = spread::smoothness_constants(h, radii);
  const auto trace = spread::io::read_trace_file(trace_path);
  if (trace.records.empty()) throw spread::Error(ErrorCode::Parse, "trace is empty");

  std::cout << std::setw(6) << "k" << std::setw(22) << "ell" << std::setw(14) << "grad_norm"
            << std::setw(14) << "envelope" << std::setw(14) << "feas" << std::setw(22) << "Z"
            << '\n';
  const double ell0 = trace.records.front().objective;
  for (const auto& rec : trace.records) {
    std::cout << std::setw(6) << rec.iteration << std::setw(22) << std::setprecision(15)
              << rec.objective << std::setw(14) << std::setprecision(6) << rec.grad_norm
              << std::setw(14);
    if (rec.iteration > 0) {
      std::cout << constants.envelope(ell0, rec.iteration);
    } else {
      std::cout << "-";
    }
    std::cout << std::setw(14) << rec.feasibility_residual << std::setw(22)
              << std::setprecision(15) << rec.z << '\n';
  }
  const auto report = spread::certify_stationarity(
      trace, constants, tol.value_or(std::numeric_limits<double>::infinity()));
  std::cout << "rate constant C = " << sci(constants.rate)
            << ", lower bound = " << constants.objective_lower_bound << '\n';
  std::cout << "envelope: " << (report.envelope_ok ? "held" : "violated")
            << ", descent: " << (report.monotone_ok ? "monotone" : "non-monotone");
  if (tol) std::cout << ", final grad ≤ " << sci(*tol) << ": " << (report.final_grad_ok ? "yes" : "no");
  std::cout << '\n';
  const bool ok = report.envelope_ok && report.monotone_ok && (!tol || report.final_grad_ok);
  return ok ? kExitOk : kExitCheckFailed;
}

int run_bench(spread::bench::BenchOptions options, const std::string& json_path) {
  if (const char* env = std::getenv("SPREAD_THREADS")) {
    options.threads = std::max(1, std::atoi(env));
  }
  std::ofstream json_out;
  if (!json_path.empty()) {
    json_out.open(json_path, std::ios::trunc);
    if (!json_out) throw spread::Error(ErrorCode::InvalidArgument, "cannot open " + json_path);
  }
  std::cout << std::setw(8) << "p" << std::setw(6) << "N" << std::setw(6) << "K" << std::setw(9)
            << "repeats" << std::setw(14) << "mean_s" << std::setw(14) << "stddev_s" << '\n';
  spread::bench::run(options, [&](const spread::bench::BenchCell& cell) {
    std::cout << std::setw(8) << cell.p << std::setw(6) << cell.n << std::setw(6) << cell.iters
              << std::setw(9) << cell.seconds.size() << std::setw(14) << std::setprecision(6)
              << cell.mean_seconds << std::setw(14) << cell.stddev_seconds << std::endl;
    if (json_out) {
      nlohmann::ordered_json line;
      line["p"] = cell.p;
      line["N"] = cell.n;
      line["K"] = cell.iters;
      line["repeats"] = cell.seconds.size();
      line["mean_s"] = cell.mean_seconds;
      line["stddev_s"] = cell.stddev_seconds;
      json_out << line.dump() << std::endl;
    }
  });
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diversity-maximizing steering vectors on a product of spheres"};
  app.require_subcommand(1);

  CommonOptions solve_opts;
  std::string out_v, out_trace;
  double z_offset = 0.0;
  auto* solve_cmd = app.add_subcommand("solve", "compute steering vectors for an activation file");
  solve_cmd->add_option("--input", solve_opts.input, "activation file (SPRD)")->required();
  add_config_options(solve_cmd, solve_opts);
  solve_cmd->add_option("--out-v", out_v, "output steering file (SPRD, float64)")->required();
  solve_cmd->add_option("--out-trace", out_trace, "output trace (JSON lines)")->required();
  solve_cmd->add_option("--z-offset", z_offset, "diversity proxy accumulated by earlier solves");

  CommonOptions radii_opts;
  auto* radii_cmd = app.add_subcommand("radii", "print alpha_i for an activation file");
  radii_cmd->add_option("--input", radii_opts.input, "activation file (SPRD)")->required();
  add_config_options(radii_cmd, radii_opts);

  CommonOptions verify_opts;
  std::string steering_path, verify_trace;
  auto* verify_cmd = app.add_subcommand("verify", "check a steering solution against the oracles");
  verify_cmd->add_option("--input", verify_opts.input, "activation file (SPRD)")->required();
  verify_cmd->add_option("--steering", steering_path, "steering file (SPRD)")->required();
  verify_cmd->add_option("--trace", verify_trace, "solve trace to certify");
  add_config_options(verify_cmd, verify_opts);

  spread::bench::BenchOptions bench_opts;
  std::string bench_json;
  auto* bench_cmd = app.add_subcommand("bench", "wall-clock sweep over (p, N)");
  bench_cmd->add_option("--p-list", bench_opts.p_values, "hidden dimensions")->delimiter(',');
  bench_cmd->add_option("--n-list", bench_opts.n_values, "sequence counts")->delimiter(',');
  bench_cmd->add_option("-K,--iters", bench_opts.iters, "outer iterations");
  bench_cmd->add_option("--repeats", bench_opts.repeats, "runs per cell")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench_opts.seed, "synthetic data seed");
  bench_cmd->add_option("--json", bench_json, "write one JSON line per cell to this path");

  CommonOptions trace_opts;
  std::string trace_path;
  std::optional<double> trace_tol;
  auto* trace_cmd = app.add_subcommand("trace", "tabulate and certify a solve trace");
  trace_cmd->add_option("--input", trace_opts.input, "activation file the trace was solved on")
      ->required();
  trace_cmd->add_option("--trace", trace_path, "trace file (JSON lines)")->required();
  trace_cmd->add_option("--tol", trace_tol, "require final gradient norm <= tol");
  add_config_options(trace_cmd, trace_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitParse;
  }

  try {
    if (*solve_cmd) return run_solve(solve_opts, out_v, out_trace, z_offset);
    if (*radii_cmd) return run_radii(radii_opts);
    if (*verify_cmd) return run_verify(verify_opts, steering_path, verify_trace);
    if (*bench_cmd) return run_bench(bench_opts, bench_json);
    if (*trace_cmd) return run_trace(trace_opts, trace_path, trace_tol);
  } catch (const spread::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
