// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spread/io.hpp"
#include "spread/objective.hpp"
#include "spread/oracle.hpp"
#include "spread/solver.hpp"
#include "support/test_support.hpp"

namespace fs = std::filesystem;
using namespace spread;
using spread::testing::random_alphas;
using spread::testing::random_feasible;
using spread::testing::random_matrix;
using spread::testing::random_tangent;

namespace {

// Criterion 1
constexpr int kSubsetInstances = 200;
constexpr double kSubsetTol = 1e-9;
constexpr double kSubsetSeconds = 30.0;
// Criterion 2
constexpr int kGradientInstances = 50;
constexpr double kFdStep = 1e-5;
constexpr double kGradientTol = 1e-6;
constexpr double kTangencyTol = 1e-10;
// Criterion 3
constexpr int kHessianInstances = 50;
constexpr double kHessianStep = 1e-4;
constexpr double kHessianTol = 1e-4;
constexpr double kSymmetryTol = 1e-9;
// Criteria 4 and 5
constexpr int kDescentIters = 50;
constexpr long kEnvelopeHorizon = 200;
constexpr int kStationarityIters = 400;
constexpr double kStationarityReduction = 1e-4;
constexpr double kStationarityShare = 0.9;
constexpr double kFeasibilityTol = 1e-9;
// Criterion 6
constexpr double kExampleTol = 1e-12;
// Criterion 7
constexpr double kRuntimeBudgetSeconds = 5.0;
constexpr double kNoiseSigmas = 3.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

int run_command(const std::string& command, std::string* output = nullptr) {
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  if (!pipe) return -1;
  char buffer[4096];
  std::string text;
  while (std::size_t n = std::fread(buffer, 1, sizeof buffer, pipe)) text.append(buffer, n);
  const int status = pclose(pipe);
  if (output) *output = std::move(text);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Outcome subset_identity() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> rows(1, 8), cols(1, 10);
  double worst = 0;
  for (int trial = 0; trial < kSubsetInstances; ++trial) {
    const MatrixXd s = random_matrix(rows(rng), cols(rng), rng);
    worst = std::max(worst, subset_volume_sum(s).max_relative_discrepancy);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= kSubsetTol && seconds <= kSubsetSeconds,
          std::to_string(kSubsetInstances) + " instances, max discrepancy " + fmt(worst) + " in " +
              fmt(seconds) + " s"};
}

Outcome gradient_correctness() {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> rows(1, 16), cols(1, 6);
  double worst_fd = 0, worst_tangency = 0;
  for (int trial = 0; trial < kGradientInstances; ++trial) {
    const Eigen::Index p = rows(rng), n = cols(rng);
    const MatrixXd h = random_matrix(p, n, rng);
    const VectorXd alphas = random_alphas(n, rng);
    const MatrixXd v = random_feasible(p, alphas, rng);
    worst_fd = std::max(worst_fd, relative_error(fd_gradient(h, v, kFdStep), euclidean_gradient(h, v)));
    const MatrixXd grad = riemannian_gradient(h, v, alphas);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double scale = grad.col(i).norm() * std::sqrt(alphas(i));
      if (scale > 0) {
        worst_tangency = std::max(worst_tangency, std::abs(grad.col(i).dot(v.col(i))) / scale);
      }
    }
  }
  return {worst_fd <= kGradientTol && worst_tangency <= kTangencyTol,
          std::to_string(kGradientInstances) + " instances, finite-difference error " +
              fmt(worst_fd) + ", tangency " + fmt(worst_tangency)};
}

Outcome hessian_correctness() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> rows(2, 8), cols(1, 5);
  double worst_fd = 0, worst_symmetry = 0, worst_bound_ratio = 0;
  for (int trial = 0; trial < kHessianInstances; ++trial) {
    const Eigen::Index p = rows(rng), n = cols(rng);
    const MatrixXd h = random_matrix(p, n, rng);
    const VectorXd alphas = random_alphas(n, rng);
    const MatrixXd v = random_feasible(p, alphas, rng);
    const MatrixXd u1 = random_tangent(v, alphas, rng);
    const MatrixXd u2 = random_tangent(v, alphas, rng);
    const MatrixXd hess1 = hessian_action(h, v, alphas, u1);
    worst_fd = std::max(worst_fd, relative_error(fd_hessian_action_extrapolated(h, v, alphas, u1,
                                                                               kHessianStep),
                                                 hess1));
    const double a = hess1.cwiseProduct(u2).sum();
    const double b = hessian_action(h, v, alphas, u2).cwiseProduct(u1).sum();
    worst_symmetry = std::max(worst_symmetry, std::abs(a - b) / std::max(std::abs(a), std::abs(b)));

    const auto constants = smoothness_constants(h, RadiusSchedule<double>(alphas));
    for (int probe = 0; probe < 4; ++probe) {
      MatrixXd u = random_matrix(p, n, rng);
      u /= u.norm();
      worst_bound_ratio = std::max(worst_bound_ratio, euclidean_hessian_action(h, v, u).norm() /
                                                          constants.euclidean_hessian_bound);
    }
  }
  return {worst_fd <= kHessianTol && worst_symmetry <= kSymmetryTol && worst_bound_ratio <= 1.0,
          std::to_string(kHessianInstances) + " instances, transported difference error " +
              fmt(worst_fd) + ", symmetry " + fmt(worst_symmetry) +
              ", max ‖∇²ℓ[U]‖/bound " + fmt(worst_bound_ratio)};
}

struct BatteryInstance {
  int p;
  int n;
  MatrixXd h;
  std::uint64_t seed;
};

std::vector<BatteryInstance> battery() {
  std::vector<BatteryInstance> out;
  for (int p : {4, 16, 64}) {
    for (int n : {2, 4, 8}) {
      for (std::uint64_t s = 0; s < 12; ++s) {
        std::mt19937_64 rng(100000 * p + 1000 * n + s);
        out.push_back({p, n, random_matrix(p, n, rng), s});
      }
    }
  }
  return out;
}

Outcome descent(const std::vector<BatteryInstance>& instances) {
  int monotone_failures = 0, feasibility_failures = 0;
  double worst_excess = 0, worst_feasibility = 0;
  for (const auto& inst : instances) {
    SolverConfig config;
    config.iters = kDescentIters;
    config.seed = inst.seed;
    const auto result = solve(inst.h, config);
    const auto report = certify_stationarity(result.trace, result.constants, INFINITY);
    if (!report.monotone_ok) ++monotone_failures;
    worst_excess = std::max(worst_excess, report.max_monotone_excess);
    bool feasible = true;
    for (const auto& rec : result.trace.records) {
      const double f = std::max(rec.relative_feasibility, rec.max_block_relative_feasibility);
      worst_feasibility = std::max(worst_feasibility, f);
      feasible &= f <= kFeasibilityTol;
    }
    if (!feasible) ++feasibility_failures;
  }
  return {monotone_failures == 0 && feasibility_failures == 0 && instances.size() >= 100,
          std::to_string(instances.size()) + " instances, " + std::to_string(monotone_failures) +
              " non-monotone (max excess " + fmt(worst_excess) + "), " +
              std::to_string(feasibility_failures) + " infeasible (max " + fmt(worst_feasibility) +
              ")"};
}

Outcome envelope(const std::vector<BatteryInstance>& instances) {
  int envelope_failures = 0, stationary = 0;
  double worst_ratio = 0;
  std::vector<double> reductions;
  for (const auto& inst : instances) {
    SolverConfig config;
    config.iters = kStationarityIters;
    config.seed = inst.seed;
    auto result = solve(inst.h, config);
    const double initial = result.trace.records.front().grad_norm;
    const double final_norm = result.trace.records.back().grad_norm;
    reductions.push_back(final_norm / initial);
    if (final_norm < kStationarityReduction * initial) ++stationary;

    SolveTrace<double> horizon;
    for (const auto& rec : result.trace.records) {
      if (rec.iteration <= kEnvelopeHorizon) horizon.records.push_back(rec);
    }
    const auto report = certify_stationarity(horizon, result.constants, INFINITY);
    if (!report.envelope_ok) ++envelope_failures;
    worst_ratio = std::max(worst_ratio, report.max_envelope_ratio);
  }
  std::sort(reductions.begin(), reductions.end());
  const double share = static_cast<double>(stationary) / static_cast<double>(instances.size());
  return {envelope_failures == 0 && share >= kStationarityShare,
          "envelope violated on " + std::to_string(envelope_failures) + "/" +
              std::to_string(instances.size()) + " (max ratio " + fmt(worst_ratio) +
              "); gradient reduced below " + fmt(kStationarityReduction) + " on " +
              std::to_string(stationary) + "/" + std::to_string(instances.size()) +
              " at K = " + std::to_string(kStationarityIters) + " (median reduction " +
              fmt(reductions[reductions.size() / 2]) + ")"};
}

Outcome example_values() {
  const MatrixXd h = MatrixXd::Identity(2, 2);
  const double zero = objective_value<double>(h, MatrixXd::Zero(2, 2));
  const double doubled = objective_value<double>(h, -2.0 * h);
  const double mid = objective_value<double>(h, -h);
  const double err = std::max({std::abs(zero + std::log(4.0)), std::abs(doubled + std::log(4.0)),
                               std::abs(mid)});
  return {err <= kExampleTol, "ℓ(0) = " + fmt(zero) + ", ℓ(−2I) = " + fmt(doubled) +
                                  ", ℓ(−I) = " + fmt(mid) + ", max error " + fmt(err)};
}

Outcome runtime(const fs::path& work) {
  const fs::path json = work / "bench.jsonl";
  std::string output;
  const int code = run_command(std::string(SPREAD_CLI_PATH) + " bench -K 20 --repeats 30 --json " +
                                   json.string(),
                               &output);
  if (code != 0) return {false, "bench exited with " + std::to_string(code) + ": " + output};
  std::cout << output;

  struct Cell {
    long p, n;
    double mean, sd;
    double work() const { return static_cast<double>(p) * static_cast<double>(n * n); }
  };
  std::vector<Cell> cells;
  std::ifstream in(json);
  std::string line;
  while (std::getline(in, line)) {
    const auto doc = nlohmann::json::parse(line);
    cells.push_back({doc.at("p").get<long>(), doc.at("N").get<long>(),
                     doc.at("mean_s").get<double>(), doc.at("stddev_s").get<double>()});
  }
  double largest = -1;
  for (const auto& c : cells) {
    if (c.p == 16384 && c.n == 32) largest = c.mean;
  }
  int inversions = 0;
  for (const auto& a : cells) {
    for (const auto& b : cells) {
      if (a.work() < b.work() && b.mean + kNoiseSigmas * (a.sd + b.sd) < a.mean) ++inversions;
    }
  }
  return {largest >= 0 && largest <= kRuntimeBudgetSeconds && inversions == 0,
          "p = 16384, N = 32 mean " + fmt(largest) + " s; " + std::to_string(cells.size()) +
              " cells, " + std::to_string(inversions) + " ordering inversions beyond noise"};
}

Outcome determinism(const fs::path& work) {
  std::mt19937_64 rng(8);
  io::ActivationFile input;
  input.values = random_matrix(256, 8, rng);
  const fs::path h = work / "h.sprd";
  io::write_activation_file(h, input);
  for (const char* tag : {"a", "b"}) {
    const std::string base = (work / tag).string();
    const int code = run_command(std::string(SPREAD_CLI_PATH) + " solve --input " + h.string() +
                                 " -K 20 --out-v " + base + ".sprd --out-trace " + base + ".jsonl");
    if (code != 0) return {false, "solve exited with " + std::to_string(code)};
  }
  const bool same_v = slurp(work / "a.sprd") == slurp(work / "b.sprd");
  const bool same_trace = slurp(work / "a.jsonl") == slurp(work / "b.jsonl");
  return {same_v && same_trace, std::string("steering ") + (same_v ? "identical" : "differs") +
                                    ", trace " + (same_trace ? "identical" : "differs")};
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "spread_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  const auto instances = battery();

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 subset-volume identity", subset_identity},
      {"2 gradient correctness", gradient_correctness},
      {"3 hessian correctness", hessian_correctness},
      {"4 block descent and feasibility", [&] { return descent(instances); }},
      {"5 rate envelope and stationarity", [&] { return envelope(instances); }},
      {"6 non-convexity example values", example_values},
      {"7 runtime", [&] { return runtime(work); }},
      {"8 determinism", [&] { return determinism(work); }},
  };

  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    if (!outcome.pass) ++failures;
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << name << ": " << outcome.detail << std::endl;
  }
  fs::remove_all(work);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
