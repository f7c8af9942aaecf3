#include "spread/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "spread/solver.hpp"

namespace spread::bench {

MatrixXd synthetic_activations(long p, long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd h(p, n);
  for (long c = 0; c < n; ++c) {
    for (long r = 0; r < p; ++r) h(r, c) = normal(rng);
  }
  return h;
}

namespace {

BenchCell run_cell(long p, long n, const BenchOptions& options) {
  BenchCell cell;
  cell.p = p;
  cell.n = n;
  cell.iters = options.iters;
  SolverConfig config;
  config.iters = options.iters;
  config.seed = options.seed;
  // Untimed warm-up solve so the first repeat does not pay for cold caches.
  solve(synthetic_activations(p, n, ~options.seed), config);
  for (int r = 0; r < options.repeats; ++r) {
    const std::uint64_t seed = options.seed ^ (static_cast<std::uint64_t>(p) << 32) ^
                               (static_cast<std::uint64_t>(n) << 16) ^ static_cast<std::uint64_t>(r);
    const MatrixXd h = synthetic_activations(p, n, seed);
    const auto start = std::chrono::steady_clock::now();
    const auto result = solve(h, config);
    const auto stop = std::chrono::steady_clock::now();
    cell.final_objective = result.trace.records.back().objective;
    cell.seconds.push_back(std::chrono::duration<double>(stop - start).count());
  }
  const double count = static_cast<double>(cell.seconds.size());
  cell.mean_seconds = std::accumulate(cell.seconds.begin(), cell.seconds.end(), 0.0) / count;
  if (cell.seconds.size() > 1) {
    double ss = 0;
    for (double s : cell.seconds) ss += (s - cell.mean_seconds) * (s - cell.mean_seconds);
    cell.stddev_seconds = std::sqrt(ss / (count - 1.0));
  }
  return cell;
}

}  // namespace

std::vector<BenchCell> run(const BenchOptions& options,
                           const std::function<void(const BenchCell&)>& on_cell) {
  std::vector<std::pair<long, long>> grid;
  for (long p : options.p_values) {
    for (long n : options.n_values) grid.emplace_back(p, n);
  }
  std::vector<BenchCell> cells(grid.size());
  std::mutex report_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      cells[i] = run_cell(grid[i].first, grid[i].second, options);
      if (on_cell) {
        std::lock_guard<std::mutex> lock(report_mutex);
        on_cell(cells[i]);
      }
    }
  };
  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(grid.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return cells;
}

}  // namespace spread::bench
