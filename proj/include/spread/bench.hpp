#ifndef SPREAD_BENCH_HPP
#define SPREAD_BENCH_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "spread/linalg.hpp"

namespace spread::bench {

struct BenchOptions {
  std::vector<long> p_values = {1536, 4096, 8192, 16384};
  std::vector<long> n_values = {8, 16, 32};
  int iters = 20;
  int repeats = 30;
  std::uint64_t seed = 42;
  int threads = 1;  // cells run concurrently when > 1
};

struct BenchCell {
  long p = 0;
  long n = 0;
  int iters = 0;
  std::vector<double> seconds;  // one wall time per repeat
  double mean_seconds = 0;
  double stddev_seconds = 0;  // sample standard deviation, 0 for one repeat
  double final_objective = 0;  // ℓ(V^(K)) of the last repeat
};

/// Standard-normal activations for one (cell, repeat), seeded deterministically.
MatrixXd synthetic_activations(long p, long n, std::uint64_t seed);

/// Times one full solve (radii, initialization, K outer iterations) per repeat.
std::vector<BenchCell> run(const BenchOptions& options,
                           const std::function<void(const BenchCell&)>& on_cell = {});

}  // namespace spread::bench

#endif  // SPREAD_BENCH_HPP
