#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "spread/io.hpp"
#include "support/test_support.hpp"

using namespace spread;
using namespace spread::io;

namespace {

std::vector<std::uint8_t> header(std::uint8_t dtype, std::uint32_t p, std::uint32_t n) {
  std::vector<std::uint8_t> bytes = {'S', 'P', 'R', 'D', 1, 0, dtype, 0};
  for (std::uint32_t value : {p, n}) {
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<std::uint8_t>(value >> (8 * b)));
  }
  return bytes;
}

void append_f64(std::vector<std::uint8_t>& bytes, double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, sizeof bits);
  for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

void append_f32(std::vector<std::uint8_t>& bytes, float value) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, sizeof bits);
  for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

ErrorCode parse_failure(const std::vector<std::uint8_t>& bytes) {
  try {
    parse_activation_bytes(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "parse succeeded";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(ActivationFile, HandWrittenLayout) {
  auto bytes = header(1, 2, 3);
  for (int k = 0; k < 6; ++k) append_f64(bytes, 0.5 * k - 1.0);
  const auto file = parse_activation_bytes(bytes);
  EXPECT_EQ(file.dtype, Dtype::Float64);
  ASSERT_EQ(file.values.rows(), 2);
  ASSERT_EQ(file.values.cols(), 3);
  // column-major
  EXPECT_EQ(file.values(1, 0), -0.5);
  EXPECT_EQ(file.values(0, 1), 0.0);
  EXPECT_EQ(file.values(1, 2), 1.5);
  EXPECT_EQ(serialize_activation(file), bytes);
}

TEST(ActivationFile, RoundTripIsByteIdentical) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> dim(0, 9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto dtype = trial % 2 == 0 ? Dtype::Float32 : Dtype::Float64;
    const auto p = static_cast<std::uint32_t>(dim(rng));
    const auto n = static_cast<std::uint32_t>(dim(rng));
    auto bytes = header(static_cast<std::uint8_t>(dtype), p, n);
    std::normal_distribution<double> normal(0.0, 100.0);
    for (std::uint32_t k = 0; k < p * n; ++k) {
      if (dtype == Dtype::Float32) {
        append_f32(bytes, static_cast<float>(normal(rng)));
      } else {
        append_f64(bytes, normal(rng));
      }
    }
    EXPECT_EQ(serialize_activation(parse_activation_bytes(bytes)), bytes);
  }
}

TEST(ActivationFile, SinglePrecisionWidened) {
  auto bytes = header(0, 1, 2);
  append_f32(bytes, 0.1f);
  append_f32(bytes, -3.0f);
  const auto file = parse_activation_bytes(bytes);
  EXPECT_EQ(file.dtype, Dtype::Float32);
  EXPECT_EQ(file.values(0, 0), static_cast<double>(0.1f));
  EXPECT_EQ(file.values(0, 1), -3.0);
}

TEST(ActivationFile, MalformedInputs) {
  auto good = header(1, 1, 1);
  append_f64(good, 2.0);

  EXPECT_EQ(parse_failure({'S', 'P', 'R'}), ErrorCode::Parse);

  auto truncated = good;
  truncated.pop_back();
  EXPECT_EQ(parse_failure(truncated), ErrorCode::Parse);

  auto trailing = good;
  trailing.push_back(0);
  EXPECT_EQ(parse_failure(trailing), ErrorCode::Parse);

  auto magic = good;
  magic[0] = 'X';
  EXPECT_EQ(parse_failure(magic), ErrorCode::Parse);

  auto version = good;
  version[4] = 2;
  EXPECT_EQ(parse_failure(version), ErrorCode::Parse);

  auto dtype = good;
  dtype[6] = 2;
  EXPECT_EQ(parse_failure(dtype), ErrorCode::Parse);

  auto reserved = good;
  reserved[7] = 1;
  EXPECT_EQ(parse_failure(reserved), ErrorCode::Parse);
}

TEST(ActivationFile, NonFiniteNamesColumn) {
  auto bytes = header(1, 2, 2);
  for (double x : {1.0, 2.0, 3.0, std::nan("")}) append_f64(bytes, x);
  try {
    parse_activation_bytes(bytes);
    FAIL() << "expected NonFinite";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFinite);
    EXPECT_EQ(e.index(), 1);
  }
}

TEST(ActivationFile, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "spread_io_roundtrip.sprd";
  std::mt19937_64 rng(2);
  ActivationFile file;
  file.values = spread::testing::random_matrix(4, 3, rng);
  write_activation_file(path, file);
  const auto back = read_activation_file(path);
  EXPECT_EQ(back.values, file.values);
  EXPECT_EQ(std::filesystem::file_size(path), 16u + 4 * 3 * 8);
  std::filesystem::remove(path);
  EXPECT_THROW(read_activation_file(path), Error);
}

TEST(RunConfig, Defaults) {
  const auto config = parse_run_config("{}");
  EXPECT_EQ(config.iters, 20);
  EXPECT_EQ(config.radius_scale, 1.0);
  EXPECT_EQ(config.seed, 42u);
  EXPECT_FALSE(config.init_noise_sigma.has_value());
  EXPECT_EQ(config.step_policy.kind, StepPolicy::Kind::TheoremRate);
  EXPECT_EQ(config.early_stop_grad_tol, 0.0);
  EXPECT_FALSE(config.explicit_alphas.has_value());
}

TEST(RunConfig, AllKeys) {
  const auto config = parse_run_config(R"({
    "radius_scale": 10, "iters": 400, "seed": 7, "init_noise_sigma": 0.25,
    "step_policy": {"fixed": 0.5}, "early_stop_grad_tol": 1e-8,
    "explicit_alphas": [0.5, 1, 2]
  })");
  EXPECT_EQ(config.radius_scale, 10.0);
  EXPECT_EQ(config.iters, 400);
  EXPECT_EQ(config.seed, 7u);
  EXPECT_EQ(config.init_noise_sigma, 0.25);
  EXPECT_EQ(config.step_policy.kind, StepPolicy::Kind::Fixed);
  EXPECT_EQ(config.step_policy.fixed_step, 0.5);
  EXPECT_EQ(config.early_stop_grad_tol, 1e-8);
  ASSERT_TRUE(config.explicit_alphas.has_value());
  EXPECT_EQ(*config.explicit_alphas, (VectorXd(3) << 0.5, 1.0, 2.0).finished());

  const auto named = parse_run_config(R"({"init_noise_sigma": "auto", "step_policy": "theorem_rate"})");
  EXPECT_FALSE(named.init_noise_sigma.has_value());
  EXPECT_EQ(named.step_policy.kind, StepPolicy::Kind::TheoremRate);
}

TEST(RunConfig, StrictParsing) {
  for (const char* text : {
           R"({"iters": 20, "learning_rate": 0.1})",
           R"({"iters": 2.5})",
           R"({"iters": -1})",
           R"({"seed": -4})",
           R"({"radius_scale": 0})",
           R"({"radius_scale": "1"})",
           R"({"step_policy": "armijo"})",
           R"({"step_policy": {"fixed": 0}})",
           R"({"init_noise_sigma": "tiny"})",
           R"({"explicit_alphas": 1.0})",
           R"([1, 2])",
           R"({"iters": )",
       }) {
    try {
      parse_run_config(text);
      ADD_FAILURE() << "accepted " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Parse) << text;
    }
  }
}

TEST(Trace, RoundTrip) {
  SolveTrace<double> trace;
  for (long k = 0; k < 4; ++k) {
    TraceRecord<double> rec;
    rec.iteration = k;
    rec.objective = -0.1 * std::sqrt(static_cast<double>(k) + 2.0);
    rec.grad_norm = std::exp(-static_cast<double>(k));
    rec.feasibility_residual = 1e-17 * static_cast<double>(k);
    rec.z = 1.0 / 3.0 - rec.objective;
    trace.records.push_back(rec);
  }
  std::stringstream out;
  write_trace(out, trace);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            R"({"k":0,"ell":-0.14142135623730953,"grad_norm":1.0,"feas_residual":0.0,"Z":0.4747546895706428})");

  std::stringstream in(text);
  const auto back = read_trace(in);
  ASSERT_EQ(back.records.size(), trace.records.size());
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    EXPECT_EQ(back.records[k].iteration, trace.records[k].iteration);
    EXPECT_EQ(back.records[k].objective, trace.records[k].objective);
    EXPECT_EQ(back.records[k].grad_norm, trace.records[k].grad_norm);
    EXPECT_EQ(back.records[k].feasibility_residual, trace.records[k].feasibility_residual);
    EXPECT_EQ(back.records[k].z, trace.records[k].z);
  }
}

TEST(Trace, MalformedLineNamesLine) {
  std::stringstream in("{\"k\":0,\"ell\":0,\"grad_norm\":0,\"feas_residual\":0,\"Z\":0}\n{\"k\":1}\n");
  try {
    read_trace(in);
    FAIL() << "expected Parse";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
    EXPECT_EQ(e.index(), 2);
  }
}
