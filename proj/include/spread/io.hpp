#ifndef SPREAD_IO_HPP
#define SPREAD_IO_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "spread/linalg.hpp"
#include "spread/solver.hpp"

namespace spread::io {

/// Binary activation/steering matrix:
///
///   offset  size  field
///   0       4     magic "SPRD"
///   4       2     version (u16, = 1)
///   6       1     dtype (u8, 0 = float32, 1 = float64)
///   7       1     reserved (u8, = 0)
///   8       4     p (u32)
///   12      4     N (u32)
///   16      ...   p·N values, column-major
///
/// All integers and floats little-endian.
enum class Dtype : std::uint8_t { Float32 = 0, Float64 = 1 };

inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 16;

struct ActivationFile {
  Dtype dtype = Dtype::Float64;
  MatrixXd values;  // widened to double on read
};

ActivationFile parse_activation_bytes(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> serialize_activation(const ActivationFile& file);

ActivationFile read_activation_file(const std::filesystem::path& path);
void write_activation_file(const std::filesystem::path& path, const ActivationFile& file);

/// Strict JSON run configuration. Unknown keys are rejected.
SolverConfig parse_run_config(const std::string& text);
SolverConfig load_run_config(const std::filesystem::path& path);

/// One JSON object per line: {"k","ell","grad_norm","feas_residual","Z"}.
void write_trace(std::ostream& out, const SolveTrace<double>& trace);
void write_trace_file(const std::filesystem::path& path, const SolveTrace<double>& trace);
SolveTrace<double> read_trace(std::istream& in);
SolveTrace<double> read_trace_file(const std::filesystem::path& path);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace spread::io

#endif  // SPREAD_IO_HPP
