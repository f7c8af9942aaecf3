#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>

#include "spread/error.hpp"
#include "spread/io.hpp"

namespace spread::io {
namespace {

constexpr std::string_view kMagic = "SPRD";

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    out.push_back(static_cast<std::uint8_t>((value >> (8 * b)) & 0xFFu));
  }
}

template <typename T>
T get_le(const std::vector<std::uint8_t>& in, std::size_t offset) {
  T value = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    value |= static_cast<T>(static_cast<T>(in[offset + b]) << (8 * b));
  }
  return value;
}

Error parse_error(const std::string& what) { return Error(ErrorCode::Parse, what); }

}  // namespace

ActivationFile parse_activation_bytes(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw parse_error("file shorter than the 16-byte header");
  }
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw parse_error("bad magic, expected SPRD");
  }
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kFormatVersion) {
    throw parse_error("unsupported version " + std::to_string(version));
  }
  const std::uint8_t dtype = bytes[6];
  if (dtype > 1) {
    throw parse_error("unknown dtype " + std::to_string(dtype));
  }
  if (bytes[7] != 0) {
    throw parse_error("reserved byte must be zero");
  }
  const auto p = get_le<std::uint32_t>(bytes, 8);
  const auto n = get_le<std::uint32_t>(bytes, 12);
  const std::size_t width = dtype == 0 ? 4 : 8;
  const std::uint64_t expected = std::uint64_t{p} * n * width;
  if (bytes.size() - kHeaderBytes != expected) {
    throw parse_error("payload is " + std::to_string(bytes.size() - kHeaderBytes) +
                      " bytes, header implies " + std::to_string(expected));
  }

  ActivationFile file;
  file.dtype = static_cast<Dtype>(dtype);
  file.values.resize(p, n);
  double* out = file.values.data();
  const std::size_t count = std::size_t{p} * n;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t offset = kHeaderBytes + k * width;
    const double value = dtype == 0
                             ? static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset)))
                             : std::bit_cast<double>(get_le<std::uint64_t>(bytes, offset));
    if (!std::isfinite(value)) {
      const long column = p == 0 ? 0 : static_cast<long>(k / p);
      throw Error(ErrorCode::NonFinite,
                  "non-finite value at row " + std::to_string(k % p) + ", column " +
                      std::to_string(column),
                  column);
    }
    out[k] = value;
  }
  return file;
}

std::vector<std::uint8_t> serialize_activation(const ActivationFile& file) {
  const auto p = static_cast<std::uint32_t>(file.values.rows());
  const auto n = static_cast<std::uint32_t>(file.values.cols());
  const std::size_t width = file.dtype == Dtype::Float32 ? 4 : 8;
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + std::size_t{p} * n * width);
  for (char c : kMagic) out.push_back(static_cast<std::uint8_t>(c));
  put_le<std::uint16_t>(out, kFormatVersion);
  out.push_back(static_cast<std::uint8_t>(file.dtype));
  out.push_back(0);
  put_le<std::uint32_t>(out, p);
  put_le<std::uint32_t>(out, n);
  const double* values = file.values.data();
  for (std::size_t k = 0; k < std::size_t{p} * n; ++k) {
    if (file.dtype == Dtype::Float32) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(values[k])));
    } else {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(values[k]));
    }
  }
  return out;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::Parse, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string() + " for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCode::InvalidArgument, "write failed for " + path.string());
  }
}

ActivationFile read_activation_file(const std::filesystem::path& path) {
  return parse_activation_bytes(read_bytes(path));
}

void write_activation_file(const std::filesystem::path& path, const ActivationFile& file) {
  write_bytes(path, serialize_activation(file));
}

}  // namespace spread::io
