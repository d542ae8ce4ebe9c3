#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lrnerv/tensor.hpp"

// "LRNV" binary tensor container.
//
//   bytes  field
//   4      magic "LRNV"
//   u32    format version (kContainerVersion)
//   u32    metadata length, then that many bytes of UTF-8 text
//   u32    record count
//   per record:
//     u16  name length, then name bytes
//     u8   dtype tag (0 = F32, 1 = I8)
//     u8   rank, then rank x u32 extents
//     I8 only: u8 bit width, u32 scale count, scale count x f64 scales
//     payload: numel x f32 (F32) or numel x i8 (I8)
//
// All multi-byte values are little-endian.
namespace lrnerv {

inline constexpr std::uint32_t kContainerVersion = 1;

enum class DType : std::uint8_t { kF32 = 0, kI8 = 1 };

struct TensorRecord {
  std::string name;
  DType dtype = DType::kF32;
  Shape shape;
  std::vector<float> f32;
  std::vector<std::int8_t> i8;
  std::uint8_t bits = 8;
  std::vector<double> scales;
};

struct Container {
  std::string metadata;
  std::vector<TensorRecord> records;

  const TensorRecord* find(const std::string& name) const;
};

// Throws std::runtime_error with "bad magic", "unsupported format version",
// "truncated payload" or "unknown dtype tag" diagnostics.
std::vector<std::uint8_t> encode_container(const Container& c);
Container decode_container(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

// F32 record from a double tensor (values rounded to float32).
TensorRecord f32_record(std::string name, const Tensor& t);
Tensor tensor_from_f32(const TensorRecord& r);

}  // namespace lrnerv
