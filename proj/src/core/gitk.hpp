#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ghostkit::gitk {

// On-disk layout, all integers little-endian:
//   "GITK" | u32 version | u32 dtype | u32 ndim | u64 dims[ndim]
//   | payload (row-major) | u64 metadata length | UTF-8 JSON object
enum class Dtype : std::uint32_t { F32 = 1, F64 = 2, U16 = 3 };

inline constexpr std::uint32_t kVersion = 1;

std::size_t dtype_size(Dtype dtype);

struct Array {
  Dtype dtype = Dtype::F64;
  std::vector<std::uint64_t> dims;
  // Little-endian element bytes.
  std::vector<std::uint8_t> payload;
  // Serialized JSON object; empty means "{}".
  std::string metadata = "{}";

  std::uint64_t elements() const;
};

Array from_f64(std::vector<std::uint64_t> dims, std::span<const double> values,
               std::string metadata = "{}");
Array from_f32(std::vector<std::uint64_t> dims, std::span<const float> values,
               std::string metadata = "{}");
Array from_u16(std::vector<std::uint64_t> dims, std::span<const std::uint16_t> values,
               std::string metadata = "{}");

// Element values widened to double, whatever the stored dtype.
std::vector<double> to_f64(const Array& array);
std::vector<float> to_f32(const Array& array);

std::vector<std::uint8_t> encode(const Array& array);
Array decode(std::span<const std::uint8_t> bytes);

void write_file(const std::string& path, const Array& array);
Array read_file(const std::string& path);

}  // namespace ghostkit::gitk
