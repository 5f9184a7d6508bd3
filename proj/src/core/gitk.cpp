#include "core/gitk.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "core/error.hpp"

namespace ghostkit::gitk {
namespace {

template <typename U>
void put(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

template <typename U>
U get(std::span<const std::uint8_t> in, std::size_t& pos) {
  require(pos + sizeof(U) <= in.size(), ErrorCode::Io, "GITK: truncated header");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= U(in[pos + i]) << (8 * i);
  pos += sizeof(U);
  return v;
}

template <typename U, typename V>
std::vector<std::uint8_t> pack(std::span<const V> values) {
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * sizeof(U));
  for (V v : values) put(out, std::bit_cast<U>(v));
  return out;
}

void check_metadata(const std::string& text) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Io, std::string("GITK: metadata is not valid JSON: ") + e.what());
  }
  require(parsed.is_object(), ErrorCode::Io, "GITK: metadata must be a JSON object");
}

Array make(Dtype dtype, std::vector<std::uint64_t> dims, std::vector<std::uint8_t> payload,
           std::string metadata) {
  Array a;
  a.dtype = dtype;
  a.dims = std::move(dims);
  a.payload = std::move(payload);
  a.metadata = metadata.empty() ? "{}" : std::move(metadata);
  require(a.payload.size() == a.elements() * dtype_size(dtype), ErrorCode::Shape,
          "GITK: value count does not match dims");
  check_metadata(a.metadata);
  return a;
}

}  // namespace

std::size_t dtype_size(Dtype dtype) {
  switch (dtype) {
    case Dtype::F32: return 4;
    case Dtype::F64: return 8;
    case Dtype::U16: return 2;
  }
  fail(ErrorCode::Io, "GITK: unknown dtype code " + std::to_string(std::uint32_t(dtype)));
}

std::uint64_t Array::elements() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

Array from_f64(std::vector<std::uint64_t> dims, std::span<const double> values, std::string metadata) {
  return make(Dtype::F64, std::move(dims), pack<std::uint64_t>(values), std::move(metadata));
}

Array from_f32(std::vector<std::uint64_t> dims, std::span<const float> values, std::string metadata) {
  return make(Dtype::F32, std::move(dims), pack<std::uint32_t>(values), std::move(metadata));
}

Array from_u16(std::vector<std::uint64_t> dims, std::span<const std::uint16_t> values,
               std::string metadata) {
  return make(Dtype::U16, std::move(dims), pack<std::uint16_t>(values), std::move(metadata));
}

std::vector<double> to_f64(const Array& a) {
  const std::size_t n = a.elements();
  std::vector<double> out(n);
  std::size_t pos = 0;
  const std::span<const std::uint8_t> bytes(a.payload);
  for (std::size_t i = 0; i < n; ++i) {
    switch (a.dtype) {
      case Dtype::F32: out[i] = std::bit_cast<float>(get<std::uint32_t>(bytes, pos)); break;
      case Dtype::F64: out[i] = std::bit_cast<double>(get<std::uint64_t>(bytes, pos)); break;
      case Dtype::U16: out[i] = get<std::uint16_t>(bytes, pos); break;
    }
  }
  return out;
}

std::vector<float> to_f32(const Array& a) {
  const auto wide = to_f64(a);
  return {wide.begin(), wide.end()};
}

std::vector<std::uint8_t> encode(const Array& a) {
  require(a.payload.size() == a.elements() * dtype_size(a.dtype), ErrorCode::Shape,
          "GITK: payload size does not match dims");
  std::vector<std::uint8_t> out{'G', 'I', 'T', 'K'};
  put(out, kVersion);
  put(out, std::uint32_t(a.dtype));
  put(out, std::uint32_t(a.dims.size()));
  for (auto d : a.dims) put(out, d);
  out.insert(out.end(), a.payload.begin(), a.payload.end());
  const std::string& meta = a.metadata.empty() ? std::string("{}") : a.metadata;
  put(out, std::uint64_t(meta.size()));
  out.insert(out.end(), meta.begin(), meta.end());
  return out;
}

Array decode(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 4 && std::memcmp(bytes.data(), "GITK", 4) == 0, ErrorCode::Io,
          "GITK: bad magic");
  std::size_t pos = 4;
  const auto version = get<std::uint32_t>(bytes, pos);
  require(version == kVersion, ErrorCode::Io, "GITK: unsupported version " + std::to_string(version));
  const auto dtype = static_cast<Dtype>(get<std::uint32_t>(bytes, pos));
  const std::size_t width = dtype_size(dtype);
  const auto ndim = get<std::uint32_t>(bytes, pos);
  require(ndim <= 16, ErrorCode::Io, "GITK: implausible rank " + std::to_string(ndim));
  std::vector<std::uint64_t> dims(ndim);
  for (auto& d : dims) d = get<std::uint64_t>(bytes, pos);
  Array a;
  a.dtype = dtype;
  a.dims = dims;
  const std::uint64_t n = a.elements();
  require(n <= bytes.size() / width && pos + n * width <= bytes.size(), ErrorCode::Io,
          "GITK: truncated payload");
  a.payload.assign(bytes.begin() + std::ptrdiff_t(pos), bytes.begin() + std::ptrdiff_t(pos + n * width));
  pos += n * width;
  const auto meta_len = get<std::uint64_t>(bytes, pos);
  require(meta_len == bytes.size() - pos, ErrorCode::Io,
          "GITK: metadata length does not match the remaining bytes");
  a.metadata.assign(reinterpret_cast<const char*>(bytes.data()) + pos, meta_len);
  check_metadata(a.metadata);
  return a;
}

void write_file(const std::string& path, const Array& array) {
  const auto bytes = encode(array);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(bool(f), ErrorCode::Io, "cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  require(bool(f), ErrorCode::Io, "failed writing '" + path + "'");
}

Array read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(bool(f), ErrorCode::Io, "cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

}  // namespace ghostkit::gitk
