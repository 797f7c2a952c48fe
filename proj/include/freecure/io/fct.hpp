#pragma once

// FCT1 tensor files: "FCT1", u32 rank, u32 dims[rank], f32 values row-major, all little-endian.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "freecure/errors.hpp"
#include "freecure/tensor.hpp"

namespace freecure::io {

inline constexpr char kFctMagic[4] = {'F', 'C', 'T', '1'};

namespace detail {
inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}
inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
}  // namespace detail

inline std::vector<unsigned char> encode_fct(const Tensor& t) {
  require(t.rank() > 0, ErrorKind::invalid_argument, "FCT1 needs rank >= 1");
  for (auto d : t.shape()) require(d > 0, ErrorKind::invalid_argument, "FCT1 rejects zero-length dimensions");
  require(t.all_finite(), ErrorKind::numeric, "FCT1 tensors must be finite");
  std::vector<unsigned char> out(kFctMagic, kFctMagic + 4);
  detail::put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) detail::put_u32(out, static_cast<std::uint32_t>(d));
  out.reserve(out.size() + 4 * t.size());
  for (double v : t.values()) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

inline Tensor decode_fct(const std::vector<unsigned char>& bytes) {
  require(bytes.size() >= 8 && std::memcmp(bytes.data(), kFctMagic, 4) == 0, ErrorKind::format, "bad FCT1 magic");
  const std::uint32_t rank = detail::get_u32(bytes.data() + 4);
  require(rank > 0, ErrorKind::format, "FCT1 rank 0");
  require(bytes.size() >= 8 + 4ull * rank, ErrorKind::format, "FCT1 header truncated");
  Shape shape;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint32_t d = detail::get_u32(bytes.data() + 8 + 4 * i);
    require(d > 0, ErrorKind::format, "FCT1 zero-length dimension");
    shape.push_back(d);
    count *= d;
    require(count < (1ull << 34), ErrorKind::format, "FCT1 tensor too large");
  }
  const std::size_t offset = 8 + 4 * rank;
  require(bytes.size() == offset + 4 * count, ErrorKind::format,
          bytes.size() < offset + 4 * count ? "FCT1 payload truncated" : "FCT1 trailing bytes");
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i)
    data[i] = static_cast<double>(std::bit_cast<float>(detail::get_u32(bytes.data() + offset + 4 * i)));
  return Tensor(std::move(shape), std::move(data));
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(f), ErrorKind::io, "cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(f), ErrorKind::io, "write failed: " + path.string());
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void write_tensor(const std::filesystem::path& path, const Tensor& t) { write_bytes(path, encode_fct(t)); }
inline Tensor read_tensor(const std::filesystem::path& path) { return decode_fct(read_bytes(path)); }

inline Tensor to_tensor(const GrayMap& m) {
  return Tensor({m.height(), m.width()}, std::vector<double>(m.values().begin(), m.values().end()));
}

}  // namespace freecure::io
