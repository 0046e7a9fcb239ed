#pragma once

// Little-endian byte encoding shared by the model and ensemble files.

#include <zlib.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sitpose/error.hpp"

namespace sitpose::detail {

inline constexpr std::array<char, 8> kMagic = {'S', 'I', 'T', 'P', 'O', 'S', 'E', '1'};
inline constexpr std::uint8_t kEnsembleTag = 16;

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = ::crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void size(std::size_t v) { u64(static_cast<std::uint64_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void f64s(std::span<const double> v) {
    size(v.size());
    for (double d : v) f64(d);
  }
  void magic() {
    for (char c : kMagic) u8(static_cast<std::uint8_t>(c));
  }
  /// Appends the CRC-32 of everything written so far and returns the buffer.
  std::vector<std::uint8_t> finish() {
    u32(crc32_of(buf_));
    return std::move(buf_);
  }

 private:
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : data_(bytes) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  /// Element count, rejected when `elem_bytes * count` exceeds what is left.
  std::size_t count(std::size_t elem_bytes) {
    const std::uint64_t n = u64();
    if (elem_bytes > 0 && n > remaining() / elem_bytes) throw ModelFormatError("truncated model file");
    return static_cast<std::size_t>(n);
  }
  std::vector<double> f64s() {
    std::vector<double> v(count(8));
    for (double& d : v) d = f64();
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (n > remaining()) throw ModelFormatError("truncated model file");
  }
  std::uint64_t get_le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

/// Checks magic, version and checksum; returns a reader positioned after the
/// version field and limited to the body (checksum excluded), plus the tag.
struct CheckedFile {
  ByteReader body;
  std::uint8_t tag;
};

inline CheckedFile open_checked(std::span<const std::uint8_t> bytes, std::uint16_t max_version) {
  if (bytes.size() < kMagic.size() ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw ModelFormatError("not a sitpose model");
  }
  ByteReader head(bytes.subspan(kMagic.size()));
  const std::uint16_t version = head.u16();
  if (version == 0 || version > max_version) {
    throw ModelFormatError("unsupported model format_version " + std::to_string(version) +
                           " (this build reads up to " + std::to_string(max_version) + ")");
  }
  const std::size_t header = kMagic.size() + 2 + 1;
  if (bytes.size() < header + 4) throw ModelFormatError("truncated model file");
  const auto stored = static_cast<std::uint32_t>(ByteReader(bytes.subspan(bytes.size() - 4)).u32());
  if (stored != crc32_of(bytes.first(bytes.size() - 4))) {
    throw ModelFormatError("model checksum mismatch (corrupted or truncated file)");
  }
  const std::uint8_t tag = bytes[kMagic.size() + 2];
  return {ByteReader(bytes.subspan(header, bytes.size() - 4 - header)), tag};
}

}  // namespace sitpose::detail
