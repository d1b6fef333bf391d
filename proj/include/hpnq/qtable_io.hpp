#pragma once

// Q-table file format, little-endian:
//
//   offset  size  field
//   0       4     magic "HPNQ"
//   4       4     format version (u32) = 1
//   8       4     action_count (u32)
//   12      8     entry_count (u64)
//   20      12*n  records: state_index u32, action_id u16, flags u16, value f32
//   20+12n  4     CRC-32 (zlib polynomial) of bytes [0, 20+12n)
//
// Records are sorted by (state_index, action_id); only entries that differ
// from the initial (0, untrained) state are written.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <zlib.h>

#include "hpnq/errors.hpp"
#include "hpnq/qtable.hpp"

namespace hpnq {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

inline constexpr char kQTableMagic[4] = {'H', 'P', 'N', 'Q'};
inline constexpr std::uint32_t kQTableVersion = 1;
inline constexpr std::size_t kQTableHeaderSize = 20;
inline constexpr std::size_t kQTableRecordSize = 12;

namespace detail {

class ByteWriter {
 public:
  template <class T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(FormatError::Code::kTruncated, "file truncated");
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for large buffers.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = crc32(crc, bytes.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

inline void append_crc(ByteWriter& w) { w.put(crc32_of(w.bytes())); }

inline void check_crc(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw FormatError(FormatError::Code::kTruncated, "file truncated");
  const auto body = bytes.first(bytes.size() - 4);
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), 4);
  if (crc32_of(body) != stored) throw FormatError(FormatError::Code::kChecksumMismatch, "checksum mismatch");
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Code::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Code::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatError::Code::kIo, "write failed: " + path.string());
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize(const QTable& q) {
  std::uint64_t n = q.entry_count();
  detail::ByteWriter w;
  w.bytes().reserve(kQTableHeaderSize + n * kQTableRecordSize + 4);
  w.put_bytes(kQTableMagic, 4);
  w.put(kQTableVersion);
  w.put(q.action_count());
  w.put(n);
  q.for_each_entry([&](StateIndex s, ActionId a, float v, std::uint16_t flags) {
    w.put(s);
    w.put(a);
    w.put(flags);
    w.put(v);
  });
  detail::append_crc(w);
  return std::move(w.bytes());
}

inline QTable deserialize(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.need(4);
  if (std::memcmp(bytes.data(), kQTableMagic, 4) != 0) throw FormatError(FormatError::Code::kBadMagic, "bad magic");
  r.get<std::uint32_t>();
  const auto version = r.get<std::uint32_t>();
  if (version != kQTableVersion)
    throw FormatError(FormatError::Code::kVersionMismatch, "unsupported version " + std::to_string(version));
  const auto action_count = r.get<std::uint32_t>();
  const auto entry_count = r.get<std::uint64_t>();
  if (r.remaining() < 4 || (r.remaining() - 4) / kQTableRecordSize < entry_count ||
      (r.remaining() - 4) != entry_count * kQTableRecordSize) {
    throw FormatError(FormatError::Code::kTruncated, "record section size does not match entry count");
  }
  detail::check_crc(bytes);

  if (action_count == 0 || action_count > 0xFFFFu)
    throw FormatError(FormatError::Code::kInvalidRecord, "invalid action count");
  QTable q(action_count);
  for (std::uint64_t i = 0; i < entry_count; ++i) {
    const auto s = r.get<std::uint32_t>();
    const auto a = r.get<std::uint16_t>();
    const auto flags = r.get<std::uint16_t>();
    const auto v = r.get<float>();
    if (s >= kStateCount || a >= action_count)
      throw FormatError(FormatError::Code::kInvalidRecord, "record index out of range");
    q.set(s, a, v, flags);
  }
  return q;
}

inline void save(const QTable& q, const std::filesystem::path& path) { detail::write_file(path, serialize(q)); }

inline QTable load(const std::filesystem::path& path) { return deserialize(detail::read_file(path)); }

}  // namespace hpnq
