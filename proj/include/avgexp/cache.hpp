#pragma once

// Binary record cache.
//
// Layout (all integers little-endian):
//   magic    7 bytes  "AVGEXP1" (the trailing digit is the format version)
//   a4       i64
//   a6       i64
//   count    u64
//   checksum u64      FNV-1a 64 over the record bytes
//   count records of 28 bytes: p u64, a_p i64, d_p u32, e_p u64

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "avgexp/curve.hpp"
#include "avgexp/errors.hpp"
#include "avgexp/record.hpp"

namespace avgexp {

inline constexpr std::string_view kCacheMagic = "AVGEXP1";
inline constexpr std::size_t kCacheHeaderSize = 7 + 8 * 4;
inline constexpr std::size_t kCacheRecordSize = 8 + 8 + 4 + 8;

namespace detail {

inline void put_le(std::string& out, u64 v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline u64 get_le(std::string_view in, std::size_t at, int bytes) {
  u64 v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<u64>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

inline u64 fnv1a(std::string_view bytes) {
  u64 h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Serializes records for `curve`; the inverse of decode_cache.
inline std::string encode_cache(const GlobalCurve& curve, std::span<const PrimeRecord> records) {
  std::string body;
  body.reserve(records.size() * kCacheRecordSize);
  for (const auto& r : records) {
    if (r.d_p > 0xffffffffULL) throw std::invalid_argument("encode_cache: d_p exceeds 32 bits");
    detail::put_le(body, r.p, 8);
    detail::put_le(body, static_cast<u64>(r.a_p), 8);
    detail::put_le(body, r.d_p, 4);
    detail::put_le(body, r.e_p, 8);
  }
  std::string out(kCacheMagic);
  detail::put_le(out, static_cast<u64>(curve.a4()), 8);
  detail::put_le(out, static_cast<u64>(curve.a6()), 8);
  detail::put_le(out, records.size(), 8);
  detail::put_le(out, detail::fnv1a(body), 8);
  return out + body;
}

inline std::vector<PrimeRecord> decode_cache(std::string_view bytes, const GlobalCurve& curve) {
  if (bytes.size() < kCacheMagic.size()) throw CorruptCache("cache truncated inside the header");
  if (bytes.substr(0, kCacheMagic.size()) != kCacheMagic) {
    throw CacheMismatch("cache magic/version mismatch (expected AVGEXP1)");
  }
  if (bytes.size() < kCacheHeaderSize) throw CorruptCache("cache truncated inside the header");
  const i64 a4 = static_cast<i64>(detail::get_le(bytes, 7, 8));
  const i64 a6 = static_cast<i64>(detail::get_le(bytes, 15, 8));
  if (a4 != curve.a4() || a6 != curve.a6()) {
    throw CacheMismatch("cache belongs to curve " + std::to_string(a4) + "," + std::to_string(a6));
  }
  const u64 count = detail::get_le(bytes, 23, 8);
  const u64 checksum = detail::get_le(bytes, 31, 8);
  const std::string_view body = bytes.substr(kCacheHeaderSize);
  if (count > body.size() / kCacheRecordSize || body.size() != count * kCacheRecordSize) {
    throw CorruptCache("cache size does not match its record count");
  }
  if (detail::fnv1a(body) != checksum) throw CorruptCache("cache checksum mismatch");

  std::vector<PrimeRecord> records(count);
  for (u64 i = 0; i < count; ++i) {
    const std::size_t at = i * kCacheRecordSize;
    records[i] = {detail::get_le(body, at, 8), static_cast<i64>(detail::get_le(body, at + 8, 8)),
                  detail::get_le(body, at + 16, 4), detail::get_le(body, at + 20, 8)};
  }
  return records;
}

/// Writes atomically (temporary file, then rename).
inline void cache_store(const std::string& path, const GlobalCurve& curve, std::span<const PrimeRecord> records) {
  const std::string bytes = encode_cache(curve, records);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CacheError("cannot write cache " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CacheError("short write to cache " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CacheError("cannot move cache into place: " + ec.message());
}

inline std::vector<PrimeRecord> cache_load(const std::string& path, const GlobalCurve& curve) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CacheError("cannot read cache " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_cache(bytes, curve);
}

}  // namespace avgexp
