#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "dsp/error.hpp"
#include "dsp/prime_table.hpp"

namespace dsp {

// Binary layout, all integers little-endian:
//   "DSPL" | u32 version (1) | u64 limit | u64 bit count |
//   bit array over odd n >= 3 (bit i <-> 2i+3, LSB first, ceil(bits/8) bytes) |
//   u64 FNV-1a of the bit array bytes
inline constexpr std::array<char, 4> kCacheMagic{'D', 'S', 'P', 'L'};
inline constexpr std::uint32_t kCacheVersion = 1;

inline std::uint64_t fnv1a64(const unsigned char* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

template <typename T>
void put_le(std::vector<unsigned char>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

template <typename T>
T get_le(const unsigned char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline std::vector<unsigned char> serialize_prime_table(const PrimeTable& table) {
  const std::uint64_t bits = table.bit_count();
  const std::size_t payload = static_cast<std::size_t>((bits + 7) / 8);
  std::vector<unsigned char> out;
  out.reserve(4 + 4 + 8 + 8 + payload + 8);
  out.insert(out.end(), kCacheMagic.begin(), kCacheMagic.end());
  detail::put_le<std::uint32_t>(out, kCacheVersion);
  detail::put_le<std::uint64_t>(out, table.limit());
  detail::put_le<std::uint64_t>(out, bits);
  const std::size_t start = out.size();
  const auto words = table.words();
  for (std::size_t i = 0; i < payload; ++i) out.push_back(static_cast<unsigned char>(words[i / 8] >> (8 * (i % 8))));
  detail::put_le<std::uint64_t>(out, fnv1a64(out.data() + start, payload));
  return out;
}

inline PrimeTable deserialize_prime_table(const std::vector<unsigned char>& bytes, const std::string& origin = "<memory>") {
  auto corrupt = [&](const std::string& why) { return error(errc::corrupt_cache, origin + ": " + why); };
  constexpr std::size_t kHeader = 4 + 4 + 8 + 8;
  if (bytes.size() < kHeader + 8) throw corrupt("file too short");
  if (std::memcmp(bytes.data(), kCacheMagic.data(), 4) != 0) throw corrupt("bad magic");
  const auto version = detail::get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kCacheVersion) {
    throw error(errc::unsupported_version, origin + ": cache version " + std::to_string(version));
  }
  const auto limit = detail::get_le<std::uint64_t>(bytes.data() + 8);
  const auto bits = detail::get_le<std::uint64_t>(bytes.data() + 16);
  if (limit < 2 || bits != PrimeTable::bit_count(limit)) throw corrupt("limit and bit count disagree");
  const std::uint64_t payload = (bits + 7) / 8;
  if (bytes.size() != kHeader + payload + 8) throw corrupt("size mismatch (truncated or padded)");
  const unsigned char* data = bytes.data() + kHeader;
  if (detail::get_le<std::uint64_t>(data + payload) != fnv1a64(data, static_cast<std::size_t>(payload))) {
    throw corrupt("checksum mismatch");
  }
  std::vector<std::uint64_t> words((bits + 63) / 64, 0);
  for (std::uint64_t i = 0; i < payload; ++i) words[i / 8] |= static_cast<std::uint64_t>(data[i]) << (8 * (i % 8));
  if ((bits & 63) && (words.back() >> (bits & 63)) != 0) throw corrupt("nonzero padding bits");
  return PrimeTable::from_words(limit, std::move(words));
}

inline void save_prime_cache(const PrimeTable& table, const std::filesystem::path& path) {
  const auto bytes = serialize_prime_table(table);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw error(errc::io_error, "cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw error(errc::io_error, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw error(errc::io_error, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline PrimeTable load_prime_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(errc::io_error, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_prime_table(bytes, path.string());
}

struct CachedTable {
  PrimeTable table;
  bool from_cache;
};

inline std::filesystem::path prime_cache_path(const std::filesystem::path& dir, std::uint64_t limit) {
  return dir / ("primes-" + std::to_string(limit) + ".dspl");
}

/// Loads primes-<limit>.dspl from `cache_dir` when present and valid, else
/// sieves and (if a directory is given) writes the cache.
inline CachedTable load_or_build_prime_table(std::uint64_t limit, const std::optional<std::filesystem::path>& cache_dir,
                                             const Budget& budget = {}) {
  if (cache_dir) {
    const auto path = prime_cache_path(*cache_dir, limit);
    if (std::filesystem::exists(path)) {
      try {
        return {load_prime_cache(path), true};
      } catch (const error& e) {
        if (e.code() == errc::io_error) throw;
        // stale or damaged cache: fall through and rebuild
      }
    }
  }
  PrimeTable table(limit, budget);
  if (cache_dir) {
    std::filesystem::create_directories(*cache_dir);
    save_prime_cache(table, prime_cache_path(*cache_dir, limit));
  }
  return {std::move(table), false};
}

}  // namespace dsp
