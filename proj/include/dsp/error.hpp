#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dsp {

enum class errc {
  invalid_argument,
  resource_limit,
  table_too_small,
  corrupt_cache,
  unsupported_version,
  io_error,
};

inline const char* to_string(errc code) {
  switch (code) {
    case errc::invalid_argument: return "invalid-argument";
    case errc::resource_limit: return "resource-limit";
    case errc::table_too_small: return "table-too-small";
    case errc::corrupt_cache: return "corrupt-cache";
    case errc::unsupported_version: return "unsupported-version";
    case errc::io_error: return "io-error";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw error(errc::invalid_argument, what);
}

/// Caps shared by every module. The defaults are sized for a desk machine.
struct Budget {
  std::size_t memory_bytes = std::size_t{2} << 30;
  std::uint64_t brute_max_x = 1'000'000;
  std::size_t max_divisors = std::size_t{1} << 20;
  std::size_t max_support = std::size_t{1} << 22;
  std::uint64_t max_table_n = std::uint64_t{1} << 16;

  void check_memory(std::size_t bytes, const std::string& what) const {
    if (bytes > memory_bytes) {
      throw error(errc::resource_limit, what + " needs " + std::to_string(bytes) +
                                            " bytes, budget is " + std::to_string(memory_bytes));
    }
  }
};

/// How the segmented counters split their work.
struct ExecPolicy {
  std::uint64_t segment_bits = std::uint64_t{1} << 22;
  unsigned threads = 1;
};

}  // namespace dsp
