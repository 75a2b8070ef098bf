#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "dsp/arithmetic.hpp"
#include "dsp/error.hpp"
#include "dsp/parallel.hpp"
#include "dsp/prime_table.hpp"

namespace dsp {

/// Parameters of one counting query. `s == 0` means the unshifted count.
struct QueryWindow {
  std::uint64_t x = 1;
  double y = 0;
  double z = 1;
  std::int64_t s = 0;
  std::optional<std::uint64_t> delta;

  void validate() const {
    require(x >= 1, "query needs x >= 1");
    require(y < z, "query needs y < z");
    if (delta) require(*delta >= 1 && *delta <= x, "query needs 1 <= delta <= x");
  }
};

enum class CountMethod { brute, marked };

struct CountResult {
  std::uint64_t count = 0;
  CountMethod method = CountMethod::marked;
  std::chrono::duration<double> elapsed{};
  std::uint64_t x = 0;
  double y = 0;
  double z = 0;
  std::int64_t s = 0;
};

namespace detail {

inline std::uint64_t segment_bits(const ExecPolicy& exec, const Budget& budget) {
  const std::uint64_t bits = std::max<std::uint64_t>(64, (exec.segment_bits + 63) / 64 * 64);
  budget.check_memory(static_cast<std::size_t>(bits / 8) * std::max(1u, exec.threads), "counting segment");
  return bits;
}

inline void set_bit(std::vector<std::uint64_t>& bits, std::uint64_t i) { bits[i >> 6] |= std::uint64_t{1} << (i & 63); }
inline bool get_bit(const std::vector<std::uint64_t>& bits, std::uint64_t i) { return (bits[i >> 6] >> (i & 63)) & 1; }

inline std::uint64_t popcount(const std::vector<std::uint64_t>& bits) {
  std::uint64_t c = 0;
  for (std::uint64_t w : bits) c += std::popcount(w);
  return c;
}

// Bit (n - lo) is set for each n in [lo, hi) that has a divisor d with
// dlo <= d <= dhi. Requires lo >= 1 and dlo >= 1.
inline std::vector<std::uint64_t> divisor_hits(std::uint64_t lo, std::uint64_t hi, std::uint64_t dlo, std::uint64_t dhi) {
  const std::uint64_t len = hi - lo;
  std::vector<std::uint64_t> bits((len + 63) / 64, 0);
  dhi = std::min(dhi, hi - 1);
  if (dlo > dhi) return bits;
  if (dlo == 1) {
    for (std::uint64_t i = 0; i < len; ++i) set_bit(bits, i);
    return bits;
  }
  // d <= len: walk the multiples of each d.
  const std::uint64_t small_hi = std::min(dhi, len);
  for (std::uint64_t d = dlo; d <= small_hi; ++d) {
    for (std::uint64_t m = (lo + d - 1) / d * d; m < hi; m += d) set_bit(bits, m - lo);
  }
  // d > len: each d has at most one multiple here, so walk the cofactor k instead.
  const std::uint64_t big_lo = std::max(dlo, len + 1);
  if (big_lo <= dhi) {
    for (std::uint64_t k = 1; k <= (hi - 1) / big_lo; ++k) {
      const std::uint64_t d0 = std::max(big_lo, (lo + k - 1) / k);
      const std::uint64_t d1 = std::min(dhi, (hi - 1) / k);
      for (std::uint64_t d = d0; d <= d1; ++d) set_bit(bits, k * d - lo);
    }
  }
  return bits;
}

struct DivisorRange {
  std::uint64_t lo;
  std::uint64_t hi;
  bool empty() const { return lo > hi; }
};

inline DivisorRange divisor_range(double y, double z, std::uint64_t x) {
  const std::int64_t lo = std::max<std::int64_t>(1, int_above(y));
  const std::int64_t hi = std::min<std::int64_t>(int_at_most(z), static_cast<std::int64_t>(std::min<std::uint64_t>(x, INT64_MAX)));
  if (hi < lo) return {1, 0};
  return {static_cast<std::uint64_t>(lo), static_cast<std::uint64_t>(hi)};
}

// Counts n in [nlo, nhi] with n - s prime and a divisor of n in the range.
inline std::uint64_t count_shifted_between(std::uint64_t nlo, std::uint64_t nhi, double y, double z, std::int64_t s,
                                           const PrimeTable& table, const ExecPolicy& exec, const Budget& budget) {
  if (nlo > nhi) return 0;
  const DivisorRange dr = divisor_range(y, z, nhi);
  if (dr.empty()) return 0;
  const std::uint64_t seg = segment_bits(exec, budget);
  const std::uint64_t segments = (nhi - nlo) / seg + 1;
  auto counts = parallel_map(segments, exec.threads, [&](std::size_t i) -> std::uint64_t {
    const std::uint64_t lo = nlo + i * seg;
    const std::uint64_t hi = std::min(nhi + 1, lo + seg);
    const auto bits = divisor_hits(lo, hi, dr.lo, dr.hi);
    const std::int64_t plo = std::max<std::int64_t>(2, static_cast<std::int64_t>(lo) - s);
    const std::int64_t phi = static_cast<std::int64_t>(hi - 1) - s;
    if (phi < plo) return 0;
    std::uint64_t c = 0;
    table.for_each_prime(static_cast<std::uint64_t>(plo), static_cast<std::uint64_t>(phi), [&](std::uint64_t p) {
      c += get_bit(bits, static_cast<std::uint64_t>(static_cast<std::int64_t>(p) + s) - lo);
    });
    return c;
  });
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

inline void require_shift_table(std::uint64_t x, std::int64_t s, const PrimeTable& table) {
  require(s != 0, "shifted counts need s != 0; use count_H for s = 0");
  const std::uint64_t need = x + static_cast<std::uint64_t>(s < 0 ? -s : s);
  if (table.limit() < need) {
    throw error(errc::table_too_small,
                "need prime table limit >= " + std::to_string(need) + ", have " + std::to_string(table.limit()));
  }
}

// Calls fn(lo, bits) for every segment of [1, N^2], with bit (m - lo) set iff
// m = ab for some 1 <= a, b <= N.
template <typename Fn>
auto for_each_product_segment(std::uint64_t N, const ExecPolicy& exec, const Budget& budget, Fn&& fn) {
  const std::uint64_t top = N * N;
  const std::uint64_t seg = segment_bits(exec, budget);
  const std::uint64_t segments = (top - 1) / seg + 1;
  auto results = parallel_map(segments, exec.threads, [&](std::size_t i) {
    const std::uint64_t lo = 1 + i * seg;
    const std::uint64_t hi = std::min(top + 1, lo + seg);
    std::vector<std::uint64_t> bits((hi - lo + 63) / 64, 0);
    for (std::uint64_t a = 1; a <= N && a * a < hi; ++a) {
      const std::uint64_t b0 = std::max(a, (lo + a - 1) / a);
      const std::uint64_t b1 = std::min(N, (hi - 1) / a);
      for (std::uint64_t b = b0; b <= b1; ++b) set_bit(bits, a * b - lo);
    }
    return fn(lo, bits);
  });
  return results;
}

}  // namespace detail

/// Reference count of n <= x with a divisor in (y, z], one divisor
/// enumeration per n. Serves as the oracle for count_H.
inline std::uint64_t count_H_brute(std::uint64_t x, double y, double z, const Budget& budget = {}) {
  require(x >= 1, "count_H_brute needs x >= 1");
  require(y < z, "count_H_brute needs y < z");
  if (x > budget.brute_max_x) {
    throw error(errc::resource_limit, "brute count up to " + std::to_string(x) + " exceeds budget " +
                                          std::to_string(budget.brute_max_x));
  }
  const std::int64_t lo = std::max<std::int64_t>(1, int_above(y));
  const std::int64_t hi = int_at_most(z);
  std::uint64_t count = 0;
  for (std::uint64_t n = 1; n <= x; ++n) {
    bool hit = false;
    for (std::uint64_t d = 1; d * d <= n && !hit; ++d) {
      if (n % d) continue;
      const auto in = [&](std::uint64_t v) {
        return static_cast<std::int64_t>(v) >= lo && static_cast<std::int64_t>(v) <= hi;
      };
      hit = in(d) || in(n / d);
    }
    count += hit;
  }
  return count;
}

/// H(x, y, z): number of n <= x with a divisor in (y, z], by segmented
/// marking of the multiples of every candidate divisor.
inline CountResult count_H(std::uint64_t x, double y, double z, const ExecPolicy& exec = {}, const Budget& budget = {}) {
  require(x >= 1, "count_H needs x >= 1");
  require(y < z, "count_H needs y < z");
  const auto start = std::chrono::steady_clock::now();
  CountResult r{0, CountMethod::marked, {}, x, y, z, 0};
  const auto dr = detail::divisor_range(y, z, x);
  if (!dr.empty()) {
    const std::uint64_t seg = detail::segment_bits(exec, budget);
    const std::uint64_t segments = (x - 1) / seg + 1;
    auto counts = detail::parallel_map(segments, exec.threads, [&](std::size_t i) {
      const std::uint64_t lo = 1 + i * seg;
      const std::uint64_t hi = std::min(x + 1, lo + seg);
      return detail::popcount(detail::divisor_hits(lo, hi, dr.lo, dr.hi));
    });
    r.count = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  }
  r.elapsed = std::chrono::steady_clock::now() - start;
  return r;
}

/// H(x, y, z; P_s): primes p with 1 <= p + s <= x and p + s having a divisor
/// in (y, z]. The degenerate n = 0 is never counted.
inline CountResult count_H_shifted(std::uint64_t x, double y, double z, std::int64_t s, const PrimeTable& table,
                                   const ExecPolicy& exec = {}, const Budget& budget = {}) {
  require(x >= 1, "count_H_shifted needs x >= 1");
  require(y < z, "count_H_shifted needs y < z");
  detail::require_shift_table(x, s, table);
  const auto start = std::chrono::steady_clock::now();
  CountResult r{0, CountMethod::marked, {}, x, y, z, s};
  r.count = detail::count_shifted_between(1, x, y, z, s, table, exec, budget);
  r.elapsed = std::chrono::steady_clock::now() - start;
  return r;
}

/// Shifted count restricted to the window x - delta < p + s <= x.
inline std::uint64_t count_H_shifted_window(std::uint64_t x, std::uint64_t delta, double y, double z, std::int64_t s,
                                            const PrimeTable& table, const ExecPolicy& exec = {},
                                            const Budget& budget = {}) {
  require(x >= 1, "window count needs x >= 1");
  require(delta >= 1 && delta <= x, "window count needs 1 <= delta <= x");
  require(y < z, "window count needs y < z");
  detail::require_shift_table(x, s, table);
  return detail::count_shifted_between(x - delta + 1, x, y, z, s, table, exec, budget);
}

/// A(N): number of distinct products ab with 1 <= a, b <= N.
inline std::uint64_t count_A(std::uint64_t N, const ExecPolicy& exec = {}, const Budget& budget = {}) {
  require(N >= 1, "count_A needs N >= 1");
  if (N > budget.max_table_n) {
    throw error(errc::resource_limit, "multiplication table N=" + std::to_string(N) + " exceeds budget " +
                                          std::to_string(budget.max_table_n));
  }
  auto counts = detail::for_each_product_segment(N, exec, budget, [](std::uint64_t, const std::vector<std::uint64_t>& bits) {
    return detail::popcount(bits);
  });
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

/// A(N; P_s): distinct products m = ab (1 <= a, b <= N) with m - s prime.
inline std::uint64_t count_A_shifted(std::uint64_t N, std::int64_t s, const PrimeTable& table, const ExecPolicy& exec = {},
                                     const Budget& budget = {}) {
  require(N >= 1, "count_A_shifted needs N >= 1");
  if (N > budget.max_table_n) {
    throw error(errc::resource_limit, "multiplication table N=" + std::to_string(N) + " exceeds budget " +
                                          std::to_string(budget.max_table_n));
  }
  detail::require_shift_table(N * N, s, table);
  auto counts = detail::for_each_product_segment(N, exec, budget, [&](std::uint64_t lo, const std::vector<std::uint64_t>& bits) {
    std::uint64_t c = 0;
    for (std::size_t w = 0; w < bits.size(); ++w) {
      for (std::uint64_t word = bits[w]; word; word &= word - 1) {
        const std::int64_t p = static_cast<std::int64_t>(lo + w * 64 + std::countr_zero(word)) - s;
        c += p >= 2 && table.is_prime(static_cast<std::uint64_t>(p));
      }
    }
    return c;
  });
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

/// Sum of pi(x; q, a) over Q1 < q <= Q2 with gcd(q, a) = 1, one progression scan per q.
inline std::uint64_t sum_pi_ap_range(std::uint64_t x, std::uint64_t Q1, std::uint64_t Q2, std::int64_t a,
                                     const PrimeTable& table, const ExecPolicy& exec = {}) {
  require(Q1 < Q2 && Q2 <= x, "sum_pi_ap_range needs Q1 < Q2 <= x");
  if (x > table.limit()) {
    throw error(errc::table_too_small, "sum_pi_ap_range(x=" + std::to_string(x) + ") beyond limit " +
                                           std::to_string(table.limit()));
  }
  const std::uint64_t abs_a = a < 0 ? static_cast<std::uint64_t>(-a) : static_cast<std::uint64_t>(a);
  auto parts = detail::parallel_map(Q2 - Q1, exec.threads, [&](std::size_t i) -> std::uint64_t {
    const std::uint64_t q = Q1 + 1 + i;
    return std::gcd(q, abs_a) == 1 ? pi_ap(x, q, a, table) : 0;
  });
  return std::accumulate(parts.begin(), parts.end(), std::uint64_t{0});
}

}  // namespace dsp
