#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "dsp/error.hpp"
#include "dsp/prime_table.hpp"

namespace dsp {

// Divisor and prime-factor ranges follow one convention everywhere: a real
// pair (y, z) selects the integers d with y < d <= z.

/// Smallest integer strictly greater than y.
inline std::int64_t int_above(double y) {
  constexpr double kCap = 4.0e18;
  if (y >= kCap) return static_cast<std::int64_t>(kCap);
  if (y < -kCap) return static_cast<std::int64_t>(-kCap);
  return static_cast<std::int64_t>(std::floor(y)) + 1;
}

/// Largest integer <= z.
inline std::int64_t int_at_most(double z) {
  constexpr double kCap = 4.0e18;
  if (z >= kCap) return static_cast<std::int64_t>(kCap);
  if (z < -kCap) return static_cast<std::int64_t>(-kCap);
  return static_cast<std::int64_t>(std::floor(z));
}

struct PrimePower {
  std::uint64_t p;
  unsigned e;
  friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

/// Sentinel for P^-(1) = +infinity.
inline constexpr std::uint64_t kPlusInfinity = std::numeric_limits<std::uint64_t>::max();

struct Factorization {
  std::uint64_t n = 1;
  std::vector<PrimePower> factors;  // strictly increasing primes

  std::uint64_t tau() const {
    std::uint64_t t = 1;
    for (const auto& f : factors) t *= f.e + 1;
    return t;
  }

  /// All divisors, ascending.
  std::vector<std::uint64_t> divisors(const Budget& budget = {}) const {
    if (tau() > budget.max_divisors) {
      throw error(errc::resource_limit, std::to_string(n) + " has " + std::to_string(tau()) +
                                            " divisors, budget is " + std::to_string(budget.max_divisors));
    }
    std::vector<std::uint64_t> out{1};
    out.reserve(tau());
    for (const auto& [p, e] : factors) {
      const std::size_t base = out.size();
      std::uint64_t pk = 1;
      for (unsigned k = 1; k <= e; ++k) {
        pk *= p;
        for (std::size_t i = 0; i < base; ++i) out.push_back(out[i] * pk);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  bool squarefree() const {
    return std::all_of(factors.begin(), factors.end(), [](const PrimePower& f) { return f.e == 1; });
  }

  friend bool operator==(const Factorization&, const Factorization&) = default;
};

namespace detail {

inline void divide_out(std::uint64_t& m, std::uint64_t p, Factorization& f) {
  unsigned e = 0;
  while (m % p == 0) {
    m /= p;
    ++e;
  }
  if (e) f.factors.push_back({p, e});
}

}  // namespace detail

/// Plain trial division; exact for any 64-bit n, intended for small inputs
/// such as shifts and moduli.
inline Factorization factorize(std::uint64_t n) {
  require(n >= 1, "factorize needs n >= 1");
  Factorization f{n, {}};
  std::uint64_t m = n;
  detail::divide_out(m, 2, f);
  detail::divide_out(m, 3, f);
  for (std::uint64_t p = 5; p <= m / p; p += 6) {
    detail::divide_out(m, p, f);
    detail::divide_out(m, p + 2, f);
  }
  if (m > 1) f.factors.push_back({m, 1});
  return f;
}

/// Table-assisted factorization: trial division by table primes up to sqrt(n),
/// stopping early once the cofactor is itself a table prime.
inline Factorization factorize(std::uint64_t n, const PrimeTable& table) {
  require(n >= 1, "factorize needs n >= 1");
  const std::uint64_t lim = table.limit();
  const bool covered = n <= lim || lim > std::numeric_limits<std::uint32_t>::max() || lim * lim >= n;
  require(covered, "factorize(" + std::to_string(n) + ") needs table limit >= sqrt(n)");
  Factorization f{n, {}};
  std::uint64_t m = n;
  for (std::uint64_t p = 2; p != 0 && p <= m / p; p = table.next_prime(p)) {
    if (m <= lim && table.is_prime(m)) break;
    detail::divide_out(m, p, f);
  }
  if (m > 1) f.factors.push_back({m, 1});
  return f;
}

inline std::uint64_t totient(const Factorization& f) {
  std::uint64_t r = 1;
  for (const auto& [p, e] : f.factors) {
    r *= p - 1;
    for (unsigned k = 1; k < e; ++k) r *= p;
  }
  return r;
}

inline int mobius(const Factorization& f) {
  if (!f.squarefree()) return 0;
  return f.factors.size() % 2 == 0 ? 1 : -1;
}

/// Number of divisors d of n with y < d <= z.
inline std::uint64_t tau_interval(const Factorization& f, double y, double z, const Budget& budget = {}) {
  require(y < z, "tau_interval needs y < z");
  const std::int64_t lo = std::max<std::int64_t>(1, int_above(y));
  const std::int64_t hi = int_at_most(z);
  if (lo > hi) return 0;
  if (lo <= 1 && static_cast<std::uint64_t>(hi) >= f.n) return f.tau();
  std::uint64_t count = 0;
  for (std::uint64_t d : f.divisors(budget)) {
    if (d >= static_cast<std::uint64_t>(lo) && d <= static_cast<std::uint64_t>(hi)) ++count;
  }
  return count;
}

/// True iff n has a divisor in (y, z].
inline bool has_divisor_in(const Factorization& f, double y, double z, const Budget& budget = {}) {
  const std::int64_t lo = std::max<std::int64_t>(1, int_above(y));
  const std::int64_t hi = std::min<std::int64_t>(int_at_most(z), static_cast<std::int64_t>(f.n));
  if (lo > hi) return false;
  // Small windows: test each candidate directly.
  if (static_cast<std::uint64_t>(hi - lo) < f.tau()) {
    for (std::int64_t d = lo; d <= hi; ++d) {
      if (f.n % static_cast<std::uint64_t>(d) == 0) return true;
    }
    return false;
  }
  for (std::uint64_t d : f.divisors(budget)) {
    if (d >= static_cast<std::uint64_t>(lo) && d <= static_cast<std::uint64_t>(hi)) return true;
  }
  return false;
}

/// Distinct primes p | n with y < p <= z.
inline unsigned omega_between(const Factorization& f, double y, double z) {
  const std::int64_t lo = int_above(y);
  const std::int64_t hi = int_at_most(z);
  unsigned c = 0;
  for (const auto& [p, e] : f.factors) {
    if (static_cast<std::int64_t>(p) >= lo && static_cast<std::int64_t>(p) <= hi) ++c;
  }
  return c;
}

/// Prime factors in (y, z] counted with multiplicity.
inline unsigned big_omega_between(const Factorization& f, double y, double z) {
  const std::int64_t lo = int_above(y);
  const std::int64_t hi = int_at_most(z);
  unsigned c = 0;
  for (const auto& [p, e] : f.factors) {
    if (static_cast<std::int64_t>(p) >= lo && static_cast<std::int64_t>(p) <= hi) c += e;
  }
  return c;
}

struct PrimeExtremes {
  std::uint64_t p_minus;  // kPlusInfinity for n = 1
  std::uint64_t p_plus;   // 0 for n = 1
};

inline PrimeExtremes prime_extremes(const Factorization& f) {
  if (f.factors.empty()) return {kPlusInfinity, 0};
  return {f.factors.front().p, f.factors.back().p};
}

/// Membership in P(y, z): every prime factor lies in (y, z].
inline bool is_in_script_p(const Factorization& f, double y, double z) {
  const auto [lo, hi] = prime_extremes(f);
  const bool below_z = hi == 0 || static_cast<std::int64_t>(hi) <= int_at_most(z);
  const bool above_y = lo == kPlusInfinity || static_cast<std::int64_t>(lo) >= int_above(y);
  return below_z && above_y;
}

/// Number of ordered k-tuples with product n.
inline std::uint64_t tau_k(const Factorization& f, unsigned k) {
  require(k >= 1, "tau_k needs k >= 1");
  unsigned __int128 r = 1;
  for (const auto& [p, e] : f.factors) {
    // binomial(e + k - 1, k - 1) == binomial(e + k - 1, e)
    unsigned __int128 b = 1;
    for (unsigned i = 1; i <= e; ++i) b = b * (k - 1 + i) / i;
    r *= b;
    if (r > std::numeric_limits<std::uint64_t>::max()) throw error(errc::resource_limit, "tau_k overflows 64 bits");
  }
  return static_cast<std::uint64_t>(r);
}

/// Number of primes p <= x with p = a (mod q). Coprimality of a and q is not required.
inline std::uint64_t pi_ap(std::uint64_t x, std::uint64_t q, std::int64_t a, const PrimeTable& table) {
  require(q >= 1, "pi_ap needs q >= 1");
  if (x > table.limit()) {
    throw error(errc::table_too_small, "pi_ap(x=" + std::to_string(x) + ") beyond limit " + std::to_string(table.limit()));
  }
  if (q == 1) return table.pi(x);
  const std::int64_t sq = static_cast<std::int64_t>(q);
  const std::uint64_t r = static_cast<std::uint64_t>(((a % sq) + sq) % sq);
  std::uint64_t count = 0;
  std::uint64_t n = r;
  if (n < 2) n += q;
  // With q even only one residue parity occurs; the scan is still exact.
  for (; n <= x; n += q) count += table.is_prime(n);
  return count;
}

}  // namespace dsp
