#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dsp/error.hpp"

namespace dsp {

/// Immutable table of the primes up to `limit`, one bit per odd integer >= 3.
///
/// Bit i stands for 2i+3; 2 is handled implicitly. This is also the on-disk
/// layout of the prime cache, so the words can be written out unchanged.
class PrimeTable {
 public:
  explicit PrimeTable(std::uint64_t limit, const Budget& budget = {}) : limit_(limit) {
    require(limit >= 2, "prime table limit must be >= 2");
    budget.check_memory(static_cast<std::size_t>(word_count(limit) * 8 + word_count(limit) / 8 * 4),
                        "prime table up to " + std::to_string(limit));
    words_.assign(word_count(limit), 0);
    sieve();
    finish();
  }

  /// Rebuilds a table from an existing bit array (used by the cache loader).
  static PrimeTable from_words(std::uint64_t limit, std::vector<std::uint64_t> words) {
    require(limit >= 2, "prime table limit must be >= 2");
    require(words.size() == word_count(limit), "bit array size does not match limit");
    PrimeTable t;
    t.limit_ = limit;
    t.words_ = std::move(words);
    t.finish();
    return t;
  }

  std::uint64_t limit() const noexcept { return limit_; }
  std::uint64_t count() const noexcept { return count_; }

  static std::uint64_t bit_count(std::uint64_t limit) noexcept {
    return limit >= 3 ? (limit - 3) / 2 + 1 : 0;
  }
  std::uint64_t bit_count() const noexcept { return bit_count(limit_); }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  bool is_prime(std::uint64_t n) const {
    if (n > limit_) throw error(errc::table_too_small, "is_prime(" + std::to_string(n) + ") beyond limit " + std::to_string(limit_));
    if (n < 3) return n == 2;
    if ((n & 1) == 0) return false;
    const std::uint64_t i = (n - 3) >> 1;
    return (words_[i >> 6] >> (i & 63)) & 1;
  }

  /// Number of primes <= x.
  std::uint64_t pi(std::uint64_t x) const {
    if (x > limit_) throw error(errc::table_too_small, "pi(" + std::to_string(x) + ") beyond limit " + std::to_string(limit_));
    if (x < 2) return 0;
    if (x < 3) return 1;
    const std::uint64_t last = (x - 3) >> 1;
    const std::uint64_t w = last >> 6;
    std::uint64_t c = 1 + block_rank_[w >> 3];
    for (std::uint64_t k = w & ~std::uint64_t{7}; k < w; ++k) c += std::popcount(words_[k]);
    const unsigned shift = 63 - static_cast<unsigned>(last & 63);
    c += std::popcount(words_[w] << shift);
    return c;
  }

  /// Smallest prime > p, or 0 when none exists up to the limit.
  std::uint64_t next_prime(std::uint64_t p) const {
    if (p < 2) return limit_ >= 2 ? 2 : 0;
    std::uint64_t n = p + 1;
    if (n < 3) n = 3;
    if (n > limit_) return 0;
    std::uint64_t i = (n - 3 + 1) >> 1;  // first odd >= n
    const std::uint64_t bits = bit_count();
    while (i < bits) {
      std::uint64_t w = words_[i >> 6] >> (i & 63);
      if (w) {
        i += std::countr_zero(w);
        return i < bits ? 2 * i + 3 : 0;
      }
      i = (i | 63) + 1;
    }
    return 0;
  }

  /// Calls fn(p) for each prime p in [lo, hi], ascending.
  template <typename Fn>
  void for_each_prime(std::uint64_t lo, std::uint64_t hi, Fn&& fn) const {
    if (hi > limit_) throw error(errc::table_too_small, "prime range beyond limit " + std::to_string(limit_));
    if (lo <= 2 && hi >= 2) fn(std::uint64_t{2});
    if (hi < 3) return;
    std::uint64_t first = lo < 3 ? 0 : (lo - 3 + 1) >> 1;
    const std::uint64_t last = (hi - 3) >> 1;
    if (first > last) return;
    for (std::uint64_t w = first >> 6; w <= (last >> 6); ++w) {
      std::uint64_t word = words_[w];
      if (w == (first >> 6)) word &= ~std::uint64_t{0} << (first & 63);
      if (w == (last >> 6) && (last & 63) != 63) word &= (std::uint64_t{1} << ((last & 63) + 1)) - 1;
      while (word) {
        const std::uint64_t i = (w << 6) + std::countr_zero(word);
        fn(2 * i + 3);
        word &= word - 1;
      }
    }
  }

  /// Primes up to min(x, limit); small lists only, used by trial division.
  std::vector<std::uint64_t> primes_up_to(std::uint64_t x) const {
    std::vector<std::uint64_t> out;
    for_each_prime(2, std::min(x, limit_), [&](std::uint64_t p) { out.push_back(p); });
    return out;
  }

  friend bool operator==(const PrimeTable& a, const PrimeTable& b) {
    return a.limit_ == b.limit_ && a.words_ == b.words_;
  }

 private:
  PrimeTable() = default;

  static std::uint64_t word_count(std::uint64_t limit) noexcept { return (bit_count(limit) + 63) / 64; }

  void sieve() {
    const std::uint64_t bits = bit_count();
    if (bits == 0) return;
    const std::uint64_t root = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(limit_))) + 1;
    // base primes up to sqrt(limit), plain sieve
    std::vector<bool> composite(root + 1, false);
    std::vector<std::uint64_t> base;
    for (std::uint64_t p = 3; p <= root; p += 2) {
      if (composite[p]) continue;
      base.push_back(p);
      for (std::uint64_t m = p * p; m <= root; m += 2 * p) composite[m] = true;
    }
    constexpr std::uint64_t kSegmentWords = 1 << 12;
    for (std::uint64_t w0 = 0; w0 < words_.size(); w0 += kSegmentWords) {
      const std::uint64_t w1 = std::min<std::uint64_t>(words_.size(), w0 + kSegmentWords);
      const std::uint64_t i0 = w0 << 6;
      const std::uint64_t i1 = std::min(bits, w1 << 6);
      std::fill(words_.begin() + w0, words_.begin() + w1, ~std::uint64_t{0});
      const std::uint64_t n_hi = 2 * (i1 - 1) + 3;
      const std::uint64_t n_lo = 2 * i0 + 3;
      for (std::uint64_t p : base) {
        if (p * p > n_hi) break;
        std::uint64_t m = std::max(p * p, (n_lo + p - 1) / p * p);
        if ((m & 1) == 0) m += p;
        for (std::uint64_t i = (m - 3) >> 1; i < i1; i += p) words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
      }
    }
    if (bits & 63) words_.back() &= (std::uint64_t{1} << (bits & 63)) - 1;
  }

  void finish() {
    block_rank_.assign(words_.size() / 8 + 1, 0);
    std::uint64_t running = 0;
    for (std::size_t w = 0; w < words_.size(); ++w) {
      if ((w & 7) == 0) block_rank_[w >> 3] = running;
      running += std::popcount(words_[w]);
    }
    count_ = running + 1;
  }

  std::uint64_t limit_ = 0;
  std::uint64_t count_ = 0;
  std::vector<std::uint64_t> words_;
  std::vector<std::uint64_t> block_rank_;
};

}  // namespace dsp
