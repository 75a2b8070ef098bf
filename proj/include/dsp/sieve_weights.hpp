#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

#include "dsp/arithmetic.hpp"
#include "dsp/error.hpp"

namespace dsp {

enum class WeightKind { lower, upper };

struct WeightEntry {
  std::uint64_t d;
  int weight;
  friend bool operator==(const WeightEntry&, const WeightEntry&) = default;
};

/// Signed sieve weights supported on squarefree d composed of primes < Z.
struct SieveWeights {
  WeightKind kind = WeightKind::lower;
  double D = 0;  // level
  double Z = 0;  // sifting limit
  std::vector<std::uint64_t> primes;  // primes below Z, ascending
  std::vector<WeightEntry> support;   // ascending in d, nonzero weights only

  int weight(std::uint64_t d) const {
    auto it = std::lower_bound(support.begin(), support.end(), d,
                               [](const WeightEntry& e, std::uint64_t v) { return e.d < v; });
    return it != support.end() && it->d == d ? it->weight : 0;
  }
};

namespace detail {

inline std::vector<std::uint64_t> primes_below(double Z) {
  std::vector<std::uint64_t> out;
  if (Z <= 2) return out;
  const auto top = static_cast<std::uint64_t>(std::ceil(Z)) - 1;
  std::vector<bool> composite(top + 1, false);
  for (std::uint64_t p = 2; p <= top; ++p) {
    if (composite[p]) continue;
    if (static_cast<double>(p) < Z) out.push_back(p);
    for (std::uint64_t m = p * p; m <= top; m += p) composite[m] = true;
  }
  return out;
}

struct BetaBuilder {
  const std::vector<std::uint64_t>& primes;
  unsigned __int128 ceil_D;
  bool constrain_even;  // lower weights truncate at even depth, upper at odd
  std::size_t max_support;
  std::vector<WeightEntry> out;

  // Extends the chain p_1 > ... > p_r (product `prod`) by primes below primes[end].
  void extend(std::uint64_t prod, unsigned depth, std::size_t end) {
    const unsigned m = depth + 1;
    const bool constrained = (m % 2 == 0) == constrain_even;
    for (std::size_t j = 0; j < end; ++j) {
      const std::uint64_t q = primes[j];
      if (constrained) {
        // p_m^3 p_{m-1} ... p_1 < D; monotone in q, so stop at the first failure
        const unsigned __int128 v = static_cast<unsigned __int128>(prod) * q * q * q;
        if (v >= ceil_D) break;
      }
      const std::uint64_t d = prod * q;
      out.push_back({d, m % 2 == 0 ? 1 : -1});
      if (out.size() > max_support) {
        throw error(errc::resource_limit, "sieve weight support exceeds " + std::to_string(max_support));
      }
      extend(d, m, j);
    }
  }
};

inline SieveWeights build_beta(WeightKind kind, double D, double Z, const Budget& budget) {
  require(D >= 2 && Z >= 2, "sieve weights need D >= 2 and Z >= 2");
  require(D < 1e36, "sieve level too large");
  SieveWeights w;
  w.kind = kind;
  w.D = D;
  w.Z = Z;
  w.primes = primes_below(Z);
  if (kind == WeightKind::lower && !w.primes.empty()) {
    // depth one is never truncated for the lower weights, so every prime must already sit below D
    require(static_cast<double>(w.primes.back()) < D, "lower weights need every prime below Z to be < D");
  }
  const auto ceil_D = static_cast<unsigned __int128>(std::ceil(static_cast<long double>(D)));
  BetaBuilder b{w.primes, ceil_D, kind == WeightKind::lower, budget.max_support, {{1, 1}}};
  b.extend(1, 0, w.primes.size());
  std::sort(b.out.begin(), b.out.end(), [](const auto& x, const auto& y) { return x.d < y.d; });
  w.support = std::move(b.out);
  return w;
}

}  // namespace detail

/// Lower-bound weights mu(d) 1_A(d), where A holds d = p_1 ... p_r
/// (p_r < ... < p_1 < Z) with p_{2l}^3 p_{2l-1} ... p_1 < D for every l.
inline SieveWeights lower_beta_weights(double D, double Z, const Budget& budget = {}) {
  return detail::build_beta(WeightKind::lower, D, Z, budget);
}

/// Upper-bound weights: the same chains truncated at odd depth instead,
/// p_{2l+1}^3 p_{2l} ... p_1 < D.
inline SieveWeights upper_beta_weights(double D, double Z, const Budget& budget = {}) {
  return detail::build_beta(WeightKind::upper, D, Z, budget);
}

/// (w * 1)(n) = sum of w(d) over d | n.
inline int convolve_unit(const SieveWeights& w, const Factorization& f) {
  std::vector<std::uint64_t> small;
  for (const auto& [p, e] : f.factors) {
    if (static_cast<double>(p) < w.Z) small.push_back(p);
  }
  int total = 0;
  const std::size_t subsets = std::size_t{1} << small.size();
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    std::uint64_t d = 1;
    for (std::size_t i = 0; i < small.size(); ++i) {
      if (mask >> i & 1) d *= small[i];
    }
    total += w.weight(d);
  }
  return total;
}

/// (w * 1)(n) for every n in [0, N]; entry 0 is unused.
inline std::vector<int> convolve_unit_range(const SieveWeights& w, std::uint64_t N) {
  std::vector<int> conv(N + 1, 0);
  for (const auto& [d, wt] : w.support) {
    for (std::uint64_t m = d; m <= N; m += d) conv[m] += wt;
  }
  return conv;
}

/// True iff no prime below Z divides n. For non-integral Z this is P^-(n) > Z.
inline bool sifted(const Factorization& f, double Z) {
  const auto [p_minus, p_plus] = prime_extremes(f);
  return p_minus == kPlusInfinity || !(static_cast<double>(p_minus) < Z);
}

struct SandwichReport {
  std::uint64_t checked = 0;
  std::uint64_t violations = 0;
  std::uint64_t first_violation = 0;  // 0 when none
};

/// Exhaustive check of (lower * 1)(n) <= 1_sifted(n) <= (upper * 1)(n) for n <= N,
/// with equality of all three whenever n is sifted.
inline SandwichReport check_sandwich(const SieveWeights& lower, const SieveWeights& upper, std::uint64_t N,
                                     const Budget& budget = {}) {
  require(lower.Z == upper.Z, "sandwich check needs a common Z");
  budget.check_memory(static_cast<std::size_t>(N + 1) * 12, "sandwich check");
  const auto lo = convolve_unit_range(lower, N);
  const auto up = convolve_unit_range(upper, N);
  // smallest prime factor below Z, 0 if none
  std::vector<std::uint32_t> small_factor(N + 1, 0);
  for (std::uint64_t p : lower.primes) {
    for (std::uint64_t m = p; m <= N; m += p) {
      if (small_factor[m] == 0) small_factor[m] = static_cast<std::uint32_t>(p);
    }
  }
  SandwichReport r;
  for (std::uint64_t n = 1; n <= N; ++n) {
    const int ind = small_factor[n] == 0 ? 1 : 0;
    const bool ok = lo[n] <= ind && ind <= up[n] && (ind == 0 || (lo[n] == 1 && up[n] == 1));
    ++r.checked;
    if (!ok) {
      if (r.violations++ == 0) r.first_violation = n;
    }
  }
  return r;
}

/// Multiplicative density alpha, given by its values on primes.
struct DensitySpec {
  std::function<double(std::uint64_t)> alpha;
  double kappa = 2;
};

struct DensitySum {
  double sum;
  double euler_product;
};

namespace detail {

inline void validate_alpha(const std::vector<std::uint64_t>& primes, const std::function<double(std::uint64_t)>& alpha,
                           double kappa) {
  for (std::uint64_t p : primes) {
    const double a = alpha(p);
    require(a >= 0 && a <= std::min(kappa, static_cast<double>(p - 1)),
            "alpha(" + std::to_string(p) + ") = " + std::to_string(a) + " outside [0, min(kappa, p-1)]");
  }
}

}  // namespace detail

/// Sum of w(d) alpha(d) / d next to prod_{p<Z} (1 - alpha(p)/p).
inline DensitySum density_sum(const SieveWeights& w, const DensitySpec& spec) {
  detail::validate_alpha(w.primes, spec.alpha, spec.kappa);
  std::vector<double> alpha_p(w.primes.size());
  for (std::size_t i = 0; i < w.primes.size(); ++i) alpha_p[i] = spec.alpha(w.primes[i]);
  long double sum = 0;
  for (const auto& [d, wt] : w.support) {
    long double term = static_cast<long double>(wt) / static_cast<long double>(d);
    std::uint64_t m = d;
    for (std::size_t i = 0; i < w.primes.size() && m > 1; ++i) {
      if (m % w.primes[i] == 0) {
        term *= alpha_p[i];
        m /= w.primes[i];
      }
    }
    sum += term;
  }
  long double prod = 1;
  for (std::size_t i = 0; i < w.primes.size(); ++i) prod *= 1.0L - alpha_p[i] / static_cast<long double>(w.primes[i]);
  return {static_cast<double>(sum), static_cast<double>(prod)};
}

using Rational = boost::rational<std::int64_t>;

struct ExactDensitySum {
  Rational sum;
  Rational euler_product;
};

/// Exact rational version of density_sum for integer-valued alpha.
inline ExactDensitySum density_sum_exact(const SieveWeights& w, const std::function<std::int64_t(std::uint64_t)>& alpha,
                                         double kappa = 2) {
  detail::validate_alpha(w.primes, [&](std::uint64_t p) { return static_cast<double>(alpha(p)); }, kappa);
  unsigned __int128 primorial = 1;
  for (std::uint64_t p : w.primes) {
    primorial *= p;
    if (primorial > static_cast<unsigned __int128>(std::numeric_limits<std::int32_t>::max())) {
      throw error(errc::resource_limit, "exact density sum needs prod_{p<Z} p below 2^31");
    }
  }
  ExactDensitySum r{Rational(0), Rational(1)};
  for (const auto& [d, wt] : w.support) {
    std::int64_t num = wt;
    std::uint64_t m = d;
    for (std::uint64_t p : w.primes) {
      if (m % p == 0) {
        num *= alpha(p);
        m /= p;
      }
    }
    r.sum += Rational(num, static_cast<std::int64_t>(d));
  }
  for (std::uint64_t p : w.primes) {
    r.euler_product *= Rational(static_cast<std::int64_t>(p) - alpha(p), static_cast<std::int64_t>(p));
  }
  return r;
}

/// Two-column "d weight" dump of the support.
inline void write_support(std::ostream& os, const SieveWeights& w) {
  for (const auto& [d, wt] : w.support) os << d << ' ' << wt << '\n';
}

}  // namespace dsp
