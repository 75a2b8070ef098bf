#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dsp/arithmetic.hpp"
#include "dsp/error.hpp"
#include "dsp/prime_table.hpp"

namespace dsp {

struct AnalyticConstants {
  double delta;        // 1 - (1 + log log 2) / log 2
  double c315;         // 315 zeta(3) / (2 pi^4) = sum mu^2(k) / (k phi(k))
  double euler_gamma;
};

inline constexpr double kZeta3 = 1.2020569031595942853997381615114499907649862923405;

inline AnalyticConstants constants() {
  const double ln2 = std::numbers::ln2;
  const double pi4 = std::pow(std::numbers::pi, 4);
  return {1.0 - (1.0 + std::log(ln2)) / ln2, 315.0 * kZeta3 / (2.0 * pi4), std::numbers::egamma};
}

/// Coordinates of a (y, z) query: z = y e^eta = y^(1+u), eta = (log y)^(-beta),
/// beta = log 4 - 1 + xi / sqrt(log log y). beta and xi need y > e.
struct ParamPoint {
  double y;
  double z;
  double eta;
  double u;
  std::optional<double> beta;
  std::optional<double> xi;
  double z0;
};

/// Threshold y exp((log y)^(1 - log 4)) below which H(x, y, z) behaves like eta x.
inline double z0_of(double y) { return y * std::exp(std::pow(std::log(y), 1.0 - std::log(4.0))); }

inline ParamPoint derive_params(double y, double z) {
  require(y > 1, "derive_params needs y > 1");
  require(z > y, "derive_params needs z > y");
  ParamPoint p{y, z, std::log(z / y), 0, std::nullopt, std::nullopt, z0_of(y)};
  const double ly = std::log(y);
  p.u = p.eta / ly;
  const double lly = std::log(ly);
  if (lly > 0) {
    p.beta = -std::log(p.eta) / lly;
    p.xi = (*p.beta - std::log(4.0) + 1.0) * std::sqrt(lly);
  }
  return p;
}

inline double G_function(double beta) {
  require(beta >= 0, "G needs beta >= 0");
  const double ln2 = std::numbers::ln2;
  if (beta <= std::log(4.0) - 1.0) {
    return (1.0 + beta) / ln2 * std::log((1.0 + beta) / (std::numbers::e * ln2)) + 1.0;
  }
  return beta;
}

enum class FordBranch { short_interval, near_dyadic, dyadic_to_square, wide, reflected, reflected_short };

inline const char* to_string(FordBranch b) {
  switch (b) {
    case FordBranch::short_interval: return "short";
    case FordBranch::near_dyadic: return "near-dyadic";
    case FordBranch::dyadic_to_square: return "dyadic-to-square";
    case FordBranch::wide: return "wide";
    case FordBranch::reflected: return "reflected";
    case FordBranch::reflected_short: return "reflected-short";
  }
  return "?";
}

/// Order of magnitude of H(x, y, z), all implied constants set to 1.
struct FordEstimate {
  double value;
  FordBranch branch;  // branch of the small-y bracket that produced the value
  bool reflected;     // y > sqrt(x) was mapped to (x/z, x/y)
};

namespace detail {

inline FordEstimate ford_small_y(double x, double y, double z) {
  if (y <= 1) return {x, FordBranch::wide, false};  // d = 1 qualifies
  const ParamPoint p = derive_params(y, z);
  if (z <= p.z0 || !p.beta) return {p.eta * x, FordBranch::short_interval, false};
  if (z <= 2 * y) {
    const double beta = *p.beta;
    const double denom = std::max(1.0, -*p.xi) * std::pow(std::log(y), G_function(beta));
    return {x * beta / denom, FordBranch::near_dyadic, false};
  }
  if (z <= y * y) {
    const double delta = constants().delta;
    return {x * std::pow(p.u, delta) * std::pow(std::log(2.0 / p.u), -1.5), FordBranch::dyadic_to_square, false};
  }
  return {x, FordBranch::wide, false};
}

}  // namespace detail

inline FordEstimate ford_order_detail(double x, double y, double z) {
  require(2 <= y && y < z && z <= x, "ford_order needs 2 <= y < z <= x");
  if (y <= std::sqrt(x)) return detail::ford_small_y(x, y, z);
  const double y2 = x / z;
  const double z2 = x / y;
  if (z2 >= y2 + 1) {
    FordEstimate e = detail::ford_small_y(x, y2, z2);
    e.reflected = true;
    return e;
  }
  return {std::log(z / y) * x, FordBranch::reflected_short, true};
}

inline double ford_order(double x, double y, double z) { return ford_order_detail(x, y, z).value; }

namespace detail {

inline std::vector<std::uint64_t> distinct_primes(std::int64_t v) {
  std::vector<std::uint64_t> out;
  const std::uint64_t m = v < 0 ? static_cast<std::uint64_t>(-v) : static_cast<std::uint64_t>(v);
  for (const auto& f : factorize(m).factors) out.push_back(f.p);
  return out;
}

}  // namespace detail

/// prod over p | s of (p-1)^2 / (p^2 - p + 1).
inline double f_factor(std::int64_t s) {
  require(s != 0, "f_factor needs s != 0");
  long double r = 1;
  for (std::uint64_t p : detail::distinct_primes(s)) {
    const long double q = static_cast<long double>(p);
    r *= (q - 1) * (q - 1) / (q * q - q + 1);
  }
  return static_cast<double>(r);
}

/// prod over p | m of p(p-1) / (p^2 - p + 1).
inline double g_factor(std::uint64_t m) {
  require(m >= 1, "g_factor needs m >= 1");
  long double r = 1;
  for (const auto& f : factorize(m).factors) {
    const long double q = static_cast<long double>(f.p);
    r *= q * (q - 1) / (q * q - q + 1);
  }
  return static_cast<double>(r);
}

/// eta x: the short-interval asymptotic for H(x, y, z).
inline double tenenbaum_main(double x, double y, double z) {
  require(y < z && z <= x, "tenenbaum_main needs y < z <= x");
  require(y > 0, "tenenbaum_main needs y > 0");
  return std::log(z / y) * x;
}

/// f(s) c315 eta x / log x: the asymptotic for H(x, y, z; P_s) when eta is small.
inline double shifted_main(double x, double y, double z, std::int64_t s) {
  require(s != 0, "shifted_main needs s != 0");
  require(x > 1, "shifted_main needs x > 1");
  return f_factor(s) * constants().c315 * tenenbaum_main(x, y, z) / std::log(x);
}

/// Exact sum over n <= x, (n, s) = 1 of phi(a) / phi(an), ascending in n.
inline double phi_ratio_sum(std::uint64_t a, std::int64_t s, double x, const Budget& budget = {}) {
  require(a >= 1, "phi_ratio_sum needs a >= 1");
  require(s != 0, "phi_ratio_sum needs s != 0");
  const std::uint64_t abs_s = s < 0 ? static_cast<std::uint64_t>(-s) : static_cast<std::uint64_t>(s);
  require(static_cast<double>(abs_s) <= x, "phi_ratio_sum needs |s| <= x");
  const auto N = static_cast<std::uint64_t>(std::floor(x));
  budget.check_memory(static_cast<std::size_t>(N + 1) * 8, "totient table");
  std::vector<std::uint64_t> phi(N + 1);
  std::iota(phi.begin(), phi.end(), std::uint64_t{0});
  for (std::uint64_t p = 2; p <= N; ++p) {
    if (phi[p] != p) continue;
    for (std::uint64_t m = p; m <= N; m += p) phi[m] -= phi[m] / p;
  }
  // phi(a) / phi(an) = phi(g) / (g phi(n)) with g = gcd(a, n)
  std::unordered_map<std::uint64_t, std::uint64_t> phi_of_gcd;
  long double total = 0;
  for (std::uint64_t n = 1; n <= N; ++n) {
    if (std::gcd(n, abs_s) != 1) continue;
    const std::uint64_t g = std::gcd(a, n);
    std::uint64_t pg = 1;
    if (g > 1) {
      auto it = phi_of_gcd.find(g);
      if (it == phi_of_gcd.end()) it = phi_of_gcd.emplace(g, totient(factorize(g))).first;
      pg = it->second;
    }
    total += static_cast<long double>(pg) / (static_cast<long double>(g) * static_cast<long double>(phi[n]));
  }
  return static_cast<double>(total);
}

/// Main term with a certified enclosure for truncating the prime sum.
struct PhiMainTerm {
  double value;  // midpoint of [lower, upper]
  double lower;
  double upper;
  double truncation_width() const { return upper - lower; }
};

/// theta(x) < 1.01624 x for all x > 0 (Rosser and Schoenfeld).
inline constexpr double kChebyshevThetaBound = 1.01624;

/// Upper bound on sum over primes p > T of log p / (p^2 - p + 1), by partial
/// summation against theta(t) <= 1.01624 t.
inline double prime_log_tail_bound(std::uint64_t T, const PrimeTable& table) {
  require(T >= 2, "prime tail needs cutoff >= 2");
  long double theta = 0;
  table.for_each_prime(2, T, [&](std::uint64_t p) { theta += std::log(static_cast<long double>(p)); });
  const long double t = static_cast<long double>(T);
  const long double g = 1.0L / (t * (t - 1));
  const long double bound = (kChebyshevThetaBound * t - theta) * g + kChebyshevThetaBound * std::log(t / (t - 1));
  return static_cast<double>(bound);
}

/// c315 (phi(s)/|s|) g(as) (log x + gamma - sum_{p not | as} log p/(p^2-p+1) + sum_{p|s} log p/(p-1)),
/// the prime sum cut at prime_cutoff.
inline PhiMainTerm phi_ratio_main(std::uint64_t a, std::int64_t s, double x, std::uint64_t prime_cutoff,
                                  const PrimeTable& table) {
  require(a >= 1, "phi_ratio_main needs a >= 1");
  require(s != 0, "phi_ratio_main needs s != 0");
  const std::uint64_t abs_s = s < 0 ? static_cast<std::uint64_t>(-s) : static_cast<std::uint64_t>(s);
  require(static_cast<double>(abs_s) <= x, "phi_ratio_main needs |s| <= x");
  require(prime_cutoff >= 1000, "phi_ratio_main needs prime_cutoff >= 1000");
  if (table.limit() < prime_cutoff) {
    throw error(errc::table_too_small, "phi_ratio_main cutoff " + std::to_string(prime_cutoff) + " beyond limit " +
                                           std::to_string(table.limit()));
  }
  const auto k = constants();
  std::vector<std::uint64_t> as_primes = detail::distinct_primes(static_cast<std::int64_t>(a));
  const std::vector<std::uint64_t> s_primes = detail::distinct_primes(s);
  as_primes.insert(as_primes.end(), s_primes.begin(), s_primes.end());
  std::sort(as_primes.begin(), as_primes.end());
  as_primes.erase(std::unique(as_primes.begin(), as_primes.end()), as_primes.end());

  long double scale = k.c315;
  for (std::uint64_t p : s_primes) scale *= 1.0L - 1.0L / static_cast<long double>(p);  // phi(s)/|s|
  for (std::uint64_t p : as_primes) {
    const long double q = static_cast<long double>(p);
    scale *= q * (q - 1) / (q * q - q + 1);
  }
  long double bracket = std::log(static_cast<long double>(x)) + k.euler_gamma;
  table.for_each_prime(2, prime_cutoff, [&](std::uint64_t p) {
    if (std::binary_search(as_primes.begin(), as_primes.end(), p)) return;
    const long double q = static_cast<long double>(p);
    bracket -= std::log(q) / (q * q - q + 1);
  });
  for (std::uint64_t p : s_primes) {
    const long double q = static_cast<long double>(p);
    bracket += std::log(q) / (q - 1);
  }
  const long double tail = prime_log_tail_bound(prime_cutoff, table);
  const double upper = static_cast<double>(scale * bracket);
  const double lower = static_cast<double>(scale * (bracket - tail));
  return {0.5 * (lower + upper), lower, upper};
}

struct PartialSum {
  double value;
  double tail_bound;
};

/// Sum over squarefree k <= K of 1 / (k phi(k)) with a rigorous bound on the rest.
///
/// The tail uses n/phi(n) < e^gamma log log n + 2.50637 / log log n (n >= 3)
/// and log log t <= log log K + (log t - log K) / log K, giving
/// sum_{k>K} <= (A + B) / K with A = e^gamma log log K + 2.50637 / log log K,
/// B = e^gamma / log K. Valid for K >= 16 (log log K > 1); smaller K adds the
/// exact terms up to 16.
inline PartialSum c315_partial(std::uint64_t K, const Budget& budget = {}) {
  require(K >= 1, "c315_partial needs K >= 1");
  constexpr std::uint64_t kTailStart = 16;
  const std::uint64_t top = std::max(K, kTailStart);
  budget.check_memory(static_cast<std::size_t>(top + 1) * 5, "c315 partial sum");
  std::vector<std::uint32_t> phi(top + 1);
  std::iota(phi.begin(), phi.end(), std::uint32_t{0});
  std::vector<bool> square_free(top + 1, true);
  for (std::uint64_t p = 2; p <= top; ++p) {
    if (phi[p] != p) continue;
    for (std::uint64_t m = p; m <= top; m += p) phi[m] -= phi[m] / static_cast<std::uint32_t>(p);
    if (p <= top / p) {
      for (std::uint64_t m = p * p; m <= top; m += p * p) square_free[m] = false;
    }
  }
  long double head = 0;
  long double extra = 0;  // terms in (K, 16] when K < 16
  for (std::uint64_t k = 1; k <= top; ++k) {
    if (!square_free[k]) continue;
    const long double term = 1.0L / (static_cast<long double>(k) * phi[k]);
    (k <= K ? head : extra) += term;
  }
  const long double kk = static_cast<long double>(top);
  const long double lk = std::log(kk);
  const long double llk = std::log(lk);
  const long double eg = std::exp(static_cast<long double>(std::numbers::egamma));
  const long double A = eg * llk + 2.50637L / llk;
  const long double B = eg / lk;
  return {static_cast<double>(head), static_cast<double>(extra + (A + B) / kk)};
}

/// Sum of 1/phi(q) over Q1 < q <= Q2 with gcd(q, a) = 1, via a segmented totient sieve.
inline double sum_inv_phi_range(std::uint64_t Q1, std::uint64_t Q2, std::int64_t a, const Budget& budget = {}) {
  require(Q1 < Q2, "sum_inv_phi_range needs Q1 < Q2");
  const std::uint64_t abs_a = a < 0 ? static_cast<std::uint64_t>(-a) : static_cast<std::uint64_t>(a);
  const std::uint64_t len = Q2 - Q1;
  budget.check_memory(static_cast<std::size_t>(len) * 16, "totient range");
  std::vector<std::uint64_t> rest(len), phi(len);
  for (std::uint64_t i = 0; i < len; ++i) rest[i] = phi[i] = Q1 + 1 + i;
  const auto root = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(Q2)));
  std::vector<bool> composite(root + 1, false);
  for (std::uint64_t p = 2; p <= root; ++p) {
    if (composite[p]) continue;
    for (std::uint64_t m = p * p; m <= root; m += p) composite[m] = true;
    for (std::uint64_t q = (Q1 / p + 1) * p; q <= Q2; q += p) {
      const std::uint64_t i = q - Q1 - 1;
      phi[i] -= phi[i] / p;
      while (rest[i] % p == 0) rest[i] /= p;
    }
  }
  long double total = 0;
  for (std::uint64_t i = 0; i < len; ++i) {
    const std::uint64_t q = Q1 + 1 + i;
    if (rest[i] > 1) phi[i] -= phi[i] / rest[i];
    if (std::gcd(q, abs_a) != 1) continue;
    total += 1.0L / static_cast<long double>(phi[i]);
  }
  return static_cast<double>(total);
}

}  // namespace dsp
