#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "dsp/arithmetic.hpp"
#include "dsp/error.hpp"

namespace dsp {

/// Half-open interval [left, right).
template <typename T>
struct Interval {
  T left;
  T right;

  T length() const { return right - left; }
  bool disjoint(const Interval& o) const { return !(left < o.right && o.left < right); }
  /// Same center, three times the diameter.
  Interval tripled() const { return {left - length(), right + length()}; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Relative closeness below which floating endpoints are treated as touching.
/// log(d) is only accurate to a few ulps, so [log d - s, log d) and
/// [log d', ...) must merge when log d' - s == log d mathematically.
inline constexpr double kMergeTolerance = 0x1p-40;

/// Sorted, pairwise disjoint union of half-open intervals. Adjacent pieces are
/// merged, so consecutive blocks satisfy right_i < left_{i+1} strictly.
template <typename T = double>
class IntervalUnion {
 public:
  IntervalUnion() = default;

  explicit IntervalUnion(std::vector<Interval<T>> pieces) {
    std::erase_if(pieces, [](const Interval<T>& i) { return !(i.left < i.right); });
    std::sort(pieces.begin(), pieces.end(), [](const auto& a, const auto& b) {
      return a.left < b.left || (a.left == b.left && a.right < b.right);
    });
    for (const auto& piece : pieces) {
      if (!blocks_.empty() && touches(blocks_.back().right, piece.left)) {
        if (blocks_.back().right < piece.right) blocks_.back().right = piece.right;
      } else {
        blocks_.push_back(piece);
      }
    }
  }

  const std::vector<Interval<T>>& intervals() const noexcept { return blocks_; }
  bool empty() const noexcept { return blocks_.empty(); }

  T measure() const {
    T total{0};
    for (const auto& b : blocks_) total += b.length();
    return total;
  }

  /// True iff [left, right) lies inside the union.
  bool covers(const Interval<T>& piece) const {
    auto it = std::upper_bound(blocks_.begin(), blocks_.end(), piece.left,
                               [](const T& v, const Interval<T>& b) { return v < b.left; });
    if (it == blocks_.begin()) return false;
    --it;
    return !(piece.left < it->left) && !(it->right < piece.right);
  }

  friend bool operator==(const IntervalUnion&, const IntervalUnion&) = default;

 private:
  static bool touches(const T& right, const T& next_left) {
    if constexpr (std::is_floating_point_v<T>) {
      using std::abs;
      return next_left <= right + kMergeTolerance * std::max<T>(T{1}, abs(right));
    } else {
      return !(right < next_left);
    }
  }

  std::vector<Interval<T>> blocks_;
};

/// The set of real t such that some divisor d of n satisfies e^t < d <= e^(t + sigma),
/// i.e. the union of [log d - sigma, log d) over all d | n.
inline IntervalUnion<double> divisor_log_union(const Factorization& f, double sigma, const Budget& budget = {}) {
  require(sigma > 0, "divisor_log_union needs sigma > 0");
  std::vector<Interval<double>> pieces;
  for (std::uint64_t d : f.divisors(budget)) {
    const double ld = std::log(static_cast<double>(d));
    pieces.push_back({ld - sigma, ld});
  }
  return IntervalUnion<double>(std::move(pieces));
}

inline double measure_L(const IntervalUnion<double>& u) { return u.measure(); }

inline double L_measure(const Factorization& f, double sigma, const Budget& budget = {}) {
  return divisor_log_union(f, sigma, budget).measure();
}

struct DivisorPair {
  std::uint64_t d;
  std::uint64_t d_prime;
  friend bool operator==(const DivisorPair&, const DivisorPair&) = default;
};

/// Maximal blocks of the divisor log-union, each written as [log d - eta, log d').
struct DivisorPairDecomposition {
  double eta = 0;
  std::vector<DivisorPair> pairs;

  IntervalUnion<double> to_union() const {
    std::vector<Interval<double>> pieces;
    for (const auto& [d, dp] : pairs) {
      pieces.push_back({std::log(static_cast<double>(d)) - eta, std::log(static_cast<double>(dp))});
    }
    return IntervalUnion<double>(std::move(pieces));
  }
};

inline DivisorPairDecomposition decompose_pairs(const Factorization& f, double eta, const Budget& budget = {}) {
  require(eta > 0, "decompose_pairs needs eta > 0");
  DivisorPairDecomposition out{eta, {}};
  const auto divs = f.divisors(budget);
  std::uint64_t first = divs.front();
  double reach = std::log(static_cast<double>(first));
  for (std::size_t i = 1; i < divs.size(); ++i) {
    const double ld = std::log(static_cast<double>(divs[i]));
    if (ld - eta <= reach + kMergeTolerance * std::max(1.0, std::abs(reach))) {
      reach = ld;
      continue;
    }
    out.pairs.push_back({first, divs[i - 1]});
    first = divs[i];
    reach = ld;
  }
  out.pairs.push_back({first, divs.back()});
  return out;
}

/// Greedy Vitali selection: longest first (ties: smaller left endpoint, then
/// input order), keeping each interval disjoint from those already kept.
/// Returns indices into `family`, in selection order.
template <typename T>
std::vector<std::size_t> vitali_subcover(std::span<const Interval<T>> family) {
  for (const auto& i : family) require(i.left < i.right, "vitali_subcover needs nonempty intervals");
  std::vector<std::size_t> order(family.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const T la = family[a].length();
    const T lb = family[b].length();
    if (lb < la) return true;
    if (la < lb) return false;
    return family[a].left < family[b].left;
  });
  // kept intervals, keyed by left endpoint; they are disjoint so also ordered by right
  auto by_left = [&](std::size_t a, std::size_t b) { return family[a].left < family[b].left; };
  std::set<std::size_t, decltype(by_left)> kept(by_left);
  std::vector<std::size_t> chosen;
  for (std::size_t idx : order) {
    const auto& cand = family[idx];
    auto it = kept.lower_bound(idx);
    bool ok = true;
    if (it != kept.end() && !cand.disjoint(family[*it])) ok = false;
    if (ok && it != kept.begin() && !cand.disjoint(family[*std::prev(it)])) ok = false;
    if (ok) {
      kept.insert(idx);
      chosen.push_back(idx);
    }
  }
  return chosen;
}

template <typename T>
std::vector<std::size_t> vitali_subcover(const std::vector<Interval<T>>& family) {
  return vitali_subcover(std::span<const Interval<T>>(family));
}

enum class DensityWeight { reciprocal, reciprocal_phi };

struct DensityConstraints {
  bool squarefree = true;
  std::uint64_t coprime_to = 1;  // 1 imposes nothing
};

/// Sum over qualifying a <= w of L(a; eta) / a (or / phi(a)), ascending in a.
inline double sum_L_density(std::uint64_t w, double eta, DensityWeight weight, DensityConstraints constraints = {},
                            const Budget& budget = {}) {
  require(w >= 1, "sum_L_density needs w >= 1");
  require(eta > 0, "sum_L_density needs eta > 0");
  long double total = 0;
  for (std::uint64_t a = 1; a <= w; ++a) {
    if (std::gcd(a, constraints.coprime_to) != 1) continue;
    const Factorization f = factorize(a);
    if (constraints.squarefree && !f.squarefree()) continue;
    const double L = L_measure(f, eta, budget);
    const double denom = weight == DensityWeight::reciprocal ? static_cast<double>(a) : static_cast<double>(totient(f));
    total += static_cast<long double>(L) / denom;
  }
  return static_cast<double>(total);
}

}  // namespace dsp
