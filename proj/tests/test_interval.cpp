#include <gtest/gtest.h>

#include <boost/rational.hpp>
#include <cmath>
#include <numeric>
#include <random>

#include "dsp/interval.hpp"

namespace {

using dsp::factorize;
using dsp::Interval;
using dsp::IntervalUnion;
using Q = boost::rational<std::int64_t>;

// L(a; sigma) from consecutive gaps between sorted log-divisors
double gap_measure(std::uint64_t a, double sigma) {
  std::vector<double> logs;
  for (std::uint64_t d = 1; d <= a; ++d) {
    if (a % d == 0) logs.push_back(std::log(static_cast<double>(d)));
  }
  double total = sigma;
  for (std::size_t i = 1; i < logs.size(); ++i) total += std::min(logs[i] - logs[i - 1], sigma);
  return total;
}

TEST(IntervalUnion, MergesAndMeasures) {
  IntervalUnion<double> empty;
  EXPECT_EQ(empty.measure(), 0.0);
  IntervalUnion<double> u({{3, 4}, {0, 1}, {0.5, 2}, {2, 2.5}, {5, 5}});
  ASSERT_EQ(u.intervals().size(), 2u);
  EXPECT_EQ(u.intervals()[0], (Interval<double>{0, 2.5}));
  EXPECT_EQ(u.intervals()[1], (Interval<double>{3, 4}));
  EXPECT_DOUBLE_EQ(u.measure(), 3.5);
  EXPECT_TRUE(u.covers({0.2, 2.4}));
  EXPECT_FALSE(u.covers({2.4, 3.1}));
}

TEST(IntervalUnion, NormalizedInvariant) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pos(0, 200);
  for (int t = 0; t < 500; ++t) {
    std::vector<Interval<Q>> pieces;
    Q total = 0;
    for (int k = 0; k < 20; ++k) {
      const int a = pos(rng);
      pieces.push_back({Q(a, 7), Q(a + 1 + pos(rng) % 15, 7)});
    }
    IntervalUnion<Q> u(pieces);
    const auto& b = u.intervals();
    for (std::size_t i = 0; i < b.size(); ++i) {
      ASSERT_LT(b[i].left, b[i].right);
      if (i + 1 < b.size()) {
        ASSERT_LT(b[i].right, b[i + 1].left);
      }
      total += b[i].length();
    }
    ASSERT_EQ(total, u.measure());
    for (const auto& p : pieces) ASSERT_TRUE(u.covers(p));
  }
}

TEST(DivisorLogUnion, Examples) {
  const double s = 0.3;
  const auto one = dsp::divisor_log_union(factorize(1), s);
  ASSERT_EQ(one.intervals().size(), 1u);
  EXPECT_DOUBLE_EQ(one.intervals()[0].left, -s);
  EXPECT_DOUBLE_EQ(one.intervals()[0].right, 0.0);
  EXPECT_DOUBLE_EQ(dsp::measure_L(one), s);
  const auto p = dsp::divisor_log_union(factorize(101), s);
  EXPECT_EQ(p.intervals().size(), 2u);
  EXPECT_NEAR(p.measure(), 2 * s, 1e-15);
  const auto six = dsp::divisor_log_union(factorize(6), std::log(2.0));
  ASSERT_EQ(six.intervals().size(), 1u);
  EXPECT_NEAR(six.intervals()[0].left, -std::log(2.0), 1e-15);
  EXPECT_NEAR(six.intervals()[0].right, std::log(6.0), 1e-15);
  EXPECT_NEAR(dsp::L_measure(factorize(6), std::log(2.0)), 2.484906649788000310, 1e-12);
  EXPECT_THROW((void)dsp::divisor_log_union(factorize(6), 0), dsp::error);
}

TEST(DivisorLogUnion, Bounds) {
  for (std::uint64_t a = 1; a <= 10000; ++a) {
    const auto f = factorize(a);
    const double tau = static_cast<double>(f.tau());
    for (double s : {0.01, 0.1, 1.0}) {
      const double L = dsp::L_measure(f, s);
      const double slack = 1e-12 * (1 + std::log(static_cast<double>(a)));
      ASSERT_GE(L, s - slack) << a;
      ASSERT_LE(L, std::min(tau * s, s + std::log(static_cast<double>(a))) + slack) << a << " " << s;
    }
  }
}

TEST(DivisorLogUnion, MonotoneInSigma) {
  for (std::uint64_t a = 1; a <= 3000; ++a) {
    const auto f = factorize(a);
    double prev = 0;
    for (double s = 0.005; s < 3; s *= 1.3) {
      const double L = dsp::L_measure(f, s);
      ASSERT_GE(L, prev - 1e-12) << a << " " << s;
      prev = L;
    }
  }
}

TEST(DivisorLogUnion, SubmultiplicativeOnCoprimePairs) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::uint64_t> pick(1, 1000);
  std::uniform_real_distribution<double> sig(0.001, 2.0);
  int checked = 0;
  while (checked < 500) {
    const auto a = pick(rng);
    const auto b = pick(rng);
    if (std::gcd(a, b) != 1) continue;
    const double s = sig(rng);
    const auto fa = factorize(a);
    const double lhs = dsp::L_measure(factorize(a * b), s);
    const double rhs = static_cast<double>(fa.tau()) * dsp::L_measure(factorize(b), s);
    ASSERT_LE(lhs, rhs * (1 + 1e-12)) << a << " " << b << " " << s;
    ++checked;
  }
}

TEST(DivisorLogUnion, MatchesGapFormula) {
  for (std::uint64_t a = 1; a <= 2000; ++a) {
    for (double s : {0.05, 0.4, 1.1}) ASSERT_NEAR(dsp::L_measure(factorize(a), s), gap_measure(a, s), 1e-12) << a;
  }
}

TEST(DecomposePairs, Examples) {
  const auto one = dsp::decompose_pairs(factorize(1), 0.5);
  EXPECT_EQ(one.pairs, (std::vector<dsp::DivisorPair>{{1, 1}}));
  const auto p = dsp::decompose_pairs(factorize(13), 1.0);
  EXPECT_EQ(p.pairs, (std::vector<dsp::DivisorPair>{{1, 1}, {13, 13}}));
  const auto six = dsp::decompose_pairs(factorize(6), std::log(2.0));
  EXPECT_EQ(six.pairs, (std::vector<dsp::DivisorPair>{{1, 6}}));
}

TEST(DecomposePairs, RoundTrip) {
  for (std::uint64_t a = 1; a <= 5000; ++a) {
    const auto f = factorize(a);
    for (double eta : {0.02, 0.3, std::log(2.0), 1.7}) {
      const auto dec = dsp::decompose_pairs(f, eta);
      const auto direct = dsp::divisor_log_union(f, eta);
      ASSERT_EQ(dec.to_union(), direct) << a << " " << eta;
      ASSERT_EQ(dec.pairs.size(), direct.intervals().size());
      for (const auto& [d, dp] : dec.pairs) {
        ASSERT_LE(d, dp);
        ASSERT_EQ(a % d, 0u);
        ASSERT_EQ(a % dp, 0u);
      }
    }
  }
}

TEST(Vitali, Examples) {
  std::vector<Interval<double>> single{{0, 1}};
  EXPECT_EQ(dsp::vitali_subcover(single), (std::vector<std::size_t>{0}));
  EXPECT_EQ(single[0].tripled(), (Interval<double>{-1, 2}));
  std::vector<Interval<double>> three{{0, 1}, {0.5, 1.5}, {2, 3}};
  auto chosen = dsp::vitali_subcover(three);
  std::sort(chosen.begin(), chosen.end());
  EXPECT_EQ(chosen, (std::vector<std::size_t>{0, 2}));
}

TEST(Vitali, RandomFamiliesExact) {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> pos(-500, 500);
  std::uniform_int_distribution<int> len(1, 120);
  std::uniform_int_distribution<int> count(1, 40);
  std::uniform_int_distribution<int> den(1, 12);
  for (int t = 0; t < 1000; ++t) {
    std::vector<Interval<Q>> fam;
    const int n = count(rng);
    for (int k = 0; k < n; ++k) {
      const Q left(pos(rng), den(rng));
      fam.push_back({left, left + Q(len(rng), den(rng))});
    }
    const auto chosen = dsp::vitali_subcover(fam);
    std::vector<Interval<Q>> triples;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      for (std::size_t j = i + 1; j < chosen.size(); ++j) ASSERT_TRUE(fam[chosen[i]].disjoint(fam[chosen[j]]));
      triples.push_back(fam[chosen[i]].tripled());
    }
    const IntervalUnion<Q> cover(triples);
    for (const auto& piece : fam) ASSERT_TRUE(cover.covers(piece)) << t;
  }
}

TEST(Vitali, RejectsEmpty) {
  std::vector<Interval<double>> bad{{1, 1}};
  EXPECT_THROW((void)dsp::vitali_subcover(bad), dsp::error);
}

TEST(SumLDensity, Examples) {
  using dsp::DensityWeight;
  EXPECT_NEAR(dsp::sum_L_density(1, 0.37, DensityWeight::reciprocal), 0.37, 1e-15);
  EXPECT_NEAR(dsp::sum_L_density(2, 0.1, DensityWeight::reciprocal), 0.2, 1e-15);
  double direct = 0, direct_phi = 0;
  for (std::uint64_t a = 1; a <= 100; ++a) {
    const auto f = factorize(a);
    if (!f.squarefree()) continue;
    direct += gap_measure(a, 0.05) / static_cast<double>(a);
    if (a % 2) direct_phi += gap_measure(a, 0.05) / static_cast<double>(dsp::totient(f));
  }
  EXPECT_NEAR(dsp::sum_L_density(100, 0.05, DensityWeight::reciprocal), direct, 1e-12);
  EXPECT_NEAR(dsp::sum_L_density(100, 0.05, DensityWeight::reciprocal_phi, {true, 2}), direct_phi, 1e-12);
  EXPECT_THROW((void)dsp::sum_L_density(0, 0.1, DensityWeight::reciprocal), dsp::error);
}

}  // namespace
