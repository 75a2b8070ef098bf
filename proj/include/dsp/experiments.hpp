#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dsp/arithmetic.hpp"
#include "dsp/counters.hpp"
#include "dsp/error.hpp"
#include "dsp/estimators.hpp"
#include "dsp/interval.hpp"
#include "dsp/parallel.hpp"
#include "dsp/prime_cache.hpp"
#include "dsp/prime_table.hpp"
#include "dsp/report.hpp"
#include "dsp/sieve_weights.hpp"

namespace dsp {

/// Sum over primes p <= x, p = a (mod q) of v^Omega(|p - a| / q; y), where
/// Omega(m; y) counts prime factors <= y with multiplicity and Omega(0; y) = 0.
inline double weighted_shifted_sum(std::uint64_t x, std::uint64_t q, std::int64_t a, double v, double y,
                                   const PrimeTable& table) {
  require(q >= 1, "weighted_shifted_sum needs q >= 1");
  const std::uint64_t abs_a = a < 0 ? static_cast<std::uint64_t>(-a) : static_cast<std::uint64_t>(a);
  require(std::gcd(abs_a, q) == 1, "weighted_shifted_sum needs gcd(a, q) = 1");
  require(x > abs_a, "weighted_shifted_sum needs x > |a|");
  require(y >= 1.5, "weighted_shifted_sum needs y >= 3/2");
  require(v >= 1 && v < 2, "weighted_shifted_sum needs 1 <= v < 2");
  if (x > table.limit()) {
    throw error(errc::table_too_small, "weighted_shifted_sum(x=" + std::to_string(x) + ") beyond limit " +
                                           std::to_string(table.limit()));
  }
  const auto ymax = static_cast<std::uint64_t>(std::min<double>(std::floor(y), static_cast<double>(x)));
  const auto small = table.primes_up_to(ymax);
  std::vector<long double> power{1.0L};
  long double total = 0;
  const std::int64_t sq = static_cast<std::int64_t>(q);
  std::uint64_t p = static_cast<std::uint64_t>(((a % sq) + sq) % sq);
  if (p < 2) p += q;
  for (; p <= x; p += q) {
    if (!table.is_prime(p)) continue;
    const std::int64_t diff = static_cast<std::int64_t>(p) - a;
    std::uint64_t m = static_cast<std::uint64_t>(diff < 0 ? -diff : diff) / q;
    unsigned c = 0;
    if (m > 0) {
      for (std::uint64_t r : small) {
        if (r > m / r) break;
        while (m % r == 0) {
          m /= r;
          ++c;
        }
      }
      if (m > 1 && m <= ymax) ++c;
    }
    while (power.size() <= c) power.push_back(power.back() * v);
    total += power[c];
  }
  return static_cast<double>(total);
}

enum class ExperimentName {
  oracle_h,
  interm_ratio,
  small_eta,
  large_eta,
  table_ratio,
  phisum_error,
  svl1_ratio,
  prl8_ratio,
  l2b_ratio,
  sieve_sandwich,
};

inline constexpr ExperimentName kAllExperiments[] = {
    ExperimentName::oracle_h,     ExperimentName::interm_ratio, ExperimentName::small_eta,
    ExperimentName::large_eta,    ExperimentName::table_ratio,  ExperimentName::phisum_error,
    ExperimentName::svl1_ratio,   ExperimentName::prl8_ratio,   ExperimentName::l2b_ratio,
    ExperimentName::sieve_sandwich,
};

inline const char* to_string(ExperimentName n) {
  switch (n) {
    case ExperimentName::oracle_h: return "oracle-h";
    case ExperimentName::interm_ratio: return "interm-ratio";
    case ExperimentName::small_eta: return "small-eta";
    case ExperimentName::large_eta: return "large-eta";
    case ExperimentName::table_ratio: return "table-ratio";
    case ExperimentName::phisum_error: return "phisum-error";
    case ExperimentName::svl1_ratio: return "svl1-ratio";
    case ExperimentName::prl8_ratio: return "prl8-ratio";
    case ExperimentName::l2b_ratio: return "l2b-ratio";
    case ExperimentName::sieve_sandwich: return "sieve-sandwich";
  }
  return "?";
}

inline ExperimentName parse_experiment_name(const std::string& s) {
  for (ExperimentName n : kAllExperiments) {
    if (s == to_string(n)) return n;
  }
  throw error(errc::invalid_argument, "unknown experiment '" + s + "'");
}

/// Canonical choices of z for a given y.
enum class ZRule {
  short_interval,  // z = y + y (log y)^-B
  dyadic,          // z = 2y
  wide,            // z = y^2
};

inline double apply_z_rule(ZRule rule, double y, double B) {
  switch (rule) {
    case ZRule::short_interval: return y + y * std::pow(std::log(y), -B);
    case ZRule::dyadic: return 2 * y;
    case ZRule::wide: return y * y;
  }
  return y;
}

inline const char* to_string(ZRule r) {
  switch (r) {
    case ZRule::short_interval: return "short";
    case ZRule::dyadic: return "dyadic";
    case ZRule::wide: return "wide";
  }
  return "?";
}

/// eta = value, or eta = (log y)^value when `log_power` is set.
struct EtaRule {
  double value;
  bool log_power = false;
  double eta_for(double y) const { return log_power ? std::pow(std::log(y), value) : value; }
};

struct Grid {
  std::vector<std::uint64_t> xs;
  std::vector<double> ys;
  std::vector<double> zs;       // explicit z values; take precedence over z_rules
  std::vector<ZRule> z_rules;
  std::vector<EtaRule> etas;
  std::vector<std::int64_t> ss;
  std::vector<std::uint64_t> ns;  // multiplication-table N, or sandwich range
  std::vector<std::uint64_t> qs;  // band starts Q1 (svl1) or moduli (l2b)
  std::vector<std::uint64_t> as;  // a for the phi sums
  std::vector<std::int64_t> residues;
  std::vector<double> vs;
  std::vector<std::pair<double, double>> levels;  // (Z, D)
  double B = 2;
  double epsilon = 0.2;
  std::size_t random_pairs = 200;
  std::uint64_t prime_cutoff = 1'000'000;
};

struct ExperimentSpec {
  ExperimentName name = ExperimentName::oracle_h;
  Grid grid;
  std::uint64_t seed = 1;
  Budget budget;
  ExecPolicy exec;
  std::optional<std::filesystem::path> cache_dir;
};

/// Default grids; sizes are chosen to finish in seconds to minutes on one core.
inline ExperimentSpec default_spec(ExperimentName name) {
  ExperimentSpec spec;
  spec.name = name;
  Grid& g = spec.grid;
  switch (name) {
    case ExperimentName::oracle_h:
      g.xs = {1, 10, 100, 997, 2500, 5000};
      g.random_pairs = 200;
      break;
    case ExperimentName::interm_ratio:
      g.xs = {1'000'000, 10'000'000};
      g.ys = {100, 1000};
      g.z_rules = {ZRule::short_interval, ZRule::dyadic, ZRule::wide};
      g.ss = {1, -1, 2};
      break;
    case ExperimentName::small_eta:
      g.xs = {1'000'000, 10'000'000};
      g.ys = {100, 1000, 3000};
      g.z_rules = {ZRule::short_interval};
      g.ss = {1, -1, 2};
      break;
    case ExperimentName::large_eta:
      g.xs = {10'000'000};
      g.ys = {10, 20, 100};
      g.zs = {10'000, 100'000, 1'000'000};
      g.ss = {1, -1};
      break;
    case ExperimentName::table_ratio:
      g.ns = {1 << 8, 1 << 9, 1 << 10, 1 << 11, 1 << 12, 1 << 13};
      g.ss = {1};
      break;
    case ExperimentName::phisum_error:
      g.xs = {1'000, 10'000, 100'000, 1'000'000};
      g.as = {1, 2, 1};
      g.ss = {1, 3, -2};
      break;
    case ExperimentName::svl1_ratio:
      g.xs = {10'000'000};
      g.qs = {100, 1000};
      g.residues = {-1};
      break;
    case ExperimentName::prl8_ratio:
      g.xs = {10'000'000};
      g.ys = {100, 1000};
      g.etas = {{-2, true}, {0.1}, {std::log(2.0)}};
      g.epsilon = 0.2;
      break;
    case ExperimentName::l2b_ratio:
      g.xs = {1'000'000, 10'000'000};
      g.qs = {1, 3, 10};
      g.residues = {1, -1};
      g.vs = {1.0, 1.5, 1.9};
      g.ys = {100};
      break;
    case ExperimentName::sieve_sandwich:
      g.ns = {1'000'000};
      g.levels = {{5, 125}, {10, 1e3}, {20, 8e3}, {30, 2.7e4}};
      break;
  }
  return spec;
}

namespace detail {

using Params = std::vector<std::pair<std::string, double>>;

// One grid point: parameters plus the work that turns them into a row.
struct Task {
  Params params;
  std::function<ReportRow()> run;
};

inline ReportRow truncated_row(const std::string& name, Params params, const std::string&) {
  ReportRow r = make_row(name, std::move(params), std::numeric_limits<double>::quiet_NaN(),
                         std::numeric_limits<double>::quiet_NaN(), Verdict::truncated);
  return r;
}

inline std::vector<ReportRow> run_tasks(const std::string& name, std::vector<Task>& tasks, unsigned threads) {
  return parallel_map(tasks.size(), threads, [&](std::size_t i) {
    try {
      return tasks[i].run();
    } catch (const error& e) {
      if (e.code() != errc::resource_limit) throw;
      return truncated_row(name, tasks[i].params, e.what());
    }
  });
}

// Builds (or loads) one shared table; on budget failure every row is truncated.
inline std::optional<PrimeTable> shared_table(std::uint64_t limit, const ExperimentSpec& spec) {
  try {
    return load_or_build_prime_table(limit, spec.cache_dir, spec.budget).table;
  } catch (const error& e) {
    if (e.code() != errc::resource_limit) throw;
    return std::nullopt;
  }
}

inline std::uint64_t abs64(std::int64_t v) { return v < 0 ? static_cast<std::uint64_t>(-v) : static_cast<std::uint64_t>(v); }

inline std::vector<double> z_values(const Grid& g, double y) {
  std::vector<double> out;
  if (!g.zs.empty()) {
    for (double z : g.zs) out.push_back(z);
  } else {
    for (ZRule r : g.z_rules) out.push_back(apply_z_rule(r, y, g.B));
  }
  return out;
}

}  // namespace detail

/// Runs one experiment over its grid. Rows come back in grid order whatever
/// the worker count, so reruns with the same spec are byte-identical.
inline std::vector<ReportRow> run_experiment(const ExperimentSpec& spec) {
  using detail::Params;
  using detail::Task;
  const Grid& g = spec.grid;
  const std::string name = to_string(spec.name);
  ExecPolicy inner = spec.exec;
  inner.threads = 1;
  std::vector<Task> tasks;
  std::optional<PrimeTable> table;
  auto need_table = [&](std::uint64_t limit) {
    table = detail::shared_table(std::max<std::uint64_t>(limit, 2), spec);
    return table.has_value();
  };
  auto all_truncated = [&]() {
    std::vector<ReportRow> rows;
    for (auto& t : tasks) rows.push_back(detail::truncated_row(name, t.params, "prime table over budget"));
    return rows;
  };

  switch (spec.name) {
    case ExperimentName::oracle_h: {
      require(!g.xs.empty() && g.random_pairs > 0, "oracle-h needs x values and random pairs");
      const std::uint64_t xmax = *std::max_element(g.xs.begin(), g.xs.end());
      std::mt19937_64 rng(spec.seed);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (std::size_t i = 0; i < g.random_pairs; ++i) {
        // y log-uniform on [0.5, xmax], z - y log-uniform on [0.1, 2 xmax]
        const double y = 0.5 * std::pow(2.0 * static_cast<double>(xmax), unit(rng));
        const double z = y + 0.1 * std::pow(20.0 * static_cast<double>(xmax), unit(rng));
        for (std::uint64_t x : g.xs) {
          Params p{{"x", static_cast<double>(x)}, {"y", y}, {"z", z}};
          tasks.push_back({p, [=, &spec] {
                             const double fast = static_cast<double>(count_H(x, y, z, inner, spec.budget).count);
                             const double brute = static_cast<double>(count_H_brute(x, y, z, spec.budget));
                             return make_row(name, p, fast, brute, fast == brute ? Verdict::pass : Verdict::fail);
                           }});
        }
      }
      break;
    }
    case ExperimentName::interm_ratio:
    case ExperimentName::small_eta: {
      std::uint64_t limit = 2;
      for (std::uint64_t x : g.xs) {
        for (std::int64_t s : g.ss) limit = std::max(limit, x + detail::abs64(s));
      }
      for (std::uint64_t x : g.xs) {
        for (double y : g.ys) {
          for (double z : detail::z_values(g, y)) {
            if (!(z <= static_cast<double>(x)) || !(y < z)) continue;
            for (std::int64_t s : g.ss) {
              Params p{{"x", static_cast<double>(x)}, {"y", y}, {"z", z}, {"s", static_cast<double>(s)},
                       {"eta", std::log(z / y)}};
              const bool interm = spec.name == ExperimentName::interm_ratio;
              tasks.push_back({p, [=, &table, &spec] {
                                 const double hs =
                                     static_cast<double>(count_H_shifted(x, y, z, s, *table, inner, spec.budget).count);
                                 double ref;
                                 if (interm) {
                                   const double h = static_cast<double>(count_H(x, y, z, inner, spec.budget).count);
                                   ref = h / std::log(static_cast<double>(x));
                                 } else {
                                   ref = shifted_main(static_cast<double>(x), y, z, s);
                                 }
                                 return make_row(name, p, hs, ref);
                               }});
            }
          }
        }
      }
      if (!need_table(limit)) return all_truncated();
      break;
    }
    case ExperimentName::large_eta: {
      std::uint64_t limit = 2;
      for (std::uint64_t x : g.xs) {
        for (std::int64_t s : g.ss) limit = std::max(limit, x + detail::abs64(s));
      }
      for (std::uint64_t x : g.xs) {
        for (double y : g.ys) {
          for (double z : detail::z_values(g, y)) {
            if (!(y < z) || z > static_cast<double>(x) || y < 2) continue;
            for (std::int64_t s : g.ss) {
              Params p{{"x", static_cast<double>(x)}, {"y", y}, {"z", z}, {"s", static_cast<double>(s)},
                       {"log_y_over_log_z", std::log(y) / std::log(z)}};
              tasks.push_back({p, [=, &table, &spec] {
                                 const double hs =
                                     static_cast<double>(count_H_shifted(x, y, z, s, *table, inner, spec.budget).count);
                                 const double xd = static_cast<double>(x);
                                 ReportRow r = make_row(name, p, hs, xd / std::log(xd));
                                 // implied constant C in ratio = 1 + O(C log y / log z)
                                 r.params.emplace_back("c_implied", std::abs(*r.ratio - 1) * std::log(z) / std::log(y));
                                 return r;
                               }});
            }
          }
        }
      }
      if (!need_table(limit)) return all_truncated();
      break;
    }
    case ExperimentName::table_ratio: {
      std::uint64_t limit = 2;
      for (std::uint64_t N : g.ns) {
        for (std::int64_t s : g.ss) limit = std::max(limit, N * N + detail::abs64(s));
      }
      for (std::uint64_t N : g.ns) {
        for (std::int64_t s : g.ss) {
          Params p{{"N", static_cast<double>(N)}, {"s", static_cast<double>(s)}};
          tasks.push_back({p, [=, &table, &spec] {
                             const double as = static_cast<double>(count_A_shifted(N, s, *table, inner, spec.budget));
                             const double a = static_cast<double>(count_A(N, inner, spec.budget));
                             return make_row(name, p, as, a / std::log(static_cast<double>(N)));
                           }});
        }
      }
      if (!need_table(limit)) return all_truncated();
      break;
    }
    case ExperimentName::phisum_error: {
      require(g.as.size() == g.ss.size(), "phisum-error pairs a values with s values");
      for (std::size_t i = 0; i < g.as.size(); ++i) {
        for (std::uint64_t x : g.xs) {
          const std::uint64_t a = g.as[i];
          const std::int64_t s = g.ss[i];
          Params p{{"a", static_cast<double>(a)}, {"s", static_cast<double>(s)}, {"x", static_cast<double>(x)}};
          tasks.push_back({p, [=, &table, &spec] {
                             const double xd = static_cast<double>(x);
                             const double lhs = phi_ratio_sum(a, s, xd, spec.budget);
                             const PhiMainTerm main = phi_ratio_main(a, s, xd, g.prime_cutoff, *table);
                             ReportRow r = make_row(name, p, lhs, main.value);
                             r.params.emplace_back("scaled_error",
                                                   std::abs(lhs - main.value) * xd / std::pow(std::log(2 * xd), 2.0 / 3.0));
                             r.params.emplace_back("truncation_width", main.truncation_width());
                             return r;
                           }});
        }
      }
      if (!need_table(g.prime_cutoff)) return all_truncated();
      break;
    }
    case ExperimentName::svl1_ratio: {
      std::uint64_t limit = 2;
      for (std::uint64_t x : g.xs) limit = std::max(limit, x);
      for (std::uint64_t x : g.xs) {
        for (std::int64_t a : g.residues) {
          for (std::uint64_t q1 : g.qs) {
            const std::uint64_t q2 = 2 * q1;
            if (q2 > x) continue;
            Params p{{"x", static_cast<double>(x)}, {"a", static_cast<double>(a)}, {"Q1", static_cast<double>(q1)},
                     {"Q2", static_cast<double>(q2)}};
            tasks.push_back({p, [=, &table] {
                               const double obs = static_cast<double>(sum_pi_ap_range(x, q1, q2, a, *table, inner));
                               const double xd = static_cast<double>(x);
                               const double ref = f_factor(a) * constants().c315 * xd *
                                                  std::log(static_cast<double>(q2) / static_cast<double>(q1)) / std::log(xd);
                               return make_row(name, p, obs, ref);
                             }});
          }
        }
      }
      if (!need_table(limit)) return all_truncated();
      break;
    }
    case ExperimentName::prl8_ratio: {
      for (std::uint64_t x : g.xs) {
        for (double y : g.ys) {
          for (const EtaRule& rule : g.etas) {
            const double eta = rule.eta_for(y);
            const double z = y * std::exp(eta);
            Params p{{"x", static_cast<double>(x)}, {"y", y}, {"z", z}, {"eta", eta}, {"epsilon", g.epsilon}};
            tasks.push_back({p, [=, &spec] {
                               const double h = static_cast<double>(count_H(x, y, z, inner, spec.budget).count);
                               const auto w = static_cast<std::uint64_t>(std::floor(std::pow(y, g.epsilon)));
                               const double dens =
                                   sum_L_density(std::max<std::uint64_t>(w, 1), eta, DensityWeight::reciprocal,
                                                 {true, 1}, spec.budget);
                               const double ly = std::log(y);
                               return make_row(name, p, h, static_cast<double>(x) / (ly * ly) * dens);
                             }});
          }
        }
      }
      break;
    }
    case ExperimentName::l2b_ratio: {
      std::uint64_t limit = 2;
      for (std::uint64_t x : g.xs) limit = std::max(limit, x);
      for (std::uint64_t x : g.xs) {
        for (std::uint64_t q : g.qs) {
          for (std::int64_t a : g.residues) {
            if (std::gcd(detail::abs64(a), q) != 1) continue;
            for (double v : g.vs) {
              for (double y : g.ys) {
                Params p{{"x", static_cast<double>(x)}, {"q", static_cast<double>(q)}, {"a", static_cast<double>(a)},
                         {"v", v}, {"y", y}};
                tasks.push_back({p, [=, &table] {
                                   const double obs = weighted_shifted_sum(x, q, a, v, y, *table);
                                   const double xd = static_cast<double>(x);
                                   const double ref = xd / (static_cast<double>(totient(factorize(q))) * std::log(xd)) *
                                                      std::pow(std::log(y), v - 1);
                                   return make_row(name, p, obs, ref);
                                 }});
              }
            }
          }
        }
      }
      if (!need_table(limit)) return all_truncated();
      break;
    }
    case ExperimentName::sieve_sandwich: {
      for (std::uint64_t N : g.ns) {
        for (const auto& [Z, D] : g.levels) {
          Params p{{"N", static_cast<double>(N)}, {"Z", Z}, {"D", D}};
          tasks.push_back({p, [=, &spec] {
                             const auto lower = lower_beta_weights(D, Z, spec.budget);
                             const auto upper = upper_beta_weights(D, Z, spec.budget);
                             const SandwichReport rep = check_sandwich(lower, upper, N, spec.budget);
                             const double ok = static_cast<double>(rep.checked - rep.violations);
                             ReportRow r = make_row(name, p, ok, static_cast<double>(rep.checked),
                                                    rep.violations == 0 ? Verdict::pass : Verdict::fail);
                             r.params.emplace_back("violations", static_cast<double>(rep.violations));
                             r.params.emplace_back("first_violation", static_cast<double>(rep.first_violation));
                             r.params.emplace_back("lower_support", static_cast<double>(lower.support.size()));
                             r.params.emplace_back("upper_support", static_cast<double>(upper.support.size()));
                             return r;
                           }});
        }
      }
      break;
    }
  }
  require(!tasks.empty(), std::string("experiment ") + name + " has an empty grid");
  return detail::run_tasks(name, tasks, spec.exec.threads);
}

}  // namespace dsp
