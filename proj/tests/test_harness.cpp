#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "dsp/experiments.hpp"

namespace fs = std::filesystem;

namespace {

using dsp::errc;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("dsp-test-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

template <typename F>
errc code_of(F&& f) {
  try {
    f();
  } catch (const dsp::error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no dsp::error thrown";
  return errc::io_error;
}

std::vector<unsigned char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& b) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

TEST(PrimeCache, RoundTripMillion) {
  TempDir dir;
  const dsp::PrimeTable t(1'000'000);
  const auto path = dir.path() / "t.dspl";
  dsp::save_prime_cache(t, path);
  const auto back = dsp::load_prime_cache(path);
  EXPECT_TRUE(back == t);
  for (std::uint64_t n = 0; n <= 1'000'000; ++n) ASSERT_EQ(back.is_prime(n), t.is_prime(n)) << n;
  EXPECT_EQ(back.count(), 78498u);
}

TEST(PrimeCache, LayoutIsFixed) {
  const auto bytes = dsp::serialize_prime_table(dsp::PrimeTable(20));
  // magic, version 1, limit 20, 9 bits (3..19), 2 payload bytes, checksum
  ASSERT_EQ(bytes.size(), 4u + 4 + 8 + 8 + 2 + 8);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "DSPL");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 20);
  EXPECT_EQ(bytes[16], 9);
  // 3 5 7 11 13 17 19 -> odd indices 0 1 2 4 5 7 8
  EXPECT_EQ(bytes[24], 0b10110111);
  EXPECT_EQ(bytes[25], 0b00000001);
}

TEST(PrimeCache, DamagedFiles) {
  TempDir dir;
  const auto path = dir.path() / "t.dspl";
  dsp::save_prime_cache(dsp::PrimeTable(10000), path);
  const auto good = read_bytes(path);

  auto truncated = good;
  truncated.resize(good.size() - 5);
  write_bytes(path, truncated);
  EXPECT_EQ(code_of([&] { (void)dsp::load_prime_cache(path); }), errc::corrupt_cache);

  auto flipped = good;
  flipped[40] ^= 0x10;
  write_bytes(path, flipped);
  EXPECT_EQ(code_of([&] { (void)dsp::load_prime_cache(path); }), errc::corrupt_cache);

  auto magic = good;
  magic[0] = 'X';
  write_bytes(path, magic);
  EXPECT_EQ(code_of([&] { (void)dsp::load_prime_cache(path); }), errc::corrupt_cache);

  auto version = good;
  version[4] = 2;
  write_bytes(path, version);
  EXPECT_EQ(code_of([&] { (void)dsp::load_prime_cache(path); }), errc::unsupported_version);

  EXPECT_EQ(code_of([&] { (void)dsp::load_prime_cache(dir.path() / "missing.dspl"); }), errc::io_error);
}

TEST(PrimeCache, HitSkipsRebuild) {
  TempDir dir;
  const auto first = dsp::load_or_build_prime_table(50000, dir.path());
  EXPECT_FALSE(first.from_cache);
  EXPECT_TRUE(fs::exists(dsp::prime_cache_path(dir.path(), 50000)));
  const auto second = dsp::load_or_build_prime_table(50000, dir.path());
  EXPECT_TRUE(second.from_cache);
  EXPECT_TRUE(second.table == first.table);
  // a damaged cache is rebuilt and rewritten
  auto bytes = read_bytes(dsp::prime_cache_path(dir.path(), 50000));
  bytes.pop_back();
  write_bytes(dsp::prime_cache_path(dir.path(), 50000), bytes);
  const auto third = dsp::load_or_build_prime_table(50000, dir.path());
  EXPECT_FALSE(third.from_cache);
  EXPECT_TRUE(dsp::load_or_build_prime_table(50000, dir.path()).from_cache);
}

TEST(Report, OneRowCsv) {
  const auto row = dsp::make_row("oracle-h", {{"x", 20}, {"y", 2}, {"z", 3}}, 6, 6, dsp::Verdict::pass);
  EXPECT_EQ(dsp::format_report({row}, dsp::ReportFormat::csv),
            "experiment,x,y,z,observed,reference,ratio,verdict\noracle-h,20,2,3,6,6,1,pass\n");
  EXPECT_THROW((void)dsp::format_report({}, dsp::ReportFormat::csv), dsp::error);
}

TEST(Report, RatioAbsentForZeroReference) {
  const auto row = dsp::make_row("t", {}, 3, 0);
  EXPECT_FALSE(row.ratio.has_value());
  const auto csv = dsp::format_report({row}, dsp::ReportFormat::csv);
  EXPECT_EQ(csv, "experiment,observed,reference,ratio,verdict\nt,3,0,,report-only\n");
  const auto json = nlohmann::json::parse(dsp::format_report({row}, dsp::ReportFormat::json));
  EXPECT_TRUE(json[0]["ratio"].is_null());
}

TEST(Report, FifteenDigitsAndColumnOrder) {
  const auto a = dsp::make_row("e", {{"b", 1.0 / 3}}, std::numbers::pi, 1);
  const auto b = dsp::make_row("e", {{"c", 2}, {"b", 5}}, 1e-300, 7);
  const auto csv = dsp::format_report({a, b}, dsp::ReportFormat::csv);
  EXPECT_EQ(csv,
            "experiment,b,c,observed,reference,ratio,verdict\n"
            "e,0.333333333333333,,3.14159265358979,1,3.14159265358979,report-only\n"
            "e,5,2,1e-300,7,1.42857142857143e-301,report-only\n");
}

TEST(Report, DeterministicFiles) {
  TempDir dir;
  std::vector<dsp::ReportRow> rows;
  for (int i = 0; i < 50; ++i) rows.push_back(dsp::make_row("e", {{"i", i}}, std::sqrt(i), 3));
  for (auto fmt : {dsp::ReportFormat::csv, dsp::ReportFormat::json}) {
    dsp::emit_report(rows, fmt, dir.path() / "a");
    dsp::emit_report(rows, fmt, dir.path() / "b");
    EXPECT_EQ(read_bytes(dir.path() / "a"), read_bytes(dir.path() / "b"));
  }
  EXPECT_EQ(code_of([&] { dsp::emit_report(rows, dsp::ReportFormat::csv, dir.path() / "no" / "such" / "f"); }),
            errc::io_error);
}

TEST(Report, TenThousandRowsParseBack) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(-1, 1);
  std::vector<dsp::ReportRow> rows;
  const dsp::Verdict verdicts[] = {dsp::Verdict::pass, dsp::Verdict::fail, dsp::Verdict::report_only,
                                   dsp::Verdict::truncated};
  for (int i = 0; i < 10000; ++i) {
    const double obs = std::ldexp(unit(rng), static_cast<int>(unit(rng) * 60));
    const double ref = i % 97 == 0 ? 0.0 : std::ldexp(unit(rng), static_cast<int>(unit(rng) * 60));
    auto r = dsp::make_row("exp", {{"x", i}, {"y", unit(rng) * 1e6}}, obs, ref, verdicts[i % 4]);
    rows.push_back(std::move(r));
  }
  const auto csv = dsp::format_report(rows, dsp::ReportFormat::csv);
  const auto back = dsp::parse_report_csv(csv);
  ASSERT_EQ(back.size(), rows.size());
  auto close = [](double a, double b) { return a == b || std::abs(a - b) <= 1e-14 * std::abs(b); };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ASSERT_EQ(back[i].experiment, rows[i].experiment);
    ASSERT_EQ(back[i].verdict, rows[i].verdict);
    ASSERT_EQ(back[i].params.size(), 2u);
    ASSERT_TRUE(close(*back[i].param("y"), *rows[i].param("y")));
    ASSERT_EQ(*back[i].param("x"), *rows[i].param("x"));
    ASSERT_TRUE(close(back[i].observed, rows[i].observed)) << i;
    ASSERT_TRUE(close(back[i].reference, rows[i].reference)) << i;
    ASSERT_EQ(back[i].ratio.has_value(), rows[i].ratio.has_value());
  }
  // serialized text is a fixed point
  EXPECT_EQ(dsp::format_report(back, dsp::ReportFormat::csv), csv);
}

TEST(Report, Envelope) {
  std::vector<dsp::ReportRow> rows{dsp::make_row("e", {}, 2, 1), dsp::make_row("e", {}, 1, 2),
                                   dsp::make_row("e", {}, 1, 0)};
  const auto env = dsp::ratio_envelope(rows);
  EXPECT_EQ(env.rows, 2u);
  EXPECT_EQ(env.min, 0.5);
  EXPECT_EQ(env.max, 2.0);
  EXPECT_EQ(env.spread(), 4.0);
}

TEST(WeightedSum, Examples) {
  const dsp::PrimeTable t(200000);
  for (std::uint64_t q : {1, 3, 10}) {
    for (std::int64_t a : {1, -1, 7}) {
      if (std::gcd<std::uint64_t>(q, static_cast<std::uint64_t>(std::abs(a))) != 1) continue;
      EXPECT_EQ(dsp::weighted_shifted_sum(100000, q, a, 1.0, 100, t),
                static_cast<double>(dsp::pi_ap(100000, q, a, t)));
    }
  }
  EXPECT_NEAR(dsp::weighted_shifted_sum(100000, 3, 1, 1.5, 100, t), 31760.039794921875, 1e-9);
  // q = 1, a = 1: every p <= 30 weighted by v^Omega(p - 1)
  double direct = 0;
  for (std::uint64_t p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29}) {
    direct += std::pow(1.25, static_cast<double>(dsp::big_omega_between(dsp::factorize(p - 1), 0.5, 100)));
  }
  EXPECT_NEAR(dsp::weighted_shifted_sum(30, 1, 1, 1.25, 100, t), direct, 1e-12);
  EXPECT_EQ(code_of([&] { (void)dsp::weighted_shifted_sum(1000, 4, 2, 1.5, 10, t); }), errc::invalid_argument);
  EXPECT_EQ(code_of([&] { (void)dsp::weighted_shifted_sum(1000, 3, 1, 2.0, 10, t); }), errc::invalid_argument);
  EXPECT_EQ(code_of([&] { (void)dsp::weighted_shifted_sum(1000, 3, 1, 1.5, 1, t); }), errc::invalid_argument);
  EXPECT_EQ(code_of([&] { (void)dsp::weighted_shifted_sum(300000, 3, 1, 1.5, 10, t); }), errc::table_too_small);
}

TEST(Experiments, Names) {
  for (auto n : dsp::kAllExperiments) EXPECT_EQ(dsp::parse_experiment_name(dsp::to_string(n)), n);
  EXPECT_EQ(code_of([] { (void)dsp::parse_experiment_name("nope"); }), errc::invalid_argument);
}

TEST(Experiments, OracleSmallGridPasses) {
  auto spec = dsp::default_spec(dsp::ExperimentName::oracle_h);
  spec.grid.random_pairs = 20;
  spec.grid.xs = {1, 50, 777};
  const auto rows = dsp::run_experiment(spec);
  ASSERT_EQ(rows.size(), 60u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.verdict, dsp::Verdict::pass);
    if (r.ratio) {
      EXPECT_EQ(*r.ratio, 1.0);
    }
  }
}

TEST(Experiments, DeterministicAcrossThreads) {
  TempDir dir;
  for (auto name : {dsp::ExperimentName::oracle_h, dsp::ExperimentName::interm_ratio,
                    dsp::ExperimentName::phisum_error, dsp::ExperimentName::l2b_ratio}) {
    auto spec = dsp::default_spec(name);
    spec.grid.random_pairs = 10;
    spec.grid.xs = {2000, 30000};
    spec.grid.prime_cutoff = 10000;
    spec.cache_dir = dir.path();
    spec.exec.threads = 1;
    const auto one = dsp::format_report(dsp::run_experiment(spec), dsp::ReportFormat::csv);
    spec.exec.threads = 4;
    const auto four = dsp::format_report(dsp::run_experiment(spec), dsp::ReportFormat::csv);
    const auto again = dsp::format_report(dsp::run_experiment(spec), dsp::ReportFormat::csv);
    EXPECT_EQ(one, four) << dsp::to_string(name);
    EXPECT_EQ(four, again) << dsp::to_string(name);
  }
}

TEST(Experiments, TinyBudgetTruncates) {
  auto spec = dsp::default_spec(dsp::ExperimentName::large_eta);
  spec.budget.memory_bytes = 4096;
  const auto rows = dsp::run_experiment(spec);
  ASSERT_FALSE(rows.empty());
  for (const auto& r : rows) {
    EXPECT_EQ(r.verdict, dsp::Verdict::truncated);
    EXPECT_TRUE(std::isnan(r.observed));
  }
  auto sandwich = dsp::default_spec(dsp::ExperimentName::sieve_sandwich);
  sandwich.budget.memory_bytes = 4096;
  for (const auto& r : dsp::run_experiment(sandwich)) EXPECT_EQ(r.verdict, dsp::Verdict::truncated);
  auto table = dsp::default_spec(dsp::ExperimentName::table_ratio);
  table.budget.max_table_n = 1000;
  table.grid.ns = {512, 2048};
  const auto t_rows = dsp::run_experiment(table);
  ASSERT_EQ(t_rows.size(), 2u);
  EXPECT_EQ(t_rows[0].verdict, dsp::Verdict::report_only);
  EXPECT_EQ(t_rows[1].verdict, dsp::Verdict::truncated);
}

TEST(Experiments, EmptyGridRejected) {
  auto spec = dsp::default_spec(dsp::ExperimentName::svl1_ratio);
  spec.grid.qs.clear();
  EXPECT_EQ(code_of([&] { (void)dsp::run_experiment(spec); }), errc::invalid_argument);
}

TEST(Experiments, ReferencesRecomputable) {
  auto spec = dsp::default_spec(dsp::ExperimentName::small_eta);
  spec.grid.xs = {100000};
  spec.grid.ys = {100};
  for (const auto& r : dsp::run_experiment(spec)) {
    const double ref = dsp::shifted_main(*r.param("x"), *r.param("y"), *r.param("z"),
                                         static_cast<std::int64_t>(*r.param("s")));
    EXPECT_EQ(r.reference, ref);
  }
}

}  // namespace
