// dsplab: exact counts, interval measures, sieve weights, estimates and
// experiment reports from the command line.
//
// Exit status: 0 all pass, 1 hard failure, 2 invalid usage.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "dsp/experiments.hpp"

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Globals {
  std::uint64_t x = 0;
  double y = kNaN;
  double z = kNaN;
  std::int64_t s = 0;
  std::uint64_t delta = 0;
  std::uint64_t limit = 0;
  std::string cache_dir;
  unsigned threads = 1;
  std::string format = "csv";
  std::string out;
  std::uint64_t seed = 1;
  std::size_t budget_mb = 2048;
};

struct Locals {
  std::uint64_t n = 0;
  std::uint64_t q = 1;
  std::int64_t a = 1;
  double sigma = kNaN;
  double eta = kNaN;
  double D = kNaN;
  double Z = kNaN;
  std::uint64_t w = 0;
  std::string weight = "reciprocal";
  std::string intervals;
  std::uint64_t cutoff = 1'000'000;
  std::uint64_t coprime_to = 1;
  bool brute = false;
};

struct Session {
  Globals g;
  Locals l;
  std::vector<dsp::ReportRow> rows;
  bool failed = false;

  dsp::Budget budget() const {
    dsp::Budget b;
    b.memory_bytes = g.budget_mb << 20;
    return b;
  }
  dsp::ExecPolicy exec() const {
    dsp::ExecPolicy e;
    e.threads = g.threads;
    return e;
  }
  std::optional<std::filesystem::path> cache() const {
    if (g.cache_dir.empty()) return std::nullopt;
    return std::filesystem::path(g.cache_dir);
  }
  dsp::PrimeTable table(std::uint64_t needed) const {
    return dsp::load_or_build_prime_table(std::max(g.limit, needed), cache(), budget()).table;
  }
  void add(std::string name, std::vector<std::pair<std::string, double>> params, double observed,
           double reference = kNaN, dsp::Verdict v = dsp::Verdict::report_only) {
    rows.push_back(dsp::make_row(std::move(name), std::move(params), observed, reference, v));
  }
};

// Lets integer flags take 1e6-style values when they are exact integers.
std::string integral_text(const std::string& v) {
  if (v.find_first_of("eE") == std::string::npos) return v;
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::logic_error&) {
    return v;
  }
  if (used != v.size() || x != std::floor(x) || std::abs(x) >= 0x1p63) return v;
  return std::to_string(static_cast<long long>(x));
}

void need(bool cond, const std::string& what) {
  if (!cond) throw CLI::ValidationError(what);
}

std::uint64_t abs64(std::int64_t v) { return v < 0 ? static_cast<std::uint64_t>(-v) : static_cast<std::uint64_t>(v); }

double d(std::uint64_t v) { return static_cast<double>(v); }
double d(std::int64_t v) { return static_cast<double>(v); }

void need_xyz(const Session& s) {
  need(s.g.x >= 1, "--x is required");
  need(!std::isnan(s.g.y) && !std::isnan(s.g.z), "--y and --z are required");
}

// "0:1,0.5:1.5" -> [0,1), [0.5,1.5)
std::vector<dsp::Interval<double>> parse_intervals(const std::string& text) {
  std::vector<dsp::Interval<double>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    need(colon != std::string::npos, "interval '" + item + "' is not left:right");
    try {
      out.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    } catch (const std::logic_error&) {
      throw CLI::ValidationError("interval '" + item + "' is not numeric");
    }
  }
  need(!out.empty(), "--intervals is empty");
  return out;
}

void count_h(Session& s) {
  need_xyz(s);
  const auto r = dsp::count_H(s.g.x, s.g.y, s.g.z, s.exec(), s.budget());
  double ref = kNaN;
  dsp::Verdict v = dsp::Verdict::report_only;
  if (s.l.brute) {
    ref = d(dsp::count_H_brute(s.g.x, s.g.y, s.g.z, s.budget()));
    v = ref == d(r.count) ? dsp::Verdict::pass : dsp::Verdict::fail;
  }
  s.add("count-h", {{"x", d(s.g.x)}, {"y", s.g.y}, {"z", s.g.z}, {"seconds", r.elapsed.count()}}, d(r.count), ref, v);
}

void count_hs(Session& s) {
  need_xyz(s);
  need(s.g.s != 0, "--s must be nonzero");
  const auto t = s.table(s.g.x + abs64(s.g.s));
  const auto r = dsp::count_H_shifted(s.g.x, s.g.y, s.g.z, s.g.s, t, s.exec(), s.budget());
  s.add("count-hs", {{"x", d(s.g.x)}, {"y", s.g.y}, {"z", s.g.z}, {"s", d(s.g.s)}, {"seconds", r.elapsed.count()}},
        d(r.count));
}

void count_window(Session& s) {
  need_xyz(s);
  need(s.g.s != 0, "--s must be nonzero");
  need(s.g.delta >= 1, "--delta is required");
  const auto t = s.table(s.g.x + abs64(s.g.s));
  const auto c = dsp::count_H_shifted_window(s.g.x, s.g.delta, s.g.y, s.g.z, s.g.s, t, s.exec(), s.budget());
  s.add("count-window",
        {{"x", d(s.g.x)}, {"delta", d(s.g.delta)}, {"y", s.g.y}, {"z", s.g.z}, {"s", d(s.g.s)}}, d(c));
}

void count_table(Session& s) {
  need(s.l.n >= 1, "--n is required");
  const auto a = dsp::count_A(s.l.n, s.exec(), s.budget());
  s.add("count-table", {{"N", d(s.l.n)}}, d(a));
  if (s.g.s != 0) {
    const auto t = s.table(s.l.n * s.l.n + abs64(s.g.s));
    const auto as = dsp::count_A_shifted(s.l.n, s.g.s, t, s.exec(), s.budget());
    s.add("count-table-shifted", {{"N", d(s.l.n)}, {"s", d(s.g.s)}}, d(as), d(a) / std::log(d(s.l.n)));
  }
}

void count_pi_ap(Session& s) {
  need(s.g.x >= 1, "--x is required");
  const auto t = s.table(s.g.x);
  s.add("count-pi-ap", {{"x", d(s.g.x)}, {"q", d(s.l.q)}, {"a", d(s.l.a)}}, d(dsp::pi_ap(s.g.x, s.l.q, s.l.a, t)));
}

void measure_L(Session& s) {
  need(s.l.a >= 1, "--a must be positive");
  need(!std::isnan(s.l.sigma), "--sigma is required");
  const auto f = dsp::factorize(static_cast<std::uint64_t>(s.l.a));
  const auto u = dsp::divisor_log_union(f, s.l.sigma, s.budget());
  s.add("measure-L", {{"a", d(s.l.a)}, {"sigma", s.l.sigma}, {"blocks", d(std::uint64_t{u.intervals().size()})}},
        dsp::measure_L(u));
}

void measure_pairs(Session& s) {
  need(s.l.a >= 1, "--a must be positive");
  need(!std::isnan(s.l.eta), "--eta is required");
  const auto dec = dsp::decompose_pairs(dsp::factorize(static_cast<std::uint64_t>(s.l.a)), s.l.eta, s.budget());
  for (const auto& [dd, dp] : dec.pairs) {
    s.add("measure-pairs", {{"a", d(s.l.a)}, {"eta", s.l.eta}, {"d", d(dd)}, {"d_prime", d(dp)}},
          std::log(d(dp)) - std::log(d(dd)) + s.l.eta);
  }
}

void measure_vitali(Session& s) {
  const auto fam = parse_intervals(s.l.intervals);
  for (std::size_t i : dsp::vitali_subcover(fam)) {
    s.add("measure-vitali", {{"index", d(std::uint64_t{i})}, {"left", fam[i].left}, {"right", fam[i].right}},
          fam[i].length());
  }
}

void measure_density(Session& s) {
  need(s.l.w >= 1, "--w is required");
  need(!std::isnan(s.l.eta), "--eta is required");
  const auto weight = s.l.weight == "phi" ? dsp::DensityWeight::reciprocal_phi : dsp::DensityWeight::reciprocal;
  const double v = dsp::sum_L_density(s.l.w, s.l.eta, weight, {true, s.l.coprime_to}, s.budget());
  s.add("measure-density", {{"w", d(s.l.w)}, {"eta", s.l.eta}, {"coprime_to", d(s.l.coprime_to)}}, v);
}

void weights_list(Session& s, dsp::WeightKind kind) {
  need(!std::isnan(s.l.D) && !std::isnan(s.l.Z), "--D and --Z are required");
  const auto w = kind == dsp::WeightKind::lower ? dsp::lower_beta_weights(s.l.D, s.l.Z, s.budget())
                                                : dsp::upper_beta_weights(s.l.D, s.l.Z, s.budget());
  const std::string name = kind == dsp::WeightKind::lower ? "weights-lower" : "weights-upper";
  for (const auto& [dd, wt] : w.support) s.add(name, {{"D", s.l.D}, {"Z", s.l.Z}, {"d", d(dd)}}, wt);
}

void weights_check(Session& s) {
  need(!std::isnan(s.l.D) && !std::isnan(s.l.Z), "--D and --Z are required");
  need(s.l.n >= 1, "--n is required");
  const auto lo = dsp::lower_beta_weights(s.l.D, s.l.Z, s.budget());
  const auto up = dsp::upper_beta_weights(s.l.D, s.l.Z, s.budget());
  const auto r = dsp::check_sandwich(lo, up, s.l.n, s.budget());
  s.add("weights-check",
        {{"D", s.l.D}, {"Z", s.l.Z}, {"N", d(s.l.n)}, {"violations", d(r.violations)},
         {"first_violation", d(r.first_violation)}},
        d(r.checked - r.violations), d(r.checked), r.violations == 0 ? dsp::Verdict::pass : dsp::Verdict::fail);
}

void estimate_params(Session& s) {
  need(!std::isnan(s.g.y) && !std::isnan(s.g.z), "--y and --z are required");
  const auto p = dsp::derive_params(s.g.y, s.g.z);
  const std::vector<std::pair<std::string, double>> yz{{"y", s.g.y}, {"z", s.g.z}};
  s.add("eta", yz, p.eta);
  s.add("u", yz, p.u);
  s.add("beta", yz, p.beta.value_or(kNaN));
  s.add("xi", yz, p.xi.value_or(kNaN));
  s.add("z0", yz, p.z0);
  if (p.beta) s.add("G", yz, dsp::G_function(*p.beta));
}

void estimate_ford(Session& s) {
  need_xyz(s);
  const auto e = dsp::ford_order_detail(d(s.g.x), s.g.y, s.g.z);
  s.add("ford", {{"x", d(s.g.x)}, {"y", s.g.y}, {"z", s.g.z}, {"branch", static_cast<double>(e.branch)},
                 {"reflected", e.reflected ? 1.0 : 0.0}},
        e.value);
}

void estimate_main(Session& s) {
  need_xyz(s);
  const std::vector<std::pair<std::string, double>> p{{"x", d(s.g.x)}, {"y", s.g.y}, {"z", s.g.z}};
  s.add("tenenbaum-main", p, dsp::tenenbaum_main(d(s.g.x), s.g.y, s.g.z));
  if (s.g.s != 0) {
    auto ps = p;
    ps.emplace_back("s", d(s.g.s));
    s.add("shifted-main", ps, dsp::shifted_main(d(s.g.x), s.g.y, s.g.z, s.g.s));
  }
}

void estimate_phisum(Session& s) {
  need(s.g.x >= 1, "--x is required");
  need(s.l.a >= 1, "--a must be positive");
  const std::int64_t shift = s.g.s == 0 ? 1 : s.g.s;
  const auto t = s.table(s.l.cutoff);
  const double lhs = dsp::phi_ratio_sum(static_cast<std::uint64_t>(s.l.a), shift, d(s.g.x), s.budget());
  const auto m = dsp::phi_ratio_main(static_cast<std::uint64_t>(s.l.a), shift, d(s.g.x), s.l.cutoff, t);
  s.add("phisum",
        {{"a", d(s.l.a)}, {"s", d(shift)}, {"x", d(s.g.x)}, {"main_lower", m.lower}, {"main_upper", m.upper}},
        lhs, m.value);
}

void verify(Session& s, const std::string& name) {
  auto spec = dsp::default_spec(dsp::parse_experiment_name(name));
  spec.seed = s.g.seed;
  spec.budget = s.budget();
  spec.exec = s.exec();
  spec.cache_dir = s.cache();
  s.rows = dsp::run_experiment(spec);
  for (const auto& r : s.rows) {
    if (r.verdict == dsp::Verdict::fail || r.verdict == dsp::Verdict::truncated) s.failed = true;
  }
  const auto env = dsp::ratio_envelope(s.rows);
  if (env.rows > 0) {
    std::fprintf(stderr, "%s: %zu rows, ratio envelope [%s, %s], spread %s\n", name.c_str(), s.rows.size(),
                 dsp::format_number(env.min).c_str(), dsp::format_number(env.max).c_str(),
                 dsp::format_number(env.spread()).c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  Session s;
  CLI::App app{"Divisors of shifted primes: exact counts and estimates"};
  app.fallthrough();
  app.require_subcommand(1);

  app.add_option("--x", s.g.x, "upper end of the count")->transform(integral_text);
  app.add_option("--y", s.g.y, "lower divisor bound (exclusive)");
  app.add_option("--z", s.g.z, "upper divisor bound (inclusive)");
  app.add_option("--s", s.g.s, "shift");
  app.add_option("--delta", s.g.delta, "window width")->transform(integral_text);
  app.add_option("--limit", s.g.limit, "prime table limit (raised to what the query needs)")->transform(integral_text);
  app.add_option("--cache-dir", s.g.cache_dir, "prime cache directory");
  app.add_option("--threads", s.g.threads, "worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--format", s.g.format, "report format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--out", s.g.out, "write the report here instead of stdout");
  app.add_option("--seed", s.g.seed, "seed for randomized grids");
  app.add_option("--budget-mb", s.g.budget_mb, "memory budget in MiB")->check(CLI::PositiveNumber);

  std::function<void()> action;
  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help, std::function<void()> fn) {
    auto* sub = parent->add_subcommand(name, help);
    sub->callback([&action, fn] { action = fn; });
    return sub;
  };

  auto* count = app.add_subcommand("count", "exact counts")->require_subcommand(1);
  leaf(count, "h", "H(x, y, z)", [&] { count_h(s); })->add_flag("--brute", s.l.brute, "also run the brute oracle");
  leaf(count, "hs", "H(x, y, z; P_s)", [&] { count_hs(s); });
  leaf(count, "window", "shifted count over (x - delta, x]", [&] { count_window(s); });
  leaf(count, "table", "A(N), and A(N; P_s) when --s is given", [&] { count_table(s); })
      ->add_option("--n", s.l.n, "table size N")->transform(integral_text);
  auto* piap = leaf(count, "pi-ap", "pi(x; q, a)", [&] { count_pi_ap(s); });
  piap->add_option("--q", s.l.q, "modulus")->transform(integral_text)->check(CLI::PositiveNumber);
  piap->add_option("--a", s.l.a, "residue");

  auto* measure = app.add_subcommand("measure", "divisor interval measures")->require_subcommand(1);
  auto* mL = leaf(measure, "L", "L(a; sigma)", [&] { measure_L(s); });
  mL->add_option("--a", s.l.a, "integer a");
  mL->add_option("--sigma", s.l.sigma, "interval length");
  auto* mp = leaf(measure, "pairs", "divisor pair blocks of a", [&] { measure_pairs(s); });
  mp->add_option("--a", s.l.a, "integer a");
  mp->add_option("--eta", s.l.eta, "interval length");
  leaf(measure, "vitali", "greedy disjoint subfamily", [&] { measure_vitali(s); })
      ->add_option("--intervals", s.l.intervals, "left:right,left:right,...")
      ->required();
  auto* md = leaf(measure, "density", "sum of L(a; eta) over squarefree a <= w", [&] { measure_density(s); });
  md->add_option("--w", s.l.w, "range of a")->transform(integral_text);
  md->add_option("--eta", s.l.eta, "interval length");
  md->add_option("--weight", s.l.weight, "reciprocal or phi")->check(CLI::IsMember({"reciprocal", "phi"}));
  md->add_option("--coprime-to", s.l.coprime_to, "restrict to a coprime to this");

  auto* weights = app.add_subcommand("weights", "beta sieve weights")->require_subcommand(1);
  for (auto kind : {dsp::WeightKind::lower, dsp::WeightKind::upper}) {
    auto* w = leaf(weights, kind == dsp::WeightKind::lower ? "lower" : "upper", "list the support",
                   [&s, kind] { weights_list(s, kind); });
    w->add_option("--D", s.l.D, "level");
    w->add_option("--Z", s.l.Z, "sifting limit");
  }
  auto* wc = leaf(weights, "check", "exhaustive sandwich check up to --n", [&] { weights_check(s); });
  wc->add_option("--D", s.l.D, "level");
  wc->add_option("--Z", s.l.Z, "sifting limit");
  wc->add_option("--n", s.l.n, "check range")->transform(integral_text);

  auto* estimate = app.add_subcommand("estimate", "closed-form estimates")->require_subcommand(1);
  leaf(estimate, "params", "eta, u, beta, xi, z0", [&] { estimate_params(s); });
  leaf(estimate, "ford", "order of magnitude of H(x, y, z)", [&] { estimate_ford(s); });
  leaf(estimate, "main", "asymptotic main terms", [&] { estimate_main(s); });
  auto* ep = leaf(estimate, "phisum", "totient ratio sum against its main term", [&] { estimate_phisum(s); });
  ep->add_option("--a", s.l.a, "integer a");
  ep->add_option("--cutoff", s.l.cutoff, "prime cutoff of the main term")->transform(integral_text);

  std::string experiment;
  auto* ver = app.add_subcommand("verify", "run a named experiment");
  ver->add_option("experiment", experiment, "experiment name")->required();
  ver->callback([&] { action = [&] { verify(s, experiment); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    action();
    if (s.rows.empty()) {
      std::fprintf(stderr, "no rows produced\n");
      return 1;
    }
    const auto fmt = s.g.format == "json" ? dsp::ReportFormat::json : dsp::ReportFormat::csv;
    if (s.g.out.empty()) {
      std::cout << dsp::format_report(s.rows, fmt);
    } else {
      dsp::emit_report(s.rows, fmt, s.g.out);
    }
    return s.failed ? 1 : 0;
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const dsp::error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == dsp::errc::invalid_argument ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
