#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dsp/error.hpp"

namespace dsp {

enum class Verdict { pass, fail, report_only, truncated };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::report_only: return "report-only";
    case Verdict::truncated: return "truncated";
  }
  return "?";
}

inline Verdict parse_verdict(const std::string& s) {
  for (Verdict v : {Verdict::pass, Verdict::fail, Verdict::report_only, Verdict::truncated}) {
    if (s == to_string(v)) return v;
  }
  throw error(errc::invalid_argument, "unknown verdict '" + s + "'");
}

struct ReportRow {
  std::string experiment;
  std::vector<std::pair<std::string, double>> params;  // in emission order
  double observed = std::numeric_limits<double>::quiet_NaN();
  double reference = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> ratio;  // observed / reference, absent when reference == 0
  Verdict verdict = Verdict::report_only;

  std::optional<double> param(const std::string& name) const {
    for (const auto& [k, v] : params) {
      if (k == name) return v;
    }
    return std::nullopt;
  }
};

inline ReportRow make_row(std::string experiment, std::vector<std::pair<std::string, double>> params, double observed,
                          double reference, Verdict verdict = Verdict::report_only) {
  ReportRow r{std::move(experiment), std::move(params), observed, reference, std::nullopt, verdict};
  if (reference != 0 && std::isfinite(reference) && std::isfinite(observed)) r.ratio = observed / reference;
  return r;
}

struct RatioEnvelope {
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  std::size_t rows = 0;
  double spread() const { return max / min; }
};

inline RatioEnvelope ratio_envelope(const std::vector<ReportRow>& rows) {
  RatioEnvelope e;
  for (const auto& r : rows) {
    if (!r.ratio) continue;
    e.min = std::min(e.min, *r.ratio);
    e.max = std::max(e.max, *r.ratio);
    ++e.rows;
  }
  return e;
}

enum class ReportFormat { csv, json };

/// 15 significant digits; empty for non-finite values.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 15);
  return std::string(buf, end);
}

namespace detail {

inline std::vector<std::string> param_columns(const std::vector<ReportRow>& rows) {
  std::vector<std::string> cols;
  for (const auto& r : rows) {
    for (const auto& [k, v] : r.params) {
      if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
    }
  }
  return cols;
}

inline nlohmann::ordered_json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(format_number(v));
}

}  // namespace detail

/// Renders rows with a stable column order:
/// experiment, params (first-appearance order), observed, reference, ratio, verdict.
inline std::string format_report(const std::vector<ReportRow>& rows, ReportFormat format) {
  require(!rows.empty(), "report needs at least one row");
  const auto cols = detail::param_columns(rows);
  if (format == ReportFormat::csv) {
    std::string out = "experiment";
    for (const auto& c : cols) out += "," + c;
    out += ",observed,reference,ratio,verdict\n";
    for (const auto& r : rows) {
      out += r.experiment;
      for (const auto& c : cols) {
        const auto v = r.param(c);
        out += ",";
        if (v) out += format_number(*v);
      }
      out += "," + format_number(r.observed) + "," + format_number(r.reference) + ",";
      if (r.ratio) out += format_number(*r.ratio);
      out += std::string(",") + to_string(r.verdict) + "\n";
    }
    return out;
  }
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["experiment"] = r.experiment;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& c : cols) {
      if (const auto v = r.param(c)) params[c] = detail::json_number(*v);
    }
    row["params"] = params;
    row["observed"] = detail::json_number(r.observed);
    row["reference"] = detail::json_number(r.reference);
    row["ratio"] = r.ratio ? detail::json_number(*r.ratio) : nlohmann::ordered_json(nullptr);
    row["verdict"] = to_string(r.verdict);
    arr.push_back(std::move(row));
  }
  return arr.dump(2) + "\n";
}

inline void emit_report(const std::vector<ReportRow>& rows, ReportFormat format, const std::filesystem::path& path) {
  const std::string text = format_report(rows, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error(errc::io_error, "cannot open report " + path.string());
  out << text;
  if (!out) throw error(errc::io_error, "write failed for report " + path.string());
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_number(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw error(errc::invalid_argument, "bad number '" + s + "'");
  return v;
}

}  // namespace detail

/// Reads back a CSV report written by format_report.
inline std::vector<ReportRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw error(errc::invalid_argument, "empty report");
  const auto header = detail::split_csv_line(line);
  require(header.size() >= 5 && header.front() == "experiment", "not a report header");
  const std::size_t nparams = header.size() - 5;
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    require(f.size() == header.size(), "report row has wrong field count");
    ReportRow r;
    r.experiment = f[0];
    for (std::size_t i = 0; i < nparams; ++i) {
      if (!f[1 + i].empty()) r.params.emplace_back(header[1 + i], detail::parse_number(f[1 + i]));
    }
    r.observed = detail::parse_number(f[1 + nparams]);
    r.reference = detail::parse_number(f[2 + nparams]);
    if (!f[3 + nparams].empty()) r.ratio = detail::parse_number(f[3 + nparams]);
    r.verdict = parse_verdict(f[4 + nparams]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace dsp
