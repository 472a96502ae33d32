#pragma once

// NAV, benchmark and factor ingestion plus calendar alignment.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fundshift/csv.hpp"
#include "fundshift/date.hpp"
#include "fundshift/error.hpp"

namespace fundshift {

/// Smallest aligned sample accepted for regression work.
inline constexpr std::size_t kDefaultMinWindow = 60;

struct NavSeries {
  std::string fund_id;
  std::vector<Date> dates;
  std::vector<double> navs;
};

/// Daily simple returns, each dated at the later of its two NAV dates.
struct ReturnSeries {
  std::string series_id;
  std::vector<Date> dates;
  std::vector<double> returns;
};

/// Daily factor returns as decimal fractions. `mom` is absent when the source has no momentum column.
struct FactorPanel {
  std::vector<Date> dates;
  std::vector<double> mkt_rf;
  std::vector<double> smb;
  std::vector<double> hml;
  std::optional<std::vector<double>> mom;
  std::vector<double> rf;

  std::size_t size() const { return dates.size(); }
  bool has_mom() const { return mom.has_value(); }
};

struct BenchmarkMap {
  std::map<std::string, std::string> entries;

  const std::string* find(const std::string& fund_id) const {
    auto it = entries.find(fund_id);
    return it == entries.end() ? nullptr : &it->second;
  }
};

/// Regression-ready join of one fund, its benchmark and the factor panel.
struct AlignedSample {
  std::string fund_id;
  std::vector<Date> dates;
  std::vector<double> r_fund;
  std::vector<double> r_bench;
  std::vector<double> mkt_rf;
  std::vector<double> smb;
  std::vector<double> hml;
  std::optional<std::vector<double>> mom;
  std::vector<double> rf;

  std::size_t n() const { return dates.size(); }
  bool has_mom() const { return mom.has_value(); }
};

namespace detail {

inline void require_increasing(const std::vector<Date>& dates, std::size_t i, std::string_view what) {
  if (i == 0) return;
  if (dates[i] == dates[i - 1]) {
    throw Error(Errc::duplicate_date, std::string(what) + " repeats " + dates[i].iso());
  }
  if (dates[i] < dates[i - 1]) {
    throw Error(Errc::unordered_dates, std::string(what) + " goes backwards at " + dates[i].iso());
  }
}

}  // namespace detail

/// Parses a `date,nav` file. Dates must be strictly increasing and every NAV positive.
inline NavSeries parse_nav_csv(std::istream& in, std::string fund_id) {
  auto lines = csv::read_lines(in);
  if (lines.empty()) throw Error(Errc::too_few_rows, "empty NAV file for " + fund_id);
  auto header = csv::split(lines.front());
  if (header.size() != 2 || header[0] != "date" || header[1] != "nav") {
    throw Error(Errc::missing_column, "NAV header must be 'date,nav' for " + fund_id);
  }
  NavSeries out;
  out.fund_id = std::move(fund_id);
  for (std::size_t row = 1; row < lines.size(); ++row) {
    auto cells = csv::split(lines[row]);
    if (cells.size() != 2) {
      throw Error(Errc::malformed_input, "expected 2 cells on line " + std::to_string(row + 1));
    }
    out.dates.push_back(Date::parse(cells[0]));
    double nav = csv::parse_double(cells[1], "nav");
    if (!(nav > 0.0)) {
      throw Error(Errc::non_positive_value, "nav " + cells[1] + " on " + cells[0]);
    }
    out.navs.push_back(nav);
    detail::require_increasing(out.dates, out.dates.size() - 1, "NAV file " + out.fund_id);
  }
  if (out.navs.size() < 2) throw Error(Errc::too_few_rows, "NAV series needs at least 2 rows");
  return out;
}

inline NavSeries parse_nav_csv(const std::string& text, std::string fund_id) {
  std::istringstream in(text);
  return parse_nav_csv(in, std::move(fund_id));
}

inline std::string to_csv(const NavSeries& nav) {
  std::string out = "date,nav\n";
  for (std::size_t i = 0; i < nav.dates.size(); ++i) {
    out += nav.dates[i].iso();
    out += ',';
    out += csv::format_double(nav.navs[i]);
    out += '\n';
  }
  return out;
}

inline ReturnSeries compute_returns(const NavSeries& nav) {
  ReturnSeries out;
  out.series_id = nav.fund_id;
  const std::size_t n = nav.navs.size();
  if (n < 2) return out;
  out.dates.assign(nav.dates.begin() + 1, nav.dates.end());
  out.returns.reserve(n - 1);
  for (std::size_t t = 0; t + 1 < n; ++t) out.returns.push_back(nav.navs[t + 1] / nav.navs[t] - 1.0);
  return out;
}

/// Parses `date,mkt_rf,smb,hml[,mom],rf`. Columns are located by header name.
inline FactorPanel parse_factor_csv(std::istream& in) {
  auto lines = csv::read_lines(in);
  if (lines.empty()) throw Error(Errc::too_few_rows, "empty factor file");
  auto header = csv::split(lines.front());
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  auto required = [&](std::string_view name) {
    auto idx = column(name);
    if (!idx) throw Error(Errc::missing_column, "factor file lacks column '" + std::string(name) + "'");
    return *idx;
  };
  const std::size_t c_date = required("date");
  const std::size_t c_mkt = required("mkt_rf");
  const std::size_t c_smb = required("smb");
  const std::size_t c_hml = required("hml");
  const std::size_t c_rf = required("rf");
  const auto c_mom = column("mom");

  FactorPanel out;
  if (c_mom) out.mom.emplace();
  for (std::size_t row = 1; row < lines.size(); ++row) {
    auto cells = csv::split(lines[row]);
    if (cells.size() != header.size()) {
      throw Error(Errc::malformed_input, "factor line " + std::to_string(row + 1) + " has " +
                                             std::to_string(cells.size()) + " cells");
    }
    out.dates.push_back(Date::parse(cells[c_date]));
    detail::require_increasing(out.dates, out.dates.size() - 1, "factor file");
    out.mkt_rf.push_back(csv::parse_double(cells[c_mkt], "mkt_rf"));
    out.smb.push_back(csv::parse_double(cells[c_smb], "smb"));
    out.hml.push_back(csv::parse_double(cells[c_hml], "hml"));
    if (c_mom) out.mom->push_back(csv::parse_double(cells[*c_mom], "mom"));
    out.rf.push_back(csv::parse_double(cells[c_rf], "rf"));
  }
  return out;
}

inline FactorPanel parse_factor_csv(const std::string& text) {
  std::istringstream in(text);
  return parse_factor_csv(in);
}

inline std::string to_csv(const FactorPanel& panel) {
  std::string out = panel.has_mom() ? "date,mkt_rf,smb,hml,mom,rf\n" : "date,mkt_rf,smb,hml,rf\n";
  for (std::size_t i = 0; i < panel.size(); ++i) {
    out += panel.dates[i].iso();
    for (double v : {panel.mkt_rf[i], panel.smb[i], panel.hml[i]}) {
      out += ',';
      out += csv::format_double(v);
    }
    if (panel.has_mom()) {
      out += ',';
      out += csv::format_double((*panel.mom)[i]);
    }
    out += ',';
    out += csv::format_double(panel.rf[i]);
    out += '\n';
  }
  return out;
}

/// Parses `fund_id,benchmark_id`.
inline BenchmarkMap parse_benchmark_map(std::istream& in) {
  auto lines = csv::read_lines(in);
  if (lines.empty()) throw Error(Errc::too_few_rows, "empty benchmark map");
  auto header = csv::split(lines.front());
  if (header.size() != 2 || header[0] != "fund_id" || header[1] != "benchmark_id") {
    throw Error(Errc::missing_column, "benchmark map header must be 'fund_id,benchmark_id'");
  }
  BenchmarkMap out;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    auto cells = csv::split(lines[row]);
    if (cells.size() != 2 || cells[0].empty() || cells[1].empty()) {
      throw Error(Errc::malformed_input, "benchmark map line " + std::to_string(row + 1));
    }
    if (!out.entries.emplace(cells[0], cells[1]).second) {
      throw Error(Errc::malformed_input, "fund '" + cells[0] + "' mapped twice");
    }
  }
  return out;
}

inline BenchmarkMap parse_benchmark_map(const std::string& text) {
  std::istringstream in(text);
  return parse_benchmark_map(in);
}

inline std::string to_csv(const BenchmarkMap& map) {
  std::string out = "fund_id,benchmark_id\n";
  for (const auto& [fund, bench] : map.entries) out += fund + ',' + bench + '\n';
  return out;
}

/// Restricts fund, benchmark and factors to the exact intersection of their calendars.
inline AlignedSample align(const ReturnSeries& fund, const ReturnSeries& bench, const FactorPanel& factors,
                           std::size_t min_window = kDefaultMinWindow) {
  AlignedSample out;
  out.fund_id = fund.series_id;
  if (factors.has_mom()) out.mom.emplace();
  std::size_t i = 0, j = 0, f = 0;
  while (i < fund.dates.size() && j < bench.dates.size() && f < factors.dates.size()) {
    const Date d = std::max({fund.dates[i], bench.dates[j], factors.dates[f]});
    if (fund.dates[i] < d) { ++i; continue; }
    if (bench.dates[j] < d) { ++j; continue; }
    if (factors.dates[f] < d) { ++f; continue; }
    out.dates.push_back(d);
    out.r_fund.push_back(fund.returns[i]);
    out.r_bench.push_back(bench.returns[j]);
    out.mkt_rf.push_back(factors.mkt_rf[f]);
    out.smb.push_back(factors.smb[f]);
    out.hml.push_back(factors.hml[f]);
    if (out.mom) out.mom->push_back((*factors.mom)[f]);
    out.rf.push_back(factors.rf[f]);
    ++i, ++j, ++f;
  }
  if (out.n() < min_window) {
    throw Error(Errc::window_too_short, "aligned sample for '" + fund.series_id + "' has " +
                                            std::to_string(out.n()) + " observations, need " +
                                            std::to_string(min_window));
  }
  return out;
}

}  // namespace fundshift
