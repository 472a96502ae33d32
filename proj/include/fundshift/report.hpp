#pragma once

// On-disk analysis report: per-fund records, the aggregates derived from
// them, JSON (de)serialization and CSV/Markdown table rendering.

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fundshift/csv.hpp"
#include "fundshift/error.hpp"
#include "fundshift/perf.hpp"
#include "fundshift/regress.hpp"
#include "fundshift/stylebox.hpp"

namespace fundshift {

inline constexpr std::string_view kToolName = "fundshift";
inline constexpr std::string_view kToolVersion = "0.1.0";

struct AnalysisConfig {
  double sig_level = 0.05;
  double trim = 0.15;
  std::size_t max_breaks = 5;
  /// 500 daily observations approximates a 24-month minimum regime.
  std::size_t min_regime_obs = 0;
  double annualization = kTradingDaysPerYear;
  std::size_t min_window = kDefaultMinWindow;
  bool hac = false;
  bool carhart = false;
  std::size_t jobs = 1;

  std::string nav_dir;
  std::string factors_path;
  std::string bench_map_path;
  std::string bench_nav_dir;
  std::string out_path;

  /// Throws Errc::malformed_input on a violated invariant.
  void validate() const {
    if (!(sig_level > 0.0 && sig_level < 1.0)) throw Error(Errc::malformed_input, "--sig must lie in (0, 1)");
    if (!(trim > 0.0 && trim < 0.5)) throw Error(Errc::malformed_input, "--trim must lie in (0, 0.5)");
    if (!(annualization > 0.0)) throw Error(Errc::malformed_input, "annualization must be positive");
    if (jobs == 0) throw Error(Errc::malformed_input, "--jobs must be at least 1");
  }

  FitOptions fit_options() const {
    FitOptions opts;
    opts.sig_level = sig_level;
    opts.ols.se_method = hac ? SeMethod::NeweyWest : SeMethod::Homoskedastic;
    return opts;
  }
};

struct RegimeRecord {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string start_date;
  std::string end_date;
  std::vector<double> coef;
  std::vector<double> tstat;
  std::vector<bool> significant;
  StyleBox style;
};

struct FactorShiftRecord {
  FactorState before;
  FactorState after;
  IntensityClass shift = IntensityClass::Unchanged;
};

struct ShiftRecord {
  std::size_t break_index = 0;
  std::string date;
  FactorShiftRecord smb;
  FactorShiftRecord hml;
  IntensityClass intensity = IntensityClass::Unchanged;
  bool is_style_break = false;
  StyleBox style_from;
  StyleBox style_to;
  std::optional<FundMetrics> pre;
  std::optional<FundMetrics> post;
  std::optional<FundMetrics> delta;
  std::string warning;
};

struct FundRecord {
  std::string fund_id;
  std::string benchmark_id;
  std::size_t n_obs = 0;
  std::string start_date;
  std::string end_date;
  std::size_t detected_m = 0;
  std::size_t chosen_m = 0;
  std::vector<std::size_t> break_indices;
  std::vector<std::string> break_dates;
  std::vector<std::optional<double>> criterion_values;
  std::vector<RegimeRecord> regimes;
  std::vector<ShiftRecord> shifts;
  FundMetrics metrics;
  std::optional<std::vector<double>> carhart_coef;
};

struct SkippedFund {
  std::string fund_id;
  std::string reason;
};

struct Aggregates {
  std::vector<std::size_t> break_histogram;
  TransitionMatrix transitions;
  std::map<IntensityClass, std::size_t> intensity_counts;
  GroupReport performance;
  std::optional<DecileReport> deciles;
};

struct AnalysisReport {
  AnalysisConfig config;
  std::vector<FundRecord> funds;
  std::vector<SkippedFund> skipped;
  Aggregates aggregates;
};

/// Everything in Aggregates is a function of the per-fund records and the break ceiling.
inline Aggregates build_aggregates(const std::vector<FundRecord>& funds, std::size_t max_breaks) {
  Aggregates agg;
  std::size_t top = max_breaks;
  for (const auto& f : funds) top = std::max(top, f.chosen_m);
  agg.break_histogram.assign(top + 1, 0);
  for (IntensityClass c : kIntensityClasses) agg.intensity_counts[c] = 0;
  std::vector<FundMetrics> metrics;
  std::vector<DecileInput> decile_inputs;
  for (const auto& f : funds) {
    ++agg.break_histogram[f.chosen_m];
    DecileInput in;
    in.metrics = f.metrics;
    for (const auto& s : f.shifts) {
      agg.transitions.add(s.style_from, s.style_to);
      ++agg.intensity_counts[s.intensity];
      in.shifts.emplace_back(s.intensity, s.style_to);
    }
    metrics.push_back(f.metrics);
    decile_inputs.push_back(std::move(in));
  }
  agg.performance = group_by_break_count(metrics);
  if (decile_inputs.size() >= 10) agg.deciles = decile_analysis(decile_inputs);
  return agg;
}

// ---------------------------------------------------------------------------
// JSON

using Json = nlohmann::ordered_json;

namespace detail {

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json optional_number(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? Json(*v) : Json(nullptr);
}

inline double number_from(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline std::optional<double> optional_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

inline Json numbers(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(number_or_null(x));
  return out;
}

inline std::vector<double> numbers_from(const Json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(number_from(x));
  return out;
}

}  // namespace detail

inline Json to_json(const FundMetrics& m) {
  return Json{{"excess_return_pa", detail::number_or_null(m.excess_return_pa)},
              {"stdev_pa", detail::number_or_null(m.stdev_pa)},
              {"sharpe_pa", detail::optional_number(m.sharpe_pa)},
              {"treynor_pa", detail::optional_number(m.treynor_pa)},
              {"ff3_alpha_pa", detail::number_or_null(m.ff3_alpha_pa)},
              {"agt_alpha_pa", detail::number_or_null(m.agt_alpha_pa)},
              {"n_breaks", m.n_breaks}};
}

inline FundMetrics metrics_from_json(const Json& j, const std::string& fund_id) {
  FundMetrics m;
  m.fund_id = fund_id;
  m.excess_return_pa = detail::number_from(j.at("excess_return_pa"));
  m.stdev_pa = detail::number_from(j.at("stdev_pa"));
  m.sharpe_pa = detail::optional_from(j.at("sharpe_pa"));
  m.treynor_pa = detail::optional_from(j.at("treynor_pa"));
  m.ff3_alpha_pa = detail::number_from(j.at("ff3_alpha_pa"));
  m.agt_alpha_pa = detail::number_from(j.at("agt_alpha_pa"));
  m.n_breaks = j.at("n_breaks").get<std::size_t>();
  return m;
}

inline Json to_json(const FactorShiftRecord& f) {
  return Json{{"beta_before", detail::number_or_null(f.before.beta)},
              {"significant_before", f.before.significant},
              {"beta_after", detail::number_or_null(f.after.beta)},
              {"significant_after", f.after.significant},
              {"shift", std::string(to_string(f.shift))}};
}

inline FactorShiftRecord factor_shift_from_json(const Json& j) {
  FactorShiftRecord f;
  f.before = {detail::number_from(j.at("beta_before")), j.at("significant_before").get<bool>()};
  f.after = {detail::number_from(j.at("beta_after")), j.at("significant_after").get<bool>()};
  f.shift = parse_intensity(j.at("shift").get<std::string>());
  return f;
}

inline Json to_json(const FundRecord& f) {
  Json regimes = Json::array();
  for (const auto& r : f.regimes) {
    regimes.push_back(Json{{"start", r.start},
                           {"end", r.end},
                           {"start_date", r.start_date},
                           {"end_date", r.end_date},
                           {"coef", detail::numbers(r.coef)},
                           {"tstat", detail::numbers(r.tstat)},
                           {"significant", r.significant},
                           {"style", r.style.label()}});
  }
  Json shifts = Json::array();
  for (const auto& s : f.shifts) {
    auto opt_metrics = [](const std::optional<FundMetrics>& m) { return m ? to_json(*m) : Json(nullptr); };
    shifts.push_back(Json{{"break_index", s.break_index},
                          {"date", s.date},
                          {"smb", to_json(s.smb)},
                          {"hml", to_json(s.hml)},
                          {"intensity", std::string(to_string(s.intensity))},
                          {"is_style_break", s.is_style_break},
                          {"style_from", s.style_from.label()},
                          {"style_to", s.style_to.label()},
                          {"pre", opt_metrics(s.pre)},
                          {"post", opt_metrics(s.post)},
                          {"delta", opt_metrics(s.delta)},
                          {"warning", s.warning}});
  }
  Json criterion = Json::array();
  for (const auto& c : f.criterion_values) criterion.push_back(detail::optional_number(c));
  return Json{{"fund_id", f.fund_id},
              {"benchmark_id", f.benchmark_id},
              {"n_obs", f.n_obs},
              {"start_date", f.start_date},
              {"end_date", f.end_date},
              {"detected_breaks", f.detected_m},
              {"chosen_m", f.chosen_m},
              {"break_indices", f.break_indices},
              {"break_dates", f.break_dates},
              {"criterion_values", criterion},
              {"regimes", regimes},
              {"shifts", shifts},
              {"metrics", to_json(f.metrics)},
              {"carhart_coef", f.carhart_coef ? detail::numbers(*f.carhart_coef) : Json(nullptr)}};
}

inline FundRecord fund_from_json(const Json& j) {
  FundRecord f;
  f.fund_id = j.at("fund_id").get<std::string>();
  f.benchmark_id = j.at("benchmark_id").get<std::string>();
  f.n_obs = j.at("n_obs").get<std::size_t>();
  f.start_date = j.at("start_date").get<std::string>();
  f.end_date = j.at("end_date").get<std::string>();
  f.detected_m = j.at("detected_breaks").get<std::size_t>();
  f.chosen_m = j.at("chosen_m").get<std::size_t>();
  f.break_indices = j.at("break_indices").get<std::vector<std::size_t>>();
  f.break_dates = j.at("break_dates").get<std::vector<std::string>>();
  for (const auto& c : j.at("criterion_values")) f.criterion_values.push_back(detail::optional_from(c));
  for (const auto& r : j.at("regimes")) {
    RegimeRecord rr;
    rr.start = r.at("start").get<std::size_t>();
    rr.end = r.at("end").get<std::size_t>();
    rr.start_date = r.at("start_date").get<std::string>();
    rr.end_date = r.at("end_date").get<std::string>();
    rr.coef = detail::numbers_from(r.at("coef"));
    rr.tstat = detail::numbers_from(r.at("tstat"));
    rr.significant = r.at("significant").get<std::vector<bool>>();
    rr.style = parse_style(r.at("style").get<std::string>());
    f.regimes.push_back(std::move(rr));
  }
  for (const auto& s : j.at("shifts")) {
    ShiftRecord sr;
    sr.break_index = s.at("break_index").get<std::size_t>();
    sr.date = s.at("date").get<std::string>();
    sr.smb = factor_shift_from_json(s.at("smb"));
    sr.hml = factor_shift_from_json(s.at("hml"));
    sr.intensity = parse_intensity(s.at("intensity").get<std::string>());
    sr.is_style_break = s.at("is_style_break").get<bool>();
    sr.style_from = parse_style(s.at("style_from").get<std::string>());
    sr.style_to = parse_style(s.at("style_to").get<std::string>());
    if (!s.at("pre").is_null()) sr.pre = metrics_from_json(s.at("pre"), f.fund_id);
    if (!s.at("post").is_null()) sr.post = metrics_from_json(s.at("post"), f.fund_id);
    if (!s.at("delta").is_null()) sr.delta = metrics_from_json(s.at("delta"), f.fund_id);
    sr.warning = s.at("warning").get<std::string>();
    f.shifts.push_back(std::move(sr));
  }
  f.metrics = metrics_from_json(j.at("metrics"), f.fund_id);
  if (!j.at("carhart_coef").is_null()) f.carhart_coef = detail::numbers_from(j.at("carhart_coef"));
  return f;
}

inline Json to_json(const GroupRow& r) {
  return Json{{"group", r.group},
              {"funds", r.funds},
              {"breaks", r.breaks},
              {"excess_return_pa", detail::number_or_null(r.excess_return_pa)},
              {"stdev_pa", detail::number_or_null(r.stdev_pa)},
              {"sharpe_pa", detail::optional_number(r.sharpe_pa)},
              {"ff3_alpha_pa", detail::number_or_null(r.ff3_alpha_pa)},
              {"agt_alpha_pa", detail::number_or_null(r.agt_alpha_pa)}};
}

inline GroupRow group_row_from_json(const Json& j) {
  GroupRow r;
  r.group = j.at("group").get<std::string>();
  r.funds = j.at("funds").get<std::size_t>();
  r.breaks = j.at("breaks").get<std::size_t>();
  r.excess_return_pa = detail::number_from(j.at("excess_return_pa"));
  r.stdev_pa = detail::number_from(j.at("stdev_pa"));
  r.sharpe_pa = detail::optional_from(j.at("sharpe_pa"));
  r.ff3_alpha_pa = detail::number_from(j.at("ff3_alpha_pa"));
  r.agt_alpha_pa = detail::number_from(j.at("agt_alpha_pa"));
  return r;
}

inline Json to_json(const DecileSide& side) {
  Json intensity = Json::object();
  for (IntensityClass c : kIntensityClasses) {
    auto it = side.intensity.find(c);
    intensity[std::string(to_string(c))] = it == side.intensity.end() ? 0 : it->second;
  }
  Json destinations = Json::object();
  for (std::size_t i = 0; i < kStyleCount; ++i) destinations[style_labels()[i]] = side.destinations[i];
  return Json{{"fund_ids", side.fund_ids}, {"intensity", intensity}, {"destinations", destinations}};
}

inline DecileSide decile_side_from_json(const Json& j) {
  DecileSide side;
  side.fund_ids = j.at("fund_ids").get<std::vector<std::string>>();
  for (const auto& [name, count] : j.at("intensity").items()) {
    auto n = count.get<std::size_t>();
    if (n) side.intensity[parse_intensity(name)] = n;
  }
  for (const auto& [label, count] : j.at("destinations").items()) {
    side.destinations[parse_style(label).index()] = count.get<std::size_t>();
  }
  return side;
}

inline Json to_json(const Aggregates& a) {
  Json matrix = Json::array();
  for (const auto& row : a.transitions.counts) matrix.push_back(row);
  Json intensity = Json::object();
  for (const auto& [c, n] : a.intensity_counts) intensity[std::string(to_string(c))] = n;
  Json perf = Json::array();
  for (const auto& r : a.performance.rows) perf.push_back(to_json(r));
  Json deciles = nullptr;
  if (a.deciles) {
    deciles = Json{{"decile_size", a.deciles->decile_size},
                   {"top", to_json(a.deciles->top)},
                   {"bottom", to_json(a.deciles->bottom)}};
  }
  return Json{{"break_histogram", a.break_histogram},
              {"transitions", Json{{"labels", style_labels()}, {"counts", matrix},
                                   {"grand_total", a.transitions.grand_total}}},
              {"intensity_counts", intensity},
              {"performance", perf},
              {"deciles", deciles}};
}

inline Aggregates aggregates_from_json(const Json& j) {
  Aggregates a;
  a.break_histogram = j.at("break_histogram").get<std::vector<std::size_t>>();
  const auto& t = j.at("transitions");
  const auto& counts = t.at("counts");
  if (counts.size() != kStyleCount) throw Error(Errc::malformed_input, "transition matrix must be 9x9");
  for (std::size_t r = 0; r < kStyleCount; ++r) {
    if (counts[r].size() != kStyleCount) throw Error(Errc::malformed_input, "transition matrix must be 9x9");
    for (std::size_t c = 0; c < kStyleCount; ++c) a.transitions.counts[r][c] = counts[r][c].get<std::uint64_t>();
  }
  a.transitions.grand_total = t.at("grand_total").get<std::uint64_t>();
  for (const auto& [name, n] : j.at("intensity_counts").items()) {
    a.intensity_counts[parse_intensity(name)] = n.get<std::size_t>();
  }
  for (const auto& r : j.at("performance")) a.performance.rows.push_back(group_row_from_json(r));
  const auto& d = j.at("deciles");
  if (!d.is_null()) {
    DecileReport dr;
    dr.decile_size = d.at("decile_size").get<std::size_t>();
    dr.top = decile_side_from_json(d.at("top"));
    dr.bottom = decile_side_from_json(d.at("bottom"));
    a.deciles = std::move(dr);
  }
  return a;
}

/// Echoes analysis settings and input paths; the output path is left out so
/// identical analyses written to different files stay byte-identical.
inline Json to_json(const AnalysisConfig& c) {
  return Json{{"sig_level", c.sig_level},
              {"trim", c.trim},
              {"max_breaks", c.max_breaks},
              {"min_regime_obs", c.min_regime_obs},
              {"annualization", c.annualization},
              {"min_window", c.min_window},
              {"hac", c.hac},
              {"carhart", c.carhart},
              {"nav_dir", c.nav_dir},
              {"factors", c.factors_path},
              {"bench_map", c.bench_map_path},
              {"bench_nav_dir", c.bench_nav_dir}};
}

inline AnalysisConfig config_from_json(const Json& j) {
  AnalysisConfig c;
  c.sig_level = j.at("sig_level").get<double>();
  c.trim = j.at("trim").get<double>();
  c.max_breaks = j.at("max_breaks").get<std::size_t>();
  c.min_regime_obs = j.at("min_regime_obs").get<std::size_t>();
  c.annualization = j.at("annualization").get<double>();
  c.min_window = j.at("min_window").get<std::size_t>();
  c.hac = j.at("hac").get<bool>();
  c.carhart = j.at("carhart").get<bool>();
  c.nav_dir = j.at("nav_dir").get<std::string>();
  c.factors_path = j.at("factors").get<std::string>();
  c.bench_map_path = j.at("bench_map").get<std::string>();
  c.bench_nav_dir = j.at("bench_nav_dir").get<std::string>();
  return c;
}

inline Json to_json(const AnalysisReport& r) {
  Json funds = Json::array();
  for (const auto& f : r.funds) funds.push_back(to_json(f));
  Json skipped = Json::array();
  for (const auto& s : r.skipped) skipped.push_back(Json{{"fund_id", s.fund_id}, {"reason", s.reason}});
  return Json{{"tool", kToolName},
              {"version", kToolVersion},
              {"config", to_json(r.config)},
              {"funds", funds},
              {"skipped", skipped},
              {"aggregates", to_json(r.aggregates)}};
}

inline AnalysisReport report_from_json(const Json& j) {
  try {
    AnalysisReport r;
    r.config = config_from_json(j.at("config"));
    for (const auto& f : j.at("funds")) r.funds.push_back(fund_from_json(f));
    for (const auto& s : j.at("skipped")) {
      r.skipped.push_back({s.at("fund_id").get<std::string>(), s.at("reason").get<std::string>()});
    }
    r.aggregates = aggregates_from_json(j.at("aggregates"));
    return r;
  } catch (const Json::exception& e) {
    throw Error(Errc::malformed_input, std::string("report: ") + e.what());
  }
}

inline std::string dump_report(const AnalysisReport& r) { return to_json(r).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Tables

using Table = std::vector<std::vector<std::string>>;

enum class TableFormat { Csv, Markdown };

inline std::string render(const Table& t, TableFormat fmt) {
  std::string out;
  for (std::size_t r = 0; r < t.size(); ++r) {
    if (fmt == TableFormat::Csv) {
      for (std::size_t c = 0; c < t[r].size(); ++c) out += (c ? "," : "") + t[r][c];
      out += '\n';
    } else {
      out += '|';
      for (const auto& cell : t[r]) out += ' ' + cell + " |";
      out += '\n';
      if (r == 0) {
        out += '|';
        for (std::size_t c = 0; c < t[r].size(); ++c) out += "---|";
        out += '\n';
      }
    }
  }
  return out;
}

/// Funds per break count plus a Total row whose breaks column is sum(m * count).
inline Table breaks_table(const Aggregates& a) {
  Table t{{"breaks", "funds", "total_breaks"}};
  std::size_t funds = 0, total = 0;
  for (std::size_t m = 0; m < a.break_histogram.size(); ++m) {
    const std::size_t count = a.break_histogram[m];
    t.push_back({std::to_string(m), std::to_string(count), std::to_string(m * count)});
    funds += count;
    total += m * count;
  }
  t.push_back({"Total", std::to_string(funds), std::to_string(total)});
  return t;
}

inline Table transitions_table(const Aggregates& a) { return transition_rows(a.transitions); }

inline Table performance_table(const Aggregates& a, TableFormat fmt) {
  auto num = [fmt](double v) {
    if (!std::isfinite(v)) return std::string("NA");
    if (fmt == TableFormat::Csv) return csv::format_double(v);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : std::string("NA"); };
  Table t{group_report_header()};
  for (const auto& r : a.performance.rows) {
    t.push_back({r.group, std::to_string(r.funds), std::to_string(r.breaks), num(r.excess_return_pa), num(r.stdev_pa),
                 opt(r.sharpe_pa), num(r.ff3_alpha_pa), num(r.agt_alpha_pa)});
  }
  return t;
}

inline Table deciles_table(const Aggregates& a) {
  Table t;
  std::vector<std::string> header{"decile", "funds"};
  for (IntensityClass c : kIntensityClasses) header.emplace_back(to_string(c));
  for (const auto& l : style_labels()) header.push_back("to " + l);
  t.push_back(std::move(header));
  if (!a.deciles) return t;
  auto row = [](const std::string& name, const DecileSide& side) {
    std::string ids;
    for (std::size_t i = 0; i < side.fund_ids.size(); ++i) ids += (i ? ";" : "") + side.fund_ids[i];
    std::vector<std::string> r{name, ids};
    for (IntensityClass c : kIntensityClasses) {
      auto it = side.intensity.find(c);
      r.push_back(std::to_string(it == side.intensity.end() ? 0 : it->second));
    }
    for (std::size_t i = 0; i < kStyleCount; ++i) r.push_back(std::to_string(side.destinations[i]));
    return r;
  };
  t.push_back(row("top", a.deciles->top));
  t.push_back(row("bottom", a.deciles->bottom));
  return t;
}

}  // namespace fundshift
