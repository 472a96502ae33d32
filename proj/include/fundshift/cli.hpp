#pragma once

// The three fundshift commands as library functions returning exit statuses:
// 0 success, 2 usage/config, 3 I/O, 4 nothing analyzable.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fundshift/breaks.hpp"
#include "fundshift/marketdata.hpp"
#include "fundshift/perf.hpp"
#include "fundshift/regress.hpp"
#include "fundshift/report.hpp"
#include "fundshift/stylebox.hpp"
#include "fundshift/synth.hpp"

namespace fundshift {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitIo = 3, kExitEmpty = 4 };

/// stderr logger; FUNDSHIFT_LOG takes trace|debug|info|warn|error|critical|off (default warn).
inline std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = spdlog::stderr_color_mt("fundshift");
    l->set_pattern("[%l] %v");
    const char* env = std::getenv("FUNDSHIFT_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    return l;
  }();
  return log;
}

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a sibling temp file and renames it into place.
inline void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error(Errc::io, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(Errc::io, "cannot rename into " + path.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// simulate

inline Json truth_to_json(const PlantedTruth& t, const FundSpec& spec, const FactorPanel& panel) {
  Json dates = Json::array();
  for (std::size_t b : t.break_indices) dates.push_back(panel.dates[b].iso());
  Json styles = Json::array();
  for (const auto& s : t.styles) styles.push_back(s.label());
  Json intensities = Json::array();
  for (auto c : t.intensities) intensities.push_back(std::string(to_string(c)));
  return Json{{"fund_id", t.fund_id},       {"benchmark_id", spec.benchmark_id}, {"break_indices", t.break_indices},
              {"break_dates", dates},       {"styles", styles},                  {"intensities", intensities}};
}

/// Writes factors.csv, bench_map.csv, nav/<fund>.csv, bench_nav/<bench>.csv and truth.json under out_dir.
inline int cmd_simulate(const fs::path& spec_path, const fs::path& out_dir, std::optional<std::uint64_t> seed,
                        std::ostream& err = std::cerr) {
  SimulationSpec spec;
  try {
    spec = parse_simulation_spec(nlohmann::json::parse(read_file(spec_path)));
  } catch (const nlohmann::json::exception& e) {
    err << "error: spec is not valid JSON: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::io ? kExitIo : kExitUsage;
  }
  if (seed) spec.seed = *seed;

  try {
    const FactorPanel panel =
        gen_factors(spec.panel_length(), derive_seed(spec.seed, 0), spec.vols, spec.rf, spec.include_mom, spec.start);
    std::vector<std::pair<fs::path, std::string>> files;
    files.emplace_back("factors.csv", to_csv(panel));
    BenchmarkMap map;
    for (const auto& b : spec.benchmarks) {
      files.emplace_back(fs::path("bench_nav") / (b.benchmark_id + ".csv"),
                         to_csv(gen_benchmark(b.benchmark_id, b.loadings, panel)));
    }
    Json truth_funds = Json::array();
    for (std::size_t i = 0; i < spec.funds.size(); ++i) {
      const auto& f = spec.funds[i];
      GeneratedFund g = gen_fund(f, panel, derive_seed(spec.seed, i + 1));
      files.emplace_back(fs::path("nav") / (f.fund_id + ".csv"), to_csv(g.nav));
      truth_funds.push_back(truth_to_json(g.truth, f, panel));
      map.entries[f.fund_id] = f.benchmark_id;
    }
    files.emplace_back("bench_map.csv", to_csv(map));
    files.emplace_back("truth.json", Json{{"seed", spec.seed}, {"funds", truth_funds}}.dump(2) + "\n");

    std::error_code ec;
    fs::create_directories(out_dir / "nav", ec);
    if (!ec) fs::create_directories(out_dir / "bench_nav", ec);
    if (ec) {
      err << "error: cannot create " << out_dir.string() << ": " << ec.message() << "\n";
      return kExitIo;
    }
    for (const auto& [rel, content] : files) write_file_atomic(out_dir / rel, content);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::io ? kExitIo : kExitUsage;
  }
  logger()->info("simulated {} funds into {}", spec.funds.size(), out_dir.string());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

/// Runs breaks -> styles -> shifts -> metrics for one aligned fund.
inline FundRecord analyze_fund(const AlignedSample& sample, const std::string& benchmark_id,
                               const AnalysisConfig& config) {
  constexpr std::size_t k = 4;
  const FitOptions opts = config.fit_options();
  const std::size_t h = min_segment_length(sample.n(), config.trim, k);
  const SsrTable table = build_ssr_table(sample, h);
  BreakSet bs = select_break_count(table, k, config.max_breaks);
  bs.fund_id = sample.fund_id;
  const std::size_t detected = bs.chosen_m;
  bs = filter_short_regimes(bs, config.min_regime_obs, &table);

  const auto styles = regime_styles(sample, bs, opts);
  FundRecord rec;
  rec.fund_id = sample.fund_id;
  rec.benchmark_id = benchmark_id;
  rec.n_obs = sample.n();
  rec.start_date = sample.dates.front().iso();
  rec.end_date = sample.dates.back().iso();
  rec.detected_m = detected;
  rec.chosen_m = bs.chosen_m;
  rec.break_indices = bs.partition.break_indices;
  for (std::size_t b : rec.break_indices) rec.break_dates.push_back(sample.dates[b].iso());
  rec.criterion_values = bs.criterion_values;

  for (const auto& rs : styles) {
    RegimeRecord r;
    r.start = rs.window.start;
    r.end = rs.window.end;
    r.start_date = sample.dates[r.start].iso();
    r.end_date = sample.dates[r.end].iso();
    r.coef = rs.fit.coef;
    r.tstat = rs.fit.tstat;
    r.significant = rs.fit.significant;
    r.style = rs.style;
    rec.regimes.push_back(std::move(r));
  }

  for (std::size_t b = 0; b < bs.chosen_m; ++b) {
    const BreakShift shift = classify_break(styles[b], styles[b + 1]);
    bs.is_style_break[b] = shift.is_style_break();
    ShiftRecord s;
    s.break_index = shift.break_index;
    s.date = sample.dates[shift.break_index].iso();
    s.smb = {shift.smb_before, shift.smb_after, shift.smb_shift};
    s.hml = {shift.hml_before, shift.hml_after, shift.hml_shift};
    s.intensity = shift.intensity;
    s.is_style_break = shift.is_style_break();
    s.style_from = shift.style_from;
    s.style_to = shift.style_to;
    ShiftOutcome outcome = pre_post_compare(sample, bs, styles, b, config.min_window, opts, config.annualization);
    if (outcome.comparison) {
      s.pre = outcome.comparison->pre;
      s.post = outcome.comparison->post;
      s.delta = outcome.comparison->delta;
    }
    s.warning = outcome.warning;
    rec.shifts.push_back(std::move(s));
  }

  const Window all = full_window(sample);
  const RegressionFit ff3 = fit_ff3(sample, all, opts);
  const RegressionFit agt = fit_agt(sample, all, opts);
  rec.metrics = annualized_metrics(sample, all, ff3, agt, config.annualization);
  rec.metrics.n_breaks = bs.chosen_m;
  if (config.carhart) rec.carhart_coef = fit_carhart(sample, all, opts).coef;
  return rec;
}

/// Analyzes every `<fund>.csv` under config.nav_dir. Funds that cannot be
/// analyzed land in `skipped`; only unreadable shared inputs throw.
inline AnalysisReport run_analysis(const AnalysisConfig& config) {
  config.validate();
  const FactorPanel factors = parse_factor_csv(read_file(config.factors_path));
  if (config.carhart && !factors.has_mom()) {
    throw Error(Errc::missing_factor, "--carhart needs a mom column in the factor file");
  }
  const BenchmarkMap map = parse_benchmark_map(read_file(config.bench_map_path));

  std::error_code ec;
  if (!fs::is_directory(config.nav_dir, ec)) throw Error(Errc::io, "not a directory: " + config.nav_dir);
  std::vector<fs::path> nav_files;
  for (const auto& entry : fs::directory_iterator(config.nav_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") nav_files.push_back(entry.path());
  }
  std::sort(nav_files.begin(), nav_files.end(),
            [](const fs::path& a, const fs::path& b) { return a.stem().string() < b.stem().string(); });

  std::map<std::string, std::variant<ReturnSeries, std::string>> benches;
  for (const auto& [fund, bench] : map.entries) {
    if (benches.count(bench)) continue;
    try {
      const fs::path p = fs::path(config.bench_nav_dir) / (bench + ".csv");
      benches.emplace(bench, compute_returns(parse_nav_csv(read_file(p), bench)));
    } catch (const Error& e) {
      benches.emplace(bench, std::string("benchmark ") + bench + ": " + e.what());
    }
  }

  using Outcome = std::variant<FundRecord, SkippedFund>;
  std::vector<Outcome> outcomes(nav_files.size());
  auto work = [&](std::size_t i) -> Outcome {
    const std::string id = nav_files[i].stem().string();
    const std::string* bench_id = map.find(id);
    if (!bench_id) return SkippedFund{id, "no benchmark"};
    const auto& bench = benches.at(*bench_id);
    if (const auto* why = std::get_if<std::string>(&bench)) return SkippedFund{id, *why};
    try {
      const ReturnSeries fund = compute_returns(parse_nav_csv(read_file(nav_files[i]), id));
      const AlignedSample sample = align(fund, std::get<ReturnSeries>(bench), factors, config.min_window);
      return analyze_fund(sample, *bench_id, config);
    } catch (const Error& e) {
      return SkippedFund{id, e.what()};
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < nav_files.size(); i = next++) outcomes[i] = work(i);
  };
  const std::size_t threads = std::min(config.jobs, std::max<std::size_t>(nav_files.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  AnalysisReport report;
  report.config = config;
  for (auto& o : outcomes) {
    if (auto* rec = std::get_if<FundRecord>(&o)) {
      logger()->info("{}: {} break(s)", rec->fund_id, rec->chosen_m);
      report.funds.push_back(std::move(*rec));
    } else {
      auto& s = std::get<SkippedFund>(o);
      logger()->warn("skipping {}: {}", s.fund_id, s.reason);
      report.skipped.push_back(std::move(s));
    }
  }
  report.aggregates = build_aggregates(report.funds, config.max_breaks);
  return report;
}

inline int cmd_analyze(const AnalysisConfig& config, std::ostream& err = std::cerr) {
  AnalysisReport report;
  try {
    report = run_analysis(config);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::io ? kExitIo : kExitUsage;
  }
  try {
    write_file_atomic(config.out_path, dump_report(report));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  if (report.funds.empty()) {
    err << "error: no analyzable fund\n";
    return kExitEmpty;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report

inline int cmd_report(const fs::path& report_path, const std::string& table, const std::string& format,
                      std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  TableFormat fmt;
  if (format == "csv") {
    fmt = TableFormat::Csv;
  } else if (format == "md") {
    fmt = TableFormat::Markdown;
  } else {
    err << "error: unknown format '" << format << "' (expected csv or md)\n";
    return kExitUsage;
  }
  if (table != "breaks" && table != "transitions" && table != "performance" && table != "deciles") {
    err << "error: unknown table '" << table << "' (expected breaks, transitions, performance or deciles)\n";
    return kExitUsage;
  }
  AnalysisReport report;
  try {
    report = report_from_json(Json::parse(read_file(report_path)));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::io ? kExitIo : kExitUsage;
  } catch (const Json::exception& e) {
    err << "error: report is not valid JSON: " << e.what() << "\n";
    return kExitUsage;
  }
  const Aggregates& a = report.aggregates;
  Table t;
  if (table == "breaks") t = breaks_table(a);
  else if (table == "transitions") t = transitions_table(a);
  else if (table == "performance") t = performance_table(a, fmt);
  else t = deciles_table(a);
  out << render(t, fmt);
  return kExitOk;
}

}  // namespace fundshift
