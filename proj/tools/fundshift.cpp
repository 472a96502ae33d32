#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fundshift/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Benchmark-adjusted style break detection for mutual funds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fundshift::kToolVersion));

  auto* simulate = app.add_subcommand("simulate", "Generate synthetic funds with planted regimes");
  std::string spec_path, sim_out;
  std::optional<std::uint64_t> seed;
  simulate->add_option("--spec", spec_path, "Simulation spec (JSON)")->required();
  simulate->add_option("--out", sim_out, "Output directory")->required();
  simulate->add_option("--seed", seed, "Override the spec's seed");

  auto* analyze = app.add_subcommand("analyze", "Detect breaks, classify styles and grade shifts");
  fundshift::AnalysisConfig config;
  analyze->add_option("--nav", config.nav_dir, "Directory of <fund>.csv NAV files")->required();
  analyze->add_option("--factors", config.factors_path, "Factor CSV")->required();
  analyze->add_option("--bench-map", config.bench_map_path, "fund_id,benchmark_id CSV")->required();
  analyze->add_option("--bench-nav", config.bench_nav_dir, "Directory of <benchmark>.csv NAV files")->required();
  analyze->add_option("--out", config.out_path, "Report JSON path")->required();
  analyze->add_option("--sig", config.sig_level, "Two-sided significance level")->capture_default_str();
  analyze->add_option("--trim", config.trim, "Minimum regime as a fraction of the sample")->capture_default_str();
  analyze->add_option("--max-breaks", config.max_breaks, "Largest break count considered")->capture_default_str();
  analyze->add_option("--min-regime-obs", config.min_regime_obs, "Drop breaks next to shorter regimes (500 ~ 24 months)")
      ->capture_default_str();
  analyze->add_flag("--hac", config.hac, "Newey-West standard errors");
  analyze->add_flag("--carhart", config.carhart, "Also fit the four-factor model on the full sample");
  analyze->add_option("--jobs", config.jobs, "Funds analyzed concurrently")->capture_default_str();

  auto* report = app.add_subcommand("report", "Render an aggregate table from a report");
  std::string report_in, table, format = "csv";
  report->add_option("--in", report_in, "Report JSON")->required();
  report->add_option("--table", table, "breaks | transitions | performance | deciles")->required();
  report->add_option("--format", format, "csv | md")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fundshift::kExitUsage;
  }

  if (*simulate) return fundshift::cmd_simulate(spec_path, sim_out, seed);
  if (*analyze) return fundshift::cmd_analyze(config);
  return fundshift::cmd_report(report_in, table, format);
}
