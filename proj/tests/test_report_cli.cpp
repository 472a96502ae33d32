#include <gtest/gtest.h>

#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include "fundshift/cli.hpp"
#include "support.hpp"

using namespace fundshift;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

const char* kTwoFundSpec = R"({
  "seed": 5,
  "benchmarks": [{"id": "IDX", "loadings": {"mkt_rf": 1.0}}],
  "funds": [
    {"id": "ROT", "benchmark": "IDX", "regimes": [
      {"length": 600, "mkt_rf": 1.0, "smb": 0.6, "hml": 0.4, "noise_sigma": 0.004},
      {"length": 600, "mkt_rf": 1.0, "smb": -0.6, "hml": 0.4, "noise_sigma": 0.004}]},
    {"id": "FLAT", "benchmark": "IDX", "regimes": [
      {"length": 1200, "mkt_rf": 0.9, "smb": 0.3, "hml": -0.3, "noise_sigma": 0.004}]}
  ]
})";

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

std::string slurp(const fs::path& p) { return read_file(p); }

/// Simulates `spec` into dir/data and returns an analysis config over it.
AnalysisConfig simulate(const TempDir& dir, const std::string& spec) {
  write_text(dir / "spec.json", spec);
  std::ostringstream err;
  const int rc = cmd_simulate(dir / "spec.json", dir / "data", std::nullopt, err);
  EXPECT_EQ(rc, kExitOk) << err.str();
  AnalysisConfig c;
  c.nav_dir = (dir / "data" / "nav").string();
  c.factors_path = (dir / "data" / "factors.csv").string();
  c.bench_map_path = (dir / "data" / "bench_map.csv").string();
  c.bench_nav_dir = (dir / "data" / "bench_nav").string();
  c.out_path = (dir / "report.json").string();
  return c;
}

const FundRecord& find_fund(const AnalysisReport& r, const std::string& id) {
  for (const auto& f : r.funds)
    if (f.fund_id == id) return f;
  throw std::runtime_error("no fund " + id);
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(FUNDSHIFT_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Simulate, WritesInventory) {
  TempDir dir("sim");
  simulate(dir, kTwoFundSpec);
  for (const char* rel : {"factors.csv", "bench_map.csv", "truth.json", "nav/ROT.csv", "nav/FLAT.csv", "bench_nav/IDX.csv"})
    EXPECT_TRUE(fs::exists(dir / "data" / rel)) << rel;
  const auto truth = Json::parse(slurp(dir / "data" / "truth.json"));
  EXPECT_EQ(truth["funds"][0]["fund_id"], "ROT");
  EXPECT_EQ(truth["funds"][0]["break_indices"], Json::array({599}));
  EXPECT_EQ(truth["funds"][0]["intensities"], Json::array({"Rotation"}));
  const auto nav = parse_nav_csv(slurp(dir / "data" / "nav" / "ROT.csv"), "ROT");
  EXPECT_EQ(nav.navs.size(), 1201u);
  const auto map = parse_benchmark_map(slurp(dir / "data" / "bench_map.csv"));
  EXPECT_EQ(*map.find("FLAT"), "IDX");
}

TEST(Simulate, ByteIdenticalAndSeedOverride) {
  TempDir dir("simdet");
  write_text(dir / "spec.json", kTwoFundSpec);
  std::ostringstream err;
  ASSERT_EQ(cmd_simulate(dir / "spec.json", dir / "a", std::nullopt, err), kExitOk);
  ASSERT_EQ(cmd_simulate(dir / "spec.json", dir / "b", std::nullopt, err), kExitOk);
  ASSERT_EQ(cmd_simulate(dir / "spec.json", dir / "c", 6, err), kExitOk);
  for (const char* rel : {"factors.csv", "nav/ROT.csv", "bench_nav/IDX.csv", "truth.json"}) {
    EXPECT_EQ(slurp(dir / "a" / rel), slurp(dir / "b" / rel)) << rel;
  }
  EXPECT_NE(slurp(dir / "a" / "nav/ROT.csv"), slurp(dir / "c" / "nav/ROT.csv"));
}

TEST(Simulate, RejectsBadSpec) {
  TempDir dir("simbad");
  write_text(dir / "spec.json", R"({"benchmarks": [{"id": "IDX"}], "funds": [{"id": "A", "benchmark": "IDX"}]})");
  std::ostringstream err;
  EXPECT_EQ(cmd_simulate(dir / "spec.json", dir / "out", std::nullopt, err), kExitUsage);
  EXPECT_NE(err.str().find("regimes"), std::string::npos);
  write_text(dir / "broken.json", "{not json");
  EXPECT_EQ(cmd_simulate(dir / "broken.json", dir / "out", std::nullopt, err), kExitUsage);
  EXPECT_EQ(cmd_simulate(dir / "missing.json", dir / "out", std::nullopt, err), kExitIo);
}

TEST(Analyze, RecoversRotationAndFlatFund) {
  TempDir dir("an");
  const auto config = simulate(dir, kTwoFundSpec);
  std::ostringstream err;
  ASSERT_EQ(cmd_analyze(config, err), kExitOk) << err.str();
  const auto report = report_from_json(Json::parse(slurp(config.out_path)));
  ASSERT_EQ(report.funds.size(), 2u);
  EXPECT_EQ(report.funds[0].fund_id, "FLAT");
  const auto& rot = find_fund(report, "ROT");
  ASSERT_EQ(rot.chosen_m, 1u);
  EXPECT_NEAR(double(rot.break_indices[0]), 599.0, 20.0);
  ASSERT_EQ(rot.shifts.size(), 1u);
  EXPECT_EQ(rot.shifts[0].intensity, IntensityClass::Rotation);
  EXPECT_EQ(rot.regimes[0].style.label(), "Small Value");
  EXPECT_EQ(rot.regimes[1].style.label(), "Large Value");
  EXPECT_TRUE(rot.shifts[0].delta.has_value());
  EXPECT_EQ(find_fund(report, "FLAT").chosen_m, 0u);
  EXPECT_EQ(report.aggregates.transitions.grand_total, 1u);
  EXPECT_EQ(report.aggregates.break_histogram[0], 1u);
  EXPECT_EQ(report.aggregates.break_histogram[1], 1u);
}

TEST(Analyze, MinRegimeFilterDropsShortRegime) {
  TempDir dir("minreg");
  auto config = simulate(dir, R"({
    "seed": 2,
    "benchmarks": [{"id": "IDX", "loadings": {"mkt_rf": 1.0}}],
    "funds": [{"id": "S", "benchmark": "IDX", "regimes": [
      {"length": 600, "mkt_rf": 1.0, "smb": 0.5, "hml": 0.3, "noise_sigma": 0.001},
      {"length": 30, "mkt_rf": 1.0, "smb": -0.8, "hml": -0.5, "noise_sigma": 0.001},
      {"length": 600, "mkt_rf": 1.0, "smb": 0.5, "hml": 0.3, "noise_sigma": 0.001}]}]
  })");
  config.trim = 0.02;
  std::ostringstream err;
  ASSERT_EQ(cmd_analyze(config, err), kExitOk) << err.str();
  const auto plain = report_from_json(Json::parse(slurp(config.out_path)));
  EXPECT_EQ(plain.funds.at(0).chosen_m, 2u);
  config.min_regime_obs = 500;
  ASSERT_EQ(cmd_analyze(config, err), kExitOk) << err.str();
  const auto filtered = report_from_json(Json::parse(slurp(config.out_path)));
  EXPECT_EQ(filtered.funds.at(0).detected_m, 2u);
  EXPECT_EQ(filtered.funds.at(0).chosen_m, 0u);
  EXPECT_TRUE(filtered.funds.at(0).shifts.empty());
}

TEST(Analyze, UnmappedFundIsSkippedAndEmptyRunExits4) {
  TempDir dir("skip");
  auto config = simulate(dir, kTwoFundSpec);
  write_text(config.bench_map_path, "fund_id,benchmark_id\nROT,IDX\n");
  std::ostringstream err;
  ASSERT_EQ(cmd_analyze(config, err), kExitOk);
  auto report = report_from_json(Json::parse(slurp(config.out_path)));
  ASSERT_EQ(report.skipped.size(), 1u);
  EXPECT_EQ(report.skipped[0].fund_id, "FLAT");
  EXPECT_EQ(report.skipped[0].reason, "no benchmark");

  write_text(config.bench_map_path, "fund_id,benchmark_id\n");
  EXPECT_EQ(cmd_analyze(config, err), kExitEmpty);
  report = report_from_json(Json::parse(slurp(config.out_path)));
  EXPECT_TRUE(report.funds.empty());
  EXPECT_EQ(report.skipped.size(), 2u);
}

TEST(Analyze, InputErrorsMapToExitCodes) {
  TempDir dir("errs");
  auto config = simulate(dir, kTwoFundSpec);
  std::ostringstream err;
  auto bad = config;
  bad.factors_path = (dir / "nope.csv").string();
  EXPECT_EQ(cmd_analyze(bad, err), kExitIo);
  bad = config;
  bad.trim = 0.6;
  EXPECT_EQ(cmd_analyze(bad, err), kExitUsage);
  write_text(dir / "bad_factors.csv", "date,mkt_rf\n2006-01-03,0.1\n");
  bad = config;
  bad.factors_path = (dir / "bad_factors.csv").string();
  EXPECT_EQ(cmd_analyze(bad, err), kExitUsage);
}

TEST(Analyze, CarhartNeedsMomentum) {
  TempDir dir("carhart");
  std::string spec = kTwoFundSpec;
  spec.insert(spec.find('{') + 1, R"("include_mom": false,)");
  auto config = simulate(dir, spec);
  config.carhart = true;
  std::ostringstream err;
  EXPECT_EQ(cmd_analyze(config, err), kExitUsage);
}

TEST(Analyze, DeterministicAcrossJobsAndPaths) {
  TempDir dir("det");
  auto config = simulate(dir, kTwoFundSpec);
  std::ostringstream err;
  ASSERT_EQ(cmd_analyze(config, err), kExitOk);
  const std::string first = slurp(config.out_path);
  config.jobs = 2;
  config.out_path = (dir / "second.json").string();
  ASSERT_EQ(cmd_analyze(config, err), kExitOk);
  EXPECT_EQ(first, slurp(config.out_path));
}

TEST(Analyze, ReportIsSelfConsistent) {
  TempDir dir("self");
  auto config = simulate(dir, kTwoFundSpec);
  std::ostringstream err;
  ASSERT_EQ(cmd_analyze(config, err), kExitOk);
  const auto report = report_from_json(Json::parse(slurp(config.out_path)));
  const auto again = build_aggregates(report.funds, report.config.max_breaks);
  EXPECT_EQ(again.break_histogram, report.aggregates.break_histogram);
  EXPECT_EQ(again.transitions, report.aggregates.transitions);
  EXPECT_EQ(again.intensity_counts, report.aggregates.intensity_counts);
  for (const auto& f : report.funds) {
    EXPECT_EQ(f.break_indices.size(), f.chosen_m);
    EXPECT_EQ(f.regimes.size(), f.chosen_m + 1);
    EXPECT_EQ(f.shifts.size(), f.chosen_m);
    EXPECT_EQ(f.regimes.front().start, 0u);
    EXPECT_EQ(f.regimes.back().end + 1, f.n_obs);
  }
  // Round trip through the JSON types is lossless.
  EXPECT_EQ(dump_report(report), slurp(config.out_path));
}

namespace {

AnalysisReport histogram_fixture() {
  AnalysisReport r;
  const std::vector<std::size_t> sizes{34, 31, 32, 34, 29};
  for (std::size_t m = 1; m <= 5; ++m) {
    for (std::size_t i = 0; i < sizes[m - 1]; ++i) {
      FundRecord f;
      f.fund_id = "F" + std::to_string(r.funds.size());
      f.chosen_m = m;
      f.metrics.fund_id = f.fund_id;
      f.metrics.n_breaks = m;
      f.metrics.excess_return_pa = double(r.funds.size() % 17);
      f.metrics.sharpe_pa = 0.5;
      for (std::size_t b = 0; b < m; ++b) {
        ShiftRecord s;
        s.style_from = StyleBox::from_index((b + i) % kStyleCount);
        s.style_to = StyleBox::from_index((b + 2 * i + 1) % kStyleCount);
        s.intensity = kIntensityClasses[(b + i) % kIntensityClasses.size()];
        f.shifts.push_back(s);
      }
      r.funds.push_back(std::move(f));
    }
  }
  r.aggregates = build_aggregates(r.funds, 5);
  return r;
}

std::string report_table(const AnalysisReport& r, const std::string& table, const std::string& fmt, int* rc) {
  TempDir dir("tbl");
  write_text(dir / "r.json", dump_report(r));
  std::ostringstream out, err;
  *rc = cmd_report(dir / "r.json", table, fmt, out, err);
  return out.str();
}

}  // namespace

TEST(Report, BreaksTableTotals) {
  const auto r = histogram_fixture();
  int rc = -1;
  const auto csv = report_table(r, "breaks", "csv", &rc);
  EXPECT_EQ(rc, kExitOk);
  EXPECT_EQ(csv,
            "breaks,funds,total_breaks\n0,0,0\n1,34,34\n2,31,62\n3,32,96\n4,34,136\n5,29,145\nTotal,160,473\n");
  EXPECT_EQ(r.aggregates.transitions.grand_total, 473u);
  std::size_t severity_total = 0;
  for (const auto& [c, n] : r.aggregates.intensity_counts) severity_total += n;
  EXPECT_EQ(severity_total, 473u);
  ASSERT_TRUE(r.aggregates.deciles.has_value());
  EXPECT_EQ(r.aggregates.deciles->decile_size, 16u);
}

TEST(Report, EmptyTransitionsTable) {
  AnalysisReport r;
  r.aggregates = build_aggregates({}, 5);
  int rc = -1;
  const auto csv = report_table(r, "transitions", "csv", &rc);
  EXPECT_EQ(rc, kExitOk);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "from\\to,Large Value,Large Blend,Large Growth,Mid Value,Mid Blend,Mid Growth,Small Value,"
                  "Small Blend,Small Growth,Total");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 10);
    EXPECT_EQ(line.substr(line.find(',')), ",0,0,0,0,0,0,0,0,0,0");
  }
  EXPECT_EQ(rows, 10);
}

TEST(Report, PerformanceTableFormats) {
  const auto r = histogram_fixture();
  int rc = -1;
  const auto csv = report_table(r, "performance", "csv", &rc);
  EXPECT_EQ(rc, kExitOk);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "group,funds,breaks,excess_return_pa,stdev_pa,sharpe_pa,ff3_alpha_pa,agt_alpha_pa");
  EXPECT_NE(csv.find("\nwith_breaks,160,473,"), std::string::npos);
  const auto md = report_table(r, "performance", "md", &rc);
  EXPECT_EQ(rc, kExitOk);
  EXPECT_EQ(md.substr(0, 8), "| group ");
  EXPECT_NE(md.find("| 0.50 |"), std::string::npos);
  const auto deciles = report_table(r, "deciles", "csv", &rc);
  EXPECT_EQ(rc, kExitOk);
  EXPECT_EQ(std::count(deciles.begin(), deciles.end(), '\n'), 3);
}

TEST(Report, UnknownTableOrFormat) {
  const auto r = histogram_fixture();
  int rc = -1;
  report_table(r, "alphas", "csv", &rc);
  EXPECT_EQ(rc, kExitUsage);
  report_table(r, "breaks", "xlsx", &rc);
  EXPECT_EQ(rc, kExitUsage);
  std::ostringstream out, err;
  EXPECT_EQ(cmd_report("/nonexistent/report.json", "breaks", "csv", out, err), kExitIo);
}

TEST(Binary, ExitCodes) {
  TempDir dir("bin");
  write_text(dir / "spec.json", kTwoFundSpec);
  EXPECT_EQ(run_binary(""), kExitUsage);
  EXPECT_EQ(run_binary("analyze --nav " + (dir / "x").string()), kExitUsage);
  EXPECT_EQ(run_binary("simulate --spec " + (dir / "spec.json").string() + " --out " + (dir / "d").string()), kExitOk);
  const std::string data = (dir / "d").string();
  const std::string analyze = "analyze --nav " + data + "/nav --factors " + data + "/factors.csv --bench-map " + data +
                              "/bench_map.csv --bench-nav " + data + "/bench_nav --out " + (dir / "r.json").string();
  EXPECT_EQ(run_binary(analyze), kExitOk);
  EXPECT_EQ(run_binary(analyze + " --sig 1.5"), kExitUsage);
  EXPECT_EQ(run_binary("report --in " + (dir / "r.json").string() + " --table breaks"), kExitOk);
  EXPECT_EQ(run_binary("report --in " + (dir / "missing.json").string() + " --table breaks"), kExitIo);
}
