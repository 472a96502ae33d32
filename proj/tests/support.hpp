#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fundshift/marketdata.hpp"
#include "fundshift/synth.hpp"

namespace testing_support {

using namespace fundshift;

/// Aligned sample built straight from generated returns (no NAV round trip).
inline AlignedSample make_sample(const FundSpec& fund, const Loadings& bench, std::uint64_t seed,
                                 const FactorVols& vols = {}, double rf = 0.0002, bool include_mom = true) {
  const FactorPanel panel = gen_factors(fund.length(), derive_seed(seed, 0), vols, rf, include_mom);
  const GeneratedFund g = gen_fund(fund, panel, derive_seed(seed, 1));
  const ReturnSeries fr{fund.fund_id, panel.dates, g.returns};
  const ReturnSeries br = compute_returns(gen_benchmark("B", bench, panel));
  return align(fr, br, panel, 1);
}

inline RegimeSpec regime(std::size_t length, double smb, double hml, double noise, double mkt = 1.0,
                         double alpha = 0.0, double mom = 0.0) {
  RegimeSpec r;
  r.length = length;
  r.alpha = alpha;
  r.beta_mkt = mkt;
  r.beta_smb = smb;
  r.beta_hml = hml;
  r.beta_mom = mom;
  r.noise_sigma = noise;
  return r;
}

inline FundSpec fund(std::string id, std::vector<RegimeSpec> regimes) {
  return FundSpec{std::move(id), std::move(regimes), "B"};
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("fundshift-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
