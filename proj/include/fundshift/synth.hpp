#pragma once

// Deterministic synthetic factor panels, benchmarks and multi-regime funds
// with planted loadings.
//
// Randomness: std::mt19937_64 (the standard's fully specified 64-bit Mersenne
// Twister) feeding a Marsaglia polar Gaussian. Uniforms take the top 53 bits
// of each draw, so streams do not depend on the standard library's
// distribution implementations.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fundshift/date.hpp"
#include "fundshift/error.hpp"
#include "fundshift/marketdata.hpp"
#include "fundshift/stylebox.hpp"

namespace fundshift {

class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on (0, 1).
  double uniform() {
    double u;
    do {
      u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    } while (u == 0.0);
    return u;
  }

  double standard_normal() {
    if (spare_) {
      double v = *spare_;
      spare_.reset();
      return v;
    }
    double x, y, s;
    do {
      x = 2.0 * uniform() - 1.0;
      y = 2.0 * uniform() - 1.0;
      s = x * x + y * y;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = y * f;
    return x * f;
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// SplitMix64 finalizer; derives independent stream seeds from (seed, index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct FactorVols {
  double mkt_rf = 0.011;
  double smb = 0.006;
  double hml = 0.006;
  double mom = 0.008;
};

struct Loadings {
  double alpha = 0.0;
  double mkt_rf = 0.0;
  double smb = 0.0;
  double hml = 0.0;
  double mom = 0.0;
};

struct RegimeSpec {
  std::size_t length = 0;
  double alpha = 0.0;
  double beta_mkt = 0.0;
  double beta_smb = 0.0;
  double beta_hml = 0.0;
  double beta_mom = 0.0;
  double noise_sigma = 0.0;
};

struct FundSpec {
  std::string fund_id;
  std::vector<RegimeSpec> regimes;
  std::string benchmark_id;

  std::size_t length() const {
    std::size_t n = 0;
    for (const auto& r : regimes) n += r.length;
    return n;
  }
};

/// What the analysis should recover for a generated fund.
struct PlantedTruth {
  std::string fund_id;
  std::vector<std::size_t> break_indices;
  std::vector<StyleBox> styles;
  std::vector<IntensityClass> intensities;
};

inline constexpr Date kDefaultSimulationStart{2006, 1, 2};

/// Factor rows are dated from the weekday after `start`; `start` itself is
/// reserved for the opening NAV of generated series.
inline FactorPanel gen_factors(std::size_t length, std::uint64_t seed, const FactorVols& vols, double rf_daily,
                               bool include_mom = true, Date start = kDefaultSimulationStart) {
  if (length < 1) throw Error(Errc::invalid_spec, "factor panel length must be positive");
  for (double v : {vols.mkt_rf, vols.smb, vols.hml}) {
    if (!(v > 0.0)) throw Error(Errc::invalid_spec, "factor vols must be positive");
  }
  if (include_mom && !(vols.mom > 0.0)) throw Error(Errc::invalid_spec, "factor vols must be positive");
  GaussianRng rng(seed);
  FactorPanel panel;
  auto calendar = weekday_calendar(start, length + 1);
  panel.dates.assign(calendar.begin() + 1, calendar.end());
  if (include_mom) panel.mom.emplace();
  for (std::size_t t = 0; t < length; ++t) {
    panel.mkt_rf.push_back(vols.mkt_rf * rng.standard_normal());
    panel.smb.push_back(vols.smb * rng.standard_normal());
    panel.hml.push_back(vols.hml * rng.standard_normal());
    if (include_mom) panel.mom->push_back(vols.mom * rng.standard_normal());
    panel.rf.push_back(rf_daily);
  }
  return panel;
}

/// States implied by spec loadings: a nonzero loading is taken as significant.
inline FactorState planted_state(double beta) { return {beta, beta != 0.0}; }

inline PlantedTruth planted_truth(const FundSpec& spec) {
  PlantedTruth truth;
  truth.fund_id = spec.fund_id;
  std::size_t end = 0;
  for (std::size_t r = 0; r < spec.regimes.size(); ++r) {
    const auto& reg = spec.regimes[r];
    end += reg.length;
    if (r + 1 < spec.regimes.size()) truth.break_indices.push_back(end - 1);
    const FactorState smb = planted_state(reg.beta_smb);
    const FactorState hml = planted_state(reg.beta_hml);
    truth.styles.push_back({classify_size(smb), classify_value(hml)});
    if (r > 0) {
      const auto& prev = spec.regimes[r - 1];
      truth.intensities.push_back(
          fund_shift_intensity(classify_factor_shift(planted_state(prev.beta_smb), smb),
                               classify_factor_shift(planted_state(prev.beta_hml), hml)));
    }
  }
  return truth;
}

namespace detail {

inline NavSeries compound(std::string id, const FactorPanel& factors, const std::vector<double>& returns) {
  NavSeries nav;
  nav.fund_id = std::move(id);
  nav.dates.reserve(returns.size() + 1);
  nav.navs.reserve(returns.size() + 1);
  nav.dates.push_back(factors.dates.front().previous_weekday());
  nav.navs.push_back(100.0);
  for (std::size_t t = 0; t < returns.size(); ++t) {
    nav.dates.push_back(factors.dates[t]);
    nav.navs.push_back(nav.navs.back() * (1.0 + returns[t]));
  }
  return nav;
}

}  // namespace detail

struct GeneratedFund {
  NavSeries nav;
  PlantedTruth truth;
  std::vector<double> returns;
};

/// r_t = rf + alpha + beta . factors_t + noise, regime by regime from the panel's first row.
inline GeneratedFund gen_fund(const FundSpec& spec, const FactorPanel& factors, std::uint64_t seed) {
  if (spec.regimes.empty()) throw Error(Errc::invalid_spec, "fund '" + spec.fund_id + "' has no regimes");
  if (spec.length() > factors.size()) {
    throw Error(Errc::invalid_spec, "fund '" + spec.fund_id + "' is longer than the factor panel");
  }
  GaussianRng rng(seed);
  std::vector<double> returns;
  returns.reserve(spec.length());
  std::size_t t = 0;
  for (const auto& reg : spec.regimes) {
    if (reg.length < 1 || reg.noise_sigma < 0.0) throw Error(Errc::invalid_spec, "bad regime in '" + spec.fund_id + "'");
    if (reg.beta_mom != 0.0 && !factors.has_mom()) {
      throw Error(Errc::invalid_spec, "fund '" + spec.fund_id + "' loads on momentum but the panel has none");
    }
    for (std::size_t i = 0; i < reg.length; ++i, ++t) {
      double r = factors.rf[t] + reg.alpha + reg.beta_mkt * factors.mkt_rf[t] + reg.beta_smb * factors.smb[t] +
                 reg.beta_hml * factors.hml[t];
      if (factors.has_mom()) r += reg.beta_mom * (*factors.mom)[t];
      const double eps = rng.standard_normal();
      r += reg.noise_sigma * eps;
      returns.push_back(r);
    }
  }
  GeneratedFund out;
  out.nav = detail::compound(spec.fund_id, factors, returns);
  out.truth = planted_truth(spec);
  out.returns = std::move(returns);
  return out;
}

/// Single-regime, noise-free series over the whole panel.
inline NavSeries gen_benchmark(std::string id, const Loadings& loadings, const FactorPanel& factors) {
  std::vector<double> returns;
  returns.reserve(factors.size());
  for (std::size_t t = 0; t < factors.size(); ++t) {
    double r = factors.rf[t] + loadings.alpha + loadings.mkt_rf * factors.mkt_rf[t] + loadings.smb * factors.smb[t] +
               loadings.hml * factors.hml[t];
    if (factors.has_mom()) r += loadings.mom * (*factors.mom)[t];
    returns.push_back(r);
  }
  return detail::compound(std::move(id), factors, returns);
}

struct BenchmarkSpec {
  std::string benchmark_id;
  Loadings loadings;
};

/// Whole simulation document; see docs/simulation-spec.md for the JSON schema.
struct SimulationSpec {
  std::uint64_t seed = 1;
  std::optional<std::size_t> length;
  Date start = kDefaultSimulationStart;
  double rf = 0.0002;
  FactorVols vols;
  bool include_mom = true;
  std::vector<BenchmarkSpec> benchmarks;
  std::vector<FundSpec> funds;

  std::size_t panel_length() const {
    std::size_t n = length.value_or(0);
    for (const auto& f : funds) n = std::max(n, f.length());
    return n;
  }
};

namespace detail {

template <typename T>
T json_field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw Error(Errc::invalid_spec, where + " lacks '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::invalid_spec, where + " has a mistyped '" + key + "'");
  }
}

template <typename T>
T json_field_or(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return json_field<T>(j, key, where);
}

inline Loadings parse_loadings(const nlohmann::json& j, const std::string& where) {
  Loadings l;
  l.alpha = json_field_or(j, "alpha", 0.0, where);
  l.mkt_rf = json_field_or(j, "mkt_rf", 0.0, where);
  l.smb = json_field_or(j, "smb", 0.0, where);
  l.hml = json_field_or(j, "hml", 0.0, where);
  l.mom = json_field_or(j, "mom", 0.0, where);
  return l;
}

}  // namespace detail

inline SimulationSpec parse_simulation_spec(const nlohmann::json& doc) {
  using detail::json_field;
  using detail::json_field_or;
  if (!doc.is_object()) throw Error(Errc::invalid_spec, "simulation spec must be a JSON object");
  SimulationSpec spec;
  spec.seed = json_field_or<std::uint64_t>(doc, "seed", spec.seed, "spec");
  if (doc.contains("length")) spec.length = json_field<std::size_t>(doc, "length", "spec");
  if (doc.contains("start_date")) {
    try {
      spec.start = Date::parse(json_field<std::string>(doc, "start_date", "spec"));
    } catch (const Error& e) {
      throw Error(Errc::invalid_spec, e.what());
    }
  }
  spec.rf = json_field_or(doc, "rf", spec.rf, "spec");
  spec.include_mom = json_field_or(doc, "include_mom", spec.include_mom, "spec");
  if (doc.contains("factor_vols")) {
    const auto& v = doc.at("factor_vols");
    spec.vols.mkt_rf = json_field_or(v, "mkt_rf", spec.vols.mkt_rf, "factor_vols");
    spec.vols.smb = json_field_or(v, "smb", spec.vols.smb, "factor_vols");
    spec.vols.hml = json_field_or(v, "hml", spec.vols.hml, "factor_vols");
    spec.vols.mom = json_field_or(v, "mom", spec.vols.mom, "factor_vols");
  }

  const auto benches = json_field<nlohmann::json>(doc, "benchmarks", "spec");
  if (!benches.is_array()) throw Error(Errc::invalid_spec, "'benchmarks' must be an array");
  std::set<std::string> bench_ids;
  for (const auto& b : benches) {
    BenchmarkSpec bs;
    bs.benchmark_id = json_field<std::string>(b, "id", "benchmark");
    const std::string where = "benchmark '" + bs.benchmark_id + "'";
    bs.loadings = detail::parse_loadings(json_field_or(b, "loadings", nlohmann::json::object(), where), where);
    if (bs.benchmark_id.empty() || !bench_ids.insert(bs.benchmark_id).second) {
      throw Error(Errc::invalid_spec, "benchmark ids must be unique and non-empty");
    }
    spec.benchmarks.push_back(std::move(bs));
  }

  const auto funds = json_field<nlohmann::json>(doc, "funds", "spec");
  if (!funds.is_array() || funds.empty()) throw Error(Errc::invalid_spec, "'funds' must be a non-empty array");
  std::set<std::string> fund_ids;
  for (const auto& f : funds) {
    FundSpec fs;
    fs.fund_id = json_field<std::string>(f, "id", "fund");
    const std::string where = "fund '" + fs.fund_id + "'";
    if (fs.fund_id.empty() || !fund_ids.insert(fs.fund_id).second) {
      throw Error(Errc::invalid_spec, "fund ids must be unique and non-empty");
    }
    fs.benchmark_id = json_field<std::string>(f, "benchmark", where);
    if (!bench_ids.count(fs.benchmark_id)) throw Error(Errc::invalid_spec, where + " names an unknown benchmark");
    const auto regimes = json_field<nlohmann::json>(f, "regimes", where);
    if (!regimes.is_array() || regimes.empty()) throw Error(Errc::invalid_spec, where + " needs at least one regime");
    for (const auto& r : regimes) {
      RegimeSpec rs;
      rs.length = json_field<std::size_t>(r, "length", where);
      rs.alpha = json_field_or(r, "alpha", 0.0, where);
      rs.beta_mkt = json_field_or(r, "mkt_rf", 0.0, where);
      rs.beta_smb = json_field_or(r, "smb", 0.0, where);
      rs.beta_hml = json_field_or(r, "hml", 0.0, where);
      rs.beta_mom = json_field_or(r, "mom", 0.0, where);
      rs.noise_sigma = json_field_or(r, "noise_sigma", 0.0, where);
      if (rs.length < 1) throw Error(Errc::invalid_spec, where + " has an empty regime");
      if (rs.noise_sigma < 0.0) throw Error(Errc::invalid_spec, where + " has negative noise");
      fs.regimes.push_back(rs);
    }
    spec.funds.push_back(std::move(fs));
  }
  return spec;
}

}  // namespace fundshift
