#pragma once

// Annualized fund metrics, grouping by break count, pre/post shift
// comparisons and top/bottom decile composition.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fundshift/breaks.hpp"
#include "fundshift/csv.hpp"
#include "fundshift/error.hpp"
#include "fundshift/regress.hpp"
#include "fundshift/stylebox.hpp"

namespace fundshift {

inline constexpr double kTradingDaysPerYear = 252.0;

/// Percent-per-year figures except the Sharpe ratio. Sharpe is empty when the
/// excess-return stdev is zero, Treynor when the FF3 market beta is zero.
struct FundMetrics {
  std::string fund_id;
  double excess_return_pa = 0.0;
  double stdev_pa = 0.0;
  std::optional<double> sharpe_pa;
  std::optional<double> treynor_pa;
  double ff3_alpha_pa = 0.0;
  double agt_alpha_pa = 0.0;
  std::size_t n_breaks = 0;
};

inline FundMetrics annualized_metrics(const AlignedSample& sample, Window w, const RegressionFit& ff3,
                                      const RegressionFit& agt, double annualization = kTradingDaysPerYear) {
  if (w.end >= sample.n() || w.start > w.end || w.size() < 2) {
    throw Error(Errc::window_too_short, "metrics need a window of at least 2 observations");
  }
  const double count = static_cast<double>(w.size());
  double sum = 0.0;
  for (std::size_t t = w.start; t <= w.end; ++t) sum += sample.r_fund[t] - sample.rf[t];
  const double mean = sum / count;
  double ss = 0.0;
  bool constant = true;
  const double first = sample.r_fund[w.start] - sample.rf[w.start];
  for (std::size_t t = w.start; t <= w.end; ++t) {
    const double e = sample.r_fund[t] - sample.rf[t];
    constant = constant && e == first;
    ss += (e - mean) * (e - mean);
  }
  // sum/count can miss a constant value by an ulp; keep its stdev exactly zero.
  const double sd = constant ? 0.0 : std::sqrt(ss / (count - 1.0));

  FundMetrics m;
  m.fund_id = sample.fund_id;
  m.excess_return_pa = mean * annualization * 100.0;
  m.stdev_pa = sd * std::sqrt(annualization) * 100.0;
  if (sd > 0.0) m.sharpe_pa = mean / sd * std::sqrt(annualization);
  const double beta_mkt = ff3.coef_of(Regressor::MktRf);
  if (beta_mkt != 0.0) m.treynor_pa = mean * annualization * 100.0 / beta_mkt;
  m.ff3_alpha_pa = ff3.coef_of(Regressor::Intercept) * annualization * 100.0;
  m.agt_alpha_pa = agt.coef_of(Regressor::Intercept) * annualization * 100.0;
  return m;
}

struct GroupRow {
  std::string group;
  std::size_t funds = 0;
  std::size_t breaks = 0;
  double excess_return_pa = 0.0;
  double stdev_pa = 0.0;
  std::optional<double> sharpe_pa;
  double ff3_alpha_pa = 0.0;
  double agt_alpha_pa = 0.0;

  friend bool operator==(const GroupRow&, const GroupRow&) = default;
};

struct GroupReport {
  std::vector<GroupRow> rows;
  friend bool operator==(const GroupReport&, const GroupReport&) = default;
};

inline constexpr std::string_view kWithBreaksGroup = "with_breaks";

namespace detail {

inline GroupRow mean_row(std::string group, const std::vector<const FundMetrics*>& members) {
  GroupRow row;
  row.group = std::move(group);
  row.funds = members.size();
  double sharpe = 0.0;
  std::size_t n_sharpe = 0;
  for (const FundMetrics* m : members) {
    row.breaks += m->n_breaks;
    row.excess_return_pa += m->excess_return_pa;
    row.stdev_pa += m->stdev_pa;
    row.ff3_alpha_pa += m->ff3_alpha_pa;
    row.agt_alpha_pa += m->agt_alpha_pa;
    if (m->sharpe_pa) sharpe += *m->sharpe_pa, ++n_sharpe;
  }
  const double count = static_cast<double>(members.size());
  row.excess_return_pa /= count;
  row.stdev_pa /= count;
  row.ff3_alpha_pa /= count;
  row.agt_alpha_pa /= count;
  if (n_sharpe) row.sharpe_pa = sharpe / static_cast<double>(n_sharpe);
  return row;
}

}  // namespace detail

/// Equal-weighted means per break count, then one row over every fund with at least one break.
inline GroupReport group_by_break_count(const std::vector<FundMetrics>& metrics) {
  std::map<std::size_t, std::vector<const FundMetrics*>> buckets;
  std::vector<const FundMetrics*> with_breaks;
  for (const auto& m : metrics) {
    buckets[m.n_breaks].push_back(&m);
    if (m.n_breaks > 0) with_breaks.push_back(&m);
  }
  GroupReport report;
  for (const auto& [count, members] : buckets) report.rows.push_back(detail::mean_row(std::to_string(count), members));
  if (!with_breaks.empty()) report.rows.push_back(detail::mean_row(std::string(kWithBreaksGroup), with_breaks));
  return report;
}

inline const std::vector<std::string>& group_report_header() {
  static const std::vector<std::string> header{"group",        "funds",    "breaks",       "excess_return_pa",
                                               "stdev_pa",     "sharpe_pa", "ff3_alpha_pa", "agt_alpha_pa"};
  return header;
}

struct ShiftComparison {
  std::string fund_id;
  std::size_t break_index = 0;
  std::string break_date;
  FundMetrics pre;
  FundMetrics post;
  FundMetrics delta;
  IntensityClass intensity = IntensityClass::Unchanged;
  StyleBox style_from;
  StyleBox style_to;
};

/// Either a comparison or the reason it was omitted.
struct ShiftOutcome {
  std::optional<ShiftComparison> comparison;
  std::string warning;
};

inline FundMetrics metrics_delta(const FundMetrics& pre, const FundMetrics& post) {
  FundMetrics d;
  d.fund_id = post.fund_id;
  d.excess_return_pa = post.excess_return_pa - pre.excess_return_pa;
  d.stdev_pa = post.stdev_pa - pre.stdev_pa;
  if (pre.sharpe_pa && post.sharpe_pa) d.sharpe_pa = *post.sharpe_pa - *pre.sharpe_pa;
  if (pre.treynor_pa && post.treynor_pa) d.treynor_pa = *post.treynor_pa - *pre.treynor_pa;
  d.ff3_alpha_pa = post.ff3_alpha_pa - pre.ff3_alpha_pa;
  d.agt_alpha_pa = post.agt_alpha_pa - pre.agt_alpha_pa;
  return d;
}

/// Metrics on the regimes either side of break `break_ordinal` (0-based).
/// Regimes shorter than `min_window` yield an omitted comparison with a warning.
inline ShiftOutcome pre_post_compare(const AlignedSample& sample, const BreakSet& bs,
                                     const std::vector<RegimeStyle>& styles, std::size_t break_ordinal,
                                     std::size_t min_window = kDefaultMinWindow, const FitOptions& opts = {},
                                     double annualization = kTradingDaysPerYear) {
  if (break_ordinal >= bs.chosen_m || break_ordinal + 1 >= bs.regime_windows.size()) {
    throw Error(Errc::malformed_input, "break ordinal " + std::to_string(break_ordinal) + " out of range");
  }
  const Window pre_w = bs.regime_windows[break_ordinal];
  const Window post_w = bs.regime_windows[break_ordinal + 1];
  ShiftOutcome out;
  if (pre_w.size() < min_window || post_w.size() < min_window) {
    out.warning = "adjacent regime shorter than " + std::to_string(min_window) + " observations";
    return out;
  }
  auto metrics_on = [&](Window w, const RegressionFit* ff3_hint) {
    RegressionFit ff3 = ff3_hint ? *ff3_hint : fit_ff3(sample, w, opts);
    RegressionFit agt = fit_agt(sample, w, opts);
    return annualized_metrics(sample, w, ff3, agt, annualization);
  };
  auto hint = [&](std::size_t r) -> const RegressionFit* {
    return r < styles.size() && styles[r].window == bs.regime_windows[r] ? &styles[r].fit : nullptr;
  };
  ShiftComparison c;
  c.fund_id = sample.fund_id;
  c.break_index = pre_w.end;
  c.break_date = sample.dates[pre_w.end].iso();
  c.pre = metrics_on(pre_w, hint(break_ordinal));
  c.post = metrics_on(post_w, hint(break_ordinal + 1));
  c.delta = metrics_delta(c.pre, c.post);
  if (hint(break_ordinal) && hint(break_ordinal + 1)) {
    const BreakShift shift = classify_break(styles[break_ordinal], styles[break_ordinal + 1]);
    c.intensity = shift.intensity;
    c.style_from = shift.style_from;
    c.style_to = shift.style_to;
  }
  out.comparison = std::move(c);
  return out;
}

/// A fund's metrics with the grade and destination style of each of its breaks.
struct DecileInput {
  FundMetrics metrics;
  std::vector<std::pair<IntensityClass, StyleBox>> shifts;
};

struct DecileSide {
  std::vector<std::string> fund_ids;
  std::map<IntensityClass, std::size_t> intensity;
  std::array<std::size_t, kStyleCount> destinations{};

  friend bool operator==(const DecileSide&, const DecileSide&) = default;
};

struct DecileReport {
  std::size_t decile_size = 0;
  DecileSide top;
  DecileSide bottom;

  friend bool operator==(const DecileReport&, const DecileReport&) = default;
};

/// Top and bottom ceil(N/10) funds by excess return (descending, ties by fund id).
inline DecileReport decile_analysis(const std::vector<DecileInput>& funds) {
  if (funds.size() < 10) {
    throw Error(Errc::too_few_funds, "decile analysis needs at least 10 funds, have " + std::to_string(funds.size()));
  }
  std::vector<const DecileInput*> order;
  for (const auto& f : funds) order.push_back(&f);
  std::sort(order.begin(), order.end(), [](const DecileInput* a, const DecileInput* b) {
    if (a->metrics.excess_return_pa != b->metrics.excess_return_pa) {
      return a->metrics.excess_return_pa > b->metrics.excess_return_pa;
    }
    return a->metrics.fund_id < b->metrics.fund_id;
  });
  DecileReport report;
  report.decile_size = (funds.size() + 9) / 10;
  auto fill = [](DecileSide& side, const DecileInput& f) {
    side.fund_ids.push_back(f.metrics.fund_id);
    for (const auto& [intensity, to] : f.shifts) {
      ++side.intensity[intensity];
      ++side.destinations[to.index()];
    }
  };
  for (std::size_t i = 0; i < report.decile_size; ++i) {
    fill(report.top, *order[i]);
    fill(report.bottom, *order[order.size() - 1 - i]);
  }
  return report;
}

}  // namespace fundshift
