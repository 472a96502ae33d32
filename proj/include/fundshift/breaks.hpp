#pragma once

// Multiple structural break detection on a least-squares model: every
// admissible segment SSR is precomputed, a dynamic program finds the globally
// optimal m-break partition, and the break count is chosen by BIC.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fundshift/error.hpp"
#include "fundshift/marketdata.hpp"
#include "fundshift/regress.hpp"

namespace fundshift {

/// SSR of the least-squares fit on every segment [i, j] with j - i + 1 >= h.
/// Row i is stored packed, holding columns i + h - 1 .. n - 1.
class SsrTable {
 public:
  SsrTable() = default;
  SsrTable(std::size_t n, std::size_t h) : n_(n), h_(h) {
    offsets_.resize(n_ >= h_ ? n_ - h_ + 2 : 1, 0);
    for (std::size_t i = 0; i + h_ <= n_; ++i) offsets_[i + 1] = offsets_[i] + (n_ - (i + h_ - 1));
    data_.assign(offsets_.back(), 0.0);
  }

  std::size_t n() const { return n_; }
  std::size_t h() const { return h_; }

  bool admissible(std::size_t i, std::size_t j) const { return i <= j && j < n_ && j - i + 1 >= h_; }

  double operator()(std::size_t i, std::size_t j) const { return data_[index(i, j)]; }
  double& at(std::size_t i, std::size_t j) { return data_[index(i, j)]; }

 private:
  std::size_t index(std::size_t i, std::size_t j) const { return offsets_[i] + (j - (i + h_ - 1)); }

  std::size_t n_ = 0;
  std::size_t h_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<double> data_;
};

/// Relative SSR below which a segment counts as an exact fit (rounding residue only).
inline constexpr double kExactFitTolerance = 1e-20;

/// For each start i the segment fit is grown one row at a time with Givens
/// rotations on a k x k triangular factor; the part of each new response that
/// the rotations cannot absorb is that row's increment to the SSR.
inline SsrTable build_ssr_table(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::size_t h) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto k = static_cast<std::size_t>(X.cols());
  if (h < k + 1) throw Error(Errc::window_too_short, "minimum segment length must exceed the regressor count");
  if (n < 2 * h) {
    throw Error(Errc::window_too_short,
                "sample of " + std::to_string(n) + " observations is shorter than two segments of " + std::to_string(h));
  }
  SsrTable table(n, h);
  Eigen::MatrixXd R(k, k);
  Eigen::VectorXd z(k);
  Eigen::VectorXd row(k);
  for (std::size_t i = 0; i + h <= n; ++i) {
    R.setZero();
    z.setZero();
    double ssr = 0.0;
    double sumsq = 0.0;
    for (std::size_t j = i; j < n; ++j) {
      row = X.row(static_cast<Eigen::Index>(j)).transpose();
      double yv = y(static_cast<Eigen::Index>(j));
      sumsq += yv * yv;
      for (std::size_t c = 0; c < k; ++c) {
        const auto ci = static_cast<Eigen::Index>(c);
        if (row(ci) == 0.0) continue;
        const double r = std::hypot(R(ci, ci), row(ci));
        const double cs = R(ci, ci) / r;
        const double sn = row(ci) / r;
        for (Eigen::Index cc = ci; cc < static_cast<Eigen::Index>(k); ++cc) {
          const double a = R(ci, cc);
          const double b = row(cc);
          R(ci, cc) = cs * a + sn * b;
          row(cc) = -sn * a + cs * b;
        }
        const double a = z(ci);
        z(ci) = cs * a + sn * yv;
        yv = -sn * a + cs * yv;
      }
      ssr += yv * yv;
      if (j - i + 1 >= h) table.at(i, j) = ssr <= kExactFitTolerance * sumsq ? 0.0 : ssr;
    }
  }
  return table;
}

/// AGT-response table: y = r_fund - r_bench on [1, mkt_rf, smb, hml].
inline SsrTable build_ssr_table(const AlignedSample& sample, std::size_t h) {
  const Window all = full_window(sample);
  return build_ssr_table(factor_design(sample, all, false), model_response(sample, all, Model::AGT), h);
}

/// Break indices are the last observation of each regime except the final one.
struct Partition {
  std::size_t m = 0;
  std::vector<std::size_t> break_indices;
  double total_ssr = 0.0;
};

inline std::vector<Window> regimes_from_breaks(const std::vector<std::size_t>& breaks, std::size_t n) {
  std::vector<Window> out;
  std::size_t start = 0;
  for (std::size_t b : breaks) {
    out.push_back({start, b});
    start = b + 1;
  }
  out.push_back({start, n - 1});
  return out;
}

inline double partition_ssr(const SsrTable& table, const std::vector<std::size_t>& breaks) {
  double total = 0.0;
  for (const Window& w : regimes_from_breaks(breaks, table.n())) total += table(w.start, w.end);
  return total;
}

/// Optimal partitions for every break count 0..max_breaks (nullopt where infeasible).
///
/// suffix[r][i] is the least SSR covering observations i..n-1 with r breaks;
/// the first break is chosen as the earliest index attaining the minimum, so
/// reading the partition forward yields the lexicographically earliest optimum.
inline std::vector<std::optional<Partition>> optimal_partitions(const SsrTable& table, std::size_t max_breaks) {
  const std::size_t n = table.n();
  const std::size_t h = table.h();
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

  std::vector<std::vector<double>> suffix(max_breaks + 1, std::vector<double>(n + 1, inf));
  std::vector<std::vector<std::size_t>> first_break(max_breaks + 1, std::vector<std::size_t>(n + 1, none));
  for (std::size_t i = 0; i + h <= n; ++i) suffix[0][i] = table(i, n - 1);
  for (std::size_t r = 1; r <= max_breaks; ++r) {
    if ((r + 1) * h > n) break;
    for (std::size_t i = 0; i + (r + 1) * h <= n; ++i) {
      double best = inf;
      std::size_t best_b = none;
      for (std::size_t b = i + h - 1; b + 1 + r * h <= n; ++b) {
        const double cost = table(i, b) + suffix[r - 1][b + 1];
        if (cost < best) {
          best = cost;
          best_b = b;
        }
      }
      suffix[r][i] = best;
      first_break[r][i] = best_b;
    }
  }

  std::vector<std::optional<Partition>> out(max_breaks + 1);
  for (std::size_t m = 0; m <= max_breaks; ++m) {
    if ((m + 1) * h > n) continue;
    Partition p;
    p.m = m;
    std::size_t start = 0;
    for (std::size_t r = m; r >= 1; --r) {
      const std::size_t b = first_break[r][start];
      p.break_indices.push_back(b);
      start = b + 1;
    }
    p.total_ssr = partition_ssr(table, p.break_indices);
    out[m] = std::move(p);
  }
  return out;
}

inline Partition optimal_partition(const SsrTable& table, std::size_t m) {
  if ((m + 1) * table.h() > table.n()) {
    throw Error(Errc::infeasible_partition, std::to_string(m) + " breaks need " + std::to_string((m + 1) * table.h()) +
                                                " observations, have " + std::to_string(table.n()));
  }
  return *optimal_partitions(table, m)[m];
}

/// ln(SSR/n) + p ln(n)/n with p = (m+1)k + m. A zero SSR is floored at the smallest normal double.
inline double bic(double ssr, std::size_t n, std::size_t m, std::size_t k) {
  const double nd = static_cast<double>(n);
  const double p = static_cast<double>((m + 1) * k + m);
  const double mse = std::max(ssr / nd, std::numeric_limits<double>::min());
  return std::log(mse) + p * std::log(nd) / nd;
}

struct BreakSet {
  std::string fund_id;
  std::size_t chosen_m = 0;
  Partition partition;
  std::vector<std::optional<double>> criterion_values;
  std::vector<Window> regime_windows;
  std::vector<bool> is_style_break;
};

inline std::size_t min_segment_length(std::size_t n, double trim, std::size_t k) {
  const auto trimmed = static_cast<std::size_t>(std::ceil(trim * static_cast<double>(n)));
  return std::max(trimmed, k + 1);
}

/// Picks the BIC-minimal break count from a prebuilt table; ties go to fewer breaks.
inline BreakSet select_break_count(const SsrTable& table, std::size_t k, std::size_t max_breaks) {
  const auto partitions = optimal_partitions(table, max_breaks);
  BreakSet out;
  out.criterion_values.resize(max_breaks + 1);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m <= max_breaks; ++m) {
    if (!partitions[m]) continue;
    const double score = bic(partitions[m]->total_ssr, table.n(), m, k);
    out.criterion_values[m] = score;
    if (score < best) {
      best = score;
      out.chosen_m = m;
    }
  }
  out.partition = *partitions[out.chosen_m];
  out.regime_windows = regimes_from_breaks(out.partition.break_indices, table.n());
  out.is_style_break.assign(out.chosen_m, false);
  return out;
}

inline BreakSet select_break_count(const AlignedSample& sample, std::size_t max_breaks, double trim) {
  if (!(trim > 0.0 && trim < 0.5)) throw Error(Errc::malformed_input, "trim must lie in (0, 0.5)");
  constexpr std::size_t k = 4;
  const std::size_t h = min_segment_length(sample.n(), trim, k);
  BreakSet out = select_break_count(build_ssr_table(sample, h), k, max_breaks);
  out.fund_id = sample.fund_id;
  return out;
}

/// Drops every break bordering a regime shorter than `min_regime`, merging the
/// neighbours. When a table is supplied the merged partition's SSR is looked
/// up; otherwise a changed partition carries NaN as its total.
inline BreakSet filter_short_regimes(const BreakSet& bs, std::size_t min_regime, const SsrTable* table = nullptr) {
  if (min_regime == 0 || bs.regime_windows.empty()) return bs;
  const auto& breaks = bs.partition.break_indices;
  std::vector<bool> drop(breaks.size(), false);
  for (std::size_t r = 0; r < bs.regime_windows.size(); ++r) {
    if (bs.regime_windows[r].size() >= min_regime) continue;
    if (r > 0) drop[r - 1] = true;
    if (r < breaks.size()) drop[r] = true;
  }
  if (std::none_of(drop.begin(), drop.end(), [](bool d) { return d; })) return bs;

  BreakSet out = bs;
  out.partition.break_indices.clear();
  out.is_style_break.clear();
  for (std::size_t b = 0; b < breaks.size(); ++b) {
    if (drop[b]) continue;
    out.partition.break_indices.push_back(breaks[b]);
    if (b < bs.is_style_break.size()) out.is_style_break.push_back(bs.is_style_break[b]);
  }
  const std::size_t n = bs.regime_windows.back().end + 1;
  out.chosen_m = out.partition.break_indices.size();
  out.partition.m = out.chosen_m;
  out.regime_windows = regimes_from_breaks(out.partition.break_indices, n);
  out.partition.total_ssr =
      table ? partition_ssr(*table, out.partition.break_indices) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace fundshift
