#pragma once

// Nine-cell size x value style boxes from FF3 loadings, risk-shift intensity
// grading across breaks, and the style transition matrix.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fundshift/breaks.hpp"
#include "fundshift/csv.hpp"
#include "fundshift/error.hpp"
#include "fundshift/regress.hpp"

namespace fundshift {

enum class SizeClass { Large = 0, Mid = 1, Small = 2 };
enum class ValueClass { Value = 0, Blend = 1, Growth = 2 };

inline std::string_view to_string(SizeClass s) {
  switch (s) {
    case SizeClass::Large: return "Large";
    case SizeClass::Mid: return "Mid";
    case SizeClass::Small: return "Small";
  }
  return "?";
}

inline std::string_view to_string(ValueClass v) {
  switch (v) {
    case ValueClass::Value: return "Value";
    case ValueClass::Blend: return "Blend";
    case ValueClass::Growth: return "Growth";
  }
  return "?";
}

struct StyleBox {
  SizeClass size = SizeClass::Mid;
  ValueClass value = ValueClass::Blend;

  /// Row-major position in the Large..Small x Value..Growth grid.
  std::size_t index() const { return static_cast<std::size_t>(size) * 3 + static_cast<std::size_t>(value); }

  static StyleBox from_index(std::size_t i) {
    return {static_cast<SizeClass>(i / 3), static_cast<ValueClass>(i % 3)};
  }

  std::string label() const { return std::string(to_string(size)) + " " + std::string(to_string(value)); }

  friend bool operator==(const StyleBox&, const StyleBox&) = default;
};

inline constexpr std::size_t kStyleCount = 9;

inline const std::array<std::string, kStyleCount>& style_labels() {
  static const std::array<std::string, kStyleCount> labels = [] {
    std::array<std::string, kStyleCount> out;
    for (std::size_t i = 0; i < kStyleCount; ++i) out[i] = StyleBox::from_index(i).label();
    return out;
  }();
  return labels;
}

inline StyleBox parse_style(std::string_view label) {
  const auto& labels = style_labels();
  for (std::size_t i = 0; i < kStyleCount; ++i) {
    if (labels[i] == label) return StyleBox::from_index(i);
  }
  throw Error(Errc::malformed_input, "unknown style '" + std::string(label) + "'");
}

enum class Sign { Negative = -1, Zero = 0, Positive = 1 };

struct FactorState {
  double beta = 0.0;
  bool significant = false;

  Sign sign() const { return beta > 0.0 ? Sign::Positive : beta < 0.0 ? Sign::Negative : Sign::Zero; }
};

enum class IntensityClass { Rotation, Drift, Strengthen, Weaken, Unchanged };

inline constexpr std::array<IntensityClass, 5> kIntensityClasses = {
    IntensityClass::Rotation, IntensityClass::Drift, IntensityClass::Strengthen, IntensityClass::Weaken,
    IntensityClass::Unchanged};

inline std::string_view to_string(IntensityClass c) {
  switch (c) {
    case IntensityClass::Rotation: return "Rotation";
    case IntensityClass::Drift: return "Drift";
    case IntensityClass::Strengthen: return "Strengthen";
    case IntensityClass::Weaken: return "Weaken";
    case IntensityClass::Unchanged: return "Unchanged";
  }
  return "?";
}

inline IntensityClass parse_intensity(std::string_view name) {
  for (IntensityClass c : kIntensityClasses) {
    if (to_string(c) == name) return c;
  }
  throw Error(Errc::malformed_input, "unknown intensity class '" + std::string(name) + "'");
}

/// Rotation 3, Drift 2, Strengthen/Weaken 1, Unchanged 0.
inline int severity(IntensityClass c) {
  switch (c) {
    case IntensityClass::Rotation: return 3;
    case IntensityClass::Drift: return 2;
    case IntensityClass::Strengthen:
    case IntensityClass::Weaken: return 1;
    case IntensityClass::Unchanged: return 0;
  }
  return 0;
}

inline SizeClass classify_size(const FactorState& smb) {
  if (!smb.significant) return SizeClass::Mid;
  if (smb.beta > 0.0) return SizeClass::Small;
  if (smb.beta < 0.0) return SizeClass::Large;
  return SizeClass::Mid;
}

inline ValueClass classify_value(const FactorState& hml) {
  if (!hml.significant) return ValueClass::Blend;
  if (hml.beta > 0.0) return ValueClass::Value;
  if (hml.beta < 0.0) return ValueClass::Growth;
  return ValueClass::Blend;
}

inline FactorState factor_state(const RegressionFit& fit, Regressor r) {
  return {fit.coef_of(r), fit.significant_of(r)};
}

inline StyleBox style_of(const RegressionFit& fit) {
  return {classify_size(factor_state(fit, Regressor::Smb)), classify_value(factor_state(fit, Regressor::Hml))};
}

inline constexpr double kShiftTolerance = 1e-6;

inline IntensityClass classify_factor_shift(const FactorState& before, const FactorState& after,
                                            double tol = kShiftTolerance) {
  const Sign sb = before.sign();
  const Sign sa = after.sign();
  if (before.significant && after.significant && sb != Sign::Zero && sa != Sign::Zero && sb != sa) {
    return IntensityClass::Rotation;
  }
  if (before.significant != after.significant) return IntensityClass::Drift;
  const double mb = std::fabs(before.beta);
  const double ma = std::fabs(after.beta);
  if (ma > mb + tol) return IntensityClass::Strengthen;
  if (ma < mb - tol) return IntensityClass::Weaken;
  return IntensityClass::Unchanged;
}

/// The more severe of the two factor shifts; on equal severity the SMB shift wins.
inline IntensityClass fund_shift_intensity(IntensityClass smb_shift, IntensityClass hml_shift) {
  return severity(hml_shift) > severity(smb_shift) ? hml_shift : smb_shift;
}

struct RegimeStyle {
  Window window;
  RegressionFit fit;
  StyleBox style;
};

/// One FF3 fit and style box per regime, in chronological order.
inline std::vector<RegimeStyle> regime_styles(const AlignedSample& sample, const BreakSet& bs,
                                              const FitOptions& opts = {}) {
  std::vector<RegimeStyle> out;
  out.reserve(bs.regime_windows.size());
  for (const Window& w : bs.regime_windows) {
    RegressionFit fit = fit_ff3(sample, w, opts);
    StyleBox box = style_of(fit);
    out.push_back({w, std::move(fit), box});
  }
  return out;
}

/// Factor states, per-factor shifts and the fund-level grade for one break.
struct BreakShift {
  std::size_t break_index = 0;
  FactorState smb_before, smb_after, hml_before, hml_after;
  IntensityClass smb_shift = IntensityClass::Unchanged;
  IntensityClass hml_shift = IntensityClass::Unchanged;
  IntensityClass intensity = IntensityClass::Unchanged;
  StyleBox style_from, style_to;

  bool is_style_break() const { return intensity != IntensityClass::Unchanged; }
};

inline BreakShift classify_break(const RegimeStyle& before, const RegimeStyle& after, double tol = kShiftTolerance) {
  BreakShift s;
  s.break_index = before.window.end;
  s.smb_before = factor_state(before.fit, Regressor::Smb);
  s.smb_after = factor_state(after.fit, Regressor::Smb);
  s.hml_before = factor_state(before.fit, Regressor::Hml);
  s.hml_after = factor_state(after.fit, Regressor::Hml);
  s.smb_shift = classify_factor_shift(s.smb_before, s.smb_after, tol);
  s.hml_shift = classify_factor_shift(s.hml_before, s.hml_after, tol);
  s.intensity = fund_shift_intensity(s.smb_shift, s.hml_shift);
  s.style_from = before.style;
  s.style_to = after.style;
  return s;
}

/// Counts of style at period t (rows) against style at t+1 (columns).
struct TransitionMatrix {
  std::array<std::array<std::uint64_t, kStyleCount>, kStyleCount> counts{};
  std::uint64_t grand_total = 0;

  void add(StyleBox from, StyleBox to) {
    ++counts[from.index()][to.index()];
    ++grand_total;
  }

  std::uint64_t row_total(std::size_t r) const {
    std::uint64_t s = 0;
    for (auto c : counts[r]) s += c;
    return s;
  }

  std::uint64_t column_total(std::size_t c) const {
    std::uint64_t s = 0;
    for (const auto& row : counts) s += row[c];
    return s;
  }

  std::uint64_t diagonal() const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < kStyleCount; ++i) s += counts[i][i];
    return s;
  }

  TransitionMatrix& operator+=(const TransitionMatrix& other) {
    for (std::size_t r = 0; r < kStyleCount; ++r)
      for (std::size_t c = 0; c < kStyleCount; ++c) counts[r][c] += other.counts[r][c];
    grand_total += other.grand_total;
    return *this;
  }

  friend bool operator==(const TransitionMatrix&, const TransitionMatrix&) = default;
};

inline TransitionMatrix accumulate_transitions(const std::vector<std::vector<StyleBox>>& per_fund_styles) {
  TransitionMatrix m;
  for (const auto& styles : per_fund_styles) {
    for (std::size_t t = 0; t + 1 < styles.size(); ++t) m.add(styles[t], styles[t + 1]);
  }
  return m;
}

/// 9x9 grid with a Total column and row, labels in Large..Small x Value..Growth order.
inline std::vector<std::vector<std::string>> transition_rows(const TransitionMatrix& m) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"from\\to"};
  for (const auto& l : style_labels()) header.push_back(l);
  header.emplace_back("Total");
  rows.push_back(std::move(header));
  for (std::size_t r = 0; r < kStyleCount; ++r) {
    std::vector<std::string> row{style_labels()[r]};
    for (std::size_t c = 0; c < kStyleCount; ++c) row.push_back(std::to_string(m.counts[r][c]));
    row.push_back(std::to_string(m.row_total(r)));
    rows.push_back(std::move(row));
  }
  std::vector<std::string> total{"Total"};
  for (std::size_t c = 0; c < kStyleCount; ++c) total.push_back(std::to_string(m.column_total(c)));
  total.push_back(std::to_string(m.grand_total));
  rows.push_back(std::move(total));
  return rows;
}

}  // namespace fundshift
