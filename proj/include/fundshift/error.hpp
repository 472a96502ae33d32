#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fundshift {

enum class Errc {
  malformed_input,
  non_positive_value,
  duplicate_date,
  unordered_dates,
  too_few_rows,
  missing_column,
  window_too_short,
  rank_deficient,
  missing_factor,
  infeasible_partition,
  too_few_funds,
  invalid_spec,
  io,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::malformed_input: return "malformed input";
    case Errc::non_positive_value: return "non-positive value";
    case Errc::duplicate_date: return "duplicate date";
    case Errc::unordered_dates: return "unordered dates";
    case Errc::too_few_rows: return "too few rows";
    case Errc::missing_column: return "missing column";
    case Errc::window_too_short: return "window too short";
    case Errc::rank_deficient: return "rank-deficient design";
    case Errc::missing_factor: return "missing factor";
    case Errc::infeasible_partition: return "infeasible partition";
    case Errc::too_few_funds: return "too few funds";
    case Errc::invalid_spec: return "invalid spec";
    case Errc::io: return "i/o error";
  }
  return "unknown error";
}

/// Library-wide exception. The code lets callers route failures (skip a fund,
/// map to an exit status) without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace fundshift
