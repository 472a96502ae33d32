#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "fundshift/error.hpp"

namespace fundshift {

/// Calendar date at day resolution. Text form is ISO-8601 `YYYY-MM-DD`.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
  constexpr Date(int y, unsigned m, unsigned d)
      : days_(std::chrono::sys_days{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}}) {}

  static Date parse(std::string_view text) {
    auto bad = [&] { return Error(Errc::malformed_input, "bad date '" + std::string(text) + "'"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
    int y = 0;
    unsigned m = 0, d = 0;
    auto field = [&](std::size_t pos, std::size_t len, auto& out) {
      const char* first = text.data() + pos;
      const char* last = first + len;
      auto [ptr, ec] = std::from_chars(first, last, out);
      if (ec != std::errc{} || ptr != last) throw bad();
    };
    field(0, 4, y);
    field(5, 2, m);
    field(8, 2, d);
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw bad();
    return Date(std::chrono::sys_days{ymd});
  }

  std::string iso() const {
    std::chrono::year_month_day ymd{days_};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
  }

  constexpr std::chrono::sys_days days() const { return days_; }

  bool is_weekday() const {
    std::chrono::weekday wd{days_};
    return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
  }

  Date next_weekday() const {
    Date d(days_ + std::chrono::days{1});
    while (!d.is_weekday()) d = Date(d.days_ + std::chrono::days{1});
    return d;
  }

  Date previous_weekday() const {
    Date d(days_ - std::chrono::days{1});
    while (!d.is_weekday()) d = Date(d.days_ - std::chrono::days{1});
    return d;
  }

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

/// `count` consecutive Monday-Friday dates starting at the first weekday on or after `start`.
inline std::vector<Date> weekday_calendar(Date start, std::size_t count) {
  std::vector<Date> out;
  out.reserve(count);
  Date d = start.is_weekday() ? start : start.next_weekday();
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(d);
    d = d.next_weekday();
  }
  return out;
}

}  // namespace fundshift
