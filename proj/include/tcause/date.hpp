#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace tcause {

// Calendar day as an offset from 1970-01-01.
struct Day {
  std::int32_t value = 0;

  constexpr Day() = default;
  constexpr explicit Day(std::int32_t v) : value(v) {}

  constexpr Day operator+(std::int32_t d) const { return Day{value + d}; }
  constexpr Day operator-(std::int32_t d) const { return Day{value - d}; }
  constexpr std::int32_t operator-(Day o) const { return value - o.value; }
  constexpr auto operator<=>(const Day&) const = default;
};

// Accepts "YYYY-MM-DD", optionally followed by a time part ("T..." or " ...")
// which is discarded.
Day parse_date(std::string_view text);
std::string format_date(Day d);

}  // namespace tcause
