#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace fincon {

/// A calendar month. Ordering and arithmetic use the month ordinal
/// `year * 12 + (month - 1)`.
class YearMonth {
 public:
  constexpr YearMonth() = default;
  YearMonth(int year, int month);

  /// Accepts `YYYY-MM` and the `YYYYmMM` / `YYYYmM` notation.
  static YearMonth parse(std::string_view text);
  static constexpr YearMonth from_ordinal(int ordinal) {
    YearMonth ym;
    ym.ordinal_ = ordinal;
    return ym;
  }

  int year() const { return ordinal_ / 12; }
  int month() const { return ordinal_ % 12 + 1; }
  constexpr int ordinal() const { return ordinal_; }

  YearMonth operator+(int months) const { return from_ordinal(ordinal_ + months); }
  YearMonth operator-(int months) const { return from_ordinal(ordinal_ - months); }
  int operator-(YearMonth other) const { return ordinal_ - other.ordinal_; }

  auto operator<=>(const YearMonth&) const = default;

  /// `YYYY-MM`.
  std::string to_string() const;

 private:
  int ordinal_ = 0;
};

/// Inclusive month range with a display name.
struct DatePeriod {
  std::string name;
  YearMonth start;
  YearMonth end;

  bool contains(YearMonth ym) const { return start <= ym && ym <= end; }
};

}  // namespace fincon
