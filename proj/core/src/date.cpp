#include "fincon/date.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

#include "fincon/error.hpp"

namespace fincon {

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

YearMonth::YearMonth(int year, int month) {
  if (month < 1 || month > 12) {
    throw ValidationError("month out of range: " + std::to_string(month));
  }
  ordinal_ = year * 12 + (month - 1);
}

YearMonth YearMonth::parse(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  const auto sep = text.find_first_of("-m");
  int year = 0;
  int month = 0;
  if (sep != 4 || !parse_int(text.substr(0, 4), year) || !parse_int(text.substr(5), month) ||
      text.size() < 6 || text.size() > 7 || month < 1 || month > 12) {
    throw ValidationError("malformed date '" + std::string(text) + "' (expected YYYY-MM)");
  }
  return YearMonth(year, month);
}

std::string YearMonth::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year(), month());
  return buf;
}

}  // namespace fincon
