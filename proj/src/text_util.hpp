#pragma once

// Small text helpers shared by the CSV and report code. Not installed.

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

namespace weldpred::detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Lowercased, runs of blanks collapsed to one space. Header comparison key.
inline std::string header_key(std::string_view s) {
  std::string out;
  bool blank = false;
  for (char c : trim(s)) {
    if (c == ' ' || c == '\t') {
      blank = true;
      continue;
    }
    if (blank && !out.empty()) out.push_back(' ');
    blank = false;
    out.push_back(c >= 'A' && c <= 'Z' ? char(c - 'A' + 'a') : c);
  }
  return out;
}

/// Parses a decimal number; tolerates a decimal comma. Whole string must match.
inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::string buf(s);
  for (char& c : buf)
    if (c == ',') c = '.';
  double value = 0.0;
  auto [end, ec] = std::from_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc() || end != buf.data() + buf.size()) return std::nullopt;
  return value;
}

/// Shortest decimal form that round-trips the exact double.
inline std::string shortest(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

}  // namespace weldpred::detail
