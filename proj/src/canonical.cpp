// SPDX-License-Identifier: Apache-2.0

#include "egb/canonical.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>

#include "egb/error.hpp"

namespace egb {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

int to_int(std::string_view s) {
  int v = 0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

[[noreturn]] void fail(std::string_view kind, std::string_view text) {
  throw CanonicalizationError("cannot read '" + std::string(text) + "' as " + std::string(kind));
}

std::string format_date(int y, int m, int d, std::string_view original) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || y < 1 || y > 9999) fail("date", original);
  std::array<char, 16> buf{};
  std::snprintf(buf.data(), buf.size(), "%04d-%02d-%02d", y, m, d);
  return std::string(buf.data());
}

int month_from_name(std::string_view name) {
  static constexpr std::array<std::string_view, 12> kFull = {
      "january", "february", "march",     "april",   "may",      "june",
      "july",    "august",   "september", "october", "november", "december"};
  if (!name.empty() && name.back() == '.') name.remove_suffix(1);
  for (std::size_t i = 0; i < kFull.size(); ++i) {
    if (name == kFull[i]) return static_cast<int>(i) + 1;
    if (name.size() >= 3 && kFull[i].starts_with(name)) return static_cast<int>(i) + 1;
  }
  return 0;
}

}  // namespace

std::string canonical_string(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : trim(text)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string canonical_date(std::string_view text) {
  const std::string s = canonical_string(text);
  const std::string_view v = s;

  // YYYY-MM-DD
  if (auto a = v.find('-'); a != std::string_view::npos) {
    const auto b = v.find('-', a + 1);
    if (b == std::string_view::npos) fail("date", text);
    auto y = v.substr(0, a), m = v.substr(a + 1, b - a - 1), d = v.substr(b + 1);
    if (y.size() != 4 || !all_digits(y) || !all_digits(m) || !all_digits(d) || m.size() > 2 ||
        d.size() > 2) {
      fail("date", text);
    }
    return format_date(to_int(y), to_int(m), to_int(d), text);
  }

  // MM/DD/YYYY
  if (auto a = v.find('/'); a != std::string_view::npos) {
    const auto b = v.find('/', a + 1);
    if (b == std::string_view::npos) fail("date", text);
    auto m = v.substr(0, a), d = v.substr(a + 1, b - a - 1), y = v.substr(b + 1);
    if (y.size() != 4 || !all_digits(y) || !all_digits(m) || !all_digits(d) || m.size() > 2 ||
        d.size() > 2) {
      fail("date", text);
    }
    return format_date(to_int(y), to_int(m), to_int(d), text);
  }

  // Month D, YYYY
  const auto sp = v.find(' ');
  if (sp == std::string_view::npos) fail("date", text);
  const int month = month_from_name(v.substr(0, sp));
  if (month == 0) fail("date", text);
  auto rest = v.substr(sp + 1);
  const auto sp2 = rest.find(' ');
  if (sp2 == std::string_view::npos) fail("date", text);
  auto day = rest.substr(0, sp2);
  auto year = rest.substr(sp2 + 1);
  if (!day.empty() && day.back() == ',') day.remove_suffix(1);
  for (std::string_view suffix : {"st", "nd", "rd", "th"}) {
    if (day.size() > 2 && day.ends_with(suffix)) {
      day.remove_suffix(2);
      break;
    }
  }
  if (!all_digits(day) || day.size() > 2 || year.size() != 4 || !all_digits(year)) {
    fail("date", text);
  }
  return format_date(to_int(year), month, to_int(day), text);
}

std::string canonical_decimal(std::string_view text) {
  std::string_view v = trim(text);
  bool negative = false;
  std::string int_part;
  std::string frac_part;
  bool seen_digit = false;
  bool seen_point = false;
  bool seen_sign = false;

  std::size_t i = 0;
  while (i < v.size()) {
    const unsigned char c = static_cast<unsigned char>(v[i]);
    if (c == '$') {
      ++i;
    } else if (c == 0xE2 && i + 2 < v.size() && static_cast<unsigned char>(v[i + 1]) == 0x82 &&
               static_cast<unsigned char>(v[i + 2]) == 0xAC) {  // euro sign
      i += 3;
    } else if (c == 0xC2 && i + 1 < v.size() &&
               (static_cast<unsigned char>(v[i + 1]) == 0xA3 ||
                static_cast<unsigned char>(v[i + 1]) == 0xA5)) {  // pound, yen
      i += 2;
    } else if ((c == '-' || c == '+') && !seen_digit && !seen_sign && !seen_point) {
      negative = c == '-';
      seen_sign = true;
      ++i;
    } else if (c == ',' && seen_digit && !seen_point) {
      ++i;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
      ++i;
    } else if (c >= '0' && c <= '9') {
      seen_digit = true;
      (seen_point ? frac_part : int_part).push_back(static_cast<char>(c));
      ++i;
    } else if (is_space(c) && !seen_digit) {
      ++i;
    } else {
      fail("decimal", text);
    }
  }
  if (!seen_digit) fail("decimal", text);

  const auto first_nonzero = int_part.find_first_not_of('0');
  int_part = first_nonzero == std::string::npos ? "0" : int_part.substr(first_nonzero);
  while (!frac_part.empty() && frac_part.back() == '0') frac_part.pop_back();

  std::string out;
  if (negative && !(int_part == "0" && frac_part.empty())) out.push_back('-');
  out += int_part;
  if (!frac_part.empty()) out += "." + frac_part;
  return out;
}

std::string canonical_integer(std::string_view text) {
  std::string out = canonical_decimal(text);
  if (out.find('.') != std::string::npos) fail("integer", text);
  return out;
}

std::string canonical_boolean(std::string_view text) {
  const std::string s = canonical_string(text);
  if (s == "true") return "true";
  if (s == "false") return "false";
  fail("boolean", text);
}

std::string canonicalize(const Literal& value, SemanticType type) {
  if (const bool* b = std::get_if<bool>(&value)) {
    if (type == SemanticType::Boolean || type == SemanticType::String) return *b ? "true" : "false";
    fail(to_string(type), literal_text(value));
  }
  const std::string text = literal_text(value);
  switch (type) {
    case SemanticType::String: return canonical_string(text);
    case SemanticType::Integer: return canonical_integer(text);
    case SemanticType::Decimal: return canonical_decimal(text);
    case SemanticType::Date: return canonical_date(text);
    case SemanticType::Boolean: return canonical_boolean(text);
  }
  return canonical_string(text);
}

std::optional<std::string> try_canonicalize(const Literal& value, SemanticType type) noexcept {
  try {
    return canonicalize(value, type);
  } catch (...) {
    return std::nullopt;
  }
}

}  // namespace egb
