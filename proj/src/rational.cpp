#include "iiswb/rational.hpp"

#include <cctype>

namespace iiswb {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

std::optional<Rational> parse_decimal(std::string_view text) {
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  const auto dot = text.find('.');
  std::string_view whole = text.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() && frac.empty()) return std::nullopt;
  if (!whole.empty() && !all_digits(whole)) return std::nullopt;
  if (dot != std::string_view::npos && !frac.empty() && !all_digits(frac)) return std::nullopt;
  if (dot != std::string_view::npos && frac.empty() && whole.empty()) return std::nullopt;

  std::string digits(whole);
  digits += frac;
  BigInt numerator(digits.empty() ? std::string("0") : digits);
  BigInt denominator = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) denominator *= 10;
  Rational value(numerator, denominator);
  return negative ? Rational(-value) : value;
}

}  // namespace

std::optional<Rational> parse_rational(std::string_view text) {
  if (text.empty()) return std::nullopt;
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_decimal(text);

  std::string_view num = text.substr(0, slash);
  std::string_view den = text.substr(slash + 1);
  bool negative = false;
  if (!num.empty() && (num.front() == '-' || num.front() == '+')) {
    negative = num.front() == '-';
    num.remove_prefix(1);
  }
  if (!all_digits(num) || !all_digits(den)) return std::nullopt;
  BigInt d{std::string(den)};
  if (d == 0) return std::nullopt;
  Rational value(BigInt{std::string(num)}, d);
  return negative ? Rational(-value) : value;
}

std::string to_string(const Rational& value) {
  if (denominator(value) == 1) return numerator(value).str();
  return numerator(value).str() + "/" + denominator(value).str();
}

BigInt floor(const Rational& value) {
  const BigInt& n = numerator(value);
  const BigInt& d = denominator(value);  // always positive
  BigInt q = n / d;                      // truncates toward zero
  if (n < 0 && q * d != n) q -= 1;
  return q;
}

BigInt ceil(const Rational& value) {
  BigInt f = floor(value);
  return Rational(f) == value ? f : BigInt(f + 1);
}

bool is_integral(const Rational& value) { return denominator(value) == 1; }

}  // namespace iiswb
