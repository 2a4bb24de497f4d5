#include "groundcot/decimal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace groundcot {

namespace {

Decimal::Int pow10(int n) {
  Decimal::Int r = 1;
  for (int i = 0; i < n; ++i) r *= 10;
  return r;
}

// Brings both operands to the larger scale.
std::pair<Decimal::Int, Decimal::Int> aligned(const Decimal& a, const Decimal& b, int& scale) {
  scale = std::max(a.scale(), b.scale());
  return {a.mantissa() * pow10(scale - a.scale()), b.mantissa() * pow10(scale - b.scale())};
}

}  // namespace

Decimal::Decimal(Int mantissa, int scale) : mantissa_(std::move(mantissa)), scale_(scale) {
  if (scale_ < 0) {
    mantissa_ *= pow10(-scale_);
    scale_ = 0;
  }
}

std::optional<Decimal> Decimal::parse(std::string_view text) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  std::size_t i = 0;
  if (text[0] == '+' || text[0] == '-') {
    negative = text[0] == '-';
    ++i;
  }
  std::string digits;
  int scale = 0;
  bool seen_point = false;
  bool seen_digit = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c >= '0' && c <= '9') {
      digits += c;
      seen_digit = true;
      if (seen_point) ++scale;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      return std::nullopt;
    }
  }
  if (!seen_digit) return std::nullopt;
  // "5." is not a decimal literal here.
  if (seen_point && text.back() == '.') return std::nullopt;
  // cpp_int reads a leading 0 as an octal prefix.
  digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
  Int mantissa(digits);
  if (negative) mantissa = -mantissa;
  return Decimal(std::move(mantissa), scale);
}

Decimal Decimal::from_double(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("Decimal::from_double: non-finite value");
  char buf[512];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
  if (ec != std::errc{}) throw std::invalid_argument("Decimal::from_double: conversion failed");
  return *parse(std::string_view(buf, end - buf));
}

Decimal Decimal::abs() const { return Decimal(mantissa_ < 0 ? Int(-mantissa_) : mantissa_, scale_); }

Decimal operator-(const Decimal& a, const Decimal& b) {
  int scale = 0;
  auto [ma, mb] = aligned(a, b, scale);
  return Decimal(ma - mb, scale);
}

Decimal operator*(const Decimal& a, const Decimal& b) {
  return Decimal(a.mantissa() * b.mantissa(), a.scale() + b.scale());
}

std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
  int scale = 0;
  const auto [ma, mb] = aligned(a, b, scale);
  if (ma < mb) return std::strong_ordering::less;
  if (ma > mb) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

bool operator==(const Decimal& a, const Decimal& b) { return (a <=> b) == 0; }

std::string Decimal::to_fixed(int places) const {
  Int m = mantissa_ < 0 ? Int(-mantissa_) : mantissa_;
  if (scale_ > places) {
    const auto divisor = pow10(scale_ - places);
    const Int q = m / divisor;
    const Int r = m % divisor;
    m = r * 2 >= divisor ? q + 1 : q;
  } else {
    m *= pow10(places - scale_);
  }
  auto digits = m.str();
  if (static_cast<int>(digits.size()) <= places) {
    digits.insert(0, static_cast<std::size_t>(places) + 1 - digits.size(), '0');
  }
  std::string out;
  if (mantissa_ < 0 && m != 0) out += '-';
  out += digits.substr(0, digits.size() - places);
  if (places > 0) {
    out += '.';
    out += digits.substr(digits.size() - places);
  }
  return out;
}

}  // namespace groundcot
