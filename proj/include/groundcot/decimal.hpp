#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace groundcot {

/// Exact base-10 number: mantissa * 10^-scale.
///
/// Answer text and tolerances are compared in decimal so that boundary cases
/// such as 1.05 against 1 at 5% resolve the way they read.
class Decimal {
 public:
  using Int = boost::multiprecision::cpp_int;

  Decimal() = default;
  Decimal(Int mantissa, int scale);

  /// Accepts `[+-]?(digits[.digits]? | .digits)`; nothing else.
  static std::optional<Decimal> parse(std::string_view text);
  /// Shortest round-trip decimal form of a finite double.
  static Decimal from_double(double value);

  const Int& mantissa() const { return mantissa_; }
  int scale() const { return scale_; }
  bool is_zero() const { return mantissa_ == 0; }

  Decimal abs() const;
  friend Decimal operator-(const Decimal& a, const Decimal& b);
  friend Decimal operator*(const Decimal& a, const Decimal& b);
  friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b);
  friend bool operator==(const Decimal& a, const Decimal& b);

  /// Rounds half away from zero to `places` fractional digits and renders
  /// with exactly that many digits.
  std::string to_fixed(int places) const;

 private:
  Int mantissa_ = 0;
  int scale_ = 0;
};

}  // namespace groundcot
