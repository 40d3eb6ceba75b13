#ifndef QUINTNET_DYADIC_HPP
#define QUINTNET_DYADIC_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace quintnet {

/// Exact dyadic rational m / 2^e with arbitrary-precision mantissa and a
/// natural-number exponent.  The value set is closed under every operation a
/// quintuple-parameter ReLU network performs on dyadic inputs (sums, halving,
/// doubling, negation, ReLU), so network evaluation in this type is exact.
///
/// Canonical form: the exponent is minimal, i.e. the mantissa is odd or the
/// exponent is 0, and zero is stored as 0/2^0.  Two Dyadics are equal iff
/// their canonical forms are identical, which makes comparison cheap.
class Dyadic {
 public:
  using Mantissa = boost::multiprecision::cpp_int;

  Dyadic() = default;  // zero
  Dyadic(long long value) : mantissa_(value) {}

  /// Builds m / 2^e and canonicalizes.
  static Dyadic from_parts(Mantissa mantissa, unsigned exponent);

  /// Exact conversion of a finite binary64 value (every finite double is a
  /// dyadic rational).  Throws std::invalid_argument on NaN/inf.
  static Dyadic from_double(double value);

  /// Parses the textual forms "m/2^e" and the integer shorthand "m".
  static Dyadic parse(std::string_view text);

  const Mantissa& mantissa() const { return mantissa_; }
  unsigned exponent() const { return exponent_; }

  bool is_zero() const { return mantissa_.is_zero(); }
  int sign() const { return mantissa_.sign(); }
  bool is_negative() const { return mantissa_.sign() < 0; }

  Dyadic operator-() const;
  Dyadic& operator+=(const Dyadic& rhs);
  friend Dyadic operator+(Dyadic lhs, const Dyadic& rhs) { return lhs += rhs; }
  friend Dyadic operator-(Dyadic lhs, const Dyadic& rhs) { return lhs += -rhs; }
  friend Dyadic operator*(const Dyadic& lhs, const Dyadic& rhs);

  friend bool operator==(const Dyadic& a, const Dyadic& b) {
    return a.exponent_ == b.exponent_ && a.mantissa_ == b.mantissa_;
  }
  friend bool operator!=(const Dyadic& a, const Dyadic& b) { return !(a == b); }
  friend bool operator<(const Dyadic& a, const Dyadic& b);
  friend bool operator>(const Dyadic& a, const Dyadic& b) { return b < a; }
  friend bool operator<=(const Dyadic& a, const Dyadic& b) { return !(b < a); }
  friend bool operator>=(const Dyadic& a, const Dyadic& b) { return !(a < b); }

  /// "m/2^e", or plain "m" when the exponent is 0.
  std::string to_string() const;

 private:
  void canonicalize();

  Mantissa mantissa_ = 0;
  unsigned exponent_ = 0;
};

/// Result of a binary64 conversion. `exact` is true iff the value converts
/// without rounding (|mantissa| < 2^53 and exponent <= 1022).
struct FloatValue {
  double value = 0.0;
  bool exact = true;
};

/// Nearest binary64 (round to nearest, ties to even), with an exactness flag.
FloatValue to_float(const Dyadic& a);

/// Shorthand for to_float(a).value.
double to_double(const Dyadic& a);

inline Dyadic relu(const Dyadic& a) { return a.is_negative() ? Dyadic() : a; }
Dyadic abs(const Dyadic& a);
/// a / 2, exact.
Dyadic half(const Dyadic& a);
/// 2 * a, exact.
Dyadic twice(const Dyadic& a);
/// a * 2^k, exact.
Dyadic scale_pow2(const Dyadic& a, int k);

}  // namespace quintnet

#endif  // QUINTNET_DYADIC_HPP
