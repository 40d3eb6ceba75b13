#include "quintnet/dyadic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace quintnet {

namespace mp = boost::multiprecision;

void Dyadic::canonicalize() {
  if (mantissa_.is_zero()) {
    exponent_ = 0;
    return;
  }
  unsigned shift = static_cast<unsigned>(mp::lsb(mp::abs(mantissa_)));
  if (shift > exponent_) shift = exponent_;
  if (shift > 0) {
    mantissa_ >>= shift;
    exponent_ -= shift;
  }
}

Dyadic Dyadic::from_parts(Mantissa mantissa, unsigned exponent) {
  Dyadic d;
  d.mantissa_ = std::move(mantissa);
  d.exponent_ = exponent;
  d.canonicalize();
  return d;
}

Dyadic Dyadic::from_double(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("Dyadic::from_double: value not finite");
  if (value == 0.0) return Dyadic();
  int exp2 = 0;
  double frac = std::frexp(value, &exp2);  // value = frac * 2^exp2, |frac| in [0.5, 1)
  auto scaled = static_cast<long long>(std::ldexp(frac, 53));  // odd-free exact integer
  Mantissa m(scaled);
  int pow = exp2 - 53;
  if (pow >= 0) return from_parts(m << pow, 0);
  return from_parts(std::move(m), static_cast<unsigned>(-pow));
}

Dyadic Dyadic::parse(std::string_view text) {
  const auto bad = [&] { return std::invalid_argument("Dyadic::parse: malformed input '" + std::string(text) + "'"); };
  if (text.empty()) throw bad();
  std::size_t slash = text.find('/');
  std::string_view mant_part = text.substr(0, slash == std::string_view::npos ? text.size() : slash);
  if (mant_part.empty()) throw bad();
  std::size_t pos = (mant_part[0] == '-' || mant_part[0] == '+') ? 1 : 0;
  if (pos == mant_part.size()) throw bad();
  for (std::size_t i = pos; i < mant_part.size(); ++i)
    if (mant_part[i] < '0' || mant_part[i] > '9') throw bad();
  const std::string mant_text(mant_part);
  Mantissa m(mant_text);
  unsigned e = 0;
  if (slash != std::string_view::npos) {
    std::string_view denom = text.substr(slash + 1);
    if (denom.size() < 3 || denom[0] != '2' || denom[1] != '^') throw bad();
    std::string_view exp_part = denom.substr(2);
    if (exp_part.empty() || exp_part.size() > 9) throw bad();
    for (char c : exp_part)
      if (c < '0' || c > '9') throw bad();
    e = static_cast<unsigned>(std::stoul(std::string(exp_part)));
  }
  return from_parts(std::move(m), e);
}

Dyadic Dyadic::operator-() const {
  Dyadic d;
  d.mantissa_ = -mantissa_;
  d.exponent_ = exponent_;
  return d;
}

Dyadic& Dyadic::operator+=(const Dyadic& rhs) {
  unsigned e = std::max(exponent_, rhs.exponent_);
  mantissa_ <<= (e - exponent_);
  mantissa_ += rhs.mantissa_ << (e - rhs.exponent_);
  exponent_ = e;
  canonicalize();
  return *this;
}

Dyadic operator*(const Dyadic& lhs, const Dyadic& rhs) {
  return Dyadic::from_parts(lhs.mantissa() * rhs.mantissa(), lhs.exponent() + rhs.exponent());
}

bool operator<(const Dyadic& a, const Dyadic& b) {
  unsigned e = std::max(a.exponent(), b.exponent());
  return (a.mantissa() << (e - a.exponent())) < (b.mantissa() << (e - b.exponent()));
}

std::string Dyadic::to_string() const {
  std::string s = mantissa_.str();
  if (exponent_ != 0) s += "/2^" + std::to_string(exponent_);
  return s;
}

FloatValue to_float(const Dyadic& a) {
  using Mantissa = Dyadic::Mantissa;
  if (a.is_zero()) return {0.0, true};
  Mantissa mag = mp::abs(a.mantissa());
  unsigned bits = static_cast<unsigned>(mp::msb(mag)) + 1;
  const double sign = a.is_negative() ? -1.0 : 1.0;
  if (bits <= 53) {
    double d = std::ldexp(mag.convert_to<double>(), -static_cast<int>(a.exponent()));
    // Exact whenever the scaled value stays in the normal range; below it
    // ldexp rounds to the nearest subnormal.
    return {sign * d, a.exponent() <= 1022};
  }
  // Keep 54 bits, round to nearest even at 53, then rescale.
  unsigned shift = bits - 54;
  Mantissa head = mag >> shift;
  const Mantissa rem = mag - (head << shift);
  bool sticky = !rem.is_zero();
  bool guard = static_cast<bool>(head & 1);
  Mantissa q = head >> 1;
  if (guard && (sticky || static_cast<bool>(q & 1))) ++q;
  double d = std::ldexp(q.convert_to<double>(),
                        static_cast<int>(shift) + 1 - static_cast<int>(a.exponent()));
  return {sign * d, false};
}

double to_double(const Dyadic& a) { return to_float(a).value; }

Dyadic abs(const Dyadic& a) { return a.is_negative() ? -a : a; }

Dyadic half(const Dyadic& a) { return Dyadic::from_parts(a.mantissa(), a.exponent() + 1); }

Dyadic twice(const Dyadic& a) {
  if (a.exponent() > 0) return Dyadic::from_parts(a.mantissa(), a.exponent() - 1);
  return Dyadic::from_parts(a.mantissa() << 1, 0);
}

Dyadic scale_pow2(const Dyadic& a, int k) {
  if (k >= 0) {
    int drop = std::min<int>(k, static_cast<int>(a.exponent()));
    return Dyadic::from_parts(a.mantissa() << (k - drop), a.exponent() - static_cast<unsigned>(drop));
  }
  return Dyadic::from_parts(a.mantissa(), a.exponent() + static_cast<unsigned>(-k));
}

}  // namespace quintnet
