#pragma once

#include <gmpxx.h>

#include <cctype>
#include <string>
#include <string_view>

#include "bllab/error.hpp"

namespace bllab {

// GMP keeps mpq_class in lowest terms with a positive denominator after every
// arithmetic operation; values built from raw numerator/denominator pairs go
// through make_rational, which canonicalizes.
using Rational = mpq_class;
using Integer = mpz_class;

inline Rational make_rational(const Integer& num, const Integer& den) {
  require(den != 0, "rational with zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

namespace detail {

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

inline Integer parse_integer(std::string_view s, std::string_view whole) {
  std::string_view body = s;
  if (!body.empty() && (body.front() == '-' || body.front() == '+')) body.remove_prefix(1);
  if (!all_digits(body)) fail_input("not a rational number: '" + std::string(whole) + "'");
  std::string text(s.front() == '+' ? s.substr(1) : s);
  return Integer(text, 10);
}

inline Integer pow10(unsigned long e) {
  Integer r;
  mpz_ui_pow_ui(r.get_mpz_t(), 10, e);
  return r;
}

}  // namespace detail

/// Parses `p`, `p/q`, or a decimal literal such as `-0.125` or `6.3e-1`.
/// Decimals are read exactly: `0.630929753571` becomes 630929753571/10^12.
inline Rational parse_rational(std::string_view text) {
  if (text.empty()) fail_input("empty rational literal");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Integer num = detail::parse_integer(text.substr(0, slash), text);
    std::string_view den_text = text.substr(slash + 1);
    if (!detail::all_digits(den_text)) fail_input("bad denominator in '" + std::string(text) + "'");
    return make_rational(num, Integer(std::string(den_text), 10));
  }

  std::string_view mantissa = text;
  long exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    mantissa = text.substr(0, e);
    Integer ex = detail::parse_integer(text.substr(e + 1), text);
    if (!ex.fits_slong_p()) fail_input("exponent out of range in '" + std::string(text) + "'");
    exponent = ex.get_si();
  }
  if (mantissa.empty()) fail_input("not a rational number: '" + std::string(text) + "'");

  bool negative = false;
  if (mantissa.front() == '-' || mantissa.front() == '+') {
    negative = mantissa.front() == '-';
    mantissa.remove_prefix(1);
  }
  std::string digits;
  long frac_digits = 0;
  if (auto dot = mantissa.find('.'); dot != std::string_view::npos) {
    std::string_view ip = mantissa.substr(0, dot);
    std::string_view fp = mantissa.substr(dot + 1);
    if ((ip.empty() && fp.empty()) || (!ip.empty() && !detail::all_digits(ip)) ||
        (!fp.empty() && !detail::all_digits(fp)))
      fail_input("not a rational number: '" + std::string(text) + "'");
    digits = std::string(ip) + std::string(fp);
    frac_digits = static_cast<long>(fp.size());
  } else {
    if (!detail::all_digits(mantissa)) fail_input("not a rational number: '" + std::string(text) + "'");
    digits = std::string(mantissa);
  }
  Integer num(digits, 10);
  if (negative) num = -num;
  long scale = exponent - frac_digits;
  if (scale >= 0) return Rational(num * detail::pow10(static_cast<unsigned long>(scale)));
  return make_rational(num, detail::pow10(static_cast<unsigned long>(-scale)));
}

/// Always `p/q`, including `0/1` and `3/1`.
inline std::string to_string(const Rational& q) {
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

/// `p` for integers, `p/q` otherwise.
inline std::string to_short_string(const Rational& q) { return q.get_str(); }

inline double to_double(const Rational& q) { return q.get_d(); }

}  // namespace bllab
