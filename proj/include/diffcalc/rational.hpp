#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <stdexcept>
#include <string>

namespace diffcalc {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline std::string rational_to_string(const Rational& q) {
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

// Accepts "p", "-p", "p/q", "-p/q" with decimal digits; no whitespace.
inline std::optional<Rational> parse_rational(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t i = 0;
  bool neg = false;
  if (s[i] == '-') {
    neg = true;
    ++i;
  }
  if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i])))
    return std::nullopt;
  std::string num, den;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])))
    num += s[i++];
  if (i < s.size()) {
    if (s[i] != '/') return std::nullopt;
    ++i;
    if (i >= s.size()) return std::nullopt;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])))
      den += s[i++];
    if (i != s.size() || den.empty()) return std::nullopt;
  }
  BigInt n(num);
  BigInt d = den.empty() ? BigInt(1) : BigInt(den);
  if (d == 0) return std::nullopt;
  Rational q(n, d);
  return neg ? -q : q;
}

inline Rational factorial_inverse(unsigned n) {
  BigInt f = 1;
  for (unsigned k = 2; k <= n; ++k) f *= k;
  return Rational(1, f);
}

inline double rational_to_double(const Rational& q) {
  return q.convert_to<double>();
}

}  // namespace diffcalc
