#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mincsp {

class Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
  using Error::Error;
};

class BudgetError : public Error {
  using Error::Error;
};

class PreconditionError : public Error {
  using Error::Error;
};

// All measures, weights and derived constants are exact rationals kept in
// canonical reduced form. cpp_rational normalises on every operation.
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Accepts "p", "p/q" and decimal strings like "0.25". Sign allowed.
inline std::optional<Rational> try_parse_rational(std::string_view s) {
  if (s.empty()) return std::nullopt;
  bool neg = false;
  std::size_t i = 0;
  if (s[0] == '+' || s[0] == '-') {
    neg = s[0] == '-';
    i = 1;
  }
  BigInt num = 0, den = 1;
  bool any_digit = false, seen_dot = false, seen_slash = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c >= '0' && c <= '9') {
      num = num * 10 + (c - '0');
      if (seen_dot) den *= 10;
      any_digit = true;
    } else if (c == '.' && !seen_dot && !seen_slash) {
      seen_dot = true;
    } else if (c == '/' && !seen_slash && !seen_dot && any_digit) {
      seen_slash = true;
      BigInt q = 0;
      bool qdigit = false;
      for (++i; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') return std::nullopt;
        q = q * 10 + (s[i] - '0');
        qdigit = true;
      }
      if (!qdigit || q == 0) return std::nullopt;
      den = q;
      break;
    } else {
      return std::nullopt;
    }
  }
  if (!any_digit) return std::nullopt;
  Rational r(num, den);
  if (neg) r = -r;
  return r;
}

inline Rational parse_rational(std::string_view s) {
  auto r = try_parse_rational(s);
  if (!r) throw ParseError("invalid rational literal: '" + std::string(s) + "'");
  return *r;
}

// Canonical form: "p" when integral, otherwise "p/q" with q > 0.
inline std::string format_rational(const Rational& r) {
  std::string s = numerator(r).str();
  if (denominator(r) != 1) {
    s += '/';
    s += denominator(r).str();
  }
  return s;
}

inline BigInt lcm_big(const BigInt& a, const BigInt& b) {
  if (a == 0 || b == 0) return 0;
  return a / gcd(a, b) * b;
}

}  // namespace mincsp
