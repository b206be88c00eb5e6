#ifndef BTK_NUMBERS_HPP
#define BTK_NUMBERS_HPP

/* Exact arithmetic substrate: arbitrary-precision integers and rationals,
 * p-adic valuations, and the scalar type used for lattice matrices
 * (value = (num/den) * p^exp with num, den coprime to p). No floating point. */

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>
#include <string>

namespace btk {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

inline Int num(const Rat& q) { return boost::multiprecision::numerator(q); }
inline Int den(const Rat& q) { return boost::multiprecision::denominator(q); }

struct Error : std::runtime_error {
  std::string kind;
  Error(std::string k, const std::string& msg)
      : std::runtime_error(k + ": " + msg), kind(std::move(k)) {}
};

[[noreturn]] inline void fail(const std::string& kind, const std::string& msg) {
  throw Error(kind, msg);
}

// p-adic valuation of a nonzero integer; `unit` receives n / p^val.
inline long val_p(Int n, long p, Int* unit = nullptr) {
  if (n == 0) fail("ValuationOfZero", "val_p(0) undefined");
  long v = 0;
  while (n % p == 0) { n /= p; ++v; }
  if (unit) *unit = n;
  return v;
}

// valuation of a nonzero rational
inline long val_p(const Rat& q, long p) {
  if (q == 0) fail("ValuationOfZero", "val_p(0) undefined");
  Int n = num(q), d = den(q);
  long v = 0;
  while (n % p == 0) { n /= p; ++v; }
  while (d % p == 0) { d /= p; --v; }
  return v;
}

inline Int pow_int(Int base, long e) {
  Int r = 1;
  for (long i = 0; i < e; ++i) r *= base;
  return r;
}

inline Rat pow_rat(long p, long e) {
  if (e >= 0) return Rat(pow_int(p, e));
  return Rat(1, pow_int(p, -e));
}

/* Scalar of Q with explicit p-part: value = (num/den) * p^exp, where num and den
 * are coprime to p (den > 0). Closed under +, *, and inverse; `den` exists because
 * inverting a Z_(p) unit produces a denominator coprime to p. */
struct PAdicScalar {
  Int num = 0;
  Int den = 1;
  long exp = 0;

  Rat value(long p) const { return Rat(num, den) * pow_rat(p, exp); }

  static PAdicScalar from_rational(long p, const Rat& q) {
    PAdicScalar s;
    if (q == 0) return s;
    s.exp = val_p(q, p);
    Rat unit = q * pow_rat(p, -s.exp);
    s.num = btk::num(unit);
    s.den = btk::den(unit);
    return s;
  }
  long valuation() const {
    if (num == 0) fail("ValuationOfZero", "valuation of 0 undefined");
    return exp;
  }
};

inline PAdicScalar padic_mul(long p, const PAdicScalar& a, const PAdicScalar& b) {
  return PAdicScalar::from_rational(p, a.value(p) * b.value(p));
}
inline PAdicScalar padic_add(long p, const PAdicScalar& a, const PAdicScalar& b) {
  return PAdicScalar::from_rational(p, a.value(p) + b.value(p));
}
inline PAdicScalar padic_inverse(long p, const PAdicScalar& a) {
  if (a.num == 0) fail("DivisionByZero", "inverse of 0");
  return PAdicScalar::from_rational(p, Rat(1) / a.value(p));
}

}  // namespace btk

#endif
