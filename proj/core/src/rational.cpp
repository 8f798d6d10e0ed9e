#include "dtflat/rational.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

namespace dtflat {

namespace {

using int128 = __int128;

int128 abs128(int128 v) { return v < 0 ? -v : v; }

int128 gcd128(int128 a, int128 b) {
  a = abs128(a);
  b = abs128(b);
  while (b != 0) {
    int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

bool fits_int64(int128 v) {
  return v >= std::numeric_limits<std::int64_t>::min() &&
         v <= std::numeric_limits<std::int64_t>::max();
}

}  // namespace

std::optional<Rational> Rational::make(int128 n, int128 d) {
  if (d == 0) return std::nullopt;
  if (d < 0) {
    n = -n;
    d = -d;
  }
  if (n == 0) return Rational{0, 1};
  int128 g = gcd128(n, d);
  n /= g;
  d /= g;
  if (!fits_int64(n) || !fits_int64(d)) return std::nullopt;
  return Rational{static_cast<std::int64_t>(n), static_cast<std::int64_t>(d)};
}

std::optional<Rational> rat_add(const Rational& a, const Rational& b) {
  return Rational::make(int128(a.num) * b.den + int128(b.num) * a.den,
                        int128(a.den) * b.den);
}

std::optional<Rational> rat_sub(const Rational& a, const Rational& b) {
  return Rational::make(int128(a.num) * b.den - int128(b.num) * a.den,
                        int128(a.den) * b.den);
}

std::optional<Rational> rat_mul(const Rational& a, const Rational& b) {
  return Rational::make(int128(a.num) * b.num, int128(a.den) * b.den);
}

std::optional<Rational> rat_div(const Rational& a, const Rational& b) {
  if (b.num == 0) return std::nullopt;
  return Rational::make(int128(a.num) * b.den, int128(a.den) * b.num);
}

std::optional<Rational> rat_pow(const Rational& a, int exponent) {
  if (exponent == 0) return Rational{1, 1};
  bool invert = exponent < 0;
  if (invert && a.num == 0) return std::nullopt;
  unsigned long long e =
      invert ? -static_cast<long long>(exponent) : exponent;
  Rational acc{1, 1};
  Rational base = a;
  while (e > 0) {
    if (e & 1) {
      auto next = rat_mul(acc, base);
      if (!next) return std::nullopt;
      acc = *next;
    }
    e >>= 1;
    if (e > 0) {
      auto sq = rat_mul(base, base);
      if (!sq) return std::nullopt;
      base = *sq;
    }
  }
  if (invert) return rat_div(Rational{1, 1}, acc);
  return acc;
}

std::optional<Rational> rat_from_double(double v) {
  if (!std::isfinite(v)) return std::nullopt;
  if (v == 0.0) return Rational{0, 1};
  int exp = 0;
  double mant = std::frexp(v, &exp);  // v = mant * 2^exp, |mant| in [0.5, 1)
  // 53 doublings make the mantissa integral for any finite double.
  std::int64_t m = static_cast<std::int64_t>(std::ldexp(mant, 53));
  int e2 = exp - 53;
  if (e2 >= 0) {
    if (e2 > 62) return std::nullopt;
    return Rational::make(int128(m) << e2, 1);
  }
  if (-e2 > 126) return std::nullopt;
  return Rational::make(m, int128(1) << -e2);
}

}  // namespace dtflat
