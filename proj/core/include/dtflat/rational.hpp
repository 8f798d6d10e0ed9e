#pragma once

#include <cstdint>
#include <optional>

namespace dtflat {

// Exact rational with int64 storage, denominator > 0, fraction fully reduced.
// Every operation funnels through make(), which normalizes and refuses
// results whose reduced numerator or denominator overflows int64. Callers
// treat nullopt as "fall back to floating point"; overflow is never silent.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static std::optional<Rational> make(__int128 n, __int128 d);
  static Rational integer(std::int64_t v) { return Rational{v, 1}; }

  [[nodiscard]] bool is_integer() const { return den == 1; }
  [[nodiscard]] bool is_zero() const { return num == 0; }
  [[nodiscard]] double to_double() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }

  friend bool operator==(const Rational&, const Rational&) = default;
};

std::optional<Rational> rat_add(const Rational& a, const Rational& b);
std::optional<Rational> rat_sub(const Rational& a, const Rational& b);
std::optional<Rational> rat_mul(const Rational& a, const Rational& b);

// nullopt on overflow or when b is zero; callers that care about exact
// division by zero must test b.is_zero() first.
std::optional<Rational> rat_div(const Rational& a, const Rational& b);

// Integer exponent, negative allowed for nonzero base.
std::optional<Rational> rat_pow(const Rational& a, int exponent);

// Exact dyadic decomposition of a finite double; nullopt when the reduced
// fraction does not fit (or the value is not finite).
std::optional<Rational> rat_from_double(double v);

}  // namespace dtflat
