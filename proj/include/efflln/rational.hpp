#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>

namespace efflln {

using Rational = mpq_class;
using BigInt = mpz_class;

/// Parses "p/q", an integer, or a finite decimal such as "0.1" or "-2.5e-3"
/// into an exact rational. Throws FormatError on anything else.
Rational parse_rational(std::string_view text);

/// Canonical "p/q" (or "p" when q == 1).
std::string to_string(const Rational& q);

/// Nearest double, and directed roundings of an exact rational.
double to_double(const Rational& q);
double to_double_down(const Rational& q);
double to_double_up(const Rational& q);

/// ceil(x^(num/den)) for x >= 1, num >= 0, den >= 1 computed with integer roots.
BigInt ceil_rational_power(std::uint64_t x, std::uint64_t num, std::uint64_t den);

/// Exact ceil / floor of a rational.
BigInt ceil(const Rational& q);
BigInt floor(const Rational& q);

Rational abs(const Rational& q);

std::uint64_t to_u64(const BigInt& z);  // throws DomainError when out of range
std::int64_t to_i64(const BigInt& z);

}  // namespace efflln
