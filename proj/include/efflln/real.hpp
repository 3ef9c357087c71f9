#pragma once

#include <functional>
#include <optional>
#include <string>

#include "efflln/rational.hpp"

namespace efflln {

/// Closed interval with rational endpoints. A point interval (lo == hi) is an
/// exact value.
struct Enclosure {
  Rational lo;
  Rational hi;

  static Enclosure point(const Rational& v) { return {v, v}; }

  bool is_point() const { return lo == hi; }
  Rational width() const { return hi - lo; }
  bool contains(const Rational& v) const { return lo <= v && v <= hi; }
  double midpoint() const;

  friend Enclosure operator+(const Enclosure& a, const Enclosure& b);
  friend Enclosure operator-(const Enclosure& a, const Enclosure& b);
  friend Enclosure operator*(const Enclosure& a, const Enclosure& b);
};

/// Precision budget for interval-mode comparisons: refinement starts at
/// `initial_bits` and doubles until `max_bits`.
struct PrecisionBudget {
  unsigned initial_bits = 16;
  unsigned max_bits = 256;
};

/// A real number that is either an exact rational or given by a refinement
/// callback returning a dyadic enclosure of width <= 2^-bits.
class Real {
 public:
  using Refinement = std::function<Enclosure(unsigned bits)>;

  Real() : exact_(Rational(0)) {}
  Real(const Rational& v) : exact_(v) {}  // NOLINT: implicit on purpose
  Real(long v) : exact_(Rational(v)) {}   // NOLINT

  static Real from_refinement(Refinement f, std::string label = "approx");

  bool is_exact() const { return exact_.has_value(); }
  /// Throws DomainError for interval-mode values.
  const Rational& exact() const;

  /// Enclosure of width <= 2^-bits. Exact values return a point.
  Enclosure approx(unsigned bits) const;

  const std::string& label() const { return label_; }

 private:
  std::optional<Rational> exact_;
  Refinement refine_;
  std::string label_;
};

/// Sign of (x - y), refining x until decided. Throws UndecidedComparison
/// when the enclosure still straddles y at budget.max_bits.
int compare(const Real& x, const Rational& y, const PrecisionBudget& budget = {});

/// Dyadic outward rounding of a rational to a multiple of 2^-bits.
Rational dyadic_floor(const Rational& q, unsigned bits);
Rational dyadic_ceil(const Rational& q, unsigned bits);

}  // namespace efflln
