#include "efflln/real.hpp"

#include <algorithm>
#include <utility>

#include "efflln/error.hpp"

namespace efflln {

double Enclosure::midpoint() const { return to_double(Rational((lo + hi) / 2)); }

Enclosure operator+(const Enclosure& a, const Enclosure& b) { return {a.lo + b.lo, a.hi + b.hi}; }

Enclosure operator-(const Enclosure& a, const Enclosure& b) { return {a.lo - b.hi, a.hi - b.lo}; }

Enclosure operator*(const Enclosure& a, const Enclosure& b) {
  Rational p[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}

Real Real::from_refinement(Refinement f, std::string label) {
  Real r;
  r.exact_.reset();
  r.refine_ = std::move(f);
  r.label_ = std::move(label);
  return r;
}

const Rational& Real::exact() const {
  if (!exact_) throw DomainError("value '" + label_ + "' is not an exact rational");
  return *exact_;
}

Enclosure Real::approx(unsigned bits) const {
  if (exact_) return Enclosure::point(*exact_);
  Enclosure e = refine_(bits);
  Rational limit(1);
  limit.get_den() <<= bits;
  if (e.lo > e.hi || e.width() > limit)
    throw DomainError("refinement of '" + label_ + "' returned an enclosure wider than requested");
  return e;
}

int compare(const Real& x, const Rational& y, const PrecisionBudget& budget) {
  if (x.is_exact()) return cmp(x.exact(), y) < 0 ? -1 : (cmp(x.exact(), y) > 0 ? 1 : 0);
  for (unsigned bits = std::max(1u, budget.initial_bits); bits <= budget.max_bits; bits *= 2) {
    Enclosure e = x.approx(bits);
    if (e.lo > y) return 1;
    if (e.hi < y) return -1;
    if (e.is_point()) return 0;
  }
  throw UndecidedComparison("comparison of '" + x.label() + "' with " + to_string(y) +
                            " undecided at " + std::to_string(budget.max_bits) + " bits");
}

Rational dyadic_floor(const Rational& q, unsigned bits) {
  BigInt scaled = q.get_num() << bits;
  BigInt f;
  mpz_fdiv_q(f.get_mpz_t(), scaled.get_mpz_t(), q.get_den_mpz_t());
  Rational r(f);
  r.get_den() <<= bits;
  r.canonicalize();
  return r;
}

Rational dyadic_ceil(const Rational& q, unsigned bits) {
  BigInt scaled = q.get_num() << bits;
  BigInt c;
  mpz_cdiv_q(c.get_mpz_t(), scaled.get_mpz_t(), q.get_den_mpz_t());
  Rational r(c);
  r.get_den() <<= bits;
  r.canonicalize();
  return r;
}

}  // namespace efflln
