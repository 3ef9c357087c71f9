#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "efflln/rational.hpp"

namespace efflln {

/// A numeric upper bound with the inequality chain that justifies it.
/// `value` is rounded up; every step in `chain` names one inequality.
struct BoundCertificate {
  std::string quantity;
  double value = 0.0;
  std::string rule;
  std::vector<std::string> chain;
  std::vector<std::pair<std::string, std::string>> params;

  void add_param(std::string key, std::string val) {
    params.emplace_back(std::move(key), std::move(val));
  }
  /// {"quantity", "value", "derivation": {"rule", "chain"}, "params"}.
  std::string to_json() const;
};

/// 2 exp(-eps^2 n / 2), requires 0 < eps <= min(q, 1-q).
BoundCertificate chernoff_tail(const Rational& q, const Rational& eps, std::uint64_t n);

/// 2 exp(-2 eps^2 n / (b-a)^2), requires a < b and eps > 0.
BoundCertificate hoeffding_tail(const Rational& a, const Rational& b, const Rational& eps,
                                std::uint64_t n);

struct GeometricTail {
  double exact;     // sum_{k > L} exp(-k / (c n^2))
  double majorant;  // c n^2 exp(-L / (c n^2))
};

/// Both values rounded up.
GeometricTail geometric_tail(std::uint64_t n, std::uint64_t L, const Rational& c);

enum class GammaRegime { Series, ContinuedFraction };

struct GammaValue {
  double value;
  double error_bound;  // absolute
  GammaRegime regime;
};

/// Upper incomplete gamma Gamma(x, y). Uses the lower series when y < x + 1
/// and a modified Lentz continued fraction otherwise. Throws DomainError when
/// `rel_tol` is not met within the iteration cap.
GammaValue upper_incomplete_gamma(double x, double y, double rel_tol = 1e-12);

/// Certified bound on sum_{n >= g} sum_{k >= f(n)} exp(-k/(c n^2)),
/// f(n) = ceil(n^(2+eps)). Requires g^eps >= 2c/eps.
BoundCertificate double_tail_bound(std::uint64_t g, const Rational& eps, const Rational& c);

/// Smallest g for which the bound above is < 2^(-m-1).
struct GSearch {
  std::uint64_t g;
  BoundCertificate certificate;
};

/// Smallest integer g with g^eps >= 2c/eps.
std::uint64_t monotonicity_threshold(const Rational& eps, const Rational& c);

GSearch find_g(unsigned m, const Rational& eps, const Rational& c, std::uint64_t floor = 1,
               std::uint64_t cap = 100000000);

/// Mass of the standard normal on [-l, l].
double normal_band(double l);

/// Rational r in (band integral, 1) for the band half-width l: the midpoint of
/// [I, 1] rounded up to denominator 10^6.
Rational clt_r_for_band(double l_upper);

/// r for a Bernoulli(p) walk, l = sqrt(3/(p q)).
Rational clt_r(const Rational& p);
/// r for general variance v with l = 2 sqrt(3/v).
Rational clt_r_general(const Rational& v);
/// r for general variance v with l = sqrt(3/v) (band 2^k at checkpoints).
Rational clt_r_narrow(const Rational& v);

}  // namespace efflln
