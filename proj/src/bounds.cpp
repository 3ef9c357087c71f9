#include "efflln/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include "json.hpp"

#include "efflln/error.hpp"

namespace efflln {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double bump_up(double x, int ulps = 2) {
  for (int i = 0; i < ulps; ++i) x = std::nextafter(x, kInf);
  return x;
}

double bump_down(double x, int ulps = 2) {
  for (int i = 0; i < ulps; ++i) x = std::nextafter(x, -kInf);
  return x;
}

// Upper bound of exp(-x) given an exact nonnegative exponent x.
double exp_neg_up(const Rational& x) {
  if (x == 0) return 1.0;
  return bump_up(std::exp(-to_double_down(x)));
}

// Relative slack for composite double expressions (pow, gamma, products).
double rel_up(double x) { return x * (1 + 1e-12) + std::numeric_limits<double>::denorm_min(); }

std::string fmt(double v) {
  nlohmann::json j = v;
  return j.dump();
}

Rational pow2_neg(unsigned m) {
  Rational r(1);
  r.get_den() <<= m;
  return r;
}

}  // namespace

std::string BoundCertificate::to_json() const {
  nlohmann::ordered_json j;
  j["quantity"] = quantity;
  j["value"] = value;
  j["derivation"] = {{"rule", rule}, {"chain", chain}};
  nlohmann::ordered_json p = nlohmann::ordered_json::object();
  for (const auto& [k, v] : params) p[k] = v;
  j["params"] = p;
  return j.dump();
}

BoundCertificate chernoff_tail(const Rational& q, const Rational& eps, std::uint64_t n) {
  require(q > 0 && q < 1, "chernoff_tail: q must lie in (0, 1)");
  Rational lim = std::min(q, Rational(1 - q));
  require(eps > 0 && eps <= lim, "chernoff_tail: eps must satisfy 0 < eps <= min(q, 1-q) = " +
                                     to_string(lim));
  Rational expo = eps * eps * Rational(n) / 2;
  BoundCertificate c;
  c.quantity = "P(|N_1/n - q| > eps) for n Bernoulli(q) draws";
  c.value = 2 * exp_neg_up(expo);
  c.rule = "chernoff";
  c.chain = {"P(|N_1/n - q| > eps) <= 2 exp(-eps^2 n / 2)",
             "exponent eps^2 n / 2 = " + to_string(expo) + " rounded down before exp"};
  c.add_param("q", to_string(q));
  c.add_param("eps", to_string(eps));
  c.add_param("n", std::to_string(n));
  return c;
}

BoundCertificate hoeffding_tail(const Rational& a, const Rational& b, const Rational& eps,
                                std::uint64_t n) {
  require(a < b, "hoeffding_tail: need a < b");
  require(eps > 0, "hoeffding_tail: need eps > 0");
  Rational w = b - a;
  Rational expo = 2 * eps * eps * Rational(n) / (w * w);
  BoundCertificate c;
  c.quantity = "P(|S_n/n - mu| >= eps) for n i.i.d. draws in [a, b]";
  c.value = 2 * exp_neg_up(expo);
  c.rule = "hoeffding";
  c.chain = {"P(|S_n/n - mu| >= eps) <= 2 exp(-2 eps^2 n / (b-a)^2)",
             "exponent = " + to_string(expo) + " rounded down before exp"};
  c.add_param("a", to_string(a));
  c.add_param("b", to_string(b));
  c.add_param("eps", to_string(eps));
  c.add_param("n", std::to_string(n));
  return c;
}

GeometricTail geometric_tail(std::uint64_t n, std::uint64_t L, const Rational& c) {
  require(n >= 1, "geometric_tail: need n >= 1");
  require(c > 0, "geometric_tail: need c > 0");
  Rational cn2 = c * Rational(n) * Rational(n);
  Rational x = 1 / cn2;
  double numer = exp_neg_up(Rational(x * Rational(L + 1)));
  // 1 - exp(-x) is increasing in x, so a lower x gives a lower denominator.
  double denom = bump_down(-std::expm1(-to_double_down(x)));
  GeometricTail t;
  t.exact = bump_up(numer / denom);
  t.majorant = bump_up(to_double_up(cn2) * exp_neg_up(Rational(x * Rational(L))));
  return t;
}

GammaValue upper_incomplete_gamma(double x, double y, double rel_tol) {
  require(x > 0, "upper_incomplete_gamma: need x > 0");
  require(y >= 0, "upper_incomplete_gamma: need y >= 0");
  require(rel_tol > 0, "upper_incomplete_gamma: need tol > 0");
  constexpr int kMaxIter = 100000;
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  if (y == 0) {
    double g = std::tgamma(x);
    require(std::isfinite(g), "upper_incomplete_gamma: Gamma(x) overflows");
    return {g, 4 * kEps * g, GammaRegime::Series};
  }
  const double log_prefactor = x * std::log(y) - y;
  if (y < x + 1) {
    // Gamma(x) - gamma(x, y) with gamma(x, y) = y^x e^-y sum_n y^n / (x)_(n+1).
    double g = std::tgamma(x);
    require(std::isfinite(g), "upper_incomplete_gamma: Gamma(x) overflows");
    double ap = x, term = 1.0 / x, sum = term;
    int it = 0;
    for (; it < kMaxIter; ++it) {
      ap += 1;
      term *= y / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * kEps) break;
    }
    if (it == kMaxIter) throw DomainError("upper_incomplete_gamma: series did not converge");
    double lower = sum * std::exp(log_prefactor);
    double value = g - lower;
    double err = 8 * kEps * (g + lower) + 2 * kEps * it * lower;
    if (err > rel_tol * std::fabs(value))
      throw DomainError("upper_incomplete_gamma: tolerance not reachable by the series");
    return {value, err, GammaRegime::Series};
  }
  // Modified Lentz evaluation of the continued fraction for Gamma(x, y).
  const double tiny = 1e-300;
  const double cf_tol = std::max(std::min(rel_tol, 1e-3) * 1e-2, 2 * kEps);
  double b = y + 1 - x, c = 1 / tiny, d = 1 / b, h = d;
  int i = 1;
  for (; i < kMaxIter; ++i) {
    double an = -i * (i - x);
    b += 2;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1) < cf_tol) break;
  }
  if (i == kMaxIter)
    throw DomainError("upper_incomplete_gamma: continued fraction hit the iteration cap");
  double value = std::exp(log_prefactor) * h;
  double err = value * (cf_tol + kEps * (4 * (2 + std::fabs(log_prefactor)) + i));
  if (err > rel_tol * value)
    throw DomainError("upper_incomplete_gamma: tolerance not reachable by the continued fraction");
  return {value, err, GammaRegime::ContinuedFraction};
}

std::uint64_t monotonicity_threshold(const Rational& eps, const Rational& c) {
  require(eps > 0 && c > 0, "monotonicity_threshold: need eps > 0 and c > 0");
  // g^eps >= r  <=>  g^a * rden^b >= rnum^b  with eps = a/b.
  Rational r = 2 * c / eps;
  unsigned long a = mpz_get_ui(eps.get_num_mpz_t()), b = mpz_get_ui(eps.get_den_mpz_t());
  require(mpz_fits_ulong_p(eps.get_num_mpz_t()) && mpz_fits_ulong_p(eps.get_den_mpz_t()),
          "eps numerator/denominator too large");
  BigInt lhs_den, rhs;
  mpz_pow_ui(lhs_den.get_mpz_t(), r.get_den_mpz_t(), b);
  mpz_pow_ui(rhs.get_mpz_t(), r.get_num_mpz_t(), b);
  auto ok = [&](std::uint64_t g) {
    BigInt ga;
    mpz_ui_pow_ui(ga.get_mpz_t(), g, a);
    return ga * lhs_den >= rhs;
  };
  double est = std::pow(to_double(r), to_double(Rational(1 / eps)));
  std::uint64_t g = est > 1 ? static_cast<std::uint64_t>(est) : 1;
  if (g > 1) --g;
  while (!ok(g)) ++g;
  while (g > 1 && ok(g - 1)) --g;
  return g;
}

BoundCertificate double_tail_bound(std::uint64_t g, const Rational& eps, const Rational& c) {
  require(g >= 1, "double_tail_bound: need g >= 1");
  require(eps > 0 && c > 0, "double_tail_bound: need eps > 0 and c > 0");
  require(g >= monotonicity_threshold(eps, c),
          "double_tail_bound: need g^eps >= 2c/eps (g >= " +
              std::to_string(monotonicity_threshold(eps, c)) + ")");
  constexpr std::uint64_t kWindow = 32;
  const Rational two_plus = 2 + eps;
  const unsigned long en = mpz_get_ui(two_plus.get_num_mpz_t());
  const unsigned long ed = mpz_get_ui(two_plus.get_den_mpz_t());

  double head = 0;
  for (std::uint64_t n = g; n < g + kWindow; ++n) {
    std::uint64_t f = to_u64(ceil_rational_power(n, en, ed));
    head = bump_up(head + geometric_tail(n, f - 1, c).exact, 1);
  }

  const std::uint64_t N = g + kWindow;
  const double cd = to_double_up(c);
  const double inv_c_down = to_double_down(Rational(1 / c));
  const double eps_d = to_double(eps);
  // N^eps from below, then exp(-N^eps / c) from above.
  double n_eps = std::pow(static_cast<double>(N), eps_d) * (1 - 1e-12);
  double e_term = rel_up(std::exp(-n_eps * inv_c_down));
  double lead = rel_up(static_cast<double>(N) * static_cast<double>(N) * e_term);
  double shape = to_double(Rational(3 / eps));
  double y = n_eps * inv_c_down;
  GammaValue gam = upper_incomplete_gamma(shape, y, 1e-10);
  double integral =
      rel_up(std::pow(cd, shape) / to_double_down(eps) * rel_up(gam.value + gam.error_bound));
  double factor = rel_up(cd * std::exp(to_double_up(Rational(1 / (c * Rational(N) * Rational(N))))));
  double tail = rel_up(factor * (lead + integral));

  BoundCertificate cert;
  cert.quantity = "sum_{n>=g} sum_{k>=ceil(n^(2+eps))} exp(-k/(c n^2))";
  cert.value = rel_up(head + tail);
  cert.rule = "double_tail";
  cert.chain = {
      "n in [g, g+32): inner sums in closed form exp(-f/(cn^2)) / (1 - exp(-1/(cn^2)))",
      "n >= N = g+32: inner sum <= c n^2 exp(1/(cN^2)) exp(-n^eps / c)",
      "t^2 exp(-t^eps/c) decreasing for t^eps >= 2c/eps: sum_{n>=N} <= N^2 exp(-N^eps/c) + "
      "integral_N^inf",
      "integral_N^inf t^2 exp(-t^eps/c) dt = c^(3/eps)/eps * Gamma(3/eps, N^eps/c)",
      "all terms rounded up"};
  cert.add_param("g", std::to_string(g));
  cert.add_param("eps", to_string(eps));
  cert.add_param("c", to_string(c));
  cert.add_param("head", fmt(head));
  cert.add_param("tail", fmt(tail));
  return cert;
}

GSearch find_g(unsigned m, const Rational& eps, const Rational& c, std::uint64_t floor,
               std::uint64_t cap) {
  require(m >= 1, "find_g: need m >= 1");
  const double target = to_double_down(pow2_neg(m + 1));
  std::uint64_t lo = std::max<std::uint64_t>({floor, monotonicity_threshold(eps, c), 1});
  auto good = [&](std::uint64_t g) { return double_tail_bound(g, eps, c).value < target; };
  if (!good(lo)) {
    // Bounds are nonincreasing in g: gallop, then bisect.
    std::uint64_t step = 1, hi = lo;
    while (true) {
      if (hi >= cap) throw CapExceeded("find_g: no g below " + std::to_string(cap));
      lo = hi;
      hi = std::min(cap, hi + step);
      step *= 2;
      if (good(hi)) break;
    }
    while (hi - lo > 1) {
      std::uint64_t mid = lo + (hi - lo) / 2;
      (good(mid) ? hi : lo) = mid;
    }
    lo = hi;
  }
  GSearch out{lo, double_tail_bound(lo, eps, c)};
  out.certificate.add_param("target", "2^-" + std::to_string(m + 1));
  return out;
}

double normal_band(double l) {
  require(l >= 0, "normal_band: need l >= 0");
  if (std::isinf(l)) return 1.0;
  return std::erf(l / std::sqrt(2.0));
}

// Works on the complement 1 - band = erfc(l/sqrt2) so that wide bands whose
// integral rounds to 1.0 in double still get an r strictly below 1.
Rational clt_r_for_band(double l_upper) {
  double tail = bump_down(std::erfc(l_upper / std::sqrt(2.0)), 4);
  require(tail > 0, "band integral indistinguishable from 1 in double precision");
  Rational hi = Rational(1) - Rational(tail);
  Rational mid = (Rational(1) + hi) / 2;
  BigInt den(1000000);
  for (int i = 0; i < 120; ++i, den *= 1000) {
    Rational scaled = mid * Rational(den);
    Rational r(ceil(scaled), den);
    r.canonicalize();
    if (r < 1 && r > hi) return r;
  }
  throw DomainError("no rational r found strictly between the band integral and 1");
}

Rational clt_r(const Rational& p) {
  require(p > 0 && p < 1, "clt_r: need 0 < p < 1");
  double l = bump_up(std::sqrt(to_double_up(Rational(3 / (p * (1 - p))))));
  return clt_r_for_band(l);
}

Rational clt_r_general(const Rational& v) {
  require(v > 0, "clt_r_general: need v > 0");
  double l = bump_up(2 * std::sqrt(to_double_up(Rational(3 / v))));
  return clt_r_for_band(l);
}

Rational clt_r_narrow(const Rational& v) {
  require(v > 0, "clt_r_narrow: need v > 0");
  double l = bump_up(std::sqrt(to_double_up(Rational(3 / v))));
  return clt_r_for_band(l);
}

}  // namespace efflln
