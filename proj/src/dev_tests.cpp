#include "efflln/dev_tests.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "binomial.hpp"
#include "efflln/error.hpp"
#include "efflln/kernels.hpp"
#include "json.hpp"

namespace efflln {

namespace {

constexpr double kU = std::numeric_limits<double>::epsilon() / 2;

double bump_up(double x, int ulps = 2) {
  for (int i = 0; i < ulps; ++i) x = std::nextafter(x, std::numeric_limits<double>::infinity());
  return x;
}

Rational pow2_neg(unsigned m) {
  Rational r(1);
  r.get_den() <<= m;
  return r;
}

BigInt pow_z(const BigInt& b, std::uint64_t e) {
  BigInt r;
  mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), e);
  return r;
}

BigInt binom(std::uint64_t n, std::uint64_t k) {
  BigInt r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

// Integer range of j with |j - center| <= half (closed) or < half (open),
// clipped to [0, top]. Empty when lo > hi.
struct JRange {
  std::int64_t lo, hi;
  bool empty() const { return lo > hi; }
};

JRange band_range(const Rational& center, const Rational& half, bool closed, std::int64_t top) {
  Rational a = center - half, b = center + half;
  std::int64_t lo, hi;
  if (closed) {
    lo = to_i64(ceil(a));
    hi = to_i64(floor(b));
  } else {
    lo = to_i64(floor(a)) + 1;
    hi = to_i64(ceil(b)) - 1;
  }
  return {std::max<std::int64_t>(lo, 0), std::min(hi, top)};
}

}  // namespace

// ------------------------------------------------------- deviation sets

Enclosure deviation_set_measure(const DeviationSpec& spec, const PrecisionBudget& budget) {
  require(spec.k >= 1 && spec.n >= 1, "deviation set needs k >= 1 and n >= 1");
  require(spec.scale > 0, "deviation threshold scale must be positive");
  const Rational thr = spec.scale / Rational(spec.n);
  const auto K = static_cast<std::int64_t>(spec.k);

  if (spec.q.is_exact()) {
    const Rational& q = spec.q.exact();
    require(q >= 0 && q <= 1, "target frequency must lie in [0, 1]");
    // Allowed (non-deviating) j form a band around kq; sum its complement.
    JRange keep = band_range(q * Rational(K), thr * Rational(K), spec.strict, K);
    const BigInt qn = q.get_num(), qd = q.get_den(), w0 = qd - qn;
    BigInt total = 0;
    for (std::int64_t j = 0; j <= K; ++j) {
      if (j >= keep.lo && j <= keep.hi) {
        j = keep.hi;
        continue;
      }
      total += binom(spec.k, static_cast<std::uint64_t>(j)) * pow_z(qn, static_cast<std::uint64_t>(j)) *
               pow_z(w0, static_cast<std::uint64_t>(K - j));
    }
    Rational r(total, pow_z(qd, spec.k));
    r.canonicalize();
    return Enclosure::point(r);
  }

  // Interval q: decide each j's membership by comparing q with j/k -+ thr.
  Enclosure total{0, 0};
  Enclosure qe = spec.q.approx(budget.max_bits);
  if (qe.lo < 0) qe.lo = 0;
  if (qe.hi > 1) qe.hi = 1;
  for (std::int64_t j = 0; j <= K; ++j) {
    Rational f(j, static_cast<unsigned long>(K));
    f.canonicalize();
    int below = compare(spec.q, f - thr, budget);  // sign(q - (f - thr))
    int above = compare(spec.q, f + thr, budget);
    bool deviates = spec.strict ? (below < 0 || above > 0) : (below <= 0 || above >= 0);
    if (!deviates) continue;
    BigInt c = binom(spec.k, static_cast<std::uint64_t>(j));
    Rational lo = Rational(c), hi = Rational(c);
    Rational one_lo = 1 - qe.hi, one_hi = 1 - qe.lo;
    for (std::int64_t i = 0; i < j; ++i) {
      lo *= qe.lo;
      hi *= qe.hi;
    }
    for (std::int64_t i = j; i < K; ++i) {
      lo *= one_lo;
      hi *= one_hi;
    }
    total = total + Enclosure{lo, hi};
  }
  return total;
}

// -------------------------------------------------- truncated unions

Rational truncated_union_measure(const UnionSpec& spec) {
  const Rational& q = spec.q;
  require(q >= 0 && q <= 1, "target frequency must lie in [0, 1]");
  require(spec.n_lo >= 1 && spec.n_lo <= spec.n_hi, "need 1 <= n_lo <= n_hi");
  require(spec.k_start.size() == spec.n_hi - spec.n_lo + 1, "one k_start per n required");
  const std::uint64_t K = spec.k_max;
  if (K == 0) return 0;

  // For each k, the largest applicable n has the smallest threshold and its
  // deviation set contains those of the smaller n at the same length.
  std::vector<std::uint64_t> tightest(K + 1, 0);
  for (std::uint64_t n = spec.n_lo; n <= spec.n_hi; ++n) {
    std::uint64_t ks = std::max<std::uint64_t>(1, spec.k_start[n - spec.n_lo]);
    for (std::uint64_t k = ks; k <= K; ++k) tightest[k] = std::max(tightest[k], n);
  }

  const BigInt qn = q.get_num(), qd = q.get_den(), w0 = qd - qn;
  const bool unit = qn == 1 && w0 == 1;
  // W[j]: summed weights qn^j w0^(k-j) of surviving length-k paths with j ones.
  std::vector<BigInt> W(K + 2);
  W[0] = 1;
  std::int64_t lo = 0, hi = 0;
  BigInt t;
  for (std::uint64_t k = 1; k <= K; ++k) {
    W[static_cast<std::size_t>(hi + 1)] = 0;
    for (std::int64_t j = hi + 1; j >= lo; --j) {
      auto uj = static_cast<std::size_t>(j);
      if (unit) {
        if (j > lo) W[uj] += W[uj - 1];
      } else {
        W[uj] *= w0;
        if (j > lo) {
          t = W[uj - 1] * qn;
          W[uj] += t;
        }
      }
    }
    ++hi;
    if (qn == 0) hi = lo;  // only zeros possible
    if (w0 == 0) {
      // only ones possible: the mass moves up by one.
      W[static_cast<std::size_t>(lo)] = 0;
      ++lo;
    }
    if (std::uint64_t n = tightest[k]) {
      JRange keep = band_range(q * Rational(k), spec.scale * Rational(k) / Rational(n), spec.strict,
                               static_cast<std::int64_t>(k));
      for (std::int64_t j = lo; j <= hi; ++j)
        if (j < keep.lo || j > keep.hi) W[static_cast<std::size_t>(j)] = 0;
      if (keep.empty() || keep.hi < lo || keep.lo > hi) return 1;
      lo = std::max(lo, keep.lo);
      hi = std::min(hi, keep.hi);
    }
  }
  BigInt survive = 0;
  for (std::int64_t j = lo; j <= hi; ++j) survive += W[static_cast<std::size_t>(j)];
  Rational r(survive, pow_z(qd, K));
  r.canonicalize();
  return 1 - r;
}

double TestEnclosure::width() const { return upper - to_double_down(lower); }

namespace {

// Smallest K with sum_n 2 geometric_tail(n, K, c).exact < target.
std::uint64_t search_k(std::uint64_t n_lo, std::uint64_t n_hi, const Rational& c, double target,
                       double* tail_out) {
  auto tail = [&](std::uint64_t K) {
    double s = 0;
    for (std::uint64_t n = n_lo; n <= n_hi; ++n) s = bump_up(s + 2 * geometric_tail(n, K, c).exact, 1);
    return s;
  };
  std::uint64_t lo = 0, hi = 1;
  while (!(tail(hi) < target)) {
    lo = hi;
    hi *= 2;
    if (hi > (1ULL << 40)) throw CapExceeded("no truncation length K found");
  }
  while (hi - lo > 1) {
    std::uint64_t mid = lo + (hi - lo) / 2;
    (tail(mid) < target ? hi : lo) = mid;
  }
  *tail_out = tail(hi);
  return hi;
}

std::vector<std::uint64_t> schedule(std::uint64_t n_lo, std::uint64_t n_hi, const Rational& eps) {
  const Rational e = 2 + eps;
  std::vector<std::uint64_t> out;
  for (std::uint64_t n = n_lo; n <= n_hi; ++n)
    out.push_back(to_u64(ceil_rational_power(n, mpz_get_ui(e.get_num_mpz_t()),
                                             mpz_get_ui(e.get_den_mpz_t()))));
  return out;
}

}  // namespace

TestEnclosure lln_test_measure(unsigned m, const Rational& eps, const Rational& q, unsigned l) {
  require(m >= 1 && l >= 1, "lln_test_measure: need m, l >= 1");
  require(eps > 0, "lln_test_measure: need eps > 0");
  require(q > 0 && q < 1, "lln_test_measure: need 0 < q < 1");
  const Rational one = 1;
  // Chernoff with eps = 2/n needs 2/n <= min(q, 1-q).
  const std::uint64_t n0 = to_u64(ceil(Rational(2 / std::min(q, Rational(1 - q)))));

  GSearch g = find_g(m, eps, one, n0);
  GSearch G = find_g(l + 2, eps, one, g.g);
  double tail1 = 0;
  const std::uint64_t K = search_k(g.g, G.g, one, to_double_down(pow2_neg(l + 2)), &tail1);
  BoundCertificate n_tail = double_tail_bound(G.g + 1, eps, one);
  double tail2 = bump_up(2 * n_tail.value);

  UnionSpec u;
  u.q = q;
  u.scale = 2;
  u.strict = true;
  u.n_lo = g.g;
  u.n_hi = G.g;
  u.k_start = schedule(g.g, G.g, eps);
  u.k_max = K;

  TestEnclosure out;
  out.lower = truncated_union_measure(u);
  out.n_lo = g.g;
  out.n_hi = G.g;
  out.k_max = K;
  out.upper = bump_up(to_double_up(out.lower) + tail1 + tail2, 2);

  BoundCertificate k_tail;
  k_tail.quantity = "sum_{n=g}^{G} sum_{k>K} P(|N_1/k - q| > 2/n)";
  k_tail.value = tail1;
  k_tail.rule = "chernoff+geometric";
  k_tail.chain = {"P(|N_1/k - q| > 2/n) <= 2 exp(-2k/n^2) <= 2 exp(-k/n^2) for n >= n0",
                  "sum_{k>K} exp(-k/n^2) in closed form"};
  k_tail.add_param("K", std::to_string(K));
  BoundCertificate nt = n_tail;
  nt.quantity = "sum_{n>G} sum_{k>=f(n)} 2 exp(-k/n^2)";
  nt.value = tail2;
  out.tails = {k_tail, nt};

  out.certificate.quantity = "measure of the LLN test set S(m)";
  out.certificate.value = out.upper;
  out.certificate.rule = "truncated_union+tails";
  out.certificate.chain = {
      "S(m) = union over n >= g, k >= f(n) of deviation sets |N_1/k - q| > 2/n",
      "exact measure of the part with n in [g, G], k in [f(n), K] by first-exit dynamic programming",
      "k > K within n in [g, G]: Chernoff then geometric tail",
      "n > G: Chernoff then double_tail_bound"};
  out.certificate.add_param("m", std::to_string(m));
  out.certificate.add_param("l", std::to_string(l));
  out.certificate.add_param("eps", to_string(eps));
  out.certificate.add_param("q", to_string(q));
  out.certificate.add_param("g", std::to_string(g.g));
  out.certificate.add_param("G", std::to_string(G.g));
  out.certificate.add_param("K", std::to_string(K));

  require(out.width() < to_double_down(pow2_neg(l)), "lln_test_measure: enclosure wider than 2^-l");
  require(out.upper < to_double_down(pow2_neg(m)),
          "lln_test_measure: upper end not below 2^-m; increase l");
  return out;
}

TestEnclosure window_failure_measure(const Rational& q, const Rational& eps, std::uint64_t n_lo,
                                     std::uint64_t n_hi, const Rational& scale, bool strict,
                                     unsigned l) {
  require(q >= 0 && q <= 1, "window_failure_measure: need 0 <= q <= 1");
  require(eps > 0 && scale > 0, "window_failure_measure: need eps > 0 and scale > 0");
  require(n_lo >= 1 && n_lo <= n_hi, "window_failure_measure: need 1 <= n_lo <= n_hi");
  // Hoeffding: P(|N_1/k - q| >= s/n) <= 2 exp(-2 s^2 k / n^2) = 2 exp(-k / (c n^2)).
  const Rational c = 1 / (2 * scale * scale);
  double tail = 0;
  const std::uint64_t K = search_k(n_lo, n_hi, c, to_double_down(pow2_neg(l + 1)), &tail);

  UnionSpec u;
  u.q = q;
  u.scale = scale;
  u.strict = strict;
  u.n_lo = n_lo;
  u.n_hi = n_hi;
  u.k_start = schedule(n_lo, n_hi, eps);
  u.k_max = K;

  TestEnclosure out;
  out.lower = truncated_union_measure(u);
  out.n_lo = n_lo;
  out.n_hi = n_hi;
  out.k_max = K;
  out.upper = bump_up(to_double_up(out.lower) + tail, 2);
  BoundCertificate k_tail;
  k_tail.quantity = "sum_{n in window} sum_{k>K} P(|N_1/k - q| >= s/n)";
  k_tail.value = tail;
  k_tail.rule = "hoeffding+geometric";
  k_tail.chain = {"P(|N_1/k - q| >= s/n) <= 2 exp(-2 s^2 k / n^2)",
                  "sum_{k>K} exp(-k/(c n^2)) in closed form, c = 1/(2 s^2)"};
  k_tail.add_param("K", std::to_string(K));
  out.tails = {k_tail};
  out.certificate.quantity = "probability that some n in the window fails at some k >= f(n)";
  out.certificate.value = out.upper;
  out.certificate.rule = "truncated_union+tails";
  out.certificate.chain = {"exact measure of the union for k <= K by first-exit dynamic programming",
                           "k > K: Hoeffding then geometric tail"};
  out.certificate.add_param("q", to_string(q));
  out.certificate.add_param("eps", to_string(eps));
  out.certificate.add_param("n_lo", std::to_string(n_lo));
  out.certificate.add_param("n_hi", std::to_string(n_hi));
  out.certificate.add_param("scale", to_string(scale));
  out.certificate.add_param("strict", strict ? "true" : "false");
  out.certificate.add_param("K", std::to_string(K));
  require(out.width() < to_double_down(pow2_neg(l)), "window_failure_measure: enclosure too wide");
  return out;
}

// ---------------------------------------------------- segment probabilities

SegmentProbability segment_band_probability(const Rational& p, unsigned n, std::uint64_t exact_cap) {
  require(p > 0 && p < 1, "segment_band_probability: need 0 < p < 1");
  require(n <= 28, "segment_band_probability: n too large");
  const std::uint64_t N = 3ULL << (2 * n);
  const auto band = Rational(BigInt(3) << n);
  JRange r = band_range(p * Rational(N), band, true, static_cast<std::int64_t>(N));
  SegmentProbability out;
  if (r.empty()) return out;

  if (N <= exact_cap) {
    const BigInt pn = p.get_num(), pd = p.get_den(), w0 = pd - pn;
    auto j = static_cast<std::uint64_t>(r.lo);
    BigInt term = binom(N, j) * pow_z(pn, j) * pow_z(w0, N - j);
    BigInt sum = term;
    for (; j < static_cast<std::uint64_t>(r.hi); ++j) {
      // T(j+1) = T(j) (N-j) pn / ((j+1) w0), exact.
      term *= (N - j);
      term *= pn;
      BigInt d = BigInt(j + 1) * w0;
      mpz_divexact(term.get_mpz_t(), term.get_mpz_t(), d.get_mpz_t());
      sum += term;
    }
    Rational e(sum, pow_z(pd, N));
    e.canonicalize();
    out.exact = e;
    out.value = to_double(e);
    out.error_bound = std::fabs(out.value) * kU;
    return out;
  }

  const double pd = to_double(p), qd = to_double(Rational(1 - p));
  double s = 0, comp = 0;
  for (std::int64_t j = r.lo; j <= r.hi; ++j) {
    double t = detail::dbinom(static_cast<std::uint64_t>(j), N, pd, qd);
    double u = s + t;  // Neumaier
    comp += std::fabs(s) >= std::fabs(t) ? (s - u) + t : (t - u) + s;
    s = u;
  }
  out.value = s + comp;
  // Per-term density error, the rounding of p itself, and summation.
  out.error_bound = out.value * (detail::kDbinomRelErr + 4 * kU * static_cast<double>(N)) +
                    4 * kU * out.value;
  return out;
}

SpeedLimitConstants speed_limit_constants(const Rational& p, unsigned n_max) {
  require(n_max >= 1, "speed_limit_constants: need n_max >= 1");
  SpeedLimitConstants out;
  out.r = clt_r(p);
  out.band_integral = normal_band(std::sqrt(to_double(Rational(3 / (p * (1 - p))))));
  out.n_max = n_max;
  for (unsigned n = 1; n <= n_max; ++n) out.segments.push_back(segment_band_probability(p, n));
  const double r = to_double_down(out.r);
  auto below = [&](const SegmentProbability& s) {
    if (s.exact) return *s.exact < out.r;
    return s.value + s.error_bound < r;
  };
  std::optional<unsigned> n0;
  for (unsigned n = n_max; n >= 1; --n) {
    if (!below(out.segments[n - 1])) break;
    n0 = n;
  }
  out.n0 = n0;
  // Berry-Esseen (constant 0.4748) on the CDF at both band ends.
  const double pp = to_double(p), qq = 1 - pp;
  const double rho_over_sigma3 = (pp * pp + qq * qq) / std::sqrt(pp * qq);
  const double N = 3.0 * std::pow(4.0, n_max);
  const double margin = 2 * 0.4748 * rho_over_sigma3 / std::sqrt(N);
  std::ostringstream note;
  note << "beyond n=" << n_max << " only the normal approximation is available; Berry-Esseen margin "
       << margin << " vs r - I = " << (to_double(out.r) - out.band_integral)
       << (margin < to_double(out.r) - out.band_integral ? " (certified)" : " (not certified)");
  out.beyond_cap_note = note.str();
  return out;
}

// ------------------------------------------------------- checkpoint DP

namespace {

struct Lattice {
  // Step values are (wmin + g * y) / D for integer y >= 0.
  std::vector<double> step_pmf;  // over y
  std::int64_t ymax = 0;
  BigInt D = 1, g = 1, wmin = 0;
  Rational mu;
  bool two_point = false;
  double p_hi = 0, p_lo = 0;  // two-point probabilities of y = 1 and y = 0
  bool constant = false;
};

Lattice make_lattice(const std::vector<Rational>& values, const std::vector<Rational>& probs) {
  require(values.size() == probs.size() && !values.empty(), "step values and probabilities differ in size");
  Rational total = 0;
  std::vector<Rational> v, p;
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(probs[i] >= 0, "negative step probability");
    total += probs[i];
    if (probs[i] > 0) {
      v.push_back(values[i]);
      p.push_back(probs[i]);
    }
  }
  require(total == 1, "step probabilities must sum to 1");
  Lattice L;
  L.mu = 0;
  for (std::size_t i = 0; i < v.size(); ++i) L.mu += v[i] * p[i];
  for (const auto& x : v) mpz_lcm(L.D.get_mpz_t(), L.D.get_mpz_t(), x.get_den_mpz_t());
  std::vector<BigInt> w;
  for (const auto& x : v) {
    Rational s = x * Rational(L.D);
    w.push_back(s.get_num());
  }
  L.wmin = *std::min_element(w.begin(), w.end());
  BigInt g = 0;
  for (auto& x : w) {
    x -= L.wmin;
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_mpz_t());
  }
  if (g == 0) {
    L.constant = true;
    return L;
  }
  L.g = g;
  std::vector<std::int64_t> y;
  for (auto& x : w) y.push_back(to_i64(BigInt(x / g)));
  L.ymax = *std::max_element(y.begin(), y.end());
  require(L.ymax <= 1 << 16, "step support spread too wide for the lattice DP");
  L.step_pmf.assign(static_cast<std::size_t>(L.ymax) + 1, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) L.step_pmf[static_cast<std::size_t>(y[i])] += to_double(p[i]);
  if (L.ymax == 1) {
    L.two_point = true;
    Rational ph = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == 1) ph += p[i];
    L.p_hi = to_double(ph);
    L.p_lo = to_double(Rational(1 - ph));
  }
  return L;
}

// pmf of the sum of `steps` draws, by repeated squaring. Entries carry a
// relative error of at most *rel.
std::vector<double> convolution_power(const std::vector<double>& step, std::uint64_t steps,
                                      double* rel) {
  std::vector<double> result{1.0}, base = step;
  double r_res = 0, r_base = kU;
  auto conv = [](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] != 0) kernels::axpy(std::span<double>(out).subspan(i, b.size()), a[i], b);
    return out;
  };
  while (steps) {
    if (steps & 1) {
      r_res = r_res + r_base + static_cast<double>(std::min(result.size(), base.size()) + 1) * kU;
      result = conv(result, base);
    }
    steps >>= 1;
    if (steps) {
      r_base = 2 * r_base + static_cast<double>(base.size() + 1) * kU;
      base = conv(base, base);
    }
  }
  *rel = r_res;
  return result;
}

struct Band {
  std::int64_t lo, hi;
};

// Range of y with |(wmin L + g y)/D - L mu| within 2^(k+offset).
Band checkpoint_band(const Lattice& lat, std::uint64_t L, unsigned k, unsigned offset,
                     Comparison cmp) {
  Rational B(BigInt(1) << (k + offset));
  Rational center = (Rational(L) * lat.mu * Rational(lat.D) - Rational(lat.wmin) * Rational(L)) /
                    Rational(lat.g);
  Rational half = B * Rational(lat.D) / Rational(lat.g);
  JRange r = band_range(center, half, cmp == Comparison::LessEqual,
                        static_cast<std::int64_t>(L) * lat.ymax);
  return {r.lo, r.hi};
}

}  // namespace

DpResult lattice_checkpoint_probability(const std::vector<Rational>& values,
                                        const std::vector<Rational>& probs, unsigned n_lo,
                                        unsigned n_hi, unsigned band_offset, Comparison comparison,
                                        std::uint64_t cap) {
  require(n_lo >= 1 && n_lo <= n_hi, "checkpoint range needs 1 <= n_lo <= n_hi");
  require(n_hi <= 30, "checkpoint index too large");
  const std::uint64_t top = 1ULL << (2 * n_hi);
  if (top > cap)
    throw CapExceeded("checkpoint DP length 4^" + std::to_string(n_hi) + " exceeds the cap " +
                      std::to_string(cap));
  Lattice lat = make_lattice(values, probs);
  if (lat.constant) return {1.0, 0.0};

  std::vector<double> dist;  // over y in [band.lo, band.hi]
  Band band{0, 0};
  double rel = 0;
  for (unsigned k = n_lo; k <= n_hi; ++k) {
    const std::uint64_t L = 1ULL << (2 * k);
    const std::uint64_t steps = k == n_lo ? L : L - (L >> 2);
    Band nb = checkpoint_band(lat, L, k, band_offset, comparison);
    if (nb.lo > nb.hi) return {0.0, 0.0};
    std::vector<double> next(static_cast<std::size_t>(nb.hi - nb.lo + 1), 0.0);
    const std::vector<double> prev = k == n_lo ? std::vector<double>{1.0} : dist;
    const Band pb = k == n_lo ? Band{0, 0} : band;
    // Kernel entries t with pb.lo + t <= nb.hi and pb.hi + t >= nb.lo.
    const std::int64_t t_lo = std::max<std::int64_t>(0, nb.lo - pb.hi);
    const std::int64_t t_hi = std::min<std::int64_t>(static_cast<std::int64_t>(steps) * lat.ymax, nb.hi - pb.lo);
    std::vector<double> kern;
    double krel = 0;
    if (t_lo <= t_hi) {
      if (lat.two_point) {
        kern.resize(static_cast<std::size_t>(t_hi - t_lo + 1));
        for (std::int64_t t = t_lo; t <= t_hi; ++t)
          kern[static_cast<std::size_t>(t - t_lo)] =
              detail::dbinom(static_cast<std::uint64_t>(t), steps, lat.p_hi, lat.p_lo);
        krel = detail::kDbinomRelErr;
      } else {
        std::vector<double> full = convolution_power(lat.step_pmf, steps, &krel);
        kern.assign(full.begin() + t_lo, full.begin() + t_hi + 1);
      }
      for (std::size_t i = 0; i < prev.size(); ++i) {
        const double w = prev[i];
        if (w == 0) continue;
        const std::int64_t y = pb.lo + static_cast<std::int64_t>(i);
        // Targets y + t in [nb.lo, nb.hi] with t in [t_lo, t_hi].
        const std::int64_t a = std::max(t_lo, nb.lo - y), b = std::min(t_hi, nb.hi - y);
        if (a > b) continue;
        kernels::axpy(std::span<double>(next).subspan(static_cast<std::size_t>(y + a - nb.lo),
                                                      static_cast<std::size_t>(b - a + 1)),
                      w, std::span<const double>(kern).subspan(static_cast<std::size_t>(a - t_lo),
                                                               static_cast<std::size_t>(b - a + 1)));
      }
    }
    rel = rel + krel + static_cast<double>(prev.size() + 1) * kU;
    dist = std::move(next);
    band = nb;
  }
  DpResult out;
  out.value = kernels::sum(dist);
  rel += static_cast<double>(dist.size() + 1) * kU;
  out.error_bound = out.value * rel;
  out.value = std::clamp(out.value, 0.0, 1.0);  // rounding can push a sure event past 1
  return out;
}

DpResult checkpoint_joint_probability(const CheckpointSpec& spec, std::uint64_t cap) {
  require(spec.p > 0 && spec.p < 1, "checkpoint probability needs 0 < p < 1");
  return lattice_checkpoint_probability({Rational(0), Rational(1)}, {Rational(1 - spec.p), spec.p},
                                        spec.n_lo, spec.n_hi, spec.band_offset, spec.comparison, cap);
}

// -------------------------------------------------- checkpoint reports

bool CheckpointReport::all_passed() const {
  return std::all_of(records.begin(), records.end(), [](const CheckpointRecord& r) { return r.pass; });
}

static nlohmann::ordered_json rational_json(const Rational& q) {
  if (q.get_den() == 1 && mpz_fits_slong_p(q.get_num_mpz_t())) return mpz_get_si(q.get_num_mpz_t());
  return to_string(q);
}

std::string CheckpointReport::to_jsonl() const {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["k"] = r.k;
    j["length"] = r.length;
    j["count_or_sum"] = rational_json(r.value);
    j["band"] = rational_json(r.band);
    j["pass"] = r.pass;
    out += j.dump() + "\n";
  }
  return out;
}

namespace {

unsigned max_depth(std::uint64_t length) {
  unsigned d = 0;
  while (d < 31 && (1ULL << (2 * (d + 1))) <= length) ++d;
  return d;
}

// Per-symbol counts at every checkpoint length 4^k, k in [n_lo, last].
std::vector<std::vector<std::uint64_t>> checkpoint_counts(const SequencePrefix& s, unsigned n_lo,
                                                          unsigned last, std::size_t symbols) {
  std::vector<std::vector<std::uint64_t>> out;
  std::vector<std::uint64_t> acc(symbols, 0);
  std::uint64_t done = 0;
  for (unsigned k = n_lo; k <= last; ++k) {
    const std::uint64_t L = 1ULL << (2 * k);
    auto chunk = s.view().subspan(done, L - done);
    for (std::size_t a = 0; a < symbols; ++a)
      acc[a] += kernels::count_equal(chunk, static_cast<std::uint16_t>(a));
    done = L;
    out.push_back(acc);
  }
  return out;
}

}  // namespace

CheckpointReport checkpoint_membership(const SequencePrefix& s, const CheckpointSpec& spec) {
  require(spec.n_lo >= 1 && spec.n_lo <= spec.n_hi, "checkpoint range needs 1 <= n_lo <= n_hi");
  require(spec.symbol < s.alphabet_size(), "checkpoint symbol outside the alphabet");
  CheckpointReport rep;
  rep.n_lo = spec.n_lo;
  rep.n_hi = spec.n_hi;
  const unsigned depth = max_depth(s.length());
  const unsigned last = std::min(spec.n_hi, depth);
  rep.undetermined_beyond = depth < spec.n_hi;
  std::uint64_t count = 0, done = 0;
  bool ok = true;
  for (unsigned k = spec.n_lo; k <= last; ++k) {
    const std::uint64_t L = 1ULL << (2 * k);
    count += kernels::count_equal(s.view().subspan(done, L - done), spec.symbol);
    done = L;
    CheckpointRecord r;
    r.k = k;
    r.length = L;
    r.value = Rational(BigInt(std::to_string(count)));
    r.band = Rational(BigInt(1) << (k + spec.band_offset));
    Rational dev = abs(Rational(r.value - Rational(L) * spec.p));
    r.pass = spec.comparison == Comparison::LessEqual ? dev <= r.band : dev < r.band;
    ok = ok && r.pass;
    if (ok) rep.passed_through = k;
    rep.records.push_back(std::move(r));
  }
  return rep;
}

CheckpointReport rv_checkpoint_membership(const SequencePrefix& s, const FiniteProbabilitySpace& P,
                                          const RealRandomVariable& X, const CheckpointSpec& spec) {
  require(spec.n_lo >= 1 && spec.n_lo <= spec.n_hi, "checkpoint range needs 1 <= n_lo <= n_hi");
  require(P.size() == X.size() && s.alphabet_size() == P.size(),
          "sequence, space and random variable must share an alphabet");
  CheckpointReport rep;
  rep.n_lo = spec.n_lo;
  rep.n_hi = spec.n_hi;
  const unsigned depth = max_depth(s.length());
  const unsigned last = std::min(spec.n_hi, depth);
  rep.undetermined_beyond = depth < spec.n_hi;
  if (last < spec.n_lo) return rep;
  auto counts = checkpoint_counts(s, spec.n_lo, last, P.size());
  const bool exact = P.is_exact() && X.is_exact();
  Rational mu = exact ? rv_mean(P, X).lo : Rational(0);
  bool ok = true;
  for (unsigned k = spec.n_lo; k <= last; ++k) {
    const auto& c = counts[k - spec.n_lo];
    const std::uint64_t L = 1ULL << (2 * k);
    CheckpointRecord r;
    r.k = k;
    r.length = L;
    r.band = Rational(BigInt(1) << (k + spec.band_offset));
    if (exact) {
      Rational sum = 0;
      for (std::size_t a = 0; a < c.size(); ++a)
        if (c[a]) sum += Rational(BigInt(std::to_string(c[a]))) * X.exact_value(static_cast<Symbol>(a));
      r.value = sum;
      Rational dev = abs(Rational(sum - Rational(L) * mu));
      r.pass = spec.comparison == Comparison::LessEqual ? dev <= r.band : dev < r.band;
    } else {
      // Refine until |sum_a (N_a - L P(a)) X(a)| is decided against the band.
      const PrecisionBudget& bud = P.budget();
      std::optional<bool> decided;
      for (unsigned bits = bud.initial_bits; bits <= bud.max_bits && !decided; bits *= 2) {
        Enclosure d{0, 0}, sum{0, 0};
        for (std::size_t a = 0; a < c.size(); ++a) {
          auto sa = static_cast<Symbol>(a);
          Enclosure pa = P.prob(sa).approx(bits);
          Enclosure xa = X.value(sa).approx(bits);
          Enclosure na = Enclosure::point(Rational(BigInt(std::to_string(c[a]))));
          d = d + (na - Enclosure::point(Rational(L)) * pa) * xa;
          sum = sum + na * xa;
        }
        r.value = (sum.lo + sum.hi) / 2;
        Rational lo = d.lo <= 0 && d.hi >= 0 ? Rational(0) : std::min(abs(d.lo), abs(d.hi));
        Rational hi = std::max(abs(d.lo), abs(d.hi));
        if (spec.comparison == Comparison::LessEqual) {
          if (hi <= r.band) decided = true;
          else if (lo > r.band) decided = false;
        } else {
          if (hi < r.band) decided = true;
          else if (lo >= r.band) decided = false;
        }
      }
      if (!decided)
        throw UndecidedComparison("checkpoint " + std::to_string(k) + " undecided at " +
                                  std::to_string(bud.max_bits) + " bits");
      r.pass = *decided;
    }
    ok = ok && r.pass;
    if (ok) rep.passed_through = k;
    rep.records.push_back(std::move(r));
  }
  return rep;
}

// -------------------------------------------------------- test families

TestFamily lln_test_family(unsigned m, const Rational& eps, const Rational& q) {
  require(q > 0 && q < 1, "lln_test_family: need 0 < q < 1");
  const std::uint64_t n0 = to_u64(ceil(Rational(2 / std::min(q, Rational(1 - q)))));
  GSearch g = find_g(m, eps, Rational(1), n0);
  TestFamily t;
  t.m = m;
  t.description = "words of length k >= ceil(n^(2+eps)) with |N_1/k - q| > 2/n, over n >= " +
                  std::to_string(g.g);
  t.certificate = g.certificate;
  t.certificate.quantity = "measure of the LLN test set S(m)";
  t.certificate.value = bump_up(2 * g.certificate.value);
  t.certificate.rule = "chernoff+double_tail";
  t.certificate.chain.insert(t.certificate.chain.begin(),
                             "P(|N_1/k - q| > 2/n) <= 2 exp(-k/n^2) for n >= " + std::to_string(n0));
  require(t.certificate.value < to_double_down(pow2_neg(m)), "lln_test_family: certificate not below 2^-m");
  return t;
}

TestFamily checkpoint_test_family(unsigned m, const Rational& p, unsigned n1, const Rational& r) {
  require(r > 0 && r < 1, "checkpoint_test_family: need 0 < r < 1");
  require(p > 0 && p < 1, "checkpoint_test_family: need 0 < p < 1");
  // log r rounded toward zero gives an upper bound on r^j.
  const double log_r = std::nextafter(std::log(to_double_up(r)), 0.0);
  unsigned j = static_cast<unsigned>(std::max(0.0, -static_cast<double>(m) * std::log(2.0) / log_r));
  auto bound = [&](unsigned jj) { return bump_up(std::exp(jj * log_r)); };
  const double target = to_double_down(pow2_neg(m));
  while (j > 0 && bound(j - 1) < target) --j;
  while (!(bound(j) < target)) ++j;
  TestFamily t;
  t.m = m;
  t.description = "words of length 4^" + std::to_string(n1 + j) +
                  " passing every checkpoint |N_a(4^k) - 4^k p| <= 2^k for k in [" +
                  std::to_string(n1) + ", " + std::to_string(n1 + j) + "]";
  t.certificate.quantity = "measure of the checkpoint test set T_m";
  t.certificate.value = bound(j);
  t.certificate.rule = "segment_band^depth";
  t.certificate.chain = {"each further checkpoint is passed with conditional probability < r",
                         "P(all checkpoints in [n1, n1+j]) <= r^j"};
  t.certificate.add_param("m", std::to_string(m));
  t.certificate.add_param("p", to_string(p));
  t.certificate.add_param("n1", std::to_string(n1));
  t.certificate.add_param("r", to_string(r));
  t.certificate.add_param("depth", std::to_string(n1 + j));
  return t;
}

}  // namespace efflln
