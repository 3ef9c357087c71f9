#include "efflln/speedlimit_lab.hpp"

#include <sstream>

#include "efflln/error.hpp"
#include "efflln/kernels.hpp"
#include "efflln/parallel.hpp"
#include "efflln/seq_io.hpp"

namespace efflln {

using i128 = __int128;

namespace {

unsigned depth_of(std::uint64_t length) {
  unsigned d = 0;
  while (d < 31 && (1ULL << (2 * (d + 1))) <= length) ++d;
  return d;
}

i128 small(const BigInt& z) {
  require(mpz_sizeinbase(z.get_mpz_t(), 2) <= 62, "value too large for the checkpoint sampler");
  return static_cast<i128>(mpz_get_si(z.get_mpz_t()));
}

void require_positive_variance(const FiniteProbabilitySpace& P, const RealRandomVariable& X) {
  Enclosure v = rv_variance(P, X, P.budget().max_bits);
  if (v.hi == 0) throw DomainError("the random variable must have positive variance (V(X) = 0)");
  if (v.lo <= 0) {
    // Interval mode: decide V(X) > 0 by refinement.
    for (unsigned bits = P.budget().initial_bits; bits <= P.budget().max_bits; bits *= 2)
      if (rv_variance(P, X, bits).lo > 0) return;
    throw UndecidedComparison("sign of V(X) undecided at budget");
  }
}

}  // namespace

CheckpointReport checkpoint_scan(const SequencePrefix& s, const FiniteProbabilitySpace& P, Symbol a,
                                 unsigned n_lo, unsigned n_hi) {
  require(P.is_exact(), "checkpoint_scan needs exact probabilities");
  const Rational& p = P.exact_prob(a);
  require(p > 0 && p < 1, "checkpoint_scan needs 0 < P(a) < 1");
  CheckpointSpec spec;
  spec.symbol = a;
  spec.p = p;
  spec.n_lo = n_lo;
  spec.n_hi = n_hi ? n_hi : std::max(n_lo, depth_of(s.length()));
  return checkpoint_membership(s, spec);
}

SequencePrefix adversarial_generate(const FiniteProbabilitySpace& P, Symbol a, unsigned depth,
                                    std::uint64_t seed) {
  require(P.is_exact(), "adversarial_generate needs exact probabilities");
  require(depth <= 12, "adversarial_generate: depth above 12 exceeds the generation cap");
  const Rational& p = P.exact_prob(a);
  require(p > 0 && p < 1, "adversarial_generate needs 0 < P(a) < 1");
  const i128 num = small(p.get_num()), den = small(p.get_den());

  std::vector<Rational> others(P.size(), 0);
  for (std::size_t x = 0; x < P.size(); ++x)
    if (x != a) others[x] = P.exact_prob(static_cast<Symbol>(x)) / (1 - p);
  InversionSampler pick_other(others);

  Philox4x32 rng(seed, 0);
  const std::uint64_t length = 1ULL << (2 * depth);
  SequencePrefix s(P.size());
  s.reserve(length);
  // D = N_a(i) den - i num, kept in [-den, den] so |N_a(i) - i p| <= 1.
  i128 D = 0;
  for (std::uint64_t i = 0; i < length; ++i) {
    const bool can_a = D + den - num <= den;
    const bool can_other = D - num >= -den;
    require(can_a || can_other, "adversarial_generate: steering became infeasible");
    bool take_a;
    if (can_a && can_other) {
      take_a = static_cast<i128>(rng.next_below(static_cast<std::uint64_t>(den))) < num;
    } else {
      take_a = can_a;
    }
    if (take_a) {
      s.append(a);
      D += den - num;
    } else {
      s.append(static_cast<Symbol>(pick_other(rng.next_u64())));
      D -= num;
    }
  }
  if (depth >= 1) {
    CheckpointReport rep = checkpoint_scan(s, P, a, 1, depth);
    require(rep.all_passed(), "adversarial_generate: output failed a checkpoint");
  }
  return s;
}

std::string McEstimate::csv_header() { return "trials,passes,rate,wilson95_lo,wilson95_hi,wilson3_lo,wilson3_hi"; }

std::string McEstimate::to_csv_row() const {
  std::ostringstream out;
  out.precision(17);
  out << trials << ',' << passes << ',' << rate << ',' << wilson95.lo << ',' << wilson95.hi << ','
      << wilson3.lo << ',' << wilson3.hi;
  return out.str();
}

McEstimate make_estimate(std::uint64_t passes, std::uint64_t trials) {
  McEstimate e;
  e.trials = trials;
  e.passes = passes;
  e.rate = trials ? static_cast<double>(passes) / static_cast<double>(trials) : 0.0;
  e.wilson95 = wilson_interval(passes, trials, kZ95);
  e.wilson3 = wilson_interval(passes, trials, kZ3Sigma);
  return e;
}

McEstimate montecarlo_pass_rate(const FiniteProbabilitySpace& P, Symbol a, unsigned n1, unsigned n,
                                std::uint64_t trials, std::uint64_t seed, unsigned workers,
                                std::uint64_t cap) {
  require(P.is_exact(), "montecarlo_pass_rate needs exact probabilities");
  require(trials >= 1, "montecarlo_pass_rate needs at least one trial");
  require(n1 >= 1 && n1 <= n, "checkpoint range needs 1 <= n1 <= n");
  require(n <= 30, "checkpoint index too large");
  const std::uint64_t length = 1ULL << (2 * n);
  if (length > cap)
    throw CapExceeded("sampling length 4^" + std::to_string(n) + " exceeds the cap " + std::to_string(cap));
  const Rational& p = P.exact_prob(a);
  require(p > 0 && p < 1, "montecarlo_pass_rate needs 0 < P(a) < 1");
  const i128 num = small(p.get_num()), den = small(p.get_den());
  std::vector<std::uint8_t> pass(trials, 0);
  parallel_for(trials, workers, [&](std::uint64_t t) {
    SequencePrefix s = sample_sequence(P, length, seed, t);
    i128 count = 0;
    std::uint64_t done = 0;
    bool ok = true;
    for (unsigned k = 1; k <= n && ok; ++k) {
      const std::uint64_t L = 1ULL << (2 * k);
      count += kernels::count_equal(s.view().subspan(done, L - done), a);
      done = L;
      if (k < n1) continue;
      i128 d = count * den - static_cast<i128>(L) * num;
      if (d < 0) d = -d;
      if (d > (static_cast<i128>(1) << k) * den) ok = false;
    }
    pass[t] = ok;
  });
  std::uint64_t passes = 0;
  for (auto v : pass) passes += v;
  return make_estimate(passes, trials);
}

CheckpointReport rv_checkpoint_scan(const SequencePrefix& s, const FiniteProbabilitySpace& P,
                                    const RealRandomVariable& X, unsigned n_lo, unsigned n_hi) {
  require_positive_variance(P, X);
  CheckpointSpec spec;
  spec.n_lo = n_lo;
  spec.n_hi = n_hi ? n_hi : std::max(n_lo, depth_of(s.length()));
  spec.band_offset = 1;
  spec.comparison = Comparison::Less;
  return rv_checkpoint_membership(s, P, X, spec);
}

McEstimate rv_montecarlo_pass_rate(const FiniteProbabilitySpace& P, const RealRandomVariable& X,
                                   unsigned n1, unsigned n, std::uint64_t trials, std::uint64_t seed,
                                   unsigned workers, std::uint64_t cap) {
  require(P.is_exact() && X.is_exact(), "rv_montecarlo_pass_rate needs exact inputs");
  require_positive_variance(P, X);
  require(trials >= 1, "rv_montecarlo_pass_rate needs at least one trial");
  require(n1 >= 1 && n1 <= n && n <= 30, "checkpoint range needs 1 <= n1 <= n");
  const std::uint64_t length = 1ULL << (2 * n);
  if (length > cap)
    throw CapExceeded("sampling length 4^" + std::to_string(n) + " exceeds the cap " + std::to_string(cap));
  const Rational mu = rv_mean(P, X).lo;
  BigInt A = mu.get_den();
  for (std::size_t a = 0; a < X.size(); ++a)
    mpz_lcm(A.get_mpz_t(), A.get_mpz_t(), X.exact_value(static_cast<Symbol>(a)).get_den_mpz_t());
  std::vector<i128> w(X.size());
  for (std::size_t a = 0; a < X.size(); ++a)
    w[a] = small(Rational(X.exact_value(static_cast<Symbol>(a)) * Rational(A)).get_num());
  const i128 c = small(Rational(mu * Rational(A)).get_num()), Ai = small(A);
  std::vector<std::uint8_t> pass(trials, 0);
  parallel_for(trials, workers, [&](std::uint64_t t) {
    SequencePrefix s = sample_sequence(P, length, seed, t);
    i128 T = 0;
    bool ok = true;
    std::uint64_t next = 4;
    unsigned k = 1;
    for (std::uint64_t i = 1; i <= length && ok; ++i) {
      T += w[s[i - 1]];
      if (i != next) continue;
      if (k >= n1) {
        i128 d = T - static_cast<i128>(i) * c;
        if (d < 0) d = -d;
        if (d >= (static_cast<i128>(1) << (k + 1)) * Ai) ok = false;
      }
      ++k;
      next <<= 2;
    }
    pass[t] = ok;
  });
  std::uint64_t passes = 0;
  for (auto v : pass) passes += v;
  return make_estimate(passes, trials);
}

DpResult rv_checkpoint_probability(const FiniteProbabilitySpace& P, const RealRandomVariable& X,
                                   unsigned n1, unsigned n) {
  require(P.is_exact() && X.is_exact(), "rv_checkpoint_probability needs exact inputs");
  require_positive_variance(P, X);
  std::vector<Rational> v, p;
  for (std::size_t a = 0; a < P.size(); ++a) {
    v.push_back(X.exact_value(static_cast<Symbol>(a)));
    p.push_back(P.exact_prob(static_cast<Symbol>(a)));
  }
  return lattice_checkpoint_probability(v, p, n1, n, 1, Comparison::Less);
}

}  // namespace efflln
