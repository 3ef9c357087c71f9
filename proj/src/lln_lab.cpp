#include "efflln/lln_lab.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "efflln/error.hpp"
#include "efflln/parallel.hpp"
#include "efflln/seq_io.hpp"
#include "efflln/stats.hpp"
#include "json.hpp"

namespace efflln {

using i128 = __int128;

std::uint64_t ceil_power(std::uint64_t n, const Rational& t) {
  require(n >= 1, "ceil_power: need n >= 1");
  require(t >= 0, "ceil_power: need t >= 0");
  require(mpz_fits_ulong_p(t.get_num_mpz_t()) && mpz_fits_ulong_p(t.get_den_mpz_t()),
          "ceil_power: exponent too large");
  return to_u64(ceil_rational_power(n, mpz_get_ui(t.get_num_mpz_t()), mpz_get_ui(t.get_den_mpz_t())));
}

std::uint64_t f_threshold(std::uint64_t n, const Rational& eps) {
  require(eps > 0, "f_threshold: need eps > 0");
  return ceil_power(n, Rational(2 + eps));
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::HoldsSoFar: return "holds";
    case Verdict::Violated: return "violated";
    case Verdict::Undetermined: return "undetermined";
  }
  return "?";
}

bool WitnessReport::all_hold() const {
  return std::none_of(verdicts.begin(), verdicts.end(),
                      [](const NVerdict& v) { return v.verdict == Verdict::Violated; });
}

std::string WitnessReport::to_csv() const {
  std::ostringstream out;
  out << "schedule,n,verdict,k_from,k_to,violation_k,violation_label,violation_deviation,candidate_m\n";
  for (const auto& v : verdicts) {
    out << schedule << ',' << v.n << ',' << verdict_name(v.verdict) << ',' << v.k_from << ','
        << v.k_to << ',';
    if (v.violation)
      out << v.violation->k << ',' << v.violation->label << ',' << to_string(v.violation->deviation);
    else
      out << ",,";
    out << ',' << candidate_m << '\n';
  }
  return out.str();
}

std::string WitnessReport::to_json() const {
  nlohmann::ordered_json j;
  j["schedule"] = schedule;
  j["n_lo"] = n_lo;
  j["n_max"] = n_max;
  j["length"] = length;
  j["candidate_m"] = candidate_m;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& v : verdicts) {
    nlohmann::ordered_json r;
    r["n"] = v.n;
    r["verdict"] = verdict_name(v.verdict);
    r["k_from"] = v.k_from;
    r["k_to"] = v.k_to;
    if (v.violation) {
      r["violation"] = {{"k", v.violation->k},
                        {"label", v.violation->label},
                        {"deviation", to_string(v.violation->deviation)}};
    }
    arr.push_back(r);
  }
  j["verdicts"] = arr;
  return j.dump();
}

namespace {

std::vector<std::uint64_t> k_schedule(std::uint64_t n_lo, std::uint64_t n_max, std::uint64_t length,
                                      const std::function<BigInt(std::uint64_t)>& f) {
  std::vector<std::uint64_t> ks;
  for (std::uint64_t n = n_lo; n <= n_max; ++n) {
    BigInt v = f(n);
    ks.push_back(v > length ? length + 1 : to_u64(v));
  }
  return ks;
}

// Result of examining one prefix length k: the smallest n whose condition
// fails there (0 when none), and the index of the responsible component.
struct KVerdict {
  std::uint64_t n_crit = 0;
  std::size_t who = 0;
};

// Shared bookkeeping: for each n in [n_lo, n_max] with schedule start ks[n],
// record the first k >= ks[n] at which n_crit(k) <= n.
template <class Step, class Describe>
WitnessReport scan_core(std::uint64_t length, std::uint64_t n_lo, std::uint64_t n_max,
                        const std::vector<std::uint64_t>& ks, std::string schedule, Step&& step,
                        Describe&& describe) {
  require(n_lo >= 1 && n_lo <= n_max, "scan range needs 1 <= n_lo <= n_max");
  const std::size_t count = n_max - n_lo + 1;
  WitnessReport rep;
  rep.schedule = std::move(schedule);
  rep.n_lo = n_lo;
  rep.n_max = n_max;
  rep.length = length;
  rep.verdicts.resize(count);
  // next[i]: smallest index >= i without a recorded violation (path-halving DSU).
  std::vector<std::size_t> next(count + 1);
  std::iota(next.begin(), next.end(), 0);
  auto find = [&](std::size_t i) {
    while (next[i] != i) {
      next[i] = next[next[i]];
      i = next[i];
    }
    return i;
  };
  std::size_t open = count;
  std::size_t applicable = 0;  // number of n whose schedule has started
  for (std::uint64_t k = 1; k <= length; ++k) {
    KVerdict v = step(k);
    while (applicable < count && ks[applicable] <= k) ++applicable;
    if (applicable == 0 || v.n_crit == 0 || open == 0) continue;
    const std::uint64_t top = n_lo + applicable - 1;
    const std::uint64_t from = std::max(v.n_crit, n_lo);
    if (from > top) continue;
    for (std::size_t i = find(from - n_lo); i < applicable; i = find(i)) {
      auto& nv = rep.verdicts[i];
      nv.violation = describe(k, v.who);
      next[i] = i + 1;
      --open;
    }
  }
  std::uint64_t worst = 0;
  for (std::size_t i = 0; i < count; ++i) {
    auto& nv = rep.verdicts[i];
    nv.n = n_lo + i;
    nv.k_from = ks[i];
    nv.k_to = ks[i] <= length ? length : 0;
    if (nv.violation) {
      nv.verdict = Verdict::Violated;
      worst = nv.n;
    } else {
      nv.verdict = ks[i] <= length ? Verdict::HoldsSoFar : Verdict::Undetermined;
    }
  }
  rep.candidate_m = worst ? worst + 1 : n_lo;
  return rep;
}

// ceil(a / b) for positive a, b.
inline std::uint64_t ceil_div(i128 a, i128 b) {
  i128 q = (a + b - 1) / b;
  return q > static_cast<i128>(std::numeric_limits<std::uint64_t>::max())
             ? std::numeric_limits<std::uint64_t>::max()
             : static_cast<std::uint64_t>(q);
}

i128 to_i128(const BigInt& z) {
  require(mpz_sizeinbase(z.get_mpz_t(), 2) <= 62, "value too large for the fast scan");
  return static_cast<i128>(mpz_get_si(z.get_mpz_t()));
}

// Scan of T_k against k C with T_k / A = empirical sum and C / A = mean:
// failure at n iff |T_k - k C| n >= k A.
struct Track {
  i128 T = 0, C = 0, A = 1;
};

WitnessReport symbol_scan(const SequencePrefix& s, const FiniteProbabilitySpace& P,
                          const std::vector<Symbol>& symbols, std::uint64_t n_lo,
                          std::uint64_t n_max, const std::vector<std::uint64_t>& ks,
                          std::string schedule) {
  require(P.is_exact(), "symbol scans need exact probabilities");
  require(s.alphabet_size() == P.size(), "sequence and space have different alphabets");
  std::vector<Track> tr(P.size());
  std::vector<int> watched(P.size(), 0);
  for (Symbol a : symbols) watched[a] = 1;
  for (std::size_t a = 0; a < P.size(); ++a) {
    const Rational& p = P.exact_prob(static_cast<Symbol>(a));
    tr[a].A = to_i128(p.get_den());
    tr[a].C = to_i128(p.get_num());
  }
  std::vector<std::uint64_t> counts(P.size(), 0);
  auto step = [&](std::uint64_t k) {
    const Symbol x = s[k - 1];
    ++counts[x];
    tr[x].T += tr[x].A;
    KVerdict best;
    const i128 ki = static_cast<i128>(k);
    for (std::size_t a = 0; a < tr.size(); ++a) {
      if (!watched[a]) continue;
      i128 d = tr[a].T - ki * tr[a].C;
      if (d == 0) continue;
      if (d < 0) d = -d;
      std::uint64_t nc = ceil_div(ki * tr[a].A, d);
      if (best.n_crit == 0 || nc < best.n_crit) best = {nc, a};
    }
    return best;
  };
  auto describe = [&](std::uint64_t k, std::size_t a) {
    Violation v;
    v.k = k;
    v.label = P.alphabet().name(static_cast<Symbol>(a));
    Rational emp(BigInt(std::to_string(counts[a])), BigInt(std::to_string(k)));
    emp.canonicalize();
    v.deviation = abs(Rational(emp - P.exact_prob(static_cast<Symbol>(a))));
    return v;
  };
  return scan_core(s.length(), n_lo, n_max, ks, std::move(schedule), step, describe);
}

std::string eps_label(const Rational& eps) { return "eps=" + to_string(eps); }

}  // namespace

WitnessReport lln_witness_scan(const SequencePrefix& s, const FiniteProbabilitySpace& P,
                               const Rational& eps, std::uint64_t n_max) {
  require(eps > 0, "lln_witness_scan: need eps > 0");
  std::vector<Symbol> all(P.size());
  std::iota(all.begin(), all.end(), 0);
  auto ks = k_schedule(1, n_max, s.length(), [&](std::uint64_t n) {
    const Rational e = 2 + eps;
    return ceil_rational_power(n, mpz_get_ui(e.get_num_mpz_t()), mpz_get_ui(e.get_den_mpz_t()));
  });
  return symbol_scan(s, P, all, 1, n_max, ks, eps_label(eps));
}

WitnessReport lln_witness_scan_power(const SequencePrefix& s, const FiniteProbabilitySpace& P,
                                     const Rational& t, std::uint64_t n_lo, std::uint64_t n_max) {
  require(t >= 0, "lln_witness_scan_power: need t >= 0");
  std::vector<Symbol> all(P.size());
  std::iota(all.begin(), all.end(), 0);
  auto ks = k_schedule(n_lo, n_max, s.length(), [&](std::uint64_t n) {
    return ceil_rational_power(n, mpz_get_ui(t.get_num_mpz_t()), mpz_get_ui(t.get_den_mpz_t()));
  });
  return symbol_scan(s, P, all, n_lo, n_max, ks, "t=" + to_string(t));
}

namespace {

// Scan over an integer-scaled stream: value of step i is w[idx_i] / A, the
// mean is C / A.
WitnessReport scaled_mean_scan(std::size_t length, const std::function<i128(std::uint64_t)>& T_at,
                               i128 C, i128 A, std::uint64_t n_lo, std::uint64_t n_max,
                               const std::vector<std::uint64_t>& ks, std::string schedule,
                               std::string label) {
  i128 T = 0;
  auto step = [&](std::uint64_t k) {
    T = T_at(k);
    const i128 ki = static_cast<i128>(k);
    i128 d = T - ki * C;
    if (d == 0) return KVerdict{};
    if (d < 0) d = -d;
    return KVerdict{ceil_div(ki * A, d), 0};
  };
  auto describe = [&](std::uint64_t k, std::size_t) {
    Violation v;
    v.k = k;
    v.label = label;
    i128 d = T - static_cast<i128>(k) * C;
    if (d < 0) d = -d;
    // |T - kC| / (k A), built from decimal strings to stay exact.
    auto str = [](i128 x) {
      std::string out;
      bool neg = x < 0;
      if (neg) x = -x;
      do {
        out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(x % 10)));
        x /= 10;
      } while (x);
      return neg ? "-" + out : out;
    };
    Rational dev(BigInt(str(d)), BigInt(str(static_cast<i128>(k) * A)));
    dev.canonicalize();
    v.deviation = dev;
    return v;
  };
  return scan_core(length, n_lo, n_max, ks, std::move(schedule), step, describe);
}

}  // namespace

WitnessReport rv_witness_scan(const SequencePrefix& s, const FiniteProbabilitySpace& P,
                              const RealRandomVariable& X, const Rational& eps, std::uint64_t n_max,
                              const PrecisionBudget& budget) {
  require(eps > 0, "rv_witness_scan: need eps > 0");
  require(P.size() == X.size() && s.alphabet_size() == P.size(),
          "sequence, space and random variable must share an alphabet");
  auto ks = k_schedule(1, n_max, s.length(), [&](std::uint64_t n) {
    const Rational e = 2 + eps;
    return ceil_rational_power(n, mpz_get_ui(e.get_num_mpz_t()), mpz_get_ui(e.get_den_mpz_t()));
  });

  if (P.is_exact() && X.is_exact()) {
    const Rational mu = rv_mean(P, X).lo;
    BigInt A = mu.get_den();
    for (std::size_t a = 0; a < X.size(); ++a)
      mpz_lcm(A.get_mpz_t(), A.get_mpz_t(), X.exact_value(static_cast<Symbol>(a)).get_den_mpz_t());
    std::vector<i128> w(X.size());
    for (std::size_t a = 0; a < X.size(); ++a) {
      Rational v = X.exact_value(static_cast<Symbol>(a)) * Rational(A);
      w[a] = to_i128(v.get_num());
    }
    Rational c = mu * Rational(A);
    i128 T = 0;
    auto T_at = [&](std::uint64_t k) {
      T += w[s[k - 1]];
      return T;
    };
    return scaled_mean_scan(s.length(), T_at, to_i128(c.get_num()), to_i128(A), 1, n_max, ks,
                            eps_label(eps), "X");
  }

  // Interval mode: enclose |sum_a (N_a - k P(a)) X(a)| / k and refine when an
  // applicable n falls inside the enclosure's ambiguity range.
  std::vector<std::uint64_t> counts(P.size(), 0);
  std::size_t applicable = 0;
  auto step = [&](std::uint64_t k) {
    ++counts[s[k - 1]];
    while (applicable < ks.size() && ks[applicable] <= k) ++applicable;
    if (applicable == 0) return KVerdict{};
    const std::uint64_t top = applicable;  // n_lo = 1
    for (unsigned bits = budget.initial_bits; bits <= budget.max_bits; bits *= 2) {
      Enclosure d{0, 0};
      for (std::size_t a = 0; a < P.size(); ++a) {
        auto sa = static_cast<Symbol>(a);
        Enclosure na = Enclosure::point(Rational(BigInt(std::to_string(counts[a]))));
        d = d + (na - Enclosure::point(Rational(BigInt(std::to_string(k)))) * P.prob(sa).approx(bits)) *
                    X.value(sa).approx(bits);
      }
      Rational lo = d.lo <= 0 && d.hi >= 0 ? Rational(0) : std::min(abs(d.lo), abs(d.hi));
      Rational hi = std::max(abs(d.lo), abs(d.hi));
      const Rational kk(BigInt(std::to_string(k)));
      // n fails iff n |D| >= k: surely for n >= k/lo, possibly for n >= k/hi.
      if (hi == 0) return KVerdict{};
      const std::uint64_t maybe = to_u64(ceil(Rational(kk / hi)));
      if (maybe > top) return KVerdict{};
      const std::uint64_t sure =
          lo > 0 ? to_u64(ceil(Rational(kk / lo))) : std::numeric_limits<std::uint64_t>::max();
      if (std::max<std::uint64_t>(maybe, 1) > std::min<std::uint64_t>(sure - 1, top))
        return KVerdict{sure, 0};
    }
    throw UndecidedComparison("empirical mean comparison at k=" + std::to_string(k) +
                              " undecided at " + std::to_string(budget.max_bits) + " bits");
  };
  auto describe = [&](std::uint64_t k, std::size_t) {
    Violation v;
    v.k = k;
    v.label = "X";
    Enclosure d{0, 0};
    for (std::size_t a = 0; a < P.size(); ++a) {
      auto sa = static_cast<Symbol>(a);
      Enclosure na = Enclosure::point(Rational(BigInt(std::to_string(counts[a]))));
      d = d + (na - Enclosure::point(Rational(BigInt(std::to_string(k)))) * P.prob(sa).approx(budget.max_bits)) *
                  X.value(sa).approx(budget.max_bits);
    }
    Rational lo = d.lo <= 0 && d.hi >= 0 ? Rational(0) : std::min(abs(d.lo), abs(d.hi));
    v.deviation = lo / Rational(BigInt(std::to_string(k)));
    return v;
  };
  return scan_core(s.length(), 1, n_max, ks, eps_label(eps), step, describe);
}

WitnessReport mean_witness_scan(std::span<const std::int64_t> scaled_sums, const BigInt& scale,
                                const Rational& mu, const Rational& eps, std::uint64_t n_lo,
                                std::uint64_t n_max, const std::string& label) {
  require(eps > 0, "mean_witness_scan: need eps > 0");
  require(scale > 0, "mean_witness_scan: scale must be positive");
  // Bring sums and mean to a common denominator A = lcm(scale, den(mu)).
  BigInt A;
  mpz_lcm(A.get_mpz_t(), scale.get_mpz_t(), mu.get_den_mpz_t());
  const i128 f = to_i128(BigInt(A / scale));
  Rational c = mu * Rational(A);
  auto ks = k_schedule(n_lo, n_max, scaled_sums.size(), [&](std::uint64_t n) {
    const Rational e = 2 + eps;
    return ceil_rational_power(n, mpz_get_ui(e.get_num_mpz_t()), mpz_get_ui(e.get_den_mpz_t()));
  });
  auto T_at = [&](std::uint64_t k) { return static_cast<i128>(scaled_sums[k - 1]) * f; };
  return scaled_mean_scan(scaled_sums.size(), T_at, to_i128(c.get_num()), to_i128(A), n_lo, n_max,
                          ks, eps_label(eps), label);
}

// ------------------------------------------------------------------- AEP

namespace {

// log2(1/p) / den(p) enclosed in [lo, hi] doubles, via MPFR at `bits`.
void log_coeff(const Rational& p, mpfr_prec_t bits, mpfr_t lo, mpfr_t hi) {
  mpfr_t t;
  mpfr_init2(t, bits);
  Rational inv = 1 / p;
  mpfr_set_q(t, inv.get_mpq_t(), MPFR_RNDD);
  mpfr_log2(t, t, MPFR_RNDD);
  mpfr_div_z(lo, t, p.get_den_mpz_t(), MPFR_RNDD);
  mpfr_set_q(t, inv.get_mpq_t(), MPFR_RNDU);
  mpfr_log2(t, t, MPFR_RNDU);
  mpfr_div_z(hi, t, p.get_den_mpz_t(), MPFR_RNDU);
  mpfr_clear(t);
}

}  // namespace

AepReport aep_scan(const SequencePrefix& s, const FiniteProbabilitySpace& P, const Rational& eps,
                   std::uint64_t n_max, std::uint64_t n_lo) {
  require(P.is_exact(), "aep_scan needs exact probabilities");
  require(eps > 0, "aep_scan: need eps > 0");
  require(s.alphabet_size() == P.size(), "sequence and space have different alphabets");
  AepReport out;

  std::size_t usable = s.length();
  for (std::size_t i = 0; i < s.length(); ++i) {
    if (P.exact_prob(s[i]) == 0) {
      out.positive = false;
      out.first_zero_position = i + 1;
      usable = i;
      break;
    }
  }

  // Per-symbol data: e_a(k) = N_a den_a - k num_a, coefficient log2(1/p_a)/den_a.
  const std::size_t m = P.size();
  std::vector<i128> num(m), den(m);
  std::vector<double> c_lo(m, 0), c_hi(m, 0), c_mid(m, 0);
  std::vector<int> live(m, 0);
  for (std::size_t a = 0; a < m; ++a) {
    const Rational& p = P.exact_prob(static_cast<Symbol>(a));
    num[a] = to_i128(p.get_num());
    den[a] = to_i128(p.get_den());
    if (p == 0) continue;
    live[a] = 1;
    mpfr_t lo, hi;
    mpfr_inits2(53, lo, hi, static_cast<mpfr_ptr>(nullptr));
    log_coeff(p, 128, lo, hi);
    c_lo[a] = mpfr_get_d(lo, MPFR_RNDD);
    c_hi[a] = mpfr_get_d(hi, MPFR_RNDU);
    mpfr_clears(lo, hi, static_cast<mpfr_ptr>(nullptr));
    c_mid[a] = 0.5 * (c_lo[a] + c_hi[a]);
  }

  FactoredMeasure fm(P);
  std::vector<std::int64_t> inc(fm.basis_size(), 0);
  std::vector<std::uint64_t> counts(m, 0);
  std::size_t next_spot = 1;
  constexpr double kU = std::numeric_limits<double>::epsilon() / 2;

  auto ks = k_schedule(n_lo, n_max, usable, [&](std::uint64_t n) {
    const Rational e = 2 + eps;
    return ceil_rational_power(n, mpz_get_ui(e.get_num_mpz_t()), mpz_get_ui(e.get_den_mpz_t()));
  });

  std::size_t applicable = 0;
  std::vector<i128> e(m);
  auto step = [&](std::uint64_t k) {
    const Symbol x = s[k - 1];
    ++counts[x];
    // Incremental exponent vector of the prefix measure vs the count route.
    const auto& ex = *fm.symbol_exponents(x);
    for (std::size_t i = 0; i < inc.size(); ++i) inc[i] += ex[i];
    for (std::size_t i = 0; i < inc.size(); ++i) {
      std::int64_t viacounts = 0;
      for (std::size_t a = 0; a < m; ++a)
        if (counts[a]) viacounts += (*fm.symbol_exponents(static_cast<Symbol>(a)))[i] *
                                    static_cast<std::int64_t>(counts[a]);
      if (viacounts != inc[i]) out.identity_holds = false;
    }
    ++out.identity_checks;
    if (k == next_spot || k == usable) {
      // Evaluate the exponent vector and compare with the direct product.
      Rational direct = word_measure(P, s.view().first(k)).lo;
      if (fm.evaluate(inc) != direct) out.identity_holds = false;
      if (k == next_spot) next_spot *= 4;
    }

    while (applicable < ks.size() && ks[applicable] <= k) ++applicable;
    if (applicable == 0) return KVerdict{};
    const std::uint64_t top = n_lo + applicable - 1;
    // D = sum_a e_a c_a = -log2 P(prefix) - k H(P).
    const i128 ki = static_cast<i128>(k);
    double d = 0, mag = 0, spread = 0;
    for (std::size_t a = 0; a < m; ++a) {
      if (!live[a]) continue;
      e[a] = static_cast<i128>(counts[a]) * den[a] - ki * num[a];
      const double ea = static_cast<double>(e[a]);
      d += ea * c_mid[a];
      mag += std::fabs(ea * c_mid[a]);
      spread += std::fabs(ea) * (c_hi[a] - c_lo[a]);
    }
    const double err = spread + 4 * static_cast<double>(m + 2) * kU * mag + 1e-300;
    const double dlo = std::max(0.0, std::fabs(d) - err), dhi = std::fabs(d) + err;
    const double kd = static_cast<double>(k);
    // Violated at n iff |D| >= k/n.
    constexpr double kInfN = 1e300;
    const double amb_lo = dhi > 0 ? std::floor(kd / dhi * (1 - 1e-12)) : kInfN;
    if (amb_lo > static_cast<double>(top)) return KVerdict{};
    const double sure = dlo > 0 ? std::ceil(kd / dlo * (1 + 1e-12)) : kInfN;
    const double lo_int = std::max(amb_lo, static_cast<double>(n_lo));
    const double hi_int = std::min(sure - 1, static_cast<double>(top));
    if (lo_int > hi_int) return KVerdict{static_cast<std::uint64_t>(std::max(1.0, sure)), 0};
    // Ambiguous: re-evaluate at 256 bits with exact integer coefficients.
    ++out.escalations;
    mpfr_t acc, t, lo, hi;
    mpfr_inits2(256, acc, t, lo, hi, static_cast<mpfr_ptr>(nullptr));
    mpfr_t acc_hi;
    mpfr_init2(acc_hi, 256);
    mpfr_set_zero(acc, 1);
    mpfr_set_zero(acc_hi, 1);
    for (std::size_t a = 0; a < m; ++a) {
      if (!live[a] || e[a] == 0) continue;
      log_coeff(P.exact_prob(static_cast<Symbol>(a)), 256, lo, hi);
      BigInt ez(std::to_string(static_cast<long long>(e[a])));
      if (e[a] > 0) {
        mpfr_mul_z(t, lo, ez.get_mpz_t(), MPFR_RNDD);
        mpfr_add(acc, acc, t, MPFR_RNDD);
        mpfr_mul_z(t, hi, ez.get_mpz_t(), MPFR_RNDU);
        mpfr_add(acc_hi, acc_hi, t, MPFR_RNDU);
      } else {
        mpfr_mul_z(t, hi, ez.get_mpz_t(), MPFR_RNDD);
        mpfr_add(acc, acc, t, MPFR_RNDD);
        mpfr_mul_z(t, lo, ez.get_mpz_t(), MPFR_RNDU);
        mpfr_add(acc_hi, acc_hi, t, MPFR_RNDU);
      }
    }
    // |D| in [alo, ahi].
    mpfr_abs(lo, acc, MPFR_RNDD);
    mpfr_abs(hi, acc_hi, MPFR_RNDD);
    bool straddles = mpfr_sgn(acc) <= 0 && mpfr_sgn(acc_hi) >= 0;
    mpfr_t alo, ahi;
    mpfr_inits2(256, alo, ahi, static_cast<mpfr_ptr>(nullptr));
    if (straddles) {
      mpfr_set_zero(alo, 1);
    } else {
      mpfr_min(alo, lo, hi, MPFR_RNDD);
    }
    mpfr_abs(lo, acc, MPFR_RNDU);
    mpfr_abs(hi, acc_hi, MPFR_RNDU);
    mpfr_max(ahi, lo, hi, MPFR_RNDU);
    // n is violated iff n |D| >= k; decide for each applicable n.
    std::uint64_t crit = 0;
    bool undecided = false;
    for (std::uint64_t n = n_lo; n <= top; ++n) {
      mpfr_mul_ui(t, ahi, n, MPFR_RNDU);
      if (mpfr_cmp_ui(t, k) < 0) continue;  // surely holds
      mpfr_mul_ui(t, alo, n, MPFR_RNDD);
      if (mpfr_cmp_ui(t, k) >= 0) {
        crit = n;
        break;
      }
      undecided = true;
      break;
    }
    mpfr_clears(acc, acc_hi, t, lo, hi, alo, ahi, static_cast<mpfr_ptr>(nullptr));
    if (undecided)
      throw UndecidedComparison("entropy deviation at k=" + std::to_string(k) +
                                " undecided at 256 bits");
    return KVerdict{crit, 0};
  };
  auto describe = [&](std::uint64_t k, std::size_t) {
    Violation v;
    v.k = k;
    v.label = "entropy";
    // Lower end of |D|/k as a rational.
    double d = 0, spread = 0, mag = 0;
    for (std::size_t a = 0; a < m; ++a) {
      if (!live[a]) continue;
      const double ea = static_cast<double>(static_cast<i128>(counts[a]) * den[a] -
                                            static_cast<i128>(k) * num[a]);
      d += ea * c_mid[a];
      mag += std::fabs(ea * c_mid[a]);
      spread += std::fabs(ea) * (c_hi[a] - c_lo[a]);
    }
    double lo = std::max(0.0, std::fabs(d) - spread - 4 * static_cast<double>(m + 2) * kU * mag);
    v.deviation = Rational(lo) / Rational(BigInt(std::to_string(k)));
    return v;
  };
  out.witness = scan_core(usable, n_lo, n_max, ks, eps_label(eps), step, describe);
  return out;
}

// ------------------------------------------------------------ dichotomy

std::string DichotomyTable::to_csv() const {
  std::ostringstream out;
  out << "t,trials,passes,rate,wilson95_lo,wilson95_hi,checkpoint_passes\n";
  for (const auto& r : rows)
    out << to_string(r.t) << ',' << r.trials << ',' << r.passes << ',' << r.rate << ','
        << r.wilson_lo << ',' << r.wilson_hi << ',' << checkpoint_passes << '\n';
  return out.str();
}

std::string DichotomyTable::to_json() const {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["t"] = to_string(r.t);
    j["trials"] = r.trials;
    j["passes"] = r.passes;
    j["rate"] = r.rate;
    j["wilson95_lo"] = r.wilson_lo;
    j["wilson95_hi"] = r.wilson_hi;
    j["checkpoint_passes"] = checkpoint_passes;
    arr.push_back(j);
  }
  return arr.dump();
}

DichotomyTable dichotomy_experiment(const DichotomyConfig& cfg) {
  const auto& P = cfg.space;
  require(P.is_exact(), "dichotomy needs exact probabilities");
  require(cfg.symbol < P.size(), "dichotomy symbol outside the alphabet");
  const Rational& p = P.exact_prob(cfg.symbol);
  require(p > 0 && p < 1, "dichotomy needs 0 < P(a) < 1");
  require(cfg.window_lo >= 1 && cfg.window_lo <= cfg.window_hi, "dichotomy window needs 1 <= lo <= hi");
  require(cfg.checkpoint_lo >= 1 && cfg.checkpoint_lo <= cfg.checkpoint_hi,
          "checkpoint range needs 1 <= lo <= hi");
  for (const auto& t : cfg.t_grid) require(t >= 0, "t values must be nonnegative");

  DichotomyTable table;
  table.trials = cfg.trials;
  if (cfg.trials == 0) return table;

  const std::uint64_t W = cfg.window_hi - cfg.window_lo + 1;
  // k thresholds ceil(n^t) per (t, n).
  std::vector<std::vector<std::uint64_t>> start(cfg.t_grid.size());
  for (std::size_t ti = 0; ti < cfg.t_grid.size(); ++ti)
    for (std::uint64_t n = cfg.window_lo; n <= cfg.window_hi; ++n) {
      BigInt v = ceil_rational_power(n, mpz_get_ui(cfg.t_grid[ti].get_num_mpz_t()),
                                     mpz_get_ui(cfg.t_grid[ti].get_den_mpz_t()));
      start[ti].push_back(v > cfg.length ? cfg.length + 1 : to_u64(v));
    }

  const i128 num = to_i128(p.get_num()), den = to_i128(p.get_den());
  const i128 nh = static_cast<i128>(cfg.window_hi);
  struct TrialResult {
    std::vector<std::uint8_t> pass;  // per t
    bool checkpoint = false;
  };
  std::vector<TrialResult> results(cfg.trials);

  parallel_for(cfg.trials, cfg.workers, [&](std::uint64_t trial) {
    SequencePrefix s = sample_sequence(P, cfg.length, cfg.seed, trial);
    // bucket[i]: last k whose smallest violated n is window_lo + i.
    std::vector<std::uint64_t> bucket(W, 0);
    i128 count = 0;
    bool cp_ok = true;
    std::uint64_t next_cp = 1ULL << (2 * cfg.checkpoint_lo);
    unsigned cp_k = cfg.checkpoint_lo;
    for (std::uint64_t k = 1; k <= cfg.length; ++k) {
      count += s[k - 1] == cfg.symbol;
      const i128 ki = static_cast<i128>(k);
      i128 d = count * den - ki * num;
      if (d < 0) d = -d;
      // Violated at n iff n |d| >= k den; test the largest n first.
      if (d != 0 && nh * d >= ki * den) {
        std::uint64_t nc = ceil_div(ki * den, d);
        std::uint64_t idx = std::max(nc, cfg.window_lo) - cfg.window_lo;
        bucket[idx] = k;
      }
      if (k == next_cp && cp_k <= cfg.checkpoint_hi) {
        // |count - k p| <= 2^cp_k  <=>  |d| <= 2^cp_k den.
        if (d > (static_cast<i128>(1) << cp_k) * den) cp_ok = false;
        ++cp_k;
        next_cp <<= 2;
      }
    }
    if (cp_k <= cfg.checkpoint_hi) cp_ok = false;  // prefix too short to decide
    std::vector<std::uint64_t> last(W, 0);
    std::uint64_t run = 0;
    for (std::uint64_t i = 0; i < W; ++i) {
      run = std::max(run, bucket[i]);
      last[i] = run;
    }
    TrialResult r;
    r.checkpoint = cp_ok;
    r.pass.resize(cfg.t_grid.size());
    for (std::size_t ti = 0; ti < cfg.t_grid.size(); ++ti) {
      bool ok = true;
      for (std::uint64_t i = 0; i < W && ok; ++i)
        if (last[i] != 0 && last[i] >= start[ti][i]) ok = false;
      r.pass[ti] = ok;
    }
    results[trial] = std::move(r);
  });

  for (std::size_t ti = 0; ti < cfg.t_grid.size(); ++ti) {
    DichotomyRow row;
    row.t = cfg.t_grid[ti];
    row.trials = cfg.trials;
    for (const auto& r : results) row.passes += r.pass[ti];
    row.rate = static_cast<double>(row.passes) / static_cast<double>(row.trials);
    auto w = wilson_interval(row.passes, row.trials, kZ95);
    row.wilson_lo = w.lo;
    row.wilson_hi = w.hi;
    table.rows.push_back(row);
  }
  for (const auto& r : results) table.checkpoint_passes += r.checkpoint;
  return table;
}

}  // namespace efflln
