#include "efflln/prob_core.hpp"

#include <mpfr.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <utility>

#include "efflln/error.hpp"

namespace efflln {

// ---------------------------------------------------------------- Alphabet

Alphabet::Alphabet(std::vector<std::string> names) : names_(std::move(names)) {
  require(!names_.empty(), "alphabet must be non-empty");
  require(names_.size() <= 65536, "alphabet larger than 65536 symbols");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    require(!names_[i].empty(), "symbol names must be non-empty");
    auto [it, fresh] = index_.emplace(names_[i], static_cast<Symbol>(i));
    require(fresh, "duplicate symbol name '" + names_[i] + "'");
  }
}

Alphabet Alphabet::of_chars(std::string_view chars) {
  std::vector<std::string> names;
  for (char c : chars) names.emplace_back(1, c);
  return Alphabet(std::move(names));
}

const std::string& Alphabet::name(Symbol s) const {
  require(contains(s), "symbol index " + std::to_string(s) + " outside the alphabet");
  return names_[s];
}

std::optional<Symbol> Alphabet::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Symbol Alphabet::at(std::string_view name) const {
  auto s = find(name);
  if (!s) throw DomainError("symbol '" + std::string(name) + "' is not in the alphabet");
  return *s;
}

Word Alphabet::parse_word(std::string_view text) const {
  Word w;
  w.reserve(text.size());
  for (char c : text) w.push_back(at(std::string_view(&c, 1)));
  return w;
}

std::string Alphabet::format_word(std::span<const Symbol> w) const {
  bool single = std::all_of(names_.begin(), names_.end(),
                            [](const std::string& n) { return n.size() == 1; });
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!single && i) out += ',';
    out += name(w[i]);
  }
  return out;
}

// ------------------------------------------------------ probability spaces

FiniteProbabilitySpace FiniteProbabilitySpace::exact(Alphabet alphabet, std::vector<Rational> probs) {
  require(alphabet.size() == probs.size(), "one probability per symbol required");
  Rational total = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    require(probs[i] >= 0, "probability of '" + alphabet.name(static_cast<Symbol>(i)) +
                               "' is negative");
    total += probs[i];
  }
  require(total == 1, "probabilities sum to " + to_string(total) + ", not 1");
  FiniteProbabilitySpace P;
  P.alphabet_ = std::move(alphabet);
  P.probs_.assign(probs.begin(), probs.end());
  P.mode_ = ProbabilityMode::Exact;
  return P;
}

FiniteProbabilitySpace FiniteProbabilitySpace::interval(Alphabet alphabet, std::vector<Real> probs,
                                                        PrecisionBudget budget) {
  require(alphabet.size() == probs.size(), "one probability per symbol required");
  Enclosure total{0, 0};
  for (std::size_t i = 0; i < probs.size(); ++i) {
    Enclosure e = probs[i].approx(budget.max_bits);
    require(e.hi >= 0, "probability of '" + alphabet.name(static_cast<Symbol>(i)) +
                           "' is negative");
    if (e.lo < 0) e.lo = 0;
    total = total + e;
  }
  require(total.contains(1), "probability enclosures do not sum to 1");
  FiniteProbabilitySpace P;
  P.alphabet_ = std::move(alphabet);
  P.probs_ = std::move(probs);
  P.mode_ = ProbabilityMode::Interval;
  P.budget_ = budget;
  return P;
}

FiniteProbabilitySpace FiniteProbabilitySpace::uniform(std::string_view chars) {
  Alphabet a = Alphabet::of_chars(chars);
  std::vector<Rational> probs(a.size(), Rational(1, static_cast<unsigned long>(a.size())));
  return exact(std::move(a), std::move(probs));
}

const Real& FiniteProbabilitySpace::prob(Symbol s) const {
  require(alphabet_.contains(s), "symbol index " + std::to_string(s) + " outside the alphabet");
  return probs_[s];
}

const Rational& FiniteProbabilitySpace::exact_prob(Symbol s) const { return prob(s).exact(); }

std::vector<Symbol> FiniteProbabilitySpace::support() const {
  std::vector<Symbol> out;
  for (std::size_t i = 0; i < probs_.size(); ++i)
    if (compare(probs_[i], 0, budget_) > 0) out.push_back(static_cast<Symbol>(i));
  return out;
}

// --------------------------------------------------------- SequencePrefix

SequencePrefix::SequencePrefix(std::size_t alphabet_size) : counts_(alphabet_size, 0) {
  require(alphabet_size >= 1, "alphabet must be non-empty");
}

SequencePrefix::SequencePrefix(std::size_t alphabet_size, std::span<const Symbol> symbols)
    : SequencePrefix(alphabet_size) {
  word_.reserve(symbols.size());
  for (Symbol s : symbols) append(s);
}

void SequencePrefix::append(Symbol s) {
  require(s < counts_.size(), "symbol index " + std::to_string(s) + " outside the alphabet");
  word_.push_back(s);
  ++counts_[s];
}

SequencePrefix SequencePrefix::prefix(std::size_t n) const {
  require(n <= word_.size(), "prefix longer than the sequence");
  return SequencePrefix(counts_.size(), std::span<const Symbol>(word_).first(n));
}

std::uint64_t count_occurrences(const SequencePrefix& s, Symbol a) {
  require(a < s.counts_.size(), "symbol index " + std::to_string(a) + " outside the alphabet");
  return s.counts_[a];
}

// ------------------------------------------------------ prefix-free sets

static bool is_prefix(std::span<const Symbol> u, std::span<const Symbol> w) {
  return u.size() <= w.size() && std::equal(u.begin(), u.end(), w.begin());
}

PrefixFreeFamily prefix_free_reduce(std::span<const Word> family) {
  std::vector<Word> sorted(family.begin(), family.end());
  std::sort(sorted.begin(), sorted.end());
  PrefixFreeFamily out;
  for (auto& w : sorted) {
    // In lexicographic order a prefix precedes all of its extensions, and
    // any word between them shares that prefix.
    if (!out.words_.empty() && is_prefix(out.words_.back(), w)) continue;
    out.words_.push_back(std::move(w));
  }
  return out;
}

bool PrefixFreeFamily::covers(std::span<const Symbol> w) const {
  auto it = std::upper_bound(words_.begin(), words_.end(), w,
                             [](std::span<const Symbol> a, const Word& b) {
                               return std::lexicographical_compare(a.begin(), a.end(), b.begin(),
                                                                   b.end());
                             });
  if (it == words_.begin()) return false;
  return is_prefix(*std::prev(it), w);
}

// ------------------------------------------------------------- measures

namespace {

Rational pow_q(const Rational& base, std::uint64_t e) {
  Rational r;
  mpz_pow_ui(r.get_num_mpz_t(), base.get_num_mpz_t(), e);
  mpz_pow_ui(r.get_den_mpz_t(), base.get_den_mpz_t(), e);
  r.canonicalize();
  return r;
}

Enclosure clamped(const Real& p, unsigned bits) {
  Enclosure e = p.approx(bits);
  if (e.lo < 0) e.lo = 0;
  if (e.hi > 1) e.hi = 1;
  return e;
}

}  // namespace

Enclosure word_measure(const FiniteProbabilitySpace& P, std::span<const Symbol> w, unsigned bits) {
  std::vector<std::uint64_t> counts(P.size(), 0);
  for (Symbol s : w) {
    require(s < P.size(), "symbol index " + std::to_string(s) + " outside the alphabet");
    ++counts[s];
  }
  Enclosure out{1, 1};
  for (std::size_t a = 0; a < counts.size(); ++a) {
    if (!counts[a]) continue;
    if (P.is_exact()) {
      Rational f = pow_q(P.exact_prob(static_cast<Symbol>(a)), counts[a]);
      out.lo *= f;
      out.hi *= f;
    } else {
      Enclosure e = clamped(P.prob(static_cast<Symbol>(a)), bits);
      out.lo *= pow_q(e.lo, counts[a]);
      out.hi *= pow_q(e.hi, counts[a]);
    }
  }
  return out;
}

Enclosure family_measure(const FiniteProbabilitySpace& P, std::span<const Word> family,
                         unsigned bits) {
  PrefixFreeFamily reduced = prefix_free_reduce(family);
  Enclosure total{0, 0};
  for (const auto& w : reduced.words()) total = total + word_measure(P, w, bits);
  return total;
}

// --------------------------------------------------------------- entropy

namespace {

Rational mpfr_to_rational(const mpfr_t x) {
  if (mpfr_zero_p(x)) return 0;
  BigInt m;
  mpfr_exp_t e = mpfr_get_z_2exp(m.get_mpz_t(), x);
  Rational r(m);
  if (e >= 0) {
    r.get_num() <<= static_cast<unsigned long>(e);
  } else {
    r.get_den() <<= static_cast<unsigned long>(-e);
  }
  r.canonicalize();
  return r;
}

// x log2(1/x) for x in [0, 1], rounded in direction `rnd`.
void plogp(mpfr_t out, const Rational& x, mpfr_rnd_t rnd, mpfr_prec_t prec) {
  if (x <= 0) {
    mpfr_set_zero(out, 1);
    return;
  }
  mpfr_rnd_t inv = rnd == MPFR_RNDU ? MPFR_RNDD : MPFR_RNDU;
  mpfr_t px, t;
  mpfr_inits2(prec, px, t, static_cast<mpfr_ptr>(nullptr));
  // 1/x rounded with rnd: round x the other way first.
  mpfr_set_q(px, x.get_mpq_t(), inv);
  mpfr_ui_div(t, 1, px, rnd);
  mpfr_log2(t, t, rnd);
  if (mpfr_sgn(t) < 0) mpfr_set_zero(t, 1);
  mpfr_set_q(px, x.get_mpq_t(), rnd);
  mpfr_mul(out, t, px, rnd);
  mpfr_clears(px, t, static_cast<mpfr_ptr>(nullptr));
}

}  // namespace

Enclosure shannon_entropy(const FiniteProbabilitySpace& P, double abs_error) {
  require(abs_error > 0, "entropy error budget must be positive");
  const Rational budget_q(abs_error);
  for (unsigned bits = 64; bits <= 4096; bits *= 2) {
    mpfr_t lo, hi, tl, th;
    mpfr_inits2(bits, lo, hi, tl, th, static_cast<mpfr_ptr>(nullptr));
    mpfr_set_zero(lo, 1);
    mpfr_set_zero(hi, 1);
    for (std::size_t a = 0; a < P.size(); ++a) {
      const Real& p = P.prob(static_cast<Symbol>(a));
      if (p.is_exact()) {
        plogp(tl, p.exact(), MPFR_RNDD, bits);
        plogp(th, p.exact(), MPFR_RNDU, bits);
      } else {
        unsigned pb = std::min(bits, P.budget().max_bits);
        Enclosure e = clamped(p, pb);
        mpfr_t u, v;
        mpfr_inits2(bits, u, v, static_cast<mpfr_ptr>(nullptr));
        plogp(u, e.lo, MPFR_RNDD, bits);
        plogp(v, e.hi, MPFR_RNDD, bits);
        mpfr_min(tl, u, v, MPFR_RNDD);
        plogp(u, e.lo, MPFR_RNDU, bits);
        plogp(v, e.hi, MPFR_RNDU, bits);
        mpfr_max(th, u, v, MPFR_RNDU);
        // x log2(1/x) peaks at x = 1/e with value 1/(e ln 2).
        Rational inv_e_lo, inv_e_hi;
        {
          mpfr_t w;
          mpfr_init2(w, bits);
          mpfr_set_ui(w, 1, MPFR_RNDU);
          mpfr_exp(w, w, MPFR_RNDU);
          mpfr_ui_div(w, 1, w, MPFR_RNDD);
          inv_e_lo = mpfr_to_rational(w);
          mpfr_set_ui(w, 1, MPFR_RNDD);
          mpfr_exp(w, w, MPFR_RNDD);
          mpfr_ui_div(w, 1, w, MPFR_RNDU);
          inv_e_hi = mpfr_to_rational(w);
          mpfr_clear(w);
        }
        if (e.lo <= inv_e_hi && inv_e_lo <= e.hi) {
          mpfr_set_ui(u, 1, MPFR_RNDD);
          mpfr_exp(u, u, MPFR_RNDD);
          mpfr_const_log2(v, MPFR_RNDD);
          mpfr_mul(u, u, v, MPFR_RNDD);
          mpfr_ui_div(u, 1, u, MPFR_RNDU);
          mpfr_max(th, th, u, MPFR_RNDU);
        }
        mpfr_clears(u, v, static_cast<mpfr_ptr>(nullptr));
      }
      mpfr_add(lo, lo, tl, MPFR_RNDD);
      mpfr_add(hi, hi, th, MPFR_RNDU);
    }
    Enclosure out{mpfr_to_rational(lo), mpfr_to_rational(hi)};
    mpfr_clears(lo, hi, tl, th, static_cast<mpfr_ptr>(nullptr));
    if (out.lo < 0) out.lo = 0;
    if (out.width() <= budget_q) return out;
    if (!P.is_exact() && bits >= P.budget().max_bits)
      throw UndecidedComparison("entropy enclosure wider than the error budget at " +
                                std::to_string(P.budget().max_bits) + " bits");
  }
  throw UndecidedComparison("entropy error budget not reached");
}

// ------------------------------------------------------ random variables

RealRandomVariable::RealRandomVariable(std::vector<Real> values, Rational envelope)
    : values_(std::move(values)), envelope_(std::move(envelope)) {
  require(envelope_ >= 0, "envelope must be nonnegative");
  for (const auto& v : values_) {
    if (v.is_exact()) {
      require(abs(v.exact()) <= envelope_,
              "value " + to_string(v.exact()) + " exceeds the envelope " + to_string(envelope_));
    } else {
      Enclosure e = v.approx(64);
      require(e.lo >= -envelope_ && e.hi <= envelope_,
              "value '" + v.label() + "' is not within the envelope " + to_string(envelope_));
    }
  }
}

RealRandomVariable RealRandomVariable::exact(std::vector<Rational> values) {
  Rational env = 0;
  for (const auto& v : values) env = std::max(env, abs(v));
  return RealRandomVariable(std::vector<Real>(values.begin(), values.end()), env);
}

RealRandomVariable RealRandomVariable::indicator(std::size_t alphabet_size, Symbol a) {
  require(a < alphabet_size, "indicator symbol outside the alphabet");
  std::vector<Rational> v(alphabet_size, 0);
  v[a] = 1;
  return exact(std::move(v));
}

bool RealRandomVariable::is_exact() const {
  return std::all_of(values_.begin(), values_.end(), [](const Real& r) { return r.is_exact(); });
}

static void check_rv(const FiniteProbabilitySpace& P, const RealRandomVariable& X) {
  require(P.size() == X.size(), "random variable and space have different alphabets");
}

Enclosure rv_mean(const FiniteProbabilitySpace& P, const RealRandomVariable& X, unsigned bits) {
  check_rv(P, X);
  Enclosure total{0, 0};
  for (std::size_t a = 0; a < P.size(); ++a) {
    auto s = static_cast<Symbol>(a);
    total = total + X.value(s).approx(bits) * (P.is_exact() ? Enclosure::point(P.exact_prob(s))
                                                            : clamped(P.prob(s), bits));
  }
  return total;
}

Enclosure rv_variance(const FiniteProbabilitySpace& P, const RealRandomVariable& X, unsigned bits) {
  check_rv(P, X);
  Enclosure mean = rv_mean(P, X, bits);
  Enclosure total{0, 0};
  for (std::size_t a = 0; a < P.size(); ++a) {
    auto s = static_cast<Symbol>(a);
    Enclosure d = X.value(s).approx(bits) - mean;
    Enclosure sq;
    if (d.lo <= 0 && d.hi >= 0) {
      sq = {0, std::max(Rational(d.lo * d.lo), Rational(d.hi * d.hi))};
    } else {
      Rational a2 = d.lo * d.lo, b2 = d.hi * d.hi;
      sq = {std::min(a2, b2), std::max(a2, b2)};
    }
    total = total + sq * (P.is_exact() ? Enclosure::point(P.exact_prob(s)) : clamped(P.prob(s), bits));
  }
  if (total.lo < 0) total.lo = 0;
  return total;
}

// -------------------------------------------------------- reductions

Contraction contract(const FiniteProbabilitySpace& P, const SequencePrefix& s, Symbol a,
                     Symbol b) {
  require(a != b, "contraction needs two distinct symbols");
  require(P.alphabet().contains(a) && P.alphabet().contains(b), "contraction symbol outside the alphabet");
  require(s.alphabet_size() == P.size(), "sequence and space have different alphabets");
  auto remap = [&](Symbol x) -> Symbol {
    if (x == b) x = a;
    return x > b ? static_cast<Symbol>(x - 1) : x;
  };
  std::vector<std::string> names;
  for (std::size_t x = 0; x < P.size(); ++x)
    if (x != b) names.push_back(P.alphabet().name(static_cast<Symbol>(x)));
  Alphabet alpha(std::move(names));

  Contraction out;
  if (P.is_exact()) {
    std::vector<Rational> q;
    for (std::size_t x = 0; x < P.size(); ++x) {
      if (x == b) continue;
      q.push_back(x == a ? Rational(P.exact_prob(a) + P.exact_prob(b)) : P.exact_prob(static_cast<Symbol>(x)));
    }
    out.space = FiniteProbabilitySpace::exact(std::move(alpha), std::move(q));
  } else {
    std::vector<Real> q;
    for (std::size_t x = 0; x < P.size(); ++x) {
      if (x == b) continue;
      if (x == a) {
        Real pa = P.prob(a), pb = P.prob(b);
        q.push_back(Real::from_refinement(
            [pa, pb](unsigned bits) { return pa.approx(bits + 1) + pb.approx(bits + 1); },
            pa.label() + "+" + pb.label()));
      } else {
        q.push_back(P.prob(static_cast<Symbol>(x)));
      }
    }
    out.space = FiniteProbabilitySpace::interval(std::move(alpha), std::move(q), P.budget());
  }
  out.sequence = SequencePrefix(P.size() - 1);
  out.sequence.reserve(s.length());
  for (Symbol x : s.view()) out.sequence.append(remap(x));
  return out;
}

Contraction binary_projection(const FiniteProbabilitySpace& P, const SequencePrefix& s, Symbol a) {
  require(P.size() >= 2, "binary projection needs at least two symbols");
  require(P.alphabet().contains(a), "projection symbol outside the alphabet");
  Contraction cur{P, s};
  Symbol target = a;
  Symbol other = a == 0 ? 1 : 0;
  // Merge every remaining non-target symbol into `other`.
  while (cur.space.size() > 2) {
    Symbol victim = 0;
    while (victim == target || victim == other) ++victim;
    cur = contract(cur.space, cur.sequence, other, victim);
    if (target > victim) --target;
    if (other > victim) --other;
  }
  // Rename to {"0","1"} with 1 = target.
  Alphabet bin = Alphabet::of_chars("01");
  Contraction out;
  if (cur.space.is_exact()) {
    out.space = FiniteProbabilitySpace::exact(
        bin, {cur.space.exact_prob(other), cur.space.exact_prob(target)});
  } else {
    out.space = FiniteProbabilitySpace::interval(
        bin, {cur.space.prob(other), cur.space.prob(target)}, P.budget());
  }
  out.sequence = SequencePrefix(2);
  out.sequence.reserve(s.length());
  for (Symbol x : cur.sequence.view()) out.sequence.append(x == target ? 1 : 0);
  return out;
}

std::vector<SupportViolation> support_violations(const FiniteProbabilitySpace& P,
                                                 const SequencePrefix& s) {
  require(s.alphabet_size() == P.size(), "sequence and space have different alphabets");
  std::vector<char> zero(P.size(), 0);
  for (std::size_t a = 0; a < P.size(); ++a)
    if (count_occurrences(s, static_cast<Symbol>(a)) > 0)
      zero[a] = compare(P.prob(static_cast<Symbol>(a)), 0, P.budget()) == 0;
  std::vector<SupportViolation> out;
  for (std::size_t i = 0; i < s.length(); ++i)
    if (zero[s[i]]) out.push_back({i + 1, s[i]});
  return out;
}

bool certain_symbol_check(const FiniteProbabilitySpace& P, const SequencePrefix& s) {
  require(s.alphabet_size() == P.size(), "sequence and space have different alphabets");
  for (std::size_t a = 0; a < P.size(); ++a) {
    if (compare(P.prob(static_cast<Symbol>(a)), 1, P.budget()) == 0)
      return count_occurrences(s, static_cast<Symbol>(a)) == s.length();
  }
  return true;
}

// ------------------------------------------------------ FactoredMeasure

namespace {

void factor_into(BigInt v, int sign, std::vector<BigInt>& basis,
                 std::vector<std::pair<std::size_t, std::int64_t>>& out) {
  auto add = [&](const BigInt& f, std::int64_t e) {
    auto it = std::find(basis.begin(), basis.end(), f);
    std::size_t idx = static_cast<std::size_t>(it - basis.begin());
    if (it == basis.end()) basis.push_back(f);
    out.emplace_back(idx, sign * e);
  };
  for (unsigned long p = 2; p <= 1000000 && v > 1; p += (p == 2 ? 1 : 2)) {
    if (BigInt(p) * p > v) break;
    std::int64_t e = 0;
    while (mpz_divisible_ui_p(v.get_mpz_t(), p)) {
      mpz_divexact_ui(v.get_mpz_t(), v.get_mpz_t(), p);
      ++e;
    }
    if (e) add(BigInt(p), e);
  }
  // Whatever is left is a prime or a product of primes above the trial bound.
  if (v > 1) add(v, 1);
}

}  // namespace

FactoredMeasure::FactoredMeasure(const FiniteProbabilitySpace& P) {
  require(P.is_exact(), "factored measures need exact probabilities");
  std::vector<std::vector<std::pair<std::size_t, std::int64_t>>> raw(P.size());
  for (std::size_t a = 0; a < P.size(); ++a) {
    const Rational& p = P.exact_prob(static_cast<Symbol>(a));
    if (p == 0) continue;
    factor_into(p.get_num(), 1, basis_, raw[a]);
    factor_into(p.get_den(), -1, basis_, raw[a]);
  }
  exponents_.resize(P.size());
  for (std::size_t a = 0; a < P.size(); ++a) {
    if (P.exact_prob(static_cast<Symbol>(a)) == 0) continue;
    std::vector<std::int64_t> e(basis_.size(), 0);
    for (auto [idx, k] : raw[a]) e[idx] += k;
    exponents_[a] = std::move(e);
  }
}

std::vector<std::int64_t> FactoredMeasure::from_counts(std::span<const std::uint64_t> counts) const {
  require(counts.size() == exponents_.size(), "count vector has the wrong size");
  std::vector<std::int64_t> out(basis_.size(), 0);
  for (std::size_t a = 0; a < counts.size(); ++a) {
    if (!counts[a]) continue;
    require(exponents_[a].has_value(), "zero-probability symbol has no exponent vector");
    const auto& e = *exponents_[a];
    for (std::size_t i = 0; i < e.size(); ++i)
      out[i] += e[i] * static_cast<std::int64_t>(counts[a]);
  }
  return out;
}

Rational FactoredMeasure::evaluate(std::span<const std::int64_t> exponents) const {
  require(exponents.size() == basis_.size(), "exponent vector has the wrong size");
  BigInt num = 1, den = 1;
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    std::int64_t e = exponents[i];
    if (!e) continue;
    BigInt f;
    mpz_pow_ui(f.get_mpz_t(), basis_[i].get_mpz_t(), static_cast<unsigned long>(e < 0 ? -e : e));
    (e > 0 ? num : den) *= f;
  }
  Rational r(num, den);
  r.canonicalize();
  return r;
}

}  // namespace efflln
