#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "efflln/rational.hpp"
#include "efflln/real.hpp"

namespace efflln {

/// Symbols are dense indices into an Alphabet's name table.
using Symbol = std::uint16_t;
using Word = std::vector<Symbol>;

class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> names);

  /// {"0","1"} or any other list of single-character names.
  static Alphabet of_chars(std::string_view chars);

  std::size_t size() const { return names_.size(); }
  const std::string& name(Symbol s) const;
  const std::vector<std::string>& names() const { return names_; }
  std::optional<Symbol> find(std::string_view name) const;
  Symbol at(std::string_view name) const;  // throws DomainError
  bool contains(Symbol s) const { return s < names_.size(); }

  /// Maps each character of `text` to the symbol of that one-character name.
  Word parse_word(std::string_view text) const;
  std::string format_word(std::span<const Symbol> w) const;

  bool operator==(const Alphabet& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Symbol> index_;
};

enum class ProbabilityMode { Exact, Interval };

/// A probability assignment over a finite alphabet. Exact mode stores
/// rationals summing to exactly one; interval mode stores refinable reals
/// whose enclosure sum contains one at the validation budget.
class FiniteProbabilitySpace {
 public:
  FiniteProbabilitySpace() = default;

  static FiniteProbabilitySpace exact(Alphabet alphabet, std::vector<Rational> probs);
  static FiniteProbabilitySpace interval(Alphabet alphabet, std::vector<Real> probs,
                                         PrecisionBudget budget = {});
  /// Uniform distribution over {"0","1",...} named by `chars`.
  static FiniteProbabilitySpace uniform(std::string_view chars);

  ProbabilityMode mode() const { return mode_; }
  bool is_exact() const { return mode_ == ProbabilityMode::Exact; }
  const Alphabet& alphabet() const { return alphabet_; }
  std::size_t size() const { return alphabet_.size(); }

  const Real& prob(Symbol s) const;
  /// Exact-mode probability; throws DomainError in interval mode.
  const Rational& exact_prob(Symbol s) const;
  const PrecisionBudget& budget() const { return budget_; }

  /// Symbols with positive probability (Omega_e). Interval mode resolves
  /// signs within the budget and throws UndecidedComparison otherwise.
  std::vector<Symbol> support() const;

 private:
  Alphabet alphabet_;
  std::vector<Real> probs_;
  ProbabilityMode mode_ = ProbabilityMode::Exact;
  PrecisionBudget budget_;
};

/// A finite prefix of a sequence with per-symbol counters kept in step.
/// Append-only; a single writer.
class SequencePrefix {
 public:
  SequencePrefix() = default;
  explicit SequencePrefix(std::size_t alphabet_size);
  SequencePrefix(std::size_t alphabet_size, std::span<const Symbol> symbols);

  void append(Symbol s);
  void reserve(std::size_t n) { word_.reserve(n); }

  std::size_t length() const { return word_.size(); }
  std::size_t alphabet_size() const { return counts_.size(); }
  Symbol operator[](std::size_t i) const { return word_[i]; }
  const Word& word() const { return word_; }
  std::span<const Symbol> view() const { return word_; }
  std::span<const std::uint64_t> counts() const { return counts_; }
  /// The first n symbols as a new prefix (counters recomputed).
  SequencePrefix prefix(std::size_t n) const;

  bool operator==(const SequencePrefix& other) const {
    return word_ == other.word_ && counts_.size() == other.counts_.size();
  }

 private:
  friend std::uint64_t count_occurrences(const SequencePrefix& s, Symbol a);
  Word word_;
  std::vector<std::uint64_t> counts_;
};

/// A set of words none of which is a proper prefix of another, kept in
/// lexicographic order.
class PrefixFreeFamily {
 public:
  PrefixFreeFamily() = default;
  const std::vector<Word>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  /// True when some member is a prefix of w.
  bool covers(std::span<const Symbol> w) const;

 private:
  friend PrefixFreeFamily prefix_free_reduce(std::span<const Word> family);
  std::vector<Word> words_;
};

/// Real-valued function of the symbol with a declared bound |X(a)| <= envelope.
class RealRandomVariable {
 public:
  RealRandomVariable() = default;
  RealRandomVariable(std::vector<Real> values, Rational envelope);
  /// Exact values; envelope defaults to max |X(a)|.
  static RealRandomVariable exact(std::vector<Rational> values);
  /// X(a) = 1 on `a`, 0 elsewhere.
  static RealRandomVariable indicator(std::size_t alphabet_size, Symbol a);

  std::size_t size() const { return values_.size(); }
  const Real& value(Symbol a) const { return values_.at(a); }
  const Rational& exact_value(Symbol a) const { return values_.at(a).exact(); }
  bool is_exact() const;
  const Rational& envelope() const { return envelope_; }

 private:
  std::vector<Real> values_;
  Rational envelope_;
};

struct Contraction {
  FiniteProbabilitySpace space;  // over the alphabet with `b` removed
  SequencePrefix sequence;       // every b replaced by a, re-indexed
};

struct SupportViolation {
  std::size_t position;  // 1-based
  Symbol symbol;
  bool operator==(const SupportViolation&) const = default;
};

/// P(w): the product of symbol probabilities; P(empty word) = 1.
/// Interval mode returns an enclosure built from `bits`-bit approximations.
Enclosure word_measure(const FiniteProbabilitySpace& P, std::span<const Symbol> w,
                       unsigned bits = 64);

/// Measure of the open set generated by `family` (prefix-free reduction first).
Enclosure family_measure(const FiniteProbabilitySpace& P, std::span<const Word> family,
                         unsigned bits = 64);

PrefixFreeFamily prefix_free_reduce(std::span<const Word> family);

std::uint64_t count_occurrences(const SequencePrefix& s, Symbol a);

/// Shannon entropy in bits, enclosed in an interval of width <= abs_error.
Enclosure shannon_entropy(const FiniteProbabilitySpace& P, double abs_error = 1e-12);

Enclosure rv_mean(const FiniteProbabilitySpace& P, const RealRandomVariable& X,
                  unsigned bits = 64);
Enclosure rv_variance(const FiniteProbabilitySpace& P, const RealRandomVariable& X,
                      unsigned bits = 64);

/// Merge symbol b into a: Q(a) = P(a) + P(b), t = s with b replaced by a.
Contraction contract(const FiniteProbabilitySpace& P, const SequencePrefix& s, Symbol a,
                     Symbol b);

/// Contract every symbol other than `a` into one, giving a space over
/// {"0","1"} with Q(1) = P(a) and the 0/1 image of s.
Contraction binary_projection(const FiniteProbabilitySpace& P, const SequencePrefix& s,
                              Symbol a);

/// Every occurrence in s of a symbol with probability zero.
std::vector<SupportViolation> support_violations(const FiniteProbabilitySpace& P,
                                                 const SequencePrefix& s);

/// When some symbol has probability one, true iff s consists only of it.
/// Vacuously true otherwise.
bool certain_symbol_check(const FiniteProbabilitySpace& P, const SequencePrefix& s);

/// Exact representation of products of the space's probabilities as integer
/// exponent vectors over a factor basis (primes, plus any cofactor that trial
/// division leaves).
class FactoredMeasure {
 public:
  explicit FactoredMeasure(const FiniteProbabilitySpace& P);

  std::size_t basis_size() const { return basis_.size(); }
  const std::vector<BigInt>& basis() const { return basis_; }
  /// Exponent vector of P(a); empty optional when P(a) = 0.
  const std::optional<std::vector<std::int64_t>>& symbol_exponents(Symbol a) const {
    return exponents_.at(a);
  }
  /// Exponents of prod_a P(a)^counts[a].
  std::vector<std::int64_t> from_counts(std::span<const std::uint64_t> counts) const;
  Rational evaluate(std::span<const std::int64_t> exponents) const;

 private:
  std::vector<BigInt> basis_;
  std::vector<std::optional<std::vector<std::int64_t>>> exponents_;
};

}  // namespace efflln
