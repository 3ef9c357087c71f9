#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "efflln/dev_tests.hpp"
#include "efflln/prob_core.hpp"
#include "efflln/rational.hpp"

namespace efflln {

/// ceil(n^(2+eps)), exact.
std::uint64_t f_threshold(std::uint64_t n, const Rational& eps);
/// ceil(n^t) for rational t >= 0, exact.
std::uint64_t ceil_power(std::uint64_t n, const Rational& t);

enum class Verdict { HoldsSoFar, Violated, Undetermined };
std::string_view verdict_name(Verdict v);

struct Violation {
  std::uint64_t k = 0;
  std::string label;  // symbol name, or "X" for random-variable scans
  Rational deviation;  // |empirical - target| (lower end in interval mode)
  bool operator==(const Violation&) const = default;
};

struct NVerdict {
  std::uint64_t n = 0;
  Verdict verdict = Verdict::Undetermined;
  std::uint64_t k_from = 0;  // f(n)
  std::uint64_t k_to = 0;    // last k examined (0 when none)
  std::optional<Violation> violation;  // first violating k
  bool operator==(const NVerdict&) const = default;
};

struct WitnessReport {
  std::string schedule;  // "eps=1" or "t=3"
  std::uint64_t n_lo = 1;
  std::uint64_t n_max = 0;
  std::uint64_t length = 0;
  std::vector<NVerdict> verdicts;  // n = n_lo .. n_max
  /// Smallest M such that no n >= M in the range is violated.
  std::uint64_t candidate_m = 1;

  bool all_hold() const;
  std::string to_csv() const;
  std::string to_json() const;
};

/// Checks max_a |N_a(k)/k - P(a)| < 1/n for f(n) <= k <= length.
WitnessReport lln_witness_scan(const SequencePrefix& s, const FiniteProbabilitySpace& P,
                               const Rational& eps, std::uint64_t n_max);

/// The same scan with an explicit k schedule k_start(n) = ceil(n^t) over
/// n in [n_lo, n_max].
WitnessReport lln_witness_scan_power(const SequencePrefix& s, const FiniteProbabilitySpace& P,
                                     const Rational& t, std::uint64_t n_lo, std::uint64_t n_max);

/// |(1/k) sum_{i<=k} X(s_i) - E(X)| < 1/n for f(n) <= k <= length.
WitnessReport rv_witness_scan(const SequencePrefix& s, const FiniteProbabilitySpace& P,
                              const RealRandomVariable& X, const Rational& eps,
                              std::uint64_t n_max, const PrecisionBudget& budget = {});

/// Scan of partial sums S_k = scaled_sums[k-1] / scale against the mean mu.
WitnessReport mean_witness_scan(std::span<const std::int64_t> scaled_sums, const BigInt& scale,
                                const Rational& mu, const Rational& eps, std::uint64_t n_lo,
                                std::uint64_t n_max, const std::string& label = "X");

struct AepReport {
  WitnessReport witness;
  bool positive = true;  // every prefix has positive measure
  std::optional<std::uint64_t> first_zero_position;  // 1-based
  bool identity_holds = true;  // exact measure identity on every prefix checked
  std::uint64_t identity_checks = 0;
  std::uint64_t escalations = 0;  // comparisons resolved only at high precision
};

/// Checks |-log2 P(s|k)/k - H(P)| < 1/n for f(n) <= k <= length, n in
/// [n_lo, n_max], plus positivity of every prefix measure.
AepReport aep_scan(const SequencePrefix& s, const FiniteProbabilitySpace& P, const Rational& eps,
                   std::uint64_t n_max, std::uint64_t n_lo = 1);

struct DichotomyConfig {
  FiniteProbabilitySpace space;
  Symbol symbol = 1;
  std::vector<Rational> t_grid;
  std::uint64_t trials = 0;
  std::uint64_t length = 0;
  std::uint64_t seed = 0;
  std::uint64_t window_lo = 4;  // condition (i) window for n
  std::uint64_t window_hi = 10;
  unsigned checkpoint_lo = 1;  // checkpoint subfamily n range
  unsigned checkpoint_hi = 5;
  unsigned workers = 1;
};

struct DichotomyRow {
  Rational t;
  std::uint64_t trials = 0;
  std::uint64_t passes = 0;
  double rate = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
};

struct DichotomyTable {
  std::vector<DichotomyRow> rows;  // one per t
  std::uint64_t checkpoint_passes = 0;
  std::uint64_t trials = 0;
  std::string to_csv() const;
  std::string to_json() const;
};

/// Condition (i) for the symbol: |N_a(k)/k - P(a)| < 1/n for every n in the
/// window and every k in [ceil(n^t), length].
DichotomyTable dichotomy_experiment(const DichotomyConfig& config);

}  // namespace efflln
