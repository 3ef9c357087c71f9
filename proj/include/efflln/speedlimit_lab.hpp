#pragma once

#include <cstdint>
#include <string>

#include "efflln/dev_tests.hpp"
#include "efflln/prob_core.hpp"
#include "efflln/stats.hpp"

namespace efflln {

inline constexpr std::uint64_t kSamplingCap = 1ULL << 20;  // 4^10

/// Checkpoints |N_a(4^k) - 4^k P(a)| <= 2^k for k in [n_lo, n_hi]; n_hi = 0
/// means "as deep as the prefix allows".
CheckpointReport checkpoint_scan(const SequencePrefix& s, const FiniteProbabilitySpace& P, Symbol a,
                                 unsigned n_lo = 1, unsigned n_hi = 0);

/// A prefix of length 4^depth whose count of `a` stays within 1 of i P(a) at
/// every position i, so every checkpoint k <= depth passes. The choice among
/// admissible symbols is randomized by `seed`. Only a finite prefix is
/// produced; nothing is claimed about checkpoints beyond `depth`.
SequencePrefix adversarial_generate(const FiniteProbabilitySpace& P, Symbol a, unsigned depth,
                                    std::uint64_t seed);

struct McEstimate {
  std::uint64_t trials = 0;
  std::uint64_t passes = 0;
  double rate = 0.0;
  WilsonInterval wilson95{0.0, 0.0};
  WilsonInterval wilson3{0.0, 0.0};
  std::string to_csv_row() const;  // trials,passes,rate,lo95,hi95,lo3,hi3
  static std::string csv_header();
};

McEstimate make_estimate(std::uint64_t passes, std::uint64_t trials);

/// Fraction of sampled prefixes of length 4^n passing every checkpoint in
/// [n1, n] (band 2^k, <=). Trial i uses stream i of `seed`.
McEstimate montecarlo_pass_rate(const FiniteProbabilitySpace& P, Symbol a, unsigned n1, unsigned n,
                                std::uint64_t trials, std::uint64_t seed, unsigned workers = 1,
                                std::uint64_t cap = kSamplingCap);

/// Band 2^(k+1), strict. Rejects V(X) = 0.
CheckpointReport rv_checkpoint_scan(const SequencePrefix& s, const FiniteProbabilitySpace& P,
                                    const RealRandomVariable& X, unsigned n_lo = 1,
                                    unsigned n_hi = 0);

McEstimate rv_montecarlo_pass_rate(const FiniteProbabilitySpace& P, const RealRandomVariable& X,
                                   unsigned n1, unsigned n, std::uint64_t trials,
                                   std::uint64_t seed, unsigned workers = 1,
                                   std::uint64_t cap = kSamplingCap);

/// DP reference for rv_montecarlo_pass_rate.
DpResult rv_checkpoint_probability(const FiniteProbabilitySpace& P, const RealRandomVariable& X,
                                   unsigned n1, unsigned n);

}  // namespace efflln
