#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "efflln/bounds.hpp"
#include "efflln/dev_tests.hpp"
#include "efflln/lln_lab.hpp"
#include "efflln/rational.hpp"
#include "efflln/speedlimit_lab.hpp"

namespace efflln {

/// Finite-support random variable with rational values and probabilities,
/// bounded by the envelope [a, b].
class BoundedDiscreteRV {
 public:
  BoundedDiscreteRV(std::vector<Rational> support, std::vector<Rational> probs, Rational a,
                    Rational b);
  /// Envelope [min support, max support] (widened by one when they coincide).
  static BoundedDiscreteRV from_support(std::vector<Rational> support, std::vector<Rational> probs);

  const std::vector<Rational>& support() const { return support_; }
  const std::vector<Rational>& probs() const { return probs_; }
  const Rational& a() const { return a_; }
  const Rational& b() const { return b_; }
  Rational mean() const;
  Rational variance() const;

 private:
  std::vector<Rational> support_;
  std::vector<Rational> probs_;
  Rational a_, b_;
};

/// n i.i.d. draws. Values are stored as integers w with X = w / scale so that
/// S_k = scaled_sum(k) / scale exactly.
class SampleRun {
 public:
  SampleRun() = default;
  SampleRun(std::uint64_t seed, std::uint64_t stream, std::vector<std::uint16_t> indices,
            std::vector<std::int64_t> scaled_values, BigInt scale);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::size_t size() const { return indices_.size(); }
  std::span<const std::uint16_t> indices() const { return indices_; }
  const BigInt& scale() const { return scale_; }
  /// scale * S_k, k in [0, size()].
  std::int64_t scaled_sum(std::size_t k) const { return k == 0 ? 0 : sums_[k - 1]; }
  Rational partial_sum(std::size_t k) const;
  std::span<const std::int64_t> scaled_sums() const { return sums_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::vector<std::uint16_t> indices_;
  std::vector<std::int64_t> sums_;
  BigInt scale_ = 1;
};

SampleRun sample_iid(const BoundedDiscreteRV& rv, std::size_t n, std::uint64_t seed,
                     std::uint64_t stream = 0);

struct Effectivization {
  std::uint64_t m = 0;
  BoundCertificate certificate;
};

/// Smallest m with 2 * double_tail_bound(m, eps, (b-a)^2/2) < delta.
Effectivization effectivization_certificate(const BoundedDiscreteRV& rv, const Rational& eps,
                                            const Rational& delta,
                                            std::uint64_t cap = 100000000);

/// |S_k/k - mu| < 1/n for f(n) <= k <= run length.
WitnessReport as_convergence_scan(const SampleRun& run, const Rational& mu, const Rational& eps,
                                  std::uint64_t n_max, std::uint64_t n_lo = 1);

struct SllnCheckpointResult {
  McEstimate estimate;
  Rational r;  // from the band integral with l = sqrt(3/v)
  double r_power = 0.0;  // r^(n - n1)
  std::optional<DpResult> dp;  // convolution DP when 4^n is within the cap
};

/// P(|S_{4^k} - 4^k mu| <= 2^k for all k in [n1, n]).
SllnCheckpointResult slln_checkpoint_experiment(const BoundedDiscreteRV& rv, unsigned n1, unsigned n,
                                                std::uint64_t trials, std::uint64_t seed,
                                                unsigned workers = 1);

}  // namespace efflln

namespace efflln {

/// {"support": ["num/den", ...], "probs": [...], "envelope": ["a", "b"]};
/// the envelope is optional.
BoundedDiscreteRV parse_rv_json(const std::string& json_text);
BoundedDiscreteRV read_rv_file(const std::string& path);

}  // namespace efflln
