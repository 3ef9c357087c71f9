#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "efflln/prob_core.hpp"
#include "efflln/rational.hpp"

namespace efflln {

/// Philox4x32-10 (Salmon et al., SC'11). Counter-based: the output block for
/// (key, counter) is a pure function, so streams split by counter words.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  Philox4x32(std::uint64_t key, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        stream_(stream) {}

  static Block generate(std::array<std::uint32_t, 2> key, Block counter);

  /// Next 64-bit word. Word i of the stream is half of block i / 2.
  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, bound) by rejection.
  std::uint64_t next_below(std::uint64_t bound);

  void seek(std::uint64_t word_index);

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Block buf_{};
  unsigned used_ = 2;  // 64-bit halves consumed from buf_
};

/// Inversion sampler over exact rational probabilities. Thresholds are
/// floor(C_i * 2^64) of the cumulative sums C_i, with the last fixed at 2^64;
/// a draw u picks the smallest i with u < T_i.
class InversionSampler {
 public:
  InversionSampler() = default;
  explicit InversionSampler(const std::vector<Rational>& probs);

  std::size_t operator()(std::uint64_t draw) const;
  std::size_t size() const { return thresholds_.size(); }

 private:
  std::vector<unsigned __int128> thresholds_;
};

/// Stream id used by experiments: the trial index.
SequencePrefix sample_sequence(const FiniteProbabilitySpace& P, std::size_t length,
                               std::uint64_t seed, std::uint64_t stream = 0);

FiniteProbabilitySpace read_manifest(const std::string& path);
FiniteProbabilitySpace parse_manifest(const std::string& json_text);
std::string manifest_json(const FiniteProbabilitySpace& P);
void write_manifest(const std::string& path, const FiniteProbabilitySpace& P);

enum class SequenceFormat { Tokens, Bytes };

SequencePrefix read_sequence(const std::string& path, const Alphabet& alphabet,
                             SequenceFormat format = SequenceFormat::Tokens);
SequencePrefix parse_sequence_tokens(const std::string& text, const Alphabet& alphabet);
void write_sequence(const std::string& path, const SequencePrefix& s, const Alphabet& alphabet,
                    SequenceFormat format = SequenceFormat::Tokens);
std::string format_sequence_tokens(const SequencePrefix& s, const Alphabet& alphabet);

/// FNV-1a 64 over the symbol stream, for determinism checks.
std::uint64_t sequence_hash(const SequencePrefix& s);

}  // namespace efflln
