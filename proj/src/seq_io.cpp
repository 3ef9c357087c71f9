#include "efflln/seq_io.hpp"

#include <algorithm>
#include <fstream>
#include "json.hpp"
#include <sstream>

#include "efflln/error.hpp"

namespace efflln {

// ----------------------------------------------------------------- Philox

Philox4x32::Block Philox4x32::generate(std::array<std::uint32_t, 2> key, Block ctr) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

std::uint64_t Philox4x32::next_u64() {
  if (used_ == 2) {
    buf_ = generate(key_, {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                           static_cast<std::uint32_t>(stream_),
                           static_cast<std::uint32_t>(stream_ >> 32)});
    ++block_;
    used_ = 0;
  }
  const unsigned i = 2 * used_++;
  return static_cast<std::uint64_t>(buf_[i]) | (static_cast<std::uint64_t>(buf_[i + 1]) << 32);
}

std::uint64_t Philox4x32::next_below(std::uint64_t bound) {
  require(bound > 0, "next_below: bound must be positive");
  const std::uint64_t threshold = (0 - bound) % bound;
  while (true) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

void Philox4x32::seek(std::uint64_t word_index) {
  block_ = word_index / 2;
  used_ = 2;
  if (word_index % 2) next_u64();
}

// -------------------------------------------------------------- sampling

InversionSampler::InversionSampler(const std::vector<Rational>& probs) {
  require(!probs.empty(), "sampler needs at least one outcome");
  Rational cum = 0;
  thresholds_.reserve(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    require(probs[i] >= 0, "sampler probabilities must be nonnegative");
    cum += probs[i];
    if (i + 1 == probs.size()) {
      require(cum == 1, "sampler probabilities must sum to 1");
      thresholds_.push_back(static_cast<unsigned __int128>(1) << 64);
      break;
    }
    BigInt t = cum.get_num() << 64;
    mpz_fdiv_q(t.get_mpz_t(), t.get_mpz_t(), cum.get_den_mpz_t());
    unsigned __int128 v = 0;
    std::uint64_t limbs[2] = {0, 0};
    require(mpz_sizeinbase(t.get_mpz_t(), 2) <= 65, "sampler threshold out of range");
    mpz_export(limbs, nullptr, -1, sizeof(std::uint64_t), 0, 0, t.get_mpz_t());
    v = (static_cast<unsigned __int128>(limbs[1]) << 64) | limbs[0];
    thresholds_.push_back(v);
  }
}

std::size_t InversionSampler::operator()(std::uint64_t draw) const {
  auto it = std::upper_bound(thresholds_.begin(), thresholds_.end(),
                             static_cast<unsigned __int128>(draw));
  return static_cast<std::size_t>(it - thresholds_.begin());
}

SequencePrefix sample_sequence(const FiniteProbabilitySpace& P, std::size_t length,
                               std::uint64_t seed, std::uint64_t stream) {
  require(P.is_exact(), "sampling needs exact probabilities");
  std::vector<Rational> probs;
  for (std::size_t a = 0; a < P.size(); ++a) probs.push_back(P.exact_prob(static_cast<Symbol>(a)));
  InversionSampler sampler(probs);
  Philox4x32 rng(seed, stream);
  SequencePrefix s(P.size());
  s.reserve(length);
  for (std::size_t i = 0; i < length; ++i) s.append(static_cast<Symbol>(sampler(rng.next_u64())));
  return s;
}

// -------------------------------------------------------------- manifests

FiniteProbabilitySpace parse_manifest(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
  if (!j.is_object() || !j.contains("symbols") || !j.contains("probs") ||
      !j["symbols"].is_array() || !j["probs"].is_array())
    throw FormatError("manifest must be an object with arrays 'symbols' and 'probs'");
  std::vector<std::string> names;
  for (const auto& s : j["symbols"]) {
    if (!s.is_string()) throw FormatError("manifest symbols must be strings");
    names.push_back(s.get<std::string>());
  }
  std::vector<Rational> probs;
  for (const auto& p : j["probs"]) {
    if (p.is_string()) {
      probs.push_back(parse_rational(p.get<std::string>()));
    } else if (p.is_number_integer()) {
      probs.emplace_back(p.get<long>());
    } else {
      throw FormatError("manifest probabilities must be strings such as \"1/3\"");
    }
  }
  if (names.size() != probs.size())
    throw FormatError("manifest has " + std::to_string(names.size()) + " symbols but " +
                      std::to_string(probs.size()) + " probabilities");
  try {
    return FiniteProbabilitySpace::exact(Alphabet(std::move(names)), std::move(probs));
  } catch (const FormatError&) {
    throw;
  } catch (const DomainError& e) {
    throw FormatError(std::string("invalid manifest: ") + e.what());
  }
}

static std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FiniteProbabilitySpace read_manifest(const std::string& path) { return parse_manifest(slurp(path)); }

std::string manifest_json(const FiniteProbabilitySpace& P) {
  require(P.is_exact(), "only exact spaces can be written as manifests");
  nlohmann::ordered_json j;
  j["symbols"] = P.alphabet().names();
  std::vector<std::string> probs;
  for (std::size_t a = 0; a < P.size(); ++a)
    probs.push_back(to_string(P.exact_prob(static_cast<Symbol>(a))));
  j["probs"] = probs;
  return j.dump() + "\n";
}

void write_manifest(const std::string& path, const FiniteProbabilitySpace& P) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << manifest_json(P);
}

// -------------------------------------------------------------- sequences

SequencePrefix parse_sequence_tokens(const std::string& text, const Alphabet& alphabet) {
  SequencePrefix s(alphabet.size());
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    std::string_view tok(text.data() + pos, end - pos);
    if (!tok.empty() && tok.back() == '\r') tok.remove_suffix(1);
    pos = end + 1;
    if (tok.empty()) {
      if (pos >= text.size()) break;
      throw FormatError("line " + std::to_string(line_no) + ": empty token");
    }
    auto sym = alphabet.find(tok);
    if (!sym)
      throw FormatError("line " + std::to_string(line_no) + ": unknown token '" + std::string(tok) +
                        "'");
    s.append(*sym);
  }
  return s;
}

std::string format_sequence_tokens(const SequencePrefix& s, const Alphabet& alphabet) {
  std::string out;
  for (Symbol x : s.view()) {
    out += alphabet.name(x);
    out += '\n';
  }
  return out;
}

SequencePrefix read_sequence(const std::string& path, const Alphabet& alphabet,
                             SequenceFormat format) {
  std::string data = slurp(path);
  if (format == SequenceFormat::Tokens) return parse_sequence_tokens(data, alphabet);
  if (alphabet.size() > 256) throw FormatError("byte files need an alphabet of at most 256 symbols");
  SequencePrefix s(alphabet.size());
  s.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto b = static_cast<unsigned char>(data[i]);
    if (b >= alphabet.size())
      throw FormatError("byte " + std::to_string(i) + ": value " + std::to_string(b) +
                        " outside the alphabet");
    s.append(b);
  }
  return s;
}

void write_sequence(const std::string& path, const SequencePrefix& s, const Alphabet& alphabet,
                    SequenceFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  if (format == SequenceFormat::Tokens) {
    out << format_sequence_tokens(s, alphabet);
    return;
  }
  if (alphabet.size() > 256) throw FormatError("byte files need an alphabet of at most 256 symbols");
  std::string bytes(s.length(), '\0');
  for (std::size_t i = 0; i < s.length(); ++i) bytes[i] = static_cast<char>(s[i]);
  out << bytes;
}

std::uint64_t sequence_hash(const SequencePrefix& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Symbol x : s.view()) {
    for (int b = 0; b < 2; ++b) {
      h ^= static_cast<std::uint8_t>(x >> (8 * b));
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace efflln
