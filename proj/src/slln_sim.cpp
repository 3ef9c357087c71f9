#include "efflln/slln_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "efflln/error.hpp"
#include "efflln/parallel.hpp"
#include "efflln/seq_io.hpp"
#include "json.hpp"

namespace efflln {

BoundedDiscreteRV::BoundedDiscreteRV(std::vector<Rational> support, std::vector<Rational> probs,
                                     Rational a, Rational b)
    : support_(std::move(support)), probs_(std::move(probs)), a_(std::move(a)), b_(std::move(b)) {
  require(!support_.empty(), "random variable needs a non-empty support");
  require(support_.size() == probs_.size(), "one probability per support value required");
  require(support_.size() <= 65536, "support larger than 65536 values");
  require(a_ < b_, "envelope needs a < b");
  Rational total = 0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    require(probs_[i] >= 0, "probabilities must be nonnegative");
    require(support_[i] >= a_ && support_[i] <= b_,
            "support value " + to_string(support_[i]) + " outside the envelope");
    total += probs_[i];
  }
  require(total == 1, "probabilities sum to " + to_string(total) + ", not 1");
}

BoundedDiscreteRV BoundedDiscreteRV::from_support(std::vector<Rational> support,
                                                  std::vector<Rational> probs) {
  require(!support.empty(), "random variable needs a non-empty support");
  Rational a = *std::min_element(support.begin(), support.end());
  Rational b = *std::max_element(support.begin(), support.end());
  if (a == b) b = a + 1;
  return BoundedDiscreteRV(std::move(support), std::move(probs), a, b);
}

Rational BoundedDiscreteRV::mean() const {
  Rational m = 0;
  for (std::size_t i = 0; i < support_.size(); ++i) m += support_[i] * probs_[i];
  return m;
}

Rational BoundedDiscreteRV::variance() const {
  const Rational m = mean();
  Rational v = 0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    Rational d = support_[i] - m;
    v += d * d * probs_[i];
  }
  return v;
}

SampleRun::SampleRun(std::uint64_t seed, std::uint64_t stream, std::vector<std::uint16_t> indices,
                     std::vector<std::int64_t> scaled_values, BigInt scale)
    : seed_(seed), stream_(stream), indices_(std::move(indices)), scale_(std::move(scale)) {
  sums_.reserve(indices_.size());
  std::int64_t acc = 0;
  for (auto i : indices_) {
    require(i < scaled_values.size(), "sample index outside the support");
    require(!__builtin_add_overflow(acc, scaled_values[i], &acc), "partial sum overflow");
    sums_.push_back(acc);
  }
}

Rational SampleRun::partial_sum(std::size_t k) const {
  require(k <= size(), "partial sum beyond the run");
  Rational r(BigInt(std::to_string(scaled_sum(k))), scale_);
  r.canonicalize();
  return r;
}

SampleRun sample_iid(const BoundedDiscreteRV& rv, std::size_t n, std::uint64_t seed,
                     std::uint64_t stream) {
  BigInt scale = 1;
  for (const auto& v : rv.support()) mpz_lcm(scale.get_mpz_t(), scale.get_mpz_t(), v.get_den_mpz_t());
  std::vector<std::int64_t> w;
  std::int64_t wmax = 0;
  for (const auto& v : rv.support()) {
    w.push_back(to_i64(Rational(v * Rational(scale)).get_num()));
    wmax = std::max(wmax, w.back() < 0 ? -w.back() : w.back());
  }
  require(n == 0 || wmax <= INT64_MAX / static_cast<std::int64_t>(n),
          "sample_iid: scaled partial sums would overflow");
  InversionSampler sampler(rv.probs());
  Philox4x32 rng(seed, stream);
  std::vector<std::uint16_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint16_t>(sampler(rng.next_u64()));
  return SampleRun(seed, stream, std::move(idx), std::move(w), scale);
}

Effectivization effectivization_certificate(const BoundedDiscreteRV& rv, const Rational& eps,
                                            const Rational& delta, std::uint64_t cap) {
  require(eps > 0 && delta > 0, "effectivization_certificate: need eps > 0 and delta > 0");
  const Rational w = rv.b() - rv.a();
  const Rational c = w * w / 2;
  const double target = to_double_down(delta);
  auto value = [&](std::uint64_t m) {
    return std::nextafter(2 * double_tail_bound(m, eps, c).value, INFINITY);
  };
  std::uint64_t lo = std::max<std::uint64_t>(1, monotonicity_threshold(eps, c));
  if (!(value(lo) < target)) {
    std::uint64_t step = 1, hi = lo;
    while (true) {
      if (hi >= cap) throw CapExceeded("effectivization_certificate: no m below " + std::to_string(cap));
      lo = hi;
      hi = std::min(cap, hi + step);
      step *= 2;
      if (value(hi) < target) break;
    }
    while (hi - lo > 1) {
      std::uint64_t mid = lo + (hi - lo) / 2;
      (value(mid) < target ? hi : lo) = mid;
    }
    lo = hi;
  }
  Effectivization out;
  out.m = lo;
  out.certificate = double_tail_bound(lo, eps, c);
  out.certificate.quantity =
      "P(exists n >= m, k >= ceil(n^(2+eps)) with |S_k/k - mu| >= 1/n)";
  out.certificate.value = value(lo);
  out.certificate.rule = "hoeffding+double_tail";
  out.certificate.chain.insert(out.certificate.chain.begin(),
                               {"union bound over n >= m and k >= f(n)",
                                "Hoeffding: P(|S_k/k - mu| >= 1/n) <= 2 exp(-2k / ((b-a)^2 n^2)) = "
                                "2 exp(-k/(c n^2)), c = (b-a)^2/2"});
  out.certificate.add_param("delta", to_string(delta));
  out.certificate.add_param("a", to_string(rv.a()));
  out.certificate.add_param("b", to_string(rv.b()));
  return out;
}

WitnessReport as_convergence_scan(const SampleRun& run, const Rational& mu, const Rational& eps,
                                  std::uint64_t n_max, std::uint64_t n_lo) {
  return mean_witness_scan(run.scaled_sums(), run.scale(), mu, eps, n_lo, n_max, "X");
}

SllnCheckpointResult slln_checkpoint_experiment(const BoundedDiscreteRV& rv, unsigned n1, unsigned n,
                                                std::uint64_t trials, std::uint64_t seed,
                                                unsigned workers) {
  const Rational v = rv.variance();
  require(v > 0, "the random variable must have positive variance (V = 0)");
  require(trials >= 1, "slln_checkpoint_experiment needs at least one trial");
  require(n1 >= 1 && n1 <= n, "checkpoint range needs 1 <= n1 <= n");
  const std::uint64_t length = 1ULL << (2 * n);
  if (length > kSamplingCap)
    throw CapExceeded("sampling length 4^" + std::to_string(n) + " exceeds the cap");
  const Rational mu = rv.mean();
  std::vector<std::uint8_t> pass(trials, 0);
  parallel_for(trials, workers, [&](std::uint64_t t) {
    SampleRun run = sample_iid(rv, length, seed, t);
    bool ok = true;
    for (unsigned k = n1; k <= n && ok; ++k) {
      const std::uint64_t L = 1ULL << (2 * k);
      Rational dev = abs(Rational(run.partial_sum(L) - Rational(L) * mu));
      if (dev > Rational(BigInt(1) << k)) ok = false;
    }
    pass[t] = ok;
  });
  std::uint64_t passes = 0;
  for (auto x : pass) passes += x;
  SllnCheckpointResult out;
  out.estimate = make_estimate(passes, trials);
  out.r = clt_r_narrow(v);
  out.r_power = std::nextafter(std::pow(to_double_up(out.r), static_cast<double>(n - n1)), INFINITY);
  if (length <= kCheckpointCap)
    out.dp = lattice_checkpoint_probability(rv.support(), rv.probs(), n1, n, 0, Comparison::LessEqual);
  return out;
}

namespace {

std::vector<Rational> rational_list(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) throw FormatError(std::string("rv spec: missing array '") + key + "'");
  std::vector<Rational> out;
  for (const auto& x : j[key]) {
    if (x.is_string()) out.push_back(parse_rational(x.get<std::string>()));
    else if (x.is_number_integer()) out.emplace_back(x.get<long>());
    else throw FormatError(std::string("rv spec: entries of '") + key + "' must be strings like \"1/3\"");
  }
  return out;
}

}  // namespace

BoundedDiscreteRV parse_rv_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("rv spec: ") + e.what());
  }
  auto support = rational_list(j, "support");
  auto probs = rational_list(j, "probs");
  if (j.contains("envelope")) {
    auto env = rational_list(j, "envelope");
    if (env.size() != 2) throw FormatError("rv spec: envelope must be [a, b]");
    return BoundedDiscreteRV(std::move(support), std::move(probs), env[0], env[1]);
  }
  return BoundedDiscreteRV::from_support(std::move(support), std::move(probs));
}

BoundedDiscreteRV read_rv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open rv spec '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_rv_json(buf.str());
}

}  // namespace efflln
