#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "efflln/bounds.hpp"
#include "efflln/dev_tests.hpp"
#include "efflln/error.hpp"
#include "efflln/lln_lab.hpp"
#include "efflln/prob_core.hpp"
#include "efflln/seq_io.hpp"
#include "efflln/slln_sim.hpp"
#include "efflln/speedlimit_lab.hpp"
#include "json.hpp"

using namespace efflln;
using ojson = nlohmann::ordered_json;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string format = "csv";
  unsigned precision_bits = 256;
  std::string out;
  unsigned workers = 1;
};

// Rows of typed cells; CSV and JSON render the same records.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<ojson>> rows;

  void add(std::vector<ojson> row) { rows.push_back(std::move(row)); }
};

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string cell_text(const ojson& v) {
  if (v.is_string()) return csv_quote(v.get<std::string>());
  if (v.is_null()) return "";
  if (v.is_number_float()) {
    std::ostringstream s;
    s.precision(17);
    s << v.get<double>();
    return s.str();
  }
  return v.dump();
}

std::string render(const Table& t, const std::string& format) {
  std::ostringstream out;
  if (format == "json") {
    auto arr = ojson::array();
    for (const auto& r : t.rows) {
      ojson rec;
      for (std::size_t i = 0; i < t.columns.size(); ++i) rec[t.columns[i]] = r[i];
      arr.push_back(rec);
    }
    out << arr.dump() << '\n';
    return out.str();
  }
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << cell_text(r[i]);
    out << '\n';
  }
  return out.str();
}

void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  if (!f) throw FormatError("cannot write '" + g.out + "'");
  f << text;
}

void emit(const Globals& g, const Table& t) { emit(g, render(t, g.format)); }

Rational rat(const std::string& s) { return parse_rational(s); }

std::vector<Rational> rat_list(const std::string& s) {
  std::vector<Rational> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_rational(item));
  if (out.empty()) throw FormatError("empty list '" + s + "'");
  return out;
}

SequenceFormat seq_format(bool bytes) { return bytes ? SequenceFormat::Bytes : SequenceFormat::Tokens; }

Table witness_table(const WitnessReport& r, std::vector<std::pair<std::string, ojson>> params) {
  Table t;
  for (const auto& [k, v] : params) t.columns.push_back(k);
  for (auto c : {"schedule", "n", "verdict", "k_from", "k_to", "violation_k", "violation_label",
                 "violation_deviation", "candidate_m"})
    t.columns.push_back(c);
  for (const auto& v : r.verdicts) {
    std::vector<ojson> row;
    for (const auto& [k, p] : params) row.push_back(p);
    row.push_back(r.schedule);
    row.push_back(v.n);
    row.push_back(std::string(verdict_name(v.verdict)));
    row.push_back(v.k_from);
    row.push_back(v.k_to);
    if (v.violation) {
      row.push_back(v.violation->k);
      row.push_back(v.violation->label);
      row.push_back(to_string(v.violation->deviation));
    } else {
      row.insert(row.end(), {nullptr, nullptr, nullptr});
    }
    row.push_back(r.candidate_m);
    t.add(std::move(row));
  }
  return t;
}

Table estimate_table(const McEstimate& e, std::vector<std::pair<std::string, ojson>> params,
                     std::vector<std::pair<std::string, ojson>> extra = {}) {
  Table t;
  for (const auto& [k, v] : params) t.columns.push_back(k);
  for (auto c : {"trials", "passes", "rate", "wilson95_lo", "wilson95_hi", "wilson3_lo", "wilson3_hi"})
    t.columns.push_back(c);
  for (const auto& [k, v] : extra) t.columns.push_back(k);
  std::vector<ojson> row;
  for (const auto& [k, v] : params) row.push_back(v);
  row.insert(row.end(), {e.trials, e.passes, e.rate, e.wilson95.lo, e.wilson95.hi, e.wilson3.lo,
                         e.wilson3.hi});
  for (const auto& [k, v] : extra) row.push_back(v);
  t.add(std::move(row));
  return t;
}

Table checkpoint_table(const CheckpointReport& r, std::vector<std::pair<std::string, ojson>> params) {
  Table t;
  for (const auto& [k, v] : params) t.columns.push_back(k);
  for (auto c : {"k", "length", "count_or_sum", "band", "pass"}) t.columns.push_back(c);
  for (const auto& rec : r.records) {
    std::vector<ojson> row;
    for (const auto& [k, p] : params) row.push_back(p);
    row.insert(row.end(), {rec.k, rec.length, to_string(rec.value), to_string(rec.band), rec.pass});
    t.add(std::move(row));
  }
  return t;
}

std::string certificate_output(const BoundCertificate& c, const std::string& format) {
  if (format == "json") return c.to_json() + "\n";
  Table t;
  t.columns = {"quantity", "value", "rule", "params"};
  std::string params;
  for (const auto& [k, v] : c.params) params += (params.empty() ? "" : ";") + k + "=" + v;
  t.add({c.quantity, c.value, c.rule, params});
  return render(t, format);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-depth experiments and calculators for effective laws of large numbers"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every sampled experiment")->capture_default_str();
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--precision-bits", g.precision_bits, "Precision budget for interval comparisons")
      ->check(CLI::Range(16u, 1u << 16))
      ->capture_default_str();
  app.add_option("--out", g.out, "Write output to this file instead of stdout");
  app.add_option("--workers", g.workers, "Worker threads (results do not depend on it)")
      ->check(CLI::Range(1u, 256u))
      ->capture_default_str();
  app.fallthrough();

  std::string space_path, prefix_path, word, family, symbol = "1", values, rv_path;
  std::string eps_s = "1", t_list = "2,3", t_s;
  bool bytes = false;
  std::uint64_t nmax = 10, nlo = 1, trials = 1000, length = 1000000, samples = 1000000;
  unsigned n1 = 1, n = 2, depth = 6;

  // entropy
  auto* entropy = app.add_subcommand("entropy", "Shannon entropy H(P) in bits");
  entropy->add_option("--space", space_path, "Alphabet manifest")->required();
  double entropy_tol = 1e-12;
  entropy->add_option("--tol", entropy_tol, "Absolute error budget")->capture_default_str();

  // measure
  auto* measure = app.add_subcommand("measure", "Cylinder measure of a word or of a family of words");
  measure->add_option("--space", space_path, "Alphabet manifest")->required();
  auto* word_opt = measure->add_option("--word", word, "Word of one-character symbols");
  auto* fam_opt = measure->add_option("--family", family, "Comma-separated words");
  word_opt->excludes(fam_opt);

  // bounds
  auto* bounds = app.add_subcommand("bounds", "Tail-bound certificates");
  bool b_chernoff = false, b_hoeffding = false, b_geometric = false, b_gamma = false,
       b_double = false, b_findg = false, b_band = false, b_cltr = false;
  std::string q_s = "1/2", a_s = "0", b_s = "1", c_s = "1", p_s = "1/2";
  std::uint64_t bn = 1, bL = 1, bg = 1;
  unsigned bm = 1;
  double gx = 1, gy = 0, band_l = 1;
  auto* kind = bounds->add_option_group("kind")->require_option(1);
  kind->add_flag("--chernoff", b_chernoff, "2 exp(-eps^2 n / 2)");
  kind->add_flag("--hoeffding", b_hoeffding, "2 exp(-2 eps^2 n / (b-a)^2)");
  kind->add_flag("--geometric", b_geometric, "Geometric tail sum_{k>L} exp(-k/(c n^2))");
  kind->add_flag("--gamma", b_gamma, "Upper incomplete gamma Gamma(x, y)");
  kind->add_flag("--double-tail", b_double, "Double-sum certificate from g");
  kind->add_flag("--find-g", b_findg, "Smallest g with certificate < 2^(-m-1)");
  kind->add_flag("--normal-band", b_band, "Standard normal mass on [-l, l]");
  kind->add_flag("--clt-r", b_cltr, "Rational r above the band integral for p");
  bounds->add_option("--q", q_s, "Target frequency")->capture_default_str();
  bounds->add_option("--eps", eps_s, "Epsilon (rational)")->capture_default_str();
  bounds->add_option("--n", bn, "Sample size or accuracy index")->capture_default_str();
  bounds->add_option("--a", a_s, "Lower envelope")->capture_default_str();
  bounds->add_option("--b", b_s, "Upper envelope")->capture_default_str();
  bounds->add_option("--L", bL, "Geometric tail start")->capture_default_str();
  bounds->add_option("--c", c_s, "Scale c (Hoeffding: (b-a)^2/2)")->capture_default_str();
  bounds->add_option("--x", gx, "Gamma shape")->capture_default_str();
  bounds->add_option("--y", gy, "Gamma lower limit")->capture_default_str();
  bounds->add_option("--g", bg, "Start of the n range")->capture_default_str();
  bounds->add_option("--m", bm, "Test level")->capture_default_str();
  bounds->add_option("--l", band_l, "Band half-width")->capture_default_str();
  bounds->add_option("--p", p_s, "Probability for --clt-r")->capture_default_str();

  // lln-scan
  auto* lln = app.add_subcommand("lln-scan", "Witness scan of symbol frequencies on a prefix");
  lln->add_option("--prefix", prefix_path, "Sequence file")->required();
  lln->add_option("--space", space_path, "Alphabet manifest")->required();
  lln->add_option("--eps", eps_s, "Schedule f(n) = ceil(n^(2+eps))")->capture_default_str();
  lln->add_option("--t", t_s, "Use k >= ceil(n^t) instead of --eps");
  lln->add_option("--nmax", nmax, "Largest n")->capture_default_str();
  lln->add_option("--nlo", nlo, "Smallest n")->capture_default_str();
  lln->add_flag("--bytes", bytes, "Prefix file is in byte mode");

  // rv-scan
  auto* rvscan = app.add_subcommand("rv-scan", "Witness scan of empirical means of X");
  rvscan->add_option("--prefix", prefix_path, "Sequence file")->required();
  rvscan->add_option("--space", space_path, "Alphabet manifest")->required();
  rvscan->add_option("--values", values, "X(a) per symbol, comma-separated rationals")->required();
  rvscan->add_option("--eps", eps_s, "Schedule exponent")->capture_default_str();
  rvscan->add_option("--nmax", nmax, "Largest n")->capture_default_str();
  rvscan->add_flag("--bytes", bytes, "Prefix file is in byte mode");

  // aep
  auto* aep = app.add_subcommand("aep", "Empirical entropy scan with prefix positivity");
  aep->add_option("--prefix", prefix_path, "Sequence file")->required();
  aep->add_option("--space", space_path, "Alphabet manifest")->required();
  aep->add_option("--eps", eps_s, "Schedule exponent")->capture_default_str();
  aep->add_option("--nmax", nmax, "Largest n")->capture_default_str();
  aep->add_option("--nlo", nlo, "Smallest n")->capture_default_str();
  aep->add_flag("--bytes", bytes, "Prefix file is in byte mode");

  // dichotomy
  auto* dich = app.add_subcommand("dichotomy", "Pass rates of condition (i) over a grid of t");
  DichotomyConfig dc;
  dich->add_option("--space", space_path, "Alphabet manifest")->required();
  dich->add_option("--symbol", symbol, "Target symbol name")->capture_default_str();
  dich->add_option("--t", t_list, "Comma-separated rational t values")->capture_default_str();
  dich->add_option("--trials", trials, "Number of sampled sequences")->capture_default_str();
  dich->add_option("--length", length, "Sequence length")->capture_default_str();
  dich->add_option("--window-lo", dc.window_lo, "Smallest n of the window")->capture_default_str();
  dich->add_option("--window-hi", dc.window_hi, "Largest n of the window")->capture_default_str();
  dich->add_option("--checkpoint-lo", dc.checkpoint_lo, "First checkpoint index")->capture_default_str();
  dich->add_option("--checkpoint-hi", dc.checkpoint_hi, "Last checkpoint index")->capture_default_str();

  // speedlimit
  auto* sl = app.add_subcommand("speedlimit", "Checkpoint scans, adversarial prefixes, Monte Carlo");
  sl->require_subcommand(1);
  auto* sl_scan = sl->add_subcommand("scan", "Checkpoints |N_a(4^k) - 4^k p| <= 2^k on a prefix");
  sl_scan->add_option("--prefix", prefix_path, "Sequence file")->required();
  sl_scan->add_option("--space", space_path, "Alphabet manifest")->required();
  sl_scan->add_option("--symbol", symbol, "Target symbol name")->capture_default_str();
  sl_scan->add_option("--n1", n1, "First checkpoint")->capture_default_str();
  unsigned scan_n = 0;
  sl_scan->add_option("--n", scan_n, "Last checkpoint (0: full depth)")->capture_default_str();
  sl_scan->add_flag("--bytes", bytes, "Prefix file is in byte mode");
  auto* sl_gen = sl->add_subcommand("generate", "Prefix of length 4^depth passing every checkpoint");
  sl_gen->add_option("--space", space_path, "Alphabet manifest")->required();
  sl_gen->add_option("--symbol", symbol, "Target symbol name")->capture_default_str();
  sl_gen->add_option("--depth", depth, "Checkpoint depth")->capture_default_str();
  sl_gen->add_flag("--bytes", bytes, "Write byte mode");
  auto* sl_mc = sl->add_subcommand("mc", "Monte Carlo checkpoint pass rate with the DP reference");
  sl_mc->add_option("--space", space_path, "Alphabet manifest")->required();
  sl_mc->add_option("--symbol", symbol, "Target symbol name")->capture_default_str();
  sl_mc->add_option("--n1", n1, "First checkpoint")->capture_default_str();
  sl_mc->add_option("--n", n, "Last checkpoint")->capture_default_str();
  sl_mc->add_option("--trials", trials, "Number of trials")->capture_default_str();
  sl_mc->add_option("--values", values, "Use X(a) per symbol (band 2^(k+1), strict)");

  // slln
  auto* slln = app.add_subcommand("slln", "Bounded i.i.d. random variables");
  slln->require_subcommand(1);
  std::string delta_s = "1/8";
  auto* sl_cert = slln->add_subcommand("cert", "Smallest m with the Hoeffding double-sum bound < delta");
  sl_cert->add_option("--rv", rv_path, "RV spec JSON")->required();
  sl_cert->add_option("--eps", eps_s, "Schedule exponent")->capture_default_str();
  sl_cert->add_option("--delta", delta_s, "Target probability")->capture_default_str();
  auto* sl_sscan = slln->add_subcommand("scan", "Convergence witness scan on a sampled run");
  sl_sscan->add_option("--rv", rv_path, "RV spec JSON")->required();
  sl_sscan->add_option("--samples", samples, "Run length")->capture_default_str();
  sl_sscan->add_option("--eps", eps_s, "Schedule exponent")->capture_default_str();
  sl_sscan->add_option("--nmax", nmax, "Largest n")->capture_default_str();
  sl_sscan->add_option("--nlo", nlo, "Smallest n")->capture_default_str();
  auto* sl_cp = slln->add_subcommand("checkpoint", "Checkpoint pass rate against r^(n-n1)");
  sl_cp->add_option("--rv", rv_path, "RV spec JSON")->required();
  sl_cp->add_option("--n1", n1, "First checkpoint")->capture_default_str();
  sl_cp->add_option("--n", n, "Last checkpoint")->capture_default_str();
  sl_cp->add_option("--trials", trials, "Number of trials")->capture_default_str();

  // gen
  auto* gen = app.add_subcommand("gen", "Sample a prefix from the Bernoulli measure");
  gen->add_option("--space", space_path, "Alphabet manifest")->required();
  gen->add_option("--length", length, "Prefix length")->capture_default_str();
  gen->add_flag("--bytes", bytes, "Write byte mode");

  // io
  auto* io = app.add_subcommand("io", "Validate or convert a sequence file");
  std::string in_path;
  bool to_bytes = false;
  io->add_option("--space", space_path, "Alphabet manifest")->required();
  io->add_option("--in", in_path, "Sequence file")->required();
  io->add_flag("--bytes", bytes, "Input is in byte mode");
  io->add_flag("--to-bytes", to_bytes, "With --out: write byte mode (tokens otherwise)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const PrecisionBudget budget{16, g.precision_bits};
    if (entropy->parsed()) {
      auto P = read_manifest(space_path);
      Enclosure h = shannon_entropy(P, entropy_tol);
      Table t;
      t.columns = {"entropy", "lower", "upper", "exact"};
      if (h.is_point())
        t.add({to_string(h.lo), to_string(h.lo), to_string(h.hi), true});
      else
        t.add({h.midpoint(), to_double_down(h.lo), to_double_up(h.hi), false});
      emit(g, t);
    } else if (measure->parsed()) {
      auto P = read_manifest(space_path);
      std::vector<Word> words;
      std::stringstream in(word.empty() ? family : word);
      std::string item;
      while (std::getline(in, item, ',')) words.push_back(P.alphabet().parse_word(item));
      if (word.empty() && family.empty()) words.push_back({});
      Enclosure m = word.empty() ? family_measure(P, words) : word_measure(P, words.front());
      Table t;
      t.columns = {"words", "measure", "value"};
      t.add({word.empty() ? family : word, to_string(m.lo), to_double(m.lo)});
      emit(g, t);
    } else if (bounds->parsed()) {
      BoundCertificate c;
      if (b_chernoff) {
        c = chernoff_tail(rat(q_s), rat(eps_s), bn);
      } else if (b_hoeffding) {
        c = hoeffding_tail(rat(a_s), rat(b_s), rat(eps_s), bn);
      } else if (b_geometric) {
        GeometricTail gt = geometric_tail(bn, bL, rat(c_s));
        c.quantity = "sum_{k>L} exp(-k/(c n^2))";
        c.value = gt.exact;
        c.rule = "geometric";
        c.chain = {"closed form exp(-(L+1)x)/(1-exp(-x)), x = 1/(c n^2)",
                   "majorant c n^2 exp(-L x) = " + std::to_string(gt.majorant)};
        c.add_param("n", std::to_string(bn));
        c.add_param("L", std::to_string(bL));
        c.add_param("c", c_s);
        c.add_param("majorant", std::to_string(gt.majorant));
      } else if (b_gamma) {
        GammaValue v = upper_incomplete_gamma(gx, gy);
        c.quantity = "Gamma(x, y)";
        c.value = v.value;
        c.rule = v.regime == GammaRegime::Series ? "series" : "continued_fraction";
        c.add_param("x", std::to_string(gx));
        c.add_param("y", std::to_string(gy));
        c.add_param("error_bound", std::to_string(v.error_bound));
      } else if (b_double) {
        c = double_tail_bound(bg, rat(eps_s), rat(c_s));
      } else if (b_findg) {
        GSearch s = find_g(bm, rat(eps_s), rat(c_s));
        c = s.certificate;
        c.add_param("g", std::to_string(s.g));
      } else if (b_band) {
        c.quantity = "P(|Z| <= l)";
        c.value = normal_band(band_l);
        c.rule = "normal_band";
        c.add_param("l", std::to_string(band_l));
      } else {
        Rational r = clt_r(rat(p_s));
        c.quantity = "r in (band integral, 1)";
        c.value = to_double_up(r);
        c.rule = "clt_r";
        c.add_param("p", p_s);
        c.add_param("r", to_string(r));
      }
      emit(g, certificate_output(c, g.format));
    } else if (lln->parsed()) {
      auto P = read_manifest(space_path);
      auto s = read_sequence(prefix_path, P.alphabet(), seq_format(bytes));
      WitnessReport r = t_s.empty() && nlo == 1
                            ? lln_witness_scan(s, P, rat(eps_s), nmax)
                            : lln_witness_scan_power(s, P, t_s.empty() ? Rational(2 + rat(eps_s)) : rat(t_s),
                                                     nlo, nmax);
      emit(g, witness_table(r, {{"prefix", prefix_path}}));
    } else if (rvscan->parsed()) {
      auto P = read_manifest(space_path);
      auto s = read_sequence(prefix_path, P.alphabet(), seq_format(bytes));
      auto X = RealRandomVariable::exact(rat_list(values));
      require(X.size() == P.size(), "--values needs one value per symbol");
      WitnessReport r = rv_witness_scan(s, P, X, rat(eps_s), nmax, budget);
      emit(g, witness_table(r, {{"prefix", prefix_path}, {"values", values}}));
    } else if (aep->parsed()) {
      auto P = read_manifest(space_path);
      auto s = read_sequence(prefix_path, P.alphabet(), seq_format(bytes));
      AepReport r = aep_scan(s, P, rat(eps_s), nmax, nlo);
      emit(g, witness_table(r.witness, {{"prefix", prefix_path},
                                        {"positive", r.positive},
                                        {"first_zero_position",
                                         r.first_zero_position ? ojson(*r.first_zero_position) : ojson()},
                                        {"identity_holds", r.identity_holds}}));
    } else if (dich->parsed()) {
      dc.space = read_manifest(space_path);
      dc.symbol = dc.space.alphabet().at(symbol);
      dc.t_grid = rat_list(t_list);
      dc.trials = trials;
      dc.length = length;
      dc.seed = g.seed;
      dc.workers = g.workers;
      DichotomyTable tab = dichotomy_experiment(dc);
      Table t;
      t.columns = {"seed", "length", "window_lo", "window_hi", "t", "trials", "passes", "rate",
                   "wilson95_lo", "wilson95_hi", "checkpoint_lo", "checkpoint_hi", "checkpoint_passes"};
      for (const auto& r : tab.rows)
        t.add({g.seed, length, dc.window_lo, dc.window_hi, to_string(r.t), r.trials, r.passes, r.rate,
               r.wilson_lo, r.wilson_hi, dc.checkpoint_lo, dc.checkpoint_hi, tab.checkpoint_passes});
      emit(g, t);
    } else if (sl_scan->parsed()) {
      auto P = read_manifest(space_path);
      auto s = read_sequence(prefix_path, P.alphabet(), seq_format(bytes));
      CheckpointReport r = checkpoint_scan(s, P, P.alphabet().at(symbol), n1, scan_n);
      emit(g, checkpoint_table(r, {{"prefix", prefix_path}, {"symbol", symbol}}));
    } else if (sl_gen->parsed()) {
      auto P = read_manifest(space_path);
      auto s = adversarial_generate(P, P.alphabet().at(symbol), depth, g.seed);
      if (g.out.empty()) {
        require(!bytes, "byte mode needs --out");
        std::cout << format_sequence_tokens(s, P.alphabet());
      } else {
        write_sequence(g.out, s, P.alphabet(), seq_format(bytes));
      }
    } else if (sl_mc->parsed()) {
      auto P = read_manifest(space_path);
      std::vector<std::pair<std::string, ojson>> params = {
          {"seed", g.seed}, {"n1", n1}, {"n", n}};
      if (values.empty()) {
        Symbol a = P.alphabet().at(symbol);
        McEstimate e = montecarlo_pass_rate(P, a, n1, n, trials, g.seed, g.workers);
        CheckpointSpec spec{a, P.exact_prob(a), n1, n, 0, Comparison::LessEqual};
        ojson dp = nullptr, r_pow = nullptr;
        if (n <= 7) dp = checkpoint_joint_probability(spec).value;
        Rational r = clt_r(P.exact_prob(a));
        r_pow = std::pow(to_double_up(r), static_cast<double>(n - n1));
        params.insert(params.begin() + 1, {"symbol", symbol});
        emit(g, estimate_table(e, params, {{"dp", dp}, {"r", to_string(r)}, {"r_power", r_pow}}));
      } else {
        auto X = RealRandomVariable::exact(rat_list(values));
        require(X.size() == P.size(), "--values needs one value per symbol");
        McEstimate e = rv_montecarlo_pass_rate(P, X, n1, n, trials, g.seed, g.workers);
        ojson dp = nullptr;
        if (n <= 7) dp = rv_checkpoint_probability(P, X, n1, n).value;
        params.insert(params.begin() + 1, {"values", values});
        emit(g, estimate_table(e, params, {{"dp", dp}}));
      }
    } else if (sl_cert->parsed()) {
      auto rv = read_rv_file(rv_path);
      Effectivization e = effectivization_certificate(rv, rat(eps_s), rat(delta_s));
      if (g.format == "json") {
        ojson j = ojson::parse(e.certificate.to_json());
        j["m"] = e.m;
        emit(g, j.dump() + "\n");
      } else {
        Table t;
        t.columns = {"rv", "eps", "delta", "m", "value", "rule"};
        t.add({rv_path, eps_s, delta_s, e.m, e.certificate.value, e.certificate.rule});
        emit(g, t);
      }
    } else if (sl_sscan->parsed()) {
      auto rv = read_rv_file(rv_path);
      SampleRun run = sample_iid(rv, samples, g.seed);
      WitnessReport r = as_convergence_scan(run, rv.mean(), rat(eps_s), nmax, nlo);
      emit(g, witness_table(r, {{"seed", g.seed}, {"samples", samples}}));
    } else if (sl_cp->parsed()) {
      auto rv = read_rv_file(rv_path);
      SllnCheckpointResult res = slln_checkpoint_experiment(rv, n1, n, trials, g.seed, g.workers);
      emit(g, estimate_table(res.estimate, {{"seed", g.seed}, {"n1", n1}, {"n", n}},
                             {{"dp", res.dp ? ojson(res.dp->value) : ojson()},
                              {"r", to_string(res.r)},
                              {"r_power", res.r_power}}));
    } else if (gen->parsed()) {
      auto P = read_manifest(space_path);
      auto s = sample_sequence(P, length, g.seed);
      if (g.out.empty()) {
        require(!bytes, "byte mode needs --out");
        std::cout << format_sequence_tokens(s, P.alphabet());
      } else {
        write_sequence(g.out, s, P.alphabet(), seq_format(bytes));
      }
    } else if (io->parsed()) {
      auto P = read_manifest(space_path);
      auto s = read_sequence(in_path, P.alphabet(), seq_format(bytes));
      if (!g.out.empty()) {
        write_sequence(g.out, s, P.alphabet(), seq_format(to_bytes));
      } else {
        Table t;
        t.columns = {"file", "length", "hash"};
        for (const auto& name : P.alphabet().names()) t.columns.push_back("count_" + name);
        std::vector<ojson> row{in_path, s.length(), std::to_string(sequence_hash(s))};
        for (auto c : s.counts()) row.push_back(c);
        t.add(std::move(row));
        emit(g, t);
      }
    }
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
