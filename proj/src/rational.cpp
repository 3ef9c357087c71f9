#include "efflln/rational.hpp"

#include <mpfr.h>

#include <cctype>
#include <limits>
#include <string>

#include "efflln/error.hpp"

namespace efflln {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

double round_with(const Rational& q, mpfr_rnd_t mode) {
  mpfr_t x;
  mpfr_init2(x, 53);
  mpfr_set_q(x, q.get_mpq_t(), mode);
  double d = mpfr_get_d(x, mode);
  mpfr_clear(x);
  return d;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  auto fail = [&] { return FormatError("not a rational number: '" + std::string(text) + "'"); };
  std::string_view s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) throw fail();

  bool negative = false;
  if (s.front() == '+' || s.front() == '-') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }

  Rational out;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto num = s.substr(0, slash), den = s.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) throw fail();
    BigInt d{std::string(den)};
    if (d == 0) throw FormatError("zero denominator in '" + std::string(text) + "'");
    out = Rational(BigInt(std::string(num)), d);
    out.canonicalize();
  } else {
    std::string_view mant = s, expo;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
      mant = s.substr(0, e);
      expo = s.substr(e + 1);
    }
    std::string_view ip = mant, fp;
    if (auto dot = mant.find('.'); dot != std::string_view::npos) {
      ip = mant.substr(0, dot);
      fp = mant.substr(dot + 1);
    }
    if (ip.empty() && fp.empty()) throw fail();
    if ((!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp))) throw fail();
    long e10 = 0;
    if (!expo.empty()) {
      bool eneg = false;
      if (expo.front() == '+' || expo.front() == '-') {
        eneg = expo.front() == '-';
        expo.remove_prefix(1);
      }
      if (!all_digits(expo) || expo.size() > 6) throw fail();
      e10 = std::stol(std::string(expo));
      if (eneg) e10 = -e10;
    }
    std::string digits = std::string(ip) + std::string(fp);
    if (digits.empty()) digits = "0";
    e10 -= static_cast<long>(fp.size());
    BigInt m(digits);
    BigInt p;
    mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(e10 < 0 ? -e10 : e10));
    out = e10 >= 0 ? Rational(m * p) : Rational(m, p);
    out.canonicalize();
  }
  return negative ? Rational(-out) : out;
}

std::string to_string(const Rational& q) { return q.get_str(); }

double to_double(const Rational& q) { return round_with(q, MPFR_RNDN); }
double to_double_down(const Rational& q) { return round_with(q, MPFR_RNDD); }
double to_double_up(const Rational& q) { return round_with(q, MPFR_RNDU); }

BigInt ceil_rational_power(std::uint64_t x, std::uint64_t num, std::uint64_t den) {
  require(x >= 1 && den >= 1, "ceil_rational_power: need x >= 1 and den >= 1");
  BigInt y;
  mpz_ui_pow_ui(y.get_mpz_t(), x, num);
  BigInt r;
  int exact = mpz_root(r.get_mpz_t(), y.get_mpz_t(), den);
  if (!exact) r += 1;
  return r;
}

BigInt ceil(const Rational& q) {
  BigInt r;
  mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

BigInt floor(const Rational& q) {
  BigInt r;
  mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

Rational abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

std::uint64_t to_u64(const BigInt& z) {
  if (z < 0 || mpz_sizeinbase(z.get_mpz_t(), 2) > 64)
    throw DomainError("integer out of 64-bit unsigned range: " + z.get_str());
  std::uint64_t lo = 0;
  mpz_export(&lo, nullptr, -1, sizeof(lo), 0, 0, z.get_mpz_t());
  return lo;
}

std::int64_t to_i64(const BigInt& z) {
  if (mpz_sizeinbase(z.get_mpz_t(), 2) > 63)
    throw DomainError("integer out of 64-bit signed range: " + z.get_str());
  BigInt a = z < 0 ? BigInt(-z) : z;
  auto v = static_cast<std::int64_t>(to_u64(a));
  return z < 0 ? -v : v;
}

}  // namespace efflln
