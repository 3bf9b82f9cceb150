#include "qflab/exact_scalar.hpp"

#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "qflab/common.hpp"

namespace qfl {

std::pair<std::uint64_t, std::uint64_t> squarefree_split(std::uint64_t n) {
  std::uint64_t sq = 1, rest = n;
  for (std::uint64_t p = 2; p * p <= rest; ++p) {
    while (rest % (p * p) == 0) {
      rest /= p * p;
      sq *= p;
    }
  }
  return {sq, rest};
}

static std::vector<std::uint64_t> prime_factors(std::uint64_t n) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t p = 2; p * p <= n; ++p) {
    if (n % p == 0) {
      out.push_back(p);
      while (n % p == 0) n /= p;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

ExactScalar::ExactScalar(long num, long den) : rational_(num, den) {
  if (den == 0) fail(Reason::invalid_argument, "zero denominator");
  rational_.canonicalize();
}

ExactScalar ExactScalar::surd(const mpq_class& coeff, std::uint64_t n) {
  ExactScalar out;
  if (n == 0 || coeff == 0) return out;
  auto [sq, rest] = squarefree_split(n);
  mpq_class c = coeff;
  c.canonicalize();
  c *= mpq_class(static_cast<unsigned long>(sq));
  out.add_term(rest, c);
  return out;
}

void ExactScalar::add_term(std::uint64_t n, const mpq_class& c) {
  if (c == 0) return;
  if (n == 1) {
    rational_ += c;
    return;
  }
  auto it = surds_.find(n);
  if (it == surds_.end()) {
    surds_.emplace(n, c);
  } else {
    it->second += c;
    if (it->second == 0) surds_.erase(it);
  }
}

mpq_class ExactScalar::coefficient(std::uint64_t n) const {
  if (n == 1) return rational_;
  auto it = surds_.find(n);
  return it == surds_.end() ? mpq_class(0) : it->second;
}

long double ExactScalar::to_long_double() const {
  long double v = rational_.get_d();
  // get_d loses precision for huge numerators; split for better accuracy.
  {
    mpz_class q = rational_.get_num() / rational_.get_den();
    mpq_class frac = rational_ - mpq_class(q);
    v = static_cast<long double>(q.get_d()) + static_cast<long double>(frac.get_d());
  }
  for (const auto& [n, c] : surds_)
    v += static_cast<long double>(c.get_d()) * std::sqrt(static_cast<long double>(n));
  return v;
}

double ExactScalar::to_double() const { return static_cast<double>(to_long_double()); }

int ExactScalar::sign() const {
  if (is_zero()) return 0;
  if (surds_.empty()) return sgn(rational_);
  // A nonzero element of the field cannot be exactly zero; the float value is
  // accurate enough for the magnitudes used here.
  long double v = to_long_double();
  return v > 0 ? 1 : (v < 0 ? -1 : 0);
}

std::string ExactScalar::to_string() const {
  std::ostringstream os;
  bool first = true;
  if (rational_ != 0 || surds_.empty()) {
    os << rational_.get_str();
    first = false;
  }
  for (const auto& [n, c] : surds_) {
    if (!first) os << (sgn(c) < 0 ? "-" : "+");
    else if (sgn(c) < 0) os << "-";
    mpq_class a = abs(c);
    if (a != 1) os << a.get_str() << "*";
    os << "sqrt(" << n << ")";
    first = false;
  }
  return os.str();
}

ExactScalar ExactScalar::operator-() const {
  ExactScalar out = *this;
  out.rational_ = -out.rational_;
  for (auto& [n, c] : out.surds_) c = -c;
  return out;
}

ExactScalar& ExactScalar::operator+=(const ExactScalar& o) {
  rational_ += o.rational_;
  for (const auto& [n, c] : o.surds_) add_term(n, c);
  return *this;
}

ExactScalar& ExactScalar::operator-=(const ExactScalar& o) { return *this += -o; }

ExactScalar& ExactScalar::operator*=(const ExactScalar& o) {
  ExactScalar out;
  // this = r + sum a_n sqrt(n), o = s + sum b_m sqrt(m)
  out.rational_ = rational_ * o.rational_;
  for (const auto& [m, b] : o.surds_) out.add_term(m, rational_ * b);
  for (const auto& [n, a] : surds_) {
    out.add_term(n, a * o.rational_);
    for (const auto& [m, b] : o.surds_) {
      std::uint64_t g = std::gcd(n, m);
      std::uint64_t rad = (n / g) * (m / g);
      out.add_term(rad, a * b * mpq_class(static_cast<unsigned long>(g)));
    }
  }
  *this = std::move(out);
  return *this;
}

ExactScalar ExactScalar::conjugate(std::uint64_t prime) const {
  ExactScalar out = *this;
  for (auto& [n, c] : out.surds_)
    if (n % prime == 0) c = -c;
  return out;
}

ExactScalar ExactScalar::inverse() const {
  if (is_zero()) fail(Reason::invalid_argument, "division by zero");
  std::set<std::uint64_t> primes;
  for (const auto& [n, c] : surds_)
    for (auto p : prime_factors(n)) primes.insert(p);
  ExactScalar num(1), den = *this;
  for (auto p : primes) {
    ExactScalar conj = den.conjugate(p);
    num *= conj;
    den *= conj;
  }
  if (!den.is_rational() || den.rational_ == 0)
    fail(Reason::invalid_argument, "inverse failed to rationalize denominator");
  mpq_class inv = 1 / den.rational_;
  num.rational_ *= inv;
  for (auto& [n, c] : num.surds_) c *= inv;
  return num;
}

ExactScalar& ExactScalar::operator/=(const ExactScalar& o) { return *this *= o.inverse(); }

std::optional<mpq_class> ExactScalar::rational_ratio(const ExactScalar& other) const {
  if (other.is_zero()) return std::nullopt;
  if (is_zero()) return mpq_class(0);
  ExactScalar r = *this / other;
  if (!r.is_rational()) return std::nullopt;
  return r.rational_;
}

namespace {

struct Cursor {
  std::string_view s;
  std::size_t i = 0;
  void skip_ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  bool eat(char c) {
    skip_ws();
    if (i < s.size() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }
  bool at_end() {
    skip_ws();
    return i >= s.size();
  }
  [[noreturn]] void error(const std::string& msg) const { throw ParseError(msg, 1, static_cast<int>(i) + 1); }
  mpz_class integer() {
    skip_ws();
    std::size_t start = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (start == i) error("expected digits");
    return mpz_class(std::string(s.substr(start, i - start)), 10);
  }
  // Unsigned decimal or p/q literal.
  mpq_class number() {
    skip_ws();
    std::size_t start = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    std::string int_part(s.substr(start, i - start));
    std::string frac_part;
    bool decimal = false;
    if (i < s.size() && s[i] == '.') {
      decimal = true;
      ++i;
      std::size_t fs = i;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      frac_part = std::string(s.substr(fs, i - fs));
    }
    if (int_part.empty() && frac_part.empty()) error("expected number");
    long exp10 = 0;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
      decimal = true;
      ++i;
      bool neg = false;
      if (i < s.size() && (s[i] == '+' || s[i] == '-')) neg = s[i++] == '-';
      std::size_t es = i;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      if (es == i) error("expected exponent digits");
      exp10 = std::stol(std::string(s.substr(es, i - es)));
      if (neg) exp10 = -exp10;
    }
    if (decimal) {
      mpz_class num(int_part + frac_part, 10);
      exp10 -= static_cast<long>(frac_part.size());
      mpz_class p10;
      mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exp10)));
      mpq_class v = exp10 >= 0 ? mpq_class(num * p10) : mpq_class(num, p10);
      v.canonicalize();
      return v;
    }
    mpz_class num(int_part, 10);
    if (eat('/')) {
      mpz_class den = integer();
      if (den == 0) error("zero denominator");
      mpq_class v(num, den);
      v.canonicalize();
      return v;
    }
    return mpq_class(num);
  }
  bool peek_sqrt() {
    skip_ws();
    return s.substr(i, 4) == "sqrt";
  }
  std::uint64_t sqrt_arg() {
    i += 4;
    if (!eat('(')) error("expected '(' after sqrt");
    mpz_class n = integer();
    if (!eat(')')) error("expected ')'");
    if (!n.fits_ulong_p()) error("radicand too large");
    return n.get_ui();
  }
};

}  // namespace

ExactScalar ExactScalar::parse(std::string_view text) {
  Cursor c{text};
  ExactScalar out;
  bool first = true;
  if (c.at_end()) c.error("empty scalar");
  while (!c.at_end()) {
    int sign = 1;
    if (c.eat('+')) {
    } else if (c.eat('-')) {
      sign = -1;
    } else if (!first) {
      c.error("expected '+' or '-'");
    }
    while (true) {  // allow repeated unary signs like "--1"
      if (c.eat('-')) sign = -sign;
      else if (!c.eat('+')) break;
    }
    ExactScalar term;
    if (c.peek_sqrt()) {
      term = surd(mpq_class(sign), c.sqrt_arg());
    } else {
      mpq_class v = c.number() * sign;
      if (c.eat('*')) {
        if (!c.peek_sqrt()) c.error("expected sqrt after '*'");
        term = surd(v, c.sqrt_arg());
      } else {
        term = ExactScalar(v);
      }
    }
    out += term;
    first = false;
  }
  return out;
}

}  // namespace qfl
