#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace qfl {

// Element of Q(sqrt(n1), sqrt(n2), ...): rational + sum coeff_n * sqrt(n),
// n > 1 squarefree. Canonical: zero coefficients are never stored.
class ExactScalar {
 public:
  ExactScalar() = default;
  ExactScalar(long v) : rational_(v) {}  // NOLINT(implicit)
  explicit ExactScalar(const mpq_class& q) : rational_(q) { rational_.canonicalize(); }
  ExactScalar(long num, long den);

  // coeff * sqrt(n); square factors of n are pulled into the coefficient.
  static ExactScalar surd(const mpq_class& coeff, std::uint64_t n);

  // Grammar: sum of terms, each `p`, `p/q`, `p.ddd`, `sqrt(n)` or
  // `<rational>*sqrt(n)`, joined by + or -.
  static ExactScalar parse(std::string_view text);

  const mpq_class& rational_part() const { return rational_; }
  const std::map<std::uint64_t, mpq_class>& surd_terms() const { return surds_; }

  bool is_zero() const { return rational_ == 0 && surds_.empty(); }
  bool is_rational() const { return surds_.empty(); }
  int sign() const;
  double to_double() const;
  long double to_long_double() const;
  std::string to_string() const;

  // Coefficient on the basis element sqrt(n) (n = 1 for the rational part).
  mpq_class coefficient(std::uint64_t n) const;

  ExactScalar operator-() const;
  ExactScalar& operator+=(const ExactScalar& o);
  ExactScalar& operator-=(const ExactScalar& o);
  ExactScalar& operator*=(const ExactScalar& o);
  ExactScalar& operator/=(const ExactScalar& o);
  friend ExactScalar operator+(ExactScalar a, const ExactScalar& b) { return a += b; }
  friend ExactScalar operator-(ExactScalar a, const ExactScalar& b) { return a -= b; }
  friend ExactScalar operator*(ExactScalar a, const ExactScalar& b) { return a *= b; }
  friend ExactScalar operator/(ExactScalar a, const ExactScalar& b) { return a /= b; }
  bool operator==(const ExactScalar& o) const { return rational_ == o.rational_ && surds_ == o.surds_; }
  bool operator!=(const ExactScalar& o) const { return !(*this == o); }

  ExactScalar inverse() const;
  // Image under sqrt(p) -> -sqrt(p) for a prime p.
  ExactScalar conjugate(std::uint64_t prime) const;
  // this / other when that ratio is rational; nullopt otherwise.
  std::optional<mpq_class> rational_ratio(const ExactScalar& other) const;

 private:
  mpq_class rational_;
  std::map<std::uint64_t, mpq_class> surds_;
  void add_term(std::uint64_t n, const mpq_class& c);
};

// Splits n into (square part s, squarefree part f) with n = s^2 f.
std::pair<std::uint64_t, std::uint64_t> squarefree_split(std::uint64_t n);

}  // namespace qfl
