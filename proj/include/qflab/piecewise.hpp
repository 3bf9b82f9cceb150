#pragma once

#include <gmpxx.h>

#include <vector>

namespace qfl {

// Piecewise polynomial with exact rational coefficients. Piece i lives on
// [breaks[i], breaks[i+1]] and is stored in the local variable x - breaks[i].
// Zero left of the first break, `tail` right of the last one.
class Piecewise {
 public:
  Piecewise() = default;

  // Density of the uniform distribution on [-h, h].
  static Piecewise box(const mpq_class& h);

  // f * U[-h, h]
  Piecewise convolve_box(const mpq_class& h) const;
  Piecewise derivative() const;
  // x -> int_{-inf}^x f
  Piecewise antiderivative() const;

  double operator()(double x) const;
  mpq_class exact(const mpq_class& x) const;

  mpq_class integral() const;
  // int x^n f(x) dx
  mpq_class moment(int n) const;

  const std::vector<mpq_class>& breaks() const { return breaks_; }
  const std::vector<std::vector<mpq_class>>& pieces() const { return pieces_; }
  const mpq_class& tail() const { return tail_; }
  int degree() const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  void finish();
  // value of the polynomial in force at x (piece, zero or tail) as a
  // polynomial in y = x - origin
  std::vector<mpq_class> local_at(const mpq_class& x, const mpq_class& origin) const;

  std::vector<mpq_class> breaks_;
  std::vector<std::vector<mpq_class>> pieces_;
  mpq_class tail_ = 0;
  // double mirror for fast evaluation
  std::vector<double> dbreaks_;
  std::vector<std::vector<double>> dpieces_;
  double dtail_ = 0, lo_ = 0, hi_ = 0;
};

}  // namespace qfl
