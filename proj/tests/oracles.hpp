#pragma once
// Independent reference implementations used by the tests. These are
// deliberately naive: full-box loops, direct sums, textbook formulas.

#include <cmath>
#include <random>

#include "qflab/forms.hpp"
#include "qflab/lattice.hpp"

namespace oracle {

inline qfl::Vec random_vec(std::mt19937_64& rng, int d, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  qfl::Vec v(d);
  for (auto& x : v) x = u(rng);
  return v;
}

// Random positive definite form with eigenvalues roughly in [0.5, 3].
inline qfl::QuadraticForm random_positive_form(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd B(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) B(i, j) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
  Eigen::MatrixXd O = qr.householderQ();
  Eigen::VectorXd ev(d);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  for (int i = 0; i < d; ++i) ev(i) = u(rng);
  Eigen::MatrixXd A = O * ev.asDiagonal() * O.transpose();
  A = 0.5 * (A + A.transpose());
  return qfl::build_form(A, false);
}

// Random symmetric (generally non-diagonal) form, eigenvalues in [-3, 3]
// away from 0.
inline qfl::QuadraticForm random_symmetric_form(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd B(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) B(i, j) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
  Eigen::MatrixXd O = qr.householderQ();
  Eigen::VectorXd ev(d);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  std::bernoulli_distribution sg;
  for (int i = 0; i < d; ++i) ev(i) = sg(rng) ? u(rng) : -u(rng);
  Eigen::MatrixXd A = O * ev.asDiagonal() * O.transpose();
  A = 0.5 * (A + A.transpose());
  return qfl::build_form(A, false);
}

inline double quad(const qfl::QuadraticForm& f, const std::vector<long long>& x, const qfl::Vec& a) {
  int d = f.dim();
  long double acc = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) acc += f.entry(i, j) * ((long double)x[i] - a[i]) * ((long double)x[j] - a[j]);
  return (double)acc;
}

// Full-box count of {x : Q[x-a] <= s} with the library's boundary slack.
inline qfl::Count brute_count(const qfl::QuadraticForm& f, const qfl::Vec& a, double s) {
  int d = f.dim();
  // box containing the ellipsoid: |y_i| <= sqrt(s * (A^{-1})_{ii})
  Eigen::MatrixXd inv = f.matrix().inverse();
  std::vector<long long> lo(d), hi(d);
  for (int i = 0; i < d; ++i) {
    double w = std::sqrt(std::max(0.0, s * inv(i, i))) + 1;
    lo[i] = (long long)std::floor(a[i] - w);
    hi[i] = (long long)std::ceil(a[i] + w);
  }
  std::vector<long long> x = lo;
  qfl::Count c = 0;
  double bound = s + qfl::boundary_slack(s);
  while (true) {
    if (quad(f, x, a) <= bound) ++c;
    int i = 0;
    while (i < d && x[i] == hi[i]) x[i] = lo[i], ++i;
    if (i == d) break;
    ++x[i];
  }
  return c;
}

}  // namespace oracle
