#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "qflab/rationality.hpp"
#include "qflab/trig.hpp"

using namespace qfl;

namespace {

double F_of(const QuadraticForm& f, double t, double P, const std::vector<long long>& y) {
  const int d = f.dim();
  long double F = 0;
  for (int j = 0; j < d; ++j) {
    long double z = 0;
    for (int k = 0; k < d; ++k) z += (long double)t * f.entry(j, k) * y[k];
    F = std::max(F, P * std::fabs(z - y[d + j]));
    F = std::max(F, std::fabs((long double)y[j]) / P);
  }
  return (double)F;
}

// Successive minima by listing every lattice vector in the ball whose radius
// is certified by `cover`: 2d independent vectors, rechecked here.
std::vector<double> brute_minima(const QuadraticForm& f, double t, double r,
                                 const std::vector<std::vector<long long>>& cover) {
  const int d = f.dim(), n = 2 * d;
  const double P = 4 * r;
  double rho = 0;
  Eigen::MatrixXd C(n, n);
  for (int s = 0; s < n; ++s) {
    rho = std::max(rho, F_of(f, t, P, cover[s]));
    for (int i = 0; i < n; ++i) C(i, s) = (double)cover[s][i];
  }
  if (Eigen::FullPivLU<Eigen::MatrixXd>(C).rank() != n) return {};
  rho *= 1 + 1e-12;
  const long long X = (long long)std::floor(rho * P);
  std::vector<std::pair<double, std::vector<long long>>> all;
  std::vector<long long> x(d, -X);
  while (true) {
    // every m with |z_j - m_j| <= rho / P
    std::vector<long long> lo(d), hi(d);
    for (int j = 0; j < d; ++j) {
      long double z = 0;
      for (int k = 0; k < d; ++k) z += (long double)t * f.entry(j, k) * x[k];
      lo[j] = (long long)std::floor(z - rho / P) - 1;
      hi[j] = (long long)std::ceil(z + rho / P) + 1;
    }
    std::vector<long long> m = lo;
    while (true) {
      std::vector<long long> y(x);
      y.insert(y.end(), m.begin(), m.end());
      bool zero = std::all_of(y.begin(), y.end(), [](long long v) { return v == 0; });
      double F = F_of(f, t, P, y);
      if (!zero && F <= rho * (1 + 1e-12)) all.push_back({F, y});
      int c = 0;
      while (c < d && ++m[c] > hi[c]) {
        m[c] = lo[c];
        ++c;
      }
      if (c == d) break;
    }
    int c = 0;
    while (c < d && ++x[c] > X) {
      x[c] = -X;
      ++c;
    }
    if (c == d) break;
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  // greedy rank pass with an orthonormalized span (small integer vectors)
  std::vector<double> mins;
  std::vector<Eigen::VectorXd> basis;
  for (const auto& [F, v] : all) {
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w(i) = (double)v[i];
    const double len = w.norm();
    for (const auto& b : basis) w -= b.dot(w) * b;
    if (w.norm() > 1e-9 * len) {
      basis.push_back(w.normalized());
      mins.push_back(F);
      if ((int)mins.size() == n) break;
    }
  }
  return mins;
}

std::uint64_t brute_H(const QuadraticForm& f, double t, double r) {
  // pairs (x, m) with |z_j - m_j| < 1/(4r), m scanned over a window
  const int d = f.dim();
  const long long X = (long long)std::floor(4 * r);
  std::uint64_t c = 0;
  std::vector<long long> x(d, -X);
  while (true) {
    bool ok = true;
    for (int j = 0; j < d && ok; ++j) {
      long double z = 0;
      for (int k = 0; k < d; ++k) z += (long double)t * f.entry(j, k) * x[k];
      int hits = 0;
      for (long long m = (long long)std::floor(z) - 1; m <= (long long)std::floor(z) + 2; ++m)
        if (std::fabs(z - m) < 1 / (4 * (long double)r)) ++hits;
      ok = hits == 1;
    }
    c += ok;
    int i = 0;
    while (i < d && ++x[i] > X) {
      x[i] = -X;
      ++i;
    }
    if (i == d) break;
  }
  return c;
}

// sup of phi_symmetrized on a plain fine grid plus local polish
double brute_sup(const QuadraticForm& f, double lo, double hi, double r, int k, int steps) {
  double best = 0, arg = lo, h = (hi - lo) / steps;
  for (int i = 0; i <= steps; ++i) {
    double v = phi_symmetrized(f, lo + h * i, r, k);
    if (v > best) best = v, arg = lo + h * i;
  }
  for (int it = 0; it < 200; ++it) {
    h /= 1.5;
    for (double t : {arg - h, arg + h})
      if (t >= lo && t <= hi) {
        double v = phi_symmetrized(f, t, r, k);
        if (v > best) best = v, arg = t;
      }
  }
  return best;
}

}  // namespace

TEST_CASE("successive minima examples") {
  auto one = diagonal_form(std::vector<ExactScalar>{1});
  auto red = successive_minima(one, 0.5, 1, MinimaMode::reduction);
  auto ex = successive_minima(one, 0.5, 1, MinimaMode::exact);
  CHECK(red.P == 4);
  REQUIRE(ex.minima.size() == 2);
  CHECK(ex.minima[0] == doctest::Approx(0.5));
  CHECK(ex.minima[1] == doctest::Approx(2.0));
  for (int i = 0; i < 2; ++i) {
    CHECK(red.minima[i] >= ex.minima[i] * (1 - 1e-12));
    CHECK(red.minima[i] <= red.quality * ex.minima[i]);
  }
  CHECK(red.quality == doctest::Approx(std::sqrt(2.0) * std::sqrt(2.0)));

  // integer tQ: x = e_j with m = column j gives F = 1/P
  auto f = diagonal_form(std::vector<ExactScalar>{1, 2, 3});
  for (auto mode : {MinimaMode::reduction, MinimaMode::exact}) {
    auto m = successive_minima(f, 2.0, 1, mode);
    for (int j = 0; j < 3; ++j) CHECK(m.minima[j] == doctest::Approx(0.25));
    for (std::size_t s = 0; s < m.vectors.size(); ++s)
      CHECK(minima_norm(f, 2.0, m.P, m.vectors[s]) == doctest::Approx(m.minima[s]));
  }
  Eigen::MatrixXd A(2, 2);
  A << 2, 1, 1, 3;
  auto g = build_form(A, false);
  auto mg = successive_minima(g, 1.0, 3, MinimaMode::exact);
  CHECK(mg.minima[0] == doctest::Approx(1 / 12.0));
  CHECK(mg.minima[1] == doctest::Approx(1 / 12.0));

  auto big = diagonal_form(Vec{1, 2, 3, 4, 5});
  CHECK_THROWS_AS(successive_minima(big, 1.0, 1, MinimaMode::exact), Error);
  CHECK_NOTHROW(successive_minima(big, 1.0, 1, MinimaMode::reduction));
  CHECK_THROWS_AS(successive_minima(one, 0.0, 1, MinimaMode::reduction), Error);
  CHECK_THROWS_AS(successive_minima(one, 1.0, 0.5, MinimaMode::reduction), Error);
}

TEST_CASE("successive minima against brute force") {
  std::mt19937_64 rng(61);
  for (int it = 0; it < 60; ++it) {
    int d = 1 + it % 2;
    auto f = it % 3 == 0 ? oracle::random_positive_form(rng, d) : oracle::random_symmetric_form(rng, d);
    double t = std::uniform_real_distribution<double>(0.2, 2.0)(rng) * (it % 4 == 1 ? -1 : 1);
    double r = 1 + (it / 2) % 3;
    auto ex = successive_minima(f, t, r, MinimaMode::exact);
    auto red = successive_minima(f, t, r, MinimaMode::reduction);
    auto want = brute_minima(f, t, r, red.vectors);
    REQUIRE(want.size() == (std::size_t)(2 * d));
    for (int i = 0; i < 2 * d; ++i) {
      CHECK(ex.minima[i] == doctest::Approx(want[i]).epsilon(1e-12));
      CHECK(red.minima[i] >= want[i] * (1 - 1e-12));
      CHECK(red.minima[i] <= red.quality * want[i] * (1 + 1e-12));
    }
  }
}

TEST_CASE("successive minima invariants") {
  std::mt19937_64 rng(62);
  for (int it = 0; it < 30; ++it) {
    int d = 1 + it % 4;
    auto f = oracle::random_symmetric_form(rng, d);
    double t = std::uniform_real_distribution<double>(0.1, 3.0)(rng);
    double r = 1 + it % 3;
    for (auto mode : {MinimaMode::reduction, MinimaMode::exact}) {
      if (mode == MinimaMode::exact && d > 3) continue;
      auto m = successive_minima(f, t, r, mode);
      REQUIRE(m.minima.size() == (std::size_t)(2 * d));
      CHECK(m.minima[0] >= (1 - 1e-9) / m.P);
      CHECK(std::is_sorted(m.minima.begin(), m.minima.end()));
      Eigen::MatrixXd V(2 * d, 2 * d);
      for (int s = 0; s < 2 * d; ++s)
        for (int i = 0; i < 2 * d; ++i) V(i, s) = (double)m.vectors[s][i];
      CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(V).rank() == 2 * d);
      for (int s = 0; s < 2 * d; ++s) CHECK(minima_norm(f, t, m.P, m.vectors[s]) == doctest::Approx(m.minima[s]));
    }
  }
  // the lattice has determinant 1, so the product of minima stays O(1)
  auto f = diagonal_form(Vec{1, std::sqrt(2.0)});
  auto m = successive_minima(f, 0.7, 10, MinimaMode::exact);
  double prod = 1;
  for (double v : m.minima) prod *= v;
  CHECK(prod <= 1 + 1e-9);
  CHECK(prod >= 1.0 / 24 / 16);
}

TEST_CASE("count_H") {
  auto one = diagonal_form(std::vector<ExactScalar>{1});
  CHECK(count_H(one, 0.0, 2) == 17);
  CHECK(count_H(one, 1e-6, 2) == 17);
  auto f = diagonal_form(std::vector<ExactScalar>{1, 3});
  CHECK(count_H(f, 1.0, 1) == 81);
  CHECK(count_H(f, 0.5, 1) == 25);  // x1, x2 even
  CHECK_THROWS_AS(count_H(diagonal_form(Vec{1, 1, 1, 1, 1}), 1.0, 10, 1000), BudgetExceeded);
  std::mt19937_64 rng(63);
  for (int it = 0; it < 30; ++it) {
    int d = 1 + it % 3;
    auto g = oracle::random_symmetric_form(rng, d);
    double t = std::uniform_real_distribution<double>(-3, 3)(rng);
    double r = 1 + it % 2;
    auto c = count_H(g, t, r);
    CHECK(c >= 1);
    CHECK(c == count_H(g, -t, r));
    CHECK(c == brute_H(g, t, r));
  }
}

TEST_CASE("count_H and the minima product") {
  // Henk's bound 2^{n-1} prod floor(2/M_i + 1) holds outright; the constant
  // in count_H <= C/(M_1...M_d) fitted at r = 1 must not grow with r
  std::mt19937_64 rng(64);
  for (int d = 1; d <= 3; ++d) {
    std::vector<double> worst(4, 0.0);
    for (int r = 1; r <= 4; ++r)
      for (int it = 0; it < 8; ++it) {
        auto g = oracle::random_symmetric_form(rng, d);
        double t = std::uniform_real_distribution<double>(0.2, 3)(rng);
        auto m = successive_minima(g, t, r, MinimaMode::exact);
        double prod = 1, henk = std::pow(2.0, 2 * d - 1);
        for (int j = 0; j < d; ++j) prod *= m.minima[j];
        for (double v : m.minima) henk *= std::floor(2 / v + 1);
        double c = (double)count_H(g, t, r);
        CHECK(c <= henk);
        worst[r - 1] = std::max(worst[r - 1], c * prod);
      }
    for (int r = 2; r <= 4; ++r) CHECK(worst[r - 1] <= 2 * worst[0]);
  }
}

TEST_CASE("phi_sym sup against a plain scan") {
  std::mt19937_64 rng(65);
  for (int it = 0; it < 6; ++it) {
    int d = 1 + it % 2;
    auto f = it < 4 ? diagonal_form(oracle::random_vec(rng, d, 0.5, 2)) : oracle::random_symmetric_form(rng, d);
    double r = 3 + it % 3;
    int k = 1 + it % 2;
    ProbeOptions opt;
    opt.k = k;
    auto p = phi_sym_sup(f, 0.5, 2.5, r, opt);
    double want = brute_sup(f, 0.5, 2.5, r, k, 20000);
    CHECK(p.sup == doctest::Approx(want).epsilon(1e-9));
    CHECK(phi_symmetrized(f, p.t_arg, r, k) == doctest::Approx(p.sup).epsilon(1e-12));
  }
}

TEST_CASE("rationality probe examples") {
  auto id = diagonal_form(std::vector<ExactScalar>{1, 1});
  auto rep = rationality_probe(id, 0.5, 4, {20, 40, 80, 160});
  CHECK(rep.verdict == ProbeVerdict::rational_consistent);
  for (const auto& p : rep.curve) CHECK(std::fabs(p.sup - 1) <= 1e-9);

  auto irr = diagonal_form(std::vector<ExactScalar>{ExactScalar(1), ExactScalar::surd(1, 2)});
  rep = rationality_probe(irr, 0.5, 4, {20, 40, 80, 160});
  CHECK(rep.verdict == ProbeVerdict::irrational_consistent);
  for (std::size_t i = 1; i < rep.curve.size(); ++i) CHECK(rep.curve[i].sup < rep.curve[i - 1].sup);

  auto near = diagonal_form(Vec{1, 1 + std::ldexp(1.0, -20)});
  rep = rationality_probe(near, 0.5, 4, {20, 40, 80, 160});
  CHECK(rep.verdict == ProbeVerdict::rational_consistent);

  CHECK_THROWS_AS(rationality_probe(id, 0.5, 4, {20, 40}), Error);
  CHECK_THROWS_AS(rationality_probe(id, 0.5, 4, {40, 20, 80}), Error);
  CHECK_THROWS_AS(rationality_probe(id, 4, 0.5, {20, 40, 80}), Error);
}

TEST_CASE("rationality probe suites") {
  std::mt19937_64 rng(66);
  // rational diagonal forms: period pi / g, g the rational gcd of the entries
  for (int it = 0; it < 10; ++it) {
    int d = 2 + it % 2;
    long gn = 0, gd = 1;
    std::vector<ExactScalar> diag;
    for (int j = 0; j < d; ++j) {
      long n = 1 + (long)(rng() % 6), de = 1 + (long)(rng() % 4), g = std::gcd(n, de);
      n /= g;
      de /= g;
      gn = std::gcd(gn, n);
      gd = std::lcm(gd, de);
      diag.push_back(ExactScalar(mpq_class(n) / de));
    }
    double period = std::numbers::pi * gd / gn;
    auto f = diagonal_form(diag);
    auto rep = rationality_probe(f, 0.5, period + 0.5, {10, 20, 40});
    CHECK(rep.verdict == ProbeVerdict::rational_consistent);
  }
  int primes[] = {2, 3, 5, 6, 7, 10, 11, 13};
  for (int it = 0; it < 10; ++it) {
    int d = 2 + it % 2;
    std::vector<ExactScalar> diag{ExactScalar(1)};
    for (int j = 1; j < d; ++j) {
      int p = primes[rng() % 8];
      diag.push_back(ExactScalar::surd(mpq_class(1 + (long)(rng() % 3)) / 2, (std::uint64_t)p));
    }
    auto f = diagonal_form(diag);
    auto rep = rationality_probe(f, 0.5, 4, {20, 40, 80, 160});
    CHECK(rep.verdict == ProbeVerdict::irrational_consistent);
  }
}

TEST_CASE("dirichlet approximation") {
  auto a = dirichlet_approx({0.5}, 2);
  CHECK(a.q == 2);
  CHECK(a.u[0] == 1);
  CHECK(a.max_error == 0);
  auto b = dirichlet_approx({std::sqrt(2.0)}, 10);
  CHECK(b.q == 5);
  CHECK(b.u[0] == 7);
  CHECK(b.max_error == doctest::Approx(0.01421).epsilon(1e-3));
  auto c = dirichlet_approx({3, -2, 7}, 50);
  CHECK(c.q == 1);
  CHECK(c.u == std::vector<std::int64_t>{3, -2, 7});
  CHECK_THROWS_AS(dirichlet_approx({1.0}, 0), Error);
  // brute force oracle: smallest admissible q
  std::mt19937_64 rng(67);
  for (int it = 0; it < 200; ++it) {
    int d = 1 + it % 3;
    auto v = oracle::random_vec(rng, d, -3, 3);
    std::int64_t N = 1 + (std::int64_t)(rng() % 500);
    auto res = dirichlet_approx(v, N);
    CHECK(res.q >= 1);
    CHECK(res.q <= N);
    for (int s = 0; s < d; ++s) CHECK(std::fabs(v[s] - (double)res.u[s] / res.q) < 1 / (res.q * std::pow((double)N, 1.0 / d)));
    std::int64_t first = 0;
    for (std::int64_t q = 1; q <= N && !first; ++q) {
      bool ok = true;
      for (int s = 0; s < d; ++s)
        ok = ok && std::fabs(v[s] - std::round(q * v[s]) / q) < 1 / (q * std::pow((double)N, 1.0 / d));
      if (ok) first = q;
    }
    CHECK(res.q == first);
  }
}
