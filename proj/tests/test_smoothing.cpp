#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qflab/lattice.hpp"
#include "qflab/smoothing.hpp"
#include "qflab/volume.hpp"

using namespace qfl;

namespace {

// Density of the sum of n independent U(-1/2, 1/2) (Irwin-Hall, centred).
double irwin_hall(int n, double x) {
  double y = x + n / 2.0;
  if (y <= 0 || y >= n) return 0;
  double v = 0, binom = 1, fact = 1;
  for (int i = 1; i < n; ++i) fact *= i;
  for (int k = 0; k <= n && k < y; ++k) {
    v += (k % 2 ? -1 : 1) * binom * std::pow(y - k, n - 1);
    binom = binom * (n - k) / (k + 1);
  }
  return v / fact;
}

// per-coordinate lattice weights by repeated direct convolution
std::vector<double> direct_weights(int R, int r, int k) {
  std::vector<double> w(2 * R + 1, 1.0 / (2 * R + 1));
  for (int i = 0; i < k; ++i) {
    std::vector<double> n(w.size() + 2 * r, 0.0);
    for (std::size_t a = 0; a < w.size(); ++a)
      for (int b = 0; b <= 2 * r; ++b) n[a + b] += w[a] / (2 * r + 1);
    w = n;
  }
  return w;
}

// power series coefficients (even powers only) of ((t/2)/sinh(t/2))^n up to t^N
std::vector<mpq_class> b_series(int n, int N) {
  std::vector<mpq_class> s(N + 1);  // sinh(t/2)/(t/2)
  mpz_class f = 1;
  for (int m = 0; 2 * m <= N; ++m) {
    if (m > 0) f *= (2 * m) * (2 * m + 1);
    mpz_class p4 = 1;
    for (int i = 0; i < m; ++i) p4 *= 4;
    s[2 * m] = mpq_class(1, 1) / (f * p4);
  }
  std::vector<mpq_class> inv(N + 1);
  inv[0] = 1;
  for (int m = 1; m <= N; ++m) {
    mpq_class acc = 0;
    for (int i = 1; i <= m; ++i) acc -= s[i] * inv[m - i];
    inv[m] = acc;
  }
  std::vector<mpq_class> out(N + 1);
  out[0] = 1;
  for (int p = 0; p < n; ++p) {
    std::vector<mpq_class> next(N + 1);
    for (int i = 0; i <= N; ++i)
      for (int j = 0; i + j <= N; ++j) next[i + j] += out[i] * inv[j];
    out = next;
  }
  return out;
}

double brute_F(const QuadraticForm& Q, const Vec& a, double s, const SmoothingScheme& sc) {
  const int d = Q.dim(), L = sc.lattice_half();
  std::vector<long long> x(d, -L);
  double tot = 0, lim = s + boundary_slack(s);
  while (true) {
    if (oracle::quad(Q, x, a) <= lim) {
      double w = 1;
      for (auto c : x) w *= sc.weight((int)c);
      tot += w;
    }
    int i = 0;
    while (i < d && x[i] == L) x[i++] = -L;
    if (i == d) break;
    ++x[i];
  }
  return tot;
}

// d^alpha D for the product density
double partial(const SmoothingScheme& sc, const Vec& x, const std::vector<int>& alpha) {
  double v = 1;
  for (std::size_t i = 0; i < x.size(); ++i) v *= sc.derivatives[alpha[i]](x[i]);
  return v;
}

}  // namespace

TEST_CASE("scheme weights and examples") {
  auto sc = build_scheme(1, 1, 1);
  REQUIRE(sc.lattice_weights.size() == 5);
  const double want[] = {1, 2, 3, 2, 1};
  for (int i = 0; i < 5; ++i) CHECK(sc.lattice_weights[i] * 9 == doctest::Approx(want[i]).epsilon(1e-15));
  // r = 0: the lattice smoothing is a point mass, mu is the box measure
  for (int k : {1, 3, 6}) {
    auto z = build_scheme(4, 0, k);
    CHECK(z.lattice_half() == 4);
    for (int m = -4; m <= 4; ++m) CHECK(z.weight(m) == doctest::Approx(1.0 / 9));
    CHECK(z.weight(5) == 0);
  }
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> ui(0, 5);
  for (int it = 0; it < 30; ++it) {
    int r = ui(rng), R = r + ui(rng), k = 1 + ui(rng) % 4;
    auto s = build_scheme(R + 0.7, r + 0.3 * (r < R), k);
    auto w = direct_weights(R, r, k);
    REQUIRE(w.size() == s.lattice_weights.size());
    double tot = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(s.lattice_weights[i] == doctest::Approx(w[i]).epsilon(1e-13));
      tot += s.lattice_weights[i];
    }
    CHECK(tot == doctest::Approx(1).epsilon(1e-14));
  }
  CHECK_THROWS_AS(build_scheme(1, 2, 2), Error);
  CHECK_THROWS_AS(build_scheme(3, 1, 0), Error);
  CHECK_THROWS_AS(build_scheme(3, -1, 2), Error);
}

TEST_CASE("piecewise polynomials") {
  auto b = Piecewise::box(mpq_class(3, 2));
  CHECK(b.integral() == 1);
  auto c = b.convolve_box(mpq_class(1, 2)).convolve_box(mpq_class(5, 2));
  CHECK(c.integral() == 1);
  CHECK(c.degree() == 2);
  // derivative of the antiderivative is the function
  auto back = c.antiderivative().derivative();
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> ui(-1000, 1000);
  for (int it = 0; it < 200; ++it) {
    mpq_class x(ui(rng), 173);
    CHECK(back.exact(x) == c.exact(x));
  }
  CHECK(c.antiderivative().tail() == 1);
  // variance additivity
  CHECK(c.moment(2) == mpq_class(9, 12) + mpq_class(1, 12) + mpq_class(25, 12));
  CHECK(c.moment(1) == 0);
}

TEST_CASE("cell moments") {
  CHECK(moments_pi_exact(0, {2}) == mpq_class(1, 12));
  CHECK(moments_pi_exact(1, {4}) == mpq_class(1, 15));
  for (int k = 0; k <= 7; ++k) {
    int n = k + 1;
    CHECK(moments_pi_exact(k, {2}) == mpq_class(n) / 12);
    // fourth cumulant of U(-1/2,1/2) is -1/120
    CHECK(moments_pi_exact(k, {4}) == mpq_class(3 * n * n) / 144 - mpq_class(n) / 120);
    CHECK(moments_pi_exact(k, {1}) == 0);
    CHECK(moments_pi_exact(k, {3, 2}) == 0);
    CHECK(moments_pi(k, {2, 2, 0}) == doctest::Approx(n * n / 144.0));
  }
}

TEST_CASE("density D and the cell identity") {
  std::mt19937_64 rng(5);
  for (auto [R, r, k] : {std::tuple{12.0, 3.0, 6}, {5.5, 1.2, 2}, {36.0, 3.0, 6}, {3.0, 0.0, 3}, {7.0, 2.0, 1}}) {
    auto sc = build_scheme(R, r, k);
    CHECK(sc.density.integral() == 1);
    CHECK(sc.density.degree() == k);
    CHECK(sc.support() == doctest::Approx(sc.R_floor + 0.5 + k * (sc.r_floor + 0.5)));
    // g(x) = sum_m mu(m) * cell(x - m), cell = (k+1)-fold U(-1/2,1/2)
    std::uniform_real_distribution<double> u(-sc.support() - 1, sc.support() + 1);
    for (int it = 0; it < 1000; ++it) {
      double x = u(rng), v = 0;
      for (int m = -sc.lattice_half(); m <= sc.lattice_half(); ++m) v += sc.weight(m) * irwin_hall(k + 1, x - m);
      CHECK(std::abs(sc.density(x) - v) <= 1e-10);
      CHECK(sc.density(x) >= -1e-15);
    }
    // constant core
    mpq_class core = sc.R_bar - k * sc.r_bar;
    mpq_class cv = 1 / (2 * sc.R_bar);
    if (core > 0) {
      for (int i = 0; i <= 20; ++i) CHECK(sc.density.exact(core * (2 * i - 20) / 20) == cv);
    }
    double c = sc.core_value(3);
    if (core > 0) CHECK(sc.D({0.0, core.get_d() * 0.5, -core.get_d()}) == doctest::Approx(c).epsilon(1e-12));
  }
  // for k > 3 the box |x| <= R - kr - 1 is larger than the true core
  auto sc = build_scheme(36, 3, 6);
  CHECK(sc.core() == doctest::Approx(15.5));
  CHECK(sc.density.exact(mpq_class(17)) < 1 / (2 * sc.R_bar));
  CHECK(sc.lattice_core() == 18);
}

TEST_CASE("correction densities") {
  for (int k : {4, 6}) {
    auto sc = build_scheme(10, 2, k);
    auto b = b_series(k + 1, 6);
    CHECK(b[2] == mpq_class(-(k + 1), 24));
    for (int j : {2, 4}) {
      auto cd = correction_density(sc, 3, j);
      for (const auto& t : cd.terms) {
        mpq_class want = 1;
        for (int o : t.orders) want *= b[o];
        CHECK(t.coefficient == want);
      }
      std::size_t expect_terms = j == 2 ? 3 : 6;
      CHECK(cd.terms.size() == expect_terms);
    }
  }
  // D_4 = D_44 + D_422 from the Frechet contractions, d = 2
  auto sc = build_scheme(6, 1, 6);
  auto d4 = correction_density(sc, 2, 4);
  auto d2 = correction_density(sc, 2, 2);
  double M2 = moments_pi(6, {2}), M4 = moments_pi(6, {4});
  auto mom = [&](int n) { return n == 0 ? 1.0 : n == 2 ? M2 : n == 4 ? M4 : 0.0; };
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-sc.support(), sc.support());
  for (int it = 0; it < 300; ++it) {
    Vec x = {u(rng), u(rng)};
    double D44 = 0, D422 = 0, D2 = 0;
    for (int code = 0; code < 16; ++code) {
      int idx[4] = {code & 1, (code >> 1) & 1, (code >> 2) & 1, (code >> 3) & 1};
      std::vector<int> alpha(2, 0);
      for (int c : idx) ++alpha[c];
      double dd = partial(sc, x, alpha);
      // u^4: one vector
      int n0 = alpha[0], n1 = alpha[1];
      D44 += dd * mom(n0) * mom(n1);
      // u1^2 u2^2: indices 0,1 on u1 and 2,3 on u2
      int a0 = (idx[0] == 0) + (idx[1] == 0), c0 = (idx[2] == 0) + (idx[3] == 0);
      D422 += dd * mom(a0) * mom(2 - a0) * mom(c0) * mom(2 - c0);
    }
    for (int i = 0; i < 2; ++i) {
      std::vector<int> alpha(2, 0);
      alpha[i] = 2;
      D2 += partial(sc, x, alpha) * M2;
    }
    D44 *= -1.0 / 24;
    D422 *= 1.0 / 4;
    D2 *= -0.5;
    double scale = std::pow(sc.r_bar.get_d(), -6.0);
    CHECK(std::abs(d4(x) - (D44 + D422)) <= 1e-12 * scale);
    CHECK(std::abs(d2(x) - D2) <= 1e-12 * scale);
  }
  // zero on the core and outside the support; even in each coordinate
  auto big = build_scheme(30, 2, 6);
  auto cd = correction_density(big, 3, 2);
  std::uniform_real_distribution<double> core(-big.core(), big.core());
  for (int it = 0; it < 200; ++it) {
    CHECK(cd({core(rng), core(rng), core(rng)}) == 0);
    CHECK(cd({big.support() + 0.1 + it, core(rng), 0.0}) == 0);
    Vec x = oracle::random_vec(rng, 3, -big.support(), big.support());
    Vec y = x;
    y[it % 3] = -y[it % 3];
    CHECK(cd(x) == doctest::Approx(cd(y)).epsilon(1e-12));
  }
  // |D_j| r_bar^{j+d} stays bounded as the scheme scales
  std::vector<double> fitted;
  for (double r : {2.0, 4.0, 8.0}) {
    auto s = build_scheme(4 * r, r, 6);
    auto c = correction_density(s, 2, 2);
    double m = 0;
    std::uniform_real_distribution<double> uu(-s.support(), s.support());
    for (int it = 0; it < 4000; ++it) m = std::max(m, std::abs(c({uu(rng), uu(rng)})));
    fitted.push_back(m * std::pow(s.r_bar.get_d(), 4));
  }
  CHECK(*std::max_element(fitted.begin(), fitted.end()) < 2 * *std::min_element(fitted.begin(), fitted.end()));
  CHECK_THROWS_AS(correction_density(sc, 2, 3), Error);
  CHECK_THROWS_AS(correction_density(sc, 2, 8), Error);
}

TEST_CASE("F_mu against brute force") {
  std::mt19937_64 rng(21);
  for (int it = 0; it < 40; ++it) {
    int d = 1 + it % 3;
    auto sc = build_scheme(2 + it % 3, it % 2, 1 + it % 3);
    QuadraticForm Q = it % 2 ? oracle::random_positive_form(rng, d)
                             : diagonal_form(oracle::random_vec(rng, d, 0.5, 3.0));
    if (it % 5 == 0) Q = oracle::random_symmetric_form(rng, d);
    Vec a = oracle::random_vec(rng, d, -1, 1);
    std::uniform_real_distribution<double> us(-2, 40);
    std::vector<double> grid;
    for (int k = 0; k < 5; ++k) grid.push_back(us(rng));
    auto F = F_mu_grid(Q, {a}, grid, sc);
    for (int k = 0; k < 5; ++k) CHECK(F[k] == doctest::Approx(brute_F(Q, a, grid[k], sc)).epsilon(1e-12));
    CHECK(F_mu_exact(Q, {a}, grid[0], sc).get_d() == doctest::Approx(F[0]).epsilon(1e-12));
    if (Q.is_positive()) {
      CHECK(F_mu(Q, {a}, 1e9, sc) == doctest::Approx(1).epsilon(1e-12));
      CHECK(F_mu(Q, {a}, -1, sc) == 0);
    }
    CHECK(F_mu_window(Q, {a}, 1, 10, sc) == doctest::Approx(brute_F(Q, a, 10, sc) - brute_F(Q, a, 1, sc)));
  }
  // nondecreasing step function
  auto sc = build_scheme(5, 1, 2);
  auto Q = diagonal_form(Vec{1.0, std::sqrt(2.0), std::sqrt(3.0)});
  std::vector<double> grid;
  for (double s = -1; s < 250; s += 0.37) grid.push_back(s);
  auto F = F_mu_grid(Q, {Vec(3, 0.1)}, grid, sc);
  for (std::size_t i = 1; i < F.size(); ++i) CHECK(F[i] >= F[i - 1]);
  CHECK(F.back() == doctest::Approx(1).epsilon(1e-12));
  // tiny budget
  CHECK_THROWS_AS(F_mu(Q, {Vec(3, 0.0)}, 50, sc, 10), BudgetExceeded);
}

TEST_CASE("F_mu counts lattice points when the smoothing fits") {
  // k = 6, r = sqrt(s), R = 2kr: F(s) (2 R_bar)^d = vol_Z(E_s + a)
  std::mt19937_64 rng(4);
  for (int it = 0; it < 6; ++it) {
    int d = 2 + it % 2;
    double s = 4 + it;
    double r = std::sqrt(s), R = 12 * r;
    auto sc = build_scheme(R, r, 6);
    auto Q = diagonal_form(oracle::random_vec(rng, d, 1.0, 2.0));
    Vec a = oracle::random_vec(rng, d, -1, 1);
    mpq_class F = F_mu_exact(Q, {a}, s, sc);
    mpz_class scale;
    mpz_class base = 2 * sc.R_floor + 1;
    mpz_pow_ui(scale.get_mpz_t(), base.get_mpz_t(), d);
    mpq_class scaled = F * scale;
    auto c = count_ellipsoid(Q, {a}, s);
    CHECK(scaled.get_den() == 1);
    CHECK(scaled.get_num().get_str() == to_string(c.count));
  }
}

TEST_CASE("F_nu and F_j") {
  auto sc = build_scheme(6, 1, 6);
  auto Q = diagonal_form(Vec{1.0, std::sqrt(2.0)});
  Vec a = {0.3, -0.2};
  MonteCarloOptions mc{200000, 3, 1};
  // quadrature oracle: midpoint rule in x_0, exact in x_1
  for (double s : {3.0, 20.0, 60.0}) {
    auto f0 = F_nu(Q, {a}, s, sc, mc);
    double want0 = 0, want2 = 0, h = 0.002, L = sc.support();
    for (double x = -L + h / 2; x < L; x += h) {
      double rem = s - (x - a[0]) * (x - a[0]);
      if (rem < 0) continue;
      double w = std::sqrt(rem / Q.entry(1, 1));
      double I0 = sc.cdf(a[1] + w) - sc.cdf(a[1] - w);
      double I2 = sc.derivatives[1](a[1] + w) - sc.derivatives[1](a[1] - w);
      want0 += h * sc.density(x) * I0;
      want2 += h * (sc.derivatives[2](x) * I0 + sc.density(x) * I2);
    }
    want2 *= -7.0 / 24;
    CHECK(std::abs(f0.mean - want0) <= 4 * f0.std_error + 1e-6);
    auto f2 = F_j(Q, {a}, s, sc, 2, mc);
    CHECK(std::abs(f2.mean - want2) <= 4 * f2.std_error + 1e-6);
  }
  // total masses
  auto one = F_nu(Q, {a}, 1e6, sc, mc);
  CHECK(one.mean == doctest::Approx(1).epsilon(1e-12));
  auto zero = F_j(Q, {a}, 1e6, sc, 2, mc);
  CHECK(std::abs(zero.mean) <= 4 * zero.std_error + 1e-12);
  CHECK_THROWS_AS(F_j(Q, {a}, 10, sc, 3, mc), Error);
  CHECK_THROWS_AS(F_j(Q, {a}, 10, sc, 6, mc), Error);
  // worker count does not change the estimate
  MonteCarloOptions m3 = mc;
  m3.workers = 3;
  CHECK(F_nu(Q, {a}, 20, sc, m3).mean == F_nu(Q, {a}, 20, sc, mc).mean);
}

TEST_CASE("constant core regime") {
  // ellipsoid inside the core: F0 = (2 R_bar)^{-d} vol E_s, F_j = 0
  auto sc = build_scheme(36, 3, 6);
  std::mt19937_64 rng(9);
  for (int d : {3, 5, 9}) {
    auto Q = diagonal_form(oracle::random_vec(rng, d, 1.0, 2.0), true);
    ShiftVector a{Vec(d, 0.0)};
    for (double s : {50.0, 200.0}) {
      auto f0 = F_nu(Q, a, s, sc, {100000, 2, 1});
      double want = sc.core_value(d) * ellipsoid_volume(Q, s);
      CHECK(std::abs(f0.mean - want) <= 4 * f0.std_error);
      auto f2 = F_j(Q, a, s, sc, 2, {20000, 2, 1});
      CHECK(f2.mean == 0);
    }
  }
}

TEST_CASE("expansion residual") {
  auto sc = build_scheme(4, 1, 6);
  auto Q = diagonal_form(Vec{1, 1, 1, 1.4, 1.4, 1.4, 1.7, 1.7, 1.7});
  ShiftVector a{Vec(9, 0.0)};
  MonteCarloOptions mc{20000, 1, 1};
  ExpansionOptions opt;
  opt.T = 2;
  // p = 2: nothing to correct, residual equals F - F0
  auto rep = expansion_residual(Q, a, {40.0, 80.0}, sc, 2, mc, opt);
  CHECK(rep.orders.empty());
  for (const auto& p : rep.points) {
    CHECK(p.residual.mean == doctest::Approx(p.lead.mean));
    CHECK(p.residual.std_error == doctest::Approx(p.lead.std_error));
  }
  CHECK(rep.envelope > 0);
  CHECK(rep.gamma > 0);
  // k = 6 < 2p + 2 for p = 4: thrown unless relaxed
  CHECK_THROWS_AS(expansion_residual(Q, a, {40.0}, sc, 4, mc, opt), Error);
  opt.strict = false;
  auto r4 = expansion_residual(Q, a, {40.0, 80.0}, sc, 4, mc, opt);
  REQUIRE(r4.orders == std::vector<int>{2});
  CHECK(r4.flags.size() == 1);
  CHECK(r4.points[0].fj_ratio.size() == 1);
  CHECK(r4.fitted_constant >= 0);
  auto low = diagonal_form(Vec{1.0, 2.0, 3.0});
  CHECK_THROWS_AS(expansion_residual(low, {Vec(3, 0.0)}, {4.0}, sc, 2, mc, opt), Error);
  CHECK_THROWS_AS(expansion_residual(Q, a, {4.0}, sc, 5, mc, opt), Error);
}

TEST_CASE("fourier inversion") {
  auto sc = build_scheme(3, 1, 2);
  auto Q = diagonal_form(std::vector<ExactScalar>{ExactScalar(1), ExactScalar::surd(1, 2)});
  ShiftVector a{Vec{0.0, 0.0}};
  auto f0 = F_hat(Q, a, 0, sc);
  CHECK(f0.real() == doctest::Approx(1).epsilon(1e-14));
  CHECK(std::abs(f0.imag()) < 1e-15);
  for (double t : {0.3, 1.7, 12.0}) {
    auto p = F_hat(Q, a, t, sc), m = F_hat(Q, a, -t, sc);
    CHECK(std::abs(p - std::conj(m)) < 1e-13);
  }
  double s = 7.82842712474619;  // midpoint of the widest value gap below 15
  double prev = 1;
  for (double T : {10.0, 40.0, 160.0}) {
    auto r = fourier_inversion_check(Q, a, s, sc, T);
    CHECK(r.within);
    CHECK(r.error < prev);
    CHECK(r.flags.empty());
    prev = r.error;
  }
  CHECK(prev < 1e-4);
  std::mt19937_64 rng(1);
  auto nd = oracle::random_positive_form(rng, 2);
  CHECK_THROWS_AS(fourier_inversion_check(nd, a, 1, sc, 10), Error);
  auto coarse = fourier_inversion_check(Q, a, s, sc, 160, 64);
  CHECK(!coarse.flags.empty());
}
