#include "qflab/smoothing.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

#include "qflab/bounds.hpp"
#include "qflab/lattice.hpp"
#include "qflab/weights.hpp"

namespace qfl {

double SmoothingScheme::weight(int m) const {
  int h = lattice_half();
  return (m < -h || m > h) ? 0.0 : lattice_weights[static_cast<std::size_t>(m + h)];
}

double SmoothingScheme::support() const { return mpq_class(R_bar + k * r_bar).get_d(); }
double SmoothingScheme::core() const { return mpq_class(R_bar - k * r_bar).get_d(); }
double SmoothingScheme::core_value(int d) const { return std::pow(2 * R_bar.get_d(), -d); }

double SmoothingScheme::D(const Vec& x) const {
  double v = 1;
  for (double c : x) v *= density(c);
  return v;
}

SmoothingScheme build_scheme(double R, double r, int k) {
  require(std::isfinite(R) && std::isfinite(r), "R and r must be finite");
  require(r >= 0 && R >= r, "need R >= r >= 0");
  require(k >= 1, "k must be >= 1");
  SmoothingScheme sc;
  sc.R = R;
  sc.r = r;
  sc.k = k;
  sc.R_floor = static_cast<int>(std::floor(R));
  sc.r_floor = static_cast<int>(std::floor(r));
  sc.R_bar = mpq_class(2 * sc.R_floor + 1, 2);
  sc.r_bar = mpq_class(2 * sc.r_floor + 1, 2);
  std::vector<int> widths(static_cast<std::size_t>(k) + 1, sc.r_floor);
  widths[0] = sc.R_floor;
  sc.lattice_counts = box_convolution_counts(widths);
  sc.lattice_denominator = 2 * sc.R_floor + 1;
  for (int i = 0; i < k; ++i) sc.lattice_denominator *= 2 * sc.r_floor + 1;
  for (const auto& c : sc.lattice_counts) sc.lattice_weights.push_back(mpq_class(c, sc.lattice_denominator).get_d());

  sc.density = Piecewise::box(sc.R_bar);
  for (int i = 0; i < k; ++i) sc.density = sc.density.convolve_box(sc.r_bar);
  sc.derivatives.push_back(sc.density);
  for (int n = 1; n <= k; ++n) sc.derivatives.push_back(sc.derivatives.back().derivative());
  sc.cdf = sc.density.antiderivative();
  const mpq_class half(1, 2);
  sc.cell = Piecewise::box(half);
  for (int i = 0; i < k; ++i) sc.cell = sc.cell.convolve_box(half);
  return sc;
}

namespace {

Piecewise cell_density(int k) {
  const mpq_class half(1, 2);
  Piecewise c = Piecewise::box(half);
  for (int i = 0; i < k; ++i) c = c.convolve_box(half);
  return c;
}

mpq_class factorial(int n) {
  mpz_class f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return mpq_class(f);
}

}  // namespace

mpq_class moments_pi_exact(int k, const std::vector<int>& orders) {
  require(k >= 0, "k must be >= 0");
  for (int n : orders) {
    require(n >= 0, "moment orders must be >= 0");
    if (n % 2) return 0;
  }
  Piecewise c = cell_density(k);
  mpq_class v = 1;
  for (int n : orders) v *= c.moment(n);
  return v;
}

double moments_pi(int k, const std::vector<int>& orders) { return moments_pi_exact(k, orders).get_d(); }

double CorrectionDensity::operator()(const Vec& x) const {
  require(static_cast<int>(x.size()) == d, "dimension mismatch");
  std::vector<std::vector<double>> val(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i)
    for (int n = 0; n <= j; n += 2) val[i].push_back(derivs_[static_cast<std::size_t>(n)](x[i]));
  double total = 0;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    double p = coef_[t];
    for (int i = 0; i < d; ++i) p *= val[i][static_cast<std::size_t>(terms[t].orders[i] / 2)];
    total += p;
  }
  return total;
}

CorrectionDensity correction_density(const SmoothingScheme& scheme, int d, int j) {
  require(d >= 1, "d must be >= 1");
  require(j >= 2 && j % 2 == 0, "correction order must be even and >= 2");
  require(j <= scheme.k, "correction order exceeds the smoothness of D");
  // per-coordinate weights M_n / n! of the cell convolution; odd ones vanish
  std::vector<mpq_class> mom(static_cast<std::size_t>(j) + 1);
  for (int n = 0; n <= j; n += 2) mom[n] = scheme.cell.moment(n) / factorial(n);

  // Each ordered representation j = eta_1 + ... + eta_m contributes
  // (-1)^m prod_l E[D^(j) u_l^{eta_l}]; splitting eta_l over coordinates
  // gives multi-indices beta_l. Summing over the first part gives
  // c(alpha) = -sum_{beta != 0, beta <= alpha} m(beta) c(alpha - beta).
  std::map<std::vector<int>, mpq_class> memo;
  std::function<mpq_class(const std::vector<int>&)> coef = [&](const std::vector<int>& alpha) -> mpq_class {
    bool zero = std::all_of(alpha.begin(), alpha.end(), [](int v) { return v == 0; });
    if (zero) return 1;
    auto it = memo.find(alpha);
    if (it != memo.end()) return it->second;
    mpq_class acc = 0;
    std::vector<int> beta(alpha.size(), 0);
    // enumerate even beta <= alpha
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == alpha.size()) {
        bool nz = std::any_of(beta.begin(), beta.end(), [](int v) { return v != 0; });
        if (!nz) return;
        mpq_class m = 1;
        std::vector<int> rest(alpha.size());
        for (std::size_t c = 0; c < alpha.size(); ++c) {
          m *= mom[static_cast<std::size_t>(beta[c])];
          rest[c] = alpha[c] - beta[c];
        }
        acc -= m * coef(rest);
        return;
      }
      for (int b = 0; b <= alpha[i]; b += 2) {
        beta[i] = b;
        rec(i + 1);
      }
      beta[i] = 0;
    };
    rec(0);
    memo.emplace(alpha, acc);
    return acc;
  };

  CorrectionDensity cd;
  cd.j = j;
  cd.d = d;
  cd.derivs_ = scheme.derivatives;
  std::vector<int> alpha(static_cast<std::size_t>(d), 0);
  // coefficients only depend on the sorted multi-index
  std::map<std::vector<int>, mpq_class> by_shape;
  std::function<void(int, int)> gen = [&](int i, int left) {
    if (i == d - 1) {
      alpha[static_cast<std::size_t>(i)] = left;
      std::vector<int> key;
      for (int v : alpha)
        if (v) key.push_back(v);
      std::sort(key.begin(), key.end());
      auto it = by_shape.find(key);
      if (it == by_shape.end()) it = by_shape.emplace(key, coef(key)).first;
      if (it->second != 0) cd.terms.push_back({it->second, alpha});
      return;
    }
    for (int v = 0; v <= left; v += 2) {
      alpha[static_cast<std::size_t>(i)] = v;
      gen(i + 1, left - v);
    }
  };
  gen(0, j);
  for (const auto& t : cd.terms) cd.coef_.push_back(t.coefficient.get_d());
  return cd;
}

namespace {

bool all_finite(const Vec& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_inputs(const QuadraticForm& form, const ShiftVector& a) {
  if (a.a.size() != static_cast<std::size_t>(form.dim())) fail(Reason::invalid_argument, "shift dimension mismatch");
  require(all_finite(a.a), "shift must be finite");
}

template <class W>
struct Item {
  double v;
  W w;
};

double merge_tol(double v) { return 1e-12 * std::max(1.0, std::abs(v)); }

template <class W>
std::vector<Item<W>> coalesce(std::vector<Item<W>> raw) {
  std::sort(raw.begin(), raw.end(), [](const Item<W>& x, const Item<W>& y) { return x.v < y.v; });
  std::vector<Item<W>> out;
  for (auto& it : raw) {
    if (!out.empty() && it.v - out.back().v <= merge_tol(out.back().v))
      out.back().w += it.w;
    else
      out.push_back(std::move(it));
  }
  return out;
}

template <class W>
W coordinate_weight(const SmoothingScheme& sc, std::size_t i);
template <>
double coordinate_weight<double>(const SmoothingScheme& sc, std::size_t i) {
  return sc.lattice_weights[i];
}
template <>
mpz_class coordinate_weight<mpz_class>(const SmoothingScheme& sc, std::size_t i) {
  return sc.lattice_counts[i];
}

template <class W>
std::vector<Item<W>> coordinate_list(const SmoothingScheme& sc, double q, double a) {
  std::vector<Item<W>> raw;
  const int h = sc.lattice_half();
  for (int m = -h; m <= h; ++m) {
    std::size_t i = static_cast<std::size_t>(m + h);
    if (sc.lattice_counts[i] == 0) continue;
    double y = m - a;
    raw.push_back({q * y * y, coordinate_weight<W>(sc, i)});
  }
  return coalesce(std::move(raw));
}

template <class W>
std::vector<Item<W>> combine(const std::vector<Item<W>>& A, const std::vector<Item<W>>& B, double cap,
                             std::uint64_t budget, std::uint64_t& work) {
  std::uint64_t pairs = static_cast<std::uint64_t>(A.size()) * B.size();
  if (work + pairs > budget) throw BudgetExceeded("F_mu value list exceeds budget", work, work + pairs);
  work += pairs;
  std::vector<Item<W>> raw;
  for (const auto& x : A)
    for (const auto& y : B) {
      double v = x.v + y.v;
      if (v <= cap) raw.push_back({v, x.w * y.w});
    }
  return coalesce(std::move(raw));
}

double binom_est(double n, int c) {
  double v = 1;
  for (int i = 1; i <= c; ++i) v = v * (n + i - 1) / i;
  return v;
}

// sum over lattice points of weight * [Q[x-a] <= s] for each s, diagonal form
template <class W>
std::vector<W> diagonal_sums(const QuadraticForm& form, const Vec& a, const std::vector<double>& s,
                             const SmoothingScheme& sc, std::uint64_t budget) {
  const int d = form.dim();
  const Vec q = form.diagonal();
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return q[x] != q[y] ? q[x] < q[y] : a[x] < a[y];
  });
  std::vector<std::vector<Item<W>>> lists;
  std::vector<double> mins;
  std::vector<int> group;
  for (int c = 0; c < d; ++c) {
    int i = order[static_cast<std::size_t>(c)];
    lists.push_back(coordinate_list<W>(sc, q[i], a[i]));
    mins.push_back(lists.back().empty() ? 0.0 : lists.back().front().v);
    bool same = c > 0 && q[i] == q[order[c - 1]] && a[i] == a[order[c - 1]];
    group.push_back(same ? group.back() : c);
  }
  double smax = *std::max_element(s.begin(), s.end());
  smax += boundary_slack(smax);
  // pick the split with the smallest estimated list sizes
  auto est = [&](int lo, int hi) {
    double v = 1;
    int c = lo;
    while (c < hi) {
      int e = c;
      while (e < hi && group[e] == group[c]) ++e;
      v *= binom_est(static_cast<double>(lists[c].size()), e - c);
      c = e;
    }
    return v;
  };
  int split = d;
  double best = std::numeric_limits<double>::infinity();
  for (int c = 1; c <= d; ++c) {
    double e = est(0, c) + est(c, d);
    if (e < best) {
      best = e;
      split = c;
    }
  }
  std::uint64_t work = 0;
  const double total_min = std::accumulate(mins.begin(), mins.end(), 0.0);
  auto build = [&](int lo, int hi) {
    std::vector<Item<W>> acc = {{0.0, W(1)}};
    double remaining_min = total_min;
    for (int c = lo; c < hi; ++c) {
      remaining_min -= mins[c];
      // other coordinates contribute at least their minima
      double cap = smax - remaining_min + merge_tol(smax);
      acc = combine(acc, lists[c], cap, budget, work);
    }
    return acc;
  };
  auto A = build(0, split);
  auto B = build(split, d);
  std::vector<W> prefix(B.size() + 1, W(0));
  for (std::size_t i = 0; i < B.size(); ++i) prefix[i + 1] = prefix[i] + B[i].w;
  std::vector<W> out(s.size(), W(0));
  for (std::size_t k = 0; k < s.size(); ++k) {
    double lim = s[k] + boundary_slack(s[k]);
    W acc(0);
    for (const auto& x : A) {
      double rem = lim - x.v;
      auto it = std::upper_bound(B.begin(), B.end(), rem, [](double v, const Item<W>& y) { return v < y.v; });
      std::size_t n = static_cast<std::size_t>(it - B.begin());
      if (n) acc += x.w * prefix[n];
    }
    out[k] = acc;
  }
  return out;
}

// visits lattice points of the support box with Q[x-a] <= smax (positive
// forms) or all of them (otherwise)
template <class Fn>
void visit_support(const QuadraticForm& form, const Vec& a, int L, double smax, std::uint64_t budget, Fn&& fn) {
  const int d = form.dim();
  std::vector<int> x(static_cast<std::size_t>(d), -L);
  Vec xd(static_cast<std::size_t>(d));
  std::uint64_t visited = 0;
  auto leaf = [&] {
    if (++visited > budget) throw BudgetExceeded("F_mu enumeration exceeds budget", visited);
    for (int i = 0; i < d; ++i) xd[i] = x[i];
    fn(x, form.shifted(xd, a));
  };
  if (form.is_positive()) {
    Eigen::LLT<Eigen::MatrixXd> llt(form.matrix());
    if (llt.info() != Eigen::Success) fail(Reason::degenerate_form, "Cholesky failed");
    Eigen::MatrixXd Rm = llt.matrixU();
    const double lim = smax + boundary_slack(smax);
    std::vector<double> y(static_cast<std::size_t>(d));
    std::function<void(int, double)> rec = [&](int i, double used) {
      if (i < 0) {
        leaf();
        return;
      }
      double c = 0;
      for (int j = i + 1; j < d; ++j) c -= Rm(i, j) / Rm(i, i) * y[j];
      double dii = Rm(i, i) * Rm(i, i);
      double room = lim - used;
      if (room < 0) return;
      double w = std::sqrt(room / dii);
      int lo = std::max(-L, static_cast<int>(std::ceil(a[i] + c - w - 1e-9)));
      int hi = std::min(L, static_cast<int>(std::floor(a[i] + c + w + 1e-9)));
      for (int m = lo; m <= hi; ++m) {
        if (++visited > budget) throw BudgetExceeded("F_mu enumeration exceeds budget", visited);
        x[i] = m;
        y[i] = m - a[i];
        double t = y[i] - c;
        rec(i - 1, used + dii * t * t);
      }
    };
    rec(d - 1, 0.0);
    return;
  }
  // odometer over the whole box
  while (true) {
    leaf();
    int i = 0;
    while (i < d && x[i] == L) x[i++] = -L;
    if (i == d) break;
    ++x[i];
  }
}

template <class W>
std::vector<W> lattice_sums(const QuadraticForm& form, const Vec& a, const std::vector<double>& s,
                            const SmoothingScheme& sc, std::uint64_t budget) {
  if (form.is_diagonal()) return diagonal_sums<W>(form, a, s, sc, budget);
  const int L = sc.lattice_half();
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return s[x] < s[y]; });
  std::vector<double> sorted;
  for (auto i : idx) sorted.push_back(s[i] + boundary_slack(s[i]));
  std::vector<W> diff(s.size() + 1, W(0));
  visit_support(form, a, L, sorted.back(), budget, [&](const std::vector<int>& x, double v) {
    auto first = std::lower_bound(sorted.begin(), sorted.end(), v);
    if (first == sorted.end()) return;
    W w(1);
    for (int c : x) w *= coordinate_weight<W>(sc, static_cast<std::size_t>(c + L));
    diff[static_cast<std::size_t>(first - sorted.begin())] += w;
  });
  std::vector<W> out(s.size(), W(0));
  W acc(0);
  for (std::size_t k = 0; k < s.size(); ++k) {
    acc += diff[k];
    out[idx[k]] = acc;
  }
  return out;
}

}  // namespace

std::vector<double> F_mu_grid(const QuadraticForm& form, const ShiftVector& a, const std::vector<double>& s,
                              const SmoothingScheme& scheme, std::uint64_t budget) {
  check_inputs(form, a);
  if (s.empty()) return {};
  for (double v : s) require(std::isfinite(v), "s must be finite");
  return lattice_sums<double>(form, a.a, s, scheme, budget);
}

double F_mu(const QuadraticForm& form, const ShiftVector& a, double s, const SmoothingScheme& scheme,
            std::uint64_t budget) {
  return F_mu_grid(form, a, {s}, scheme, budget)[0];
}

mpq_class F_mu_exact(const QuadraticForm& form, const ShiftVector& a, double s, const SmoothingScheme& scheme,
                     std::uint64_t budget) {
  check_inputs(form, a);
  require(std::isfinite(s), "s must be finite");
  mpz_class num = lattice_sums<mpz_class>(form, a.a, {s}, scheme, budget)[0];
  mpz_class den;
  mpz_pow_ui(den.get_mpz_t(), scheme.lattice_denominator.get_mpz_t(), static_cast<unsigned long>(form.dim()));
  mpq_class v(num, den);
  v.canonicalize();
  return v;
}

double F_mu_window(const QuadraticForm& form, const ShiftVector& a, double alpha, double beta,
                   const SmoothingScheme& scheme, std::uint64_t budget) {
  require(alpha <= beta, "window needs alpha <= beta");
  auto v = F_mu_grid(form, a, {alpha, beta}, scheme, budget);
  return v[1] - v[0];
}

namespace {

struct McMulti {
  std::vector<std::vector<McEstimate>> est;  // [s][order]
  std::vector<McEstimate> combined;          // sum over orders, per s
};

// y with A y^2 + 2 B y + C <= 0
std::vector<std::pair<double, double>> quadratic_set(double A, double B, double C) {
  const double inf = std::numeric_limits<double>::infinity();
  if (A == 0) {
    if (B == 0) return C <= 0 ? std::vector<std::pair<double, double>>{{-inf, inf}}
                              : std::vector<std::pair<double, double>>{};
    double y = -C / (2 * B);
    return B > 0 ? std::vector<std::pair<double, double>>{{-inf, y}}
                 : std::vector<std::pair<double, double>>{{y, inf}};
  }
  double disc = B * B - A * C;
  if (A > 0) {
    if (disc < 0) return {};
    double r = std::sqrt(disc);
    return {{(-B - r) / A, (-B + r) / A}};
  }
  if (disc <= 0) return {{-inf, inf}};
  double r = std::sqrt(disc);
  double y1 = (-B + r) / A, y2 = (-B - r) / A;  // y1 < y2 for A < 0
  return {{-inf, y1}, {y2, inf}};
}

constexpr std::uint64_t kChunk = 4096;

McMulti mc_multi(const QuadraticForm& form, const Vec& a, const std::vector<double>& s, const SmoothingScheme& sc,
                 const std::vector<int>& orders, const MonteCarloOptions& mc) {
  require(mc.samples >= 2, "at least two samples required");
  const int d = form.dim();
  const int l = d - 1;
  const Eigen::MatrixXd& Q = form.matrix();
  int jmax = 0;
  for (int j : orders) jmax = std::max(jmax, j);
  const std::size_t nh = static_cast<std::size_t>(jmax / 2 + 1);
  // per order: terms split into (coefficient, orders of the sampled coordinates, order of the last)
  struct Term {
    double c;
    std::vector<int> h;  // half orders of coordinates 0..l-1
    int last;            // half order of coordinate l
  };
  std::vector<std::vector<Term>> terms(orders.size());
  for (std::size_t o = 0; o < orders.size(); ++o) {
    if (orders[o] == 0) {
      terms[o].push_back({1.0, std::vector<int>(static_cast<std::size_t>(l), 0), 0});
      continue;
    }
    auto cd = correction_density(sc, d, orders[o]);
    for (const auto& t : cd.terms) {
      Term tt{t.coefficient.get_d(), {}, t.orders[l] / 2};
      for (int i = 0; i < l; ++i) tt.h.push_back(t.orders[i] / 2);
      terms[o].push_back(std::move(tt));
    }
  }
  // antiderivatives of g^(n) for even n
  std::vector<const Piecewise*> H(nh);
  for (std::size_t h = 0; h < nh; ++h) H[h] = h == 0 ? &sc.cdf : &sc.derivatives[2 * h - 1];
  const double Rb = sc.R_bar.get_d(), rb = sc.r_bar.get_d();
  const double edge = sc.support() + 1;

  // Sampled coordinates come from g truncated to the bounding box of the
  // largest ellipsoid (positive forms); Z is the truncated mass.
  enum class Draw { free, reject, invert };
  std::vector<Draw> how(static_cast<std::size_t>(std::max(l, 0)), Draw::free);
  std::vector<double> wlo(how.size(), -edge), whi(how.size(), edge), F_lo(how.size(), 0.0);
  double Zprod = 1;
  if (form.is_positive() && l > 0) {
    const double smax = *std::max_element(s.begin(), s.end());
    if (smax < 0) {
      McMulti zero;
      McEstimate z;
      z.samples = mc.samples;
      z.seed = mc.seed;
      zero.est.assign(s.size(), std::vector<McEstimate>(orders.size(), z));
      zero.combined.assign(s.size(), z);
      return zero;
    }
    Eigen::MatrixXd inv = Q.inverse();
    for (int i = 0; i < l; ++i) {
      double w = std::sqrt(smax * inv(i, i)) * (1 + 1e-12) + 1e-12;
      wlo[i] = std::max(-edge, a[i] - w);
      whi[i] = std::min(edge, a[i] + w);
      double Z = whi[i] > wlo[i] ? sc.cdf(whi[i]) - sc.cdf(wlo[i]) : 0.0;
      F_lo[i] = sc.cdf(wlo[i]);
      if (Z >= 1 - 1e-15) continue;
      how[i] = Z > 0.25 ? Draw::reject : Draw::invert;
      Zprod *= Z;
    }
  }
  auto invert = [&](double u, double lo, double hi) {
    // cdf(x) = u, Newton steps kept inside the bracket
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 100 && hi - lo > 1e-13 * std::max(1.0, std::abs(x)); ++it) {
      double f = sc.cdf(x) - u;
      if (std::abs(f) < 1e-16) break;
      if (f > 0)
        hi = x;
      else
        lo = x;
      double g = sc.density(x);
      double nx = g > 0 ? x - f / g : 0.5 * (lo + hi);
      x = (nx > lo && nx < hi) ? nx : 0.5 * (lo + hi);
    }
    return x;
  };

  const std::size_t ns = s.size(), no = orders.size();
  const std::uint64_t chunks = (mc.samples + kChunk - 1) / kChunk;
  struct Acc {
    std::vector<double> sum, sq, csum, csq;
  };
  std::vector<Acc> parts(chunks);
  const int workers = std::max(1, mc.workers);
  run_workers(workers, [&](int w) {
    Vec x(static_cast<std::size_t>(d));
    std::vector<double> ratio(static_cast<std::size_t>(std::max(l, 0)) * nh);
    std::vector<double> W(no * nh), I(nh), est(no);
    for (std::uint64_t c = static_cast<std::uint64_t>(w); c < chunks; c += static_cast<std::uint64_t>(workers)) {
      auto rng = make_rng(mc.seed, 0x5300000ULL + c);
      std::uniform_real_distribution<double> uR(-Rb, Rb), ur(-rb, rb);
      Acc acc{std::vector<double>(ns * no), std::vector<double>(ns * no), std::vector<double>(ns),
              std::vector<double>(ns)};
      std::uint64_t n = std::min(kChunk, mc.samples - c * kChunk);
      for (std::uint64_t it = 0; it < n; ++it) {
        for (int i = 0; i < l; ++i) {
          double v;
          if (how[i] == Draw::invert) {
            std::uniform_real_distribution<double> uu(F_lo[i], sc.cdf(whi[i]));
            v = invert(uu(rng), wlo[i], whi[i]);
          } else {
            do {
              v = uR(rng);
              for (int m = 0; m < sc.k; ++m) v += ur(rng);
            } while (how[i] == Draw::reject && (v < wlo[i] || v > whi[i]));
          }
          x[i] = v;
          double g = sc.density(v);
          for (std::size_t h = 0; h < nh; ++h)
            ratio[i * nh + h] = h == 0 ? 1.0 : (g > 0 ? sc.derivatives[2 * h](v) / g : 0.0);
        }
        std::fill(W.begin(), W.end(), 0.0);
        for (std::size_t o = 0; o < no; ++o)
          for (const auto& t : terms[o]) {
            double p = t.c;
            for (int i = 0; i < l; ++i)
              if (t.h[i]) p *= ratio[i * nh + static_cast<std::size_t>(t.h[i])];
            W[o * nh + static_cast<std::size_t>(t.last)] += p;
          }
        double A = Q(l, l), B = 0, C = 0;
        if (form.is_diagonal()) {
          for (int i = 0; i < l; ++i) {
            double y = x[i] - a[i];
            C += Q(i, i) * y * y;
          }
        } else {
          for (int i = 0; i < l; ++i) {
            double y = x[i] - a[i];
            B += Q(i, l) * y;
            for (int j = 0; j < l; ++j) C += Q(i, j) * y * (x[j] - a[j]);
          }
        }
        for (std::size_t k = 0; k < ns; ++k) {
          auto set = quadratic_set(A, B, C - s[k]);
          std::fill(I.begin(), I.end(), 0.0);
          for (auto [lo, hi] : set) {
            double xl = std::clamp(lo + a[l], -edge, edge), xh = std::clamp(hi + a[l], -edge, edge);
            if (xh <= xl) continue;
            for (std::size_t h = 0; h < nh; ++h) I[h] += (*H[h])(xh) - (*H[h])(xl);
          }
          double tot = 0;
          for (std::size_t o = 0; o < no; ++o) {
            double e = 0;
            for (std::size_t h = 0; h < nh; ++h) e += W[o * nh + h] * I[h];
            e *= Zprod;
            acc.sum[k * no + o] += e;
            acc.sq[k * no + o] += e * e;
            tot += e;
          }
          acc.csum[k] += tot;
          acc.csq[k] += tot * tot;
        }
      }
      parts[c] = std::move(acc);
    }
  });
  std::vector<double> sum(ns * no), sq(ns * no), csum(ns), csq(ns);
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < ns * no; ++i) {
      sum[i] += p.sum[i];
      sq[i] += p.sq[i];
    }
    for (std::size_t i = 0; i < ns; ++i) {
      csum[i] += p.csum[i];
      csq[i] += p.csq[i];
    }
  }
  const double N = static_cast<double>(mc.samples);
  auto make = [&](double s1, double s2) {
    McEstimate e;
    e.mean = s1 / N;
    double var = std::max(0.0, (s2 / N - e.mean * e.mean) * N / (N - 1));
    e.std_error = std::sqrt(var / N);
    e.samples = mc.samples;
    e.seed = mc.seed;
    return e;
  };
  McMulti out;
  out.est.resize(ns);
  for (std::size_t k = 0; k < ns; ++k) {
    for (std::size_t o = 0; o < no; ++o) out.est[k].push_back(make(sum[k * no + o], sq[k * no + o]));
    out.combined.push_back(make(csum[k], csq[k]));
  }
  return out;
}

}  // namespace

McEstimate F_nu(const QuadraticForm& form, const ShiftVector& a, double s, const SmoothingScheme& scheme,
                const MonteCarloOptions& mc) {
  check_inputs(form, a);
  require(std::isfinite(s), "s must be finite");
  return mc_multi(form, a.a, {s}, scheme, {0}, mc).est[0][0];
}

McEstimate F_j(const QuadraticForm& form, const ShiftVector& a, double s, const SmoothingScheme& scheme, int j,
               const MonteCarloOptions& mc) {
  check_inputs(form, a);
  require(std::isfinite(s), "s must be finite");
  require(j >= 2 && j % 2 == 0, "j must be even and >= 2");
  require(j <= scheme.k - 2, "j must be <= k - 2");
  return mc_multi(form, a.a, {s}, scheme, {j}, mc).est[0][0];
}

ExpansionReport expansion_residual(const QuadraticForm& form, const ShiftVector& a, const std::vector<double>& s_grid,
                                   const SmoothingScheme& scheme, int p, const MonteCarloOptions& mc,
                                   const ExpansionOptions& opt) {
  check_inputs(form, a);
  const int d = form.dim();
  auto hyp = [](bool ok, const std::string& msg) {
    if (!ok) fail(Reason::hypothesis_violation, msg);
  };
  hyp(d >= 9, "expansion needs d >= 9");
  hyp(p >= 2 && 2 * p < d, "expansion needs 2 <= p < d/2");
  hyp(scheme.r > 0 && scheme.r <= scheme.R, "expansion needs 0 < r <= R");
  hyp(opt.T >= 1, "expansion needs T >= 1");
  ExpansionReport rep;
  if (scheme.k < 2 * p + 2) {
    if (opt.strict) fail(Reason::hypothesis_violation, "expansion needs k >= 2p + 2");
    rep.flags.push_back("k < 2p + 2");
  }
  for (int j = 2; j < p; j += 2) {
    if (j > scheme.k - 2) fail(Reason::hypothesis_violation, "correction order j exceeds k - 2");
    rep.orders.push_back(j);
  }
  std::vector<double> F = F_mu_grid(form, a, s_grid, scheme, opt.budget);
  std::vector<int> orders = {0};
  orders.insert(orders.end(), rep.orders.begin(), rep.orders.end());
  McMulti m = mc_multi(form, a.a, s_grid, scheme, orders, mc);

  const double r = scheme.r, R = scheme.R, q = form.q();
  double a_norm = 0;
  for (double v : a.a) a_norm += v * v;
  a_norm = std::sqrt(a_norm);
  try {
    rep.gamma = gamma_estimate(form, r * r, opt.T, opt.gamma).gamma;
  } catch (const Error& e) {
    rep.flags.push_back(std::string("gamma unavailable, using 1: ") + e.what());
    rep.gamma = 1;
  }
  EnvelopeInputs in;
  in.r = r;
  in.d = d;
  in.q = q;
  in.T = opt.T;
  in.R = R;
  in.p = p;
  in.a_norm = a_norm;
  in.gamma = rep.gamma;
  in.eps = opt.eps;
  rep.envelope = error_envelope(EnvelopeKind::thm21, in);

  for (std::size_t k = 0; k < s_grid.size(); ++k) {
    ExpansionPoint pt;
    pt.s = s_grid[k];
    pt.F = F[k];
    pt.F0 = m.est[k][0];
    for (std::size_t o = 1; o < orders.size(); ++o) {
      pt.Fj.push_back(m.est[k][o]);
      int j = orders[o];
      double env = std::pow(R, j) / std::pow(r, 2 * j) * std::pow(1 + a_norm / r, j) * std::pow(q, j + d / 2.0);
      pt.fj_ratio.push_back(std::abs(m.est[k][o].mean) / env);
    }
    pt.lead = pt.F0;
    pt.lead.mean = F[k] - pt.F0.mean;
    pt.residual = m.combined[k];
    pt.residual.mean = F[k] - m.combined[k].mean;
    rep.fitted_constant = std::max(rep.fitted_constant, std::abs(pt.residual.mean) / rep.envelope);
    rep.points.push_back(std::move(pt));
  }
  return rep;
}

namespace {

// per coordinate (value, weight) lists of the diagonal form under mu
std::vector<std::vector<std::pair<double, double>>> fourier_lists(const QuadraticForm& form, const Vec& a,
                                                                  const SmoothingScheme& sc) {
  if (!form.is_diagonal()) fail(Reason::not_diagonal, "Fourier transform needs a diagonal form");
  const Vec q = form.diagonal();
  const int h = sc.lattice_half();
  std::vector<std::vector<std::pair<double, double>>> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    for (int m = -h; m <= h; ++m) {
      double w = sc.weight(m);
      if (w == 0) continue;
      double y = m - a[i];
      out[i].emplace_back(q[i] * y * y, w);
    }
  return out;
}

std::complex<double> hat(const std::vector<std::vector<std::pair<double, double>>>& lists, double t) {
  std::complex<double> v = 1;
  for (const auto& L : lists) {
    std::complex<double> c = 0;
    for (auto [val, w] : L) c += w * std::polar(1.0, t * val);
    v *= c;
  }
  return v;
}

}  // namespace

std::complex<double> F_hat(const QuadraticForm& form, const ShiftVector& a, double t, const SmoothingScheme& scheme) {
  check_inputs(form, a);
  return hat(fourier_lists(form, a.a, scheme), t);
}

FourierReport fourier_inversion_check(const QuadraticForm& form, const ShiftVector& a, double s,
                                      const SmoothingScheme& scheme, double T, std::size_t t_nodes) {
  check_inputs(form, a);
  require(T > 0 && std::isfinite(T), "T must be positive");
  require(std::isfinite(s), "s must be finite");
  auto lists = fourier_lists(form, a.a, scheme);
  double qmin = 0, qmax = 0;
  for (const auto& L : lists) {
    double lo = L.front().first, hi = lo;
    for (auto [v, w] : L) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    qmin += lo;
    qmax += hi;
  }
  const double omega = std::max(std::abs(qmax - s), std::abs(qmin - s)) + 1;
  using GL = boost::math::quadrature::gauss<double, 16>;
  const std::size_t per_panel = 16;
  std::size_t panels = static_cast<std::size_t>(std::ceil(T * omega / (2 * M_PI)));
  panels = std::max<std::size_t>(panels, 4);
  FourierReport rep;
  rep.s = s;
  rep.T = T;
  if (t_nodes > 0) {
    panels = std::max<std::size_t>(1, (t_nodes + per_panel - 1) / per_panel);
    if (T / static_cast<double>(panels) > 4 * M_PI / omega) rep.flags.push_back("quadrature under-resolved");
  }
  auto integrate = [&](std::size_t P, double& inv, double& absint) {
    inv = absint = 0;
    const double h = T / static_cast<double>(P);
    const auto& xs = GL::abscissa();
    const auto& ws = GL::weights();
    for (std::size_t k = 0; k < P; ++k) {
      double mid = (k + 0.5) * h, half = h / 2;
      for (std::size_t i = 0; i < xs.size(); ++i)
        for (int sg : {-1, 1}) {
          double t = mid + sg * half * xs[i];
          auto f = hat(lists, t);
          auto rot = f * std::polar(1.0, -s * t);
          inv += half * ws[i] * rot.imag() / t;
          absint += half * ws[i] * std::abs(f);
        }
    }
  };
  double inv1, abs1, inv2, abs2;
  integrate(panels, inv1, abs1);
  integrate(2 * panels, inv2, abs2);
  rep.nodes = 3 * panels * per_panel;
  rep.reconstructed = 0.5 - inv2 / M_PI;
  rep.quadrature_tolerance = std::abs(inv1 - inv2) / M_PI + 1e-12;
  rep.remainder_bound = 2 * abs2 / T;
  rep.exact = F_mu(form, a, s, scheme);
  rep.error = std::abs(rep.reconstructed - rep.exact);
  rep.within = rep.error <= rep.remainder_bound + rep.quadrature_tolerance;
  if (rep.quadrature_tolerance > 1e-8) rep.flags.push_back("quadrature tolerance above 1e-8");
  return rep;
}

}  // namespace qfl
