#include "qflab/lattice.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>

namespace qfl {

const char* method_name(CountMethod m) {
  switch (m) {
    case CountMethod::automatic: return "automatic";
    case CountMethod::enumeration: return "enumeration";
    case CountMethod::diagonal_dp: return "diagonal-dp";
    case CountMethod::diagonal_dp_approx: return "diagonal-dp-approx";
  }
  return "?";
}

namespace {

using LD = long double;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Q[y] = sum_i D[i] (y_i + sum_{j>i} L[j][i] y_j)^2 over a permuted
// coordinate order; level d-1 is enumerated first and carries the largest
// available pivot.
struct Decomposition {
  int d = 0;
  std::vector<int> perm;  // level -> original coordinate
  std::vector<LD> D;
  std::vector<std::vector<LD>> L;  // L[j][i], j > i
};

Decomposition decompose(const Eigen::MatrixXd& A) {
  const int d = static_cast<int>(A.rows());
  Decomposition dec;
  dec.d = d;
  dec.perm.assign(d, -1);
  std::vector<int> remaining(d);
  std::iota(remaining.begin(), remaining.end(), 0);
  for (int level = d - 1; level >= 0; --level) {
    const int n = static_cast<int>(remaining.size());
    Eigen::MatrixXd sub(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) sub(i, j) = A(remaining[i], remaining[j]);
    Eigen::MatrixXd inv = sub.inverse();
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (inv(i, i) < inv(best, best)) best = i;
    dec.perm[level] = remaining[best];
    remaining.erase(remaining.begin() + best);
  }
  std::vector<std::vector<LD>> B(d, std::vector<LD>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) B[i][j] = A(dec.perm[i], dec.perm[j]);
  dec.D.assign(d, 0);
  dec.L.assign(d, std::vector<LD>(d, 0));
  for (int j = 0; j < d; ++j) {
    LD dj = B[j][j];
    for (int k = 0; k < j; ++k) dj -= dec.L[j][k] * dec.L[j][k] * dec.D[k];
    if (!(dj > 0)) fail(Reason::not_elliptic, "not elliptic: form is not positive definite");
    dec.D[j] = dj;
    dec.L[j][j] = 1;
    for (int i = j + 1; i < d; ++i) {
      LD v = B[i][j];
      for (int k = 0; k < j; ++k) v -= dec.L[i][k] * dec.L[j][k] * dec.D[k];
      dec.L[i][j] = v / dj;
    }
  }
  return dec;
}

struct Walker {
  const Decomposition& dec;
  std::vector<LD> a;  // shift in level order
  std::vector<LD> bounds;  // sorted thresholds with slack
  std::vector<Count>* counts;
  std::vector<LD> y;
  std::uint64_t visited = 0;
  std::uint64_t flush_every = 1 << 14;
  std::uint64_t pending = 0;
  std::atomic<std::uint64_t>* global;
  std::uint64_t budget;

  void tick() {
    ++visited;
    if (++pending >= flush_every) flush();
  }
  void flush() {
    std::uint64_t total = global->fetch_add(pending) + pending;
    pending = 0;
    if (total > budget) throw BudgetExceeded("budget exceeded: visited " + std::to_string(total), total);
  }

  LD center(int level) const {
    LD c = 0;
    for (int j = level + 1; j < dec.d; ++j) c -= dec.L[j][level] * y[j];
    return c;
  }

  void innermost(LD partial) {
    const LD c = center(0) + a[0];
    const LD D0 = dec.D[0];
    for (std::size_t k = bounds.size(); k-- > 0;) {
      LD rem = bounds[k] - partial;
      if (rem < 0) break;  // smaller thresholds are also exceeded
      LD w = std::sqrt(rem / D0);
      long long lo = static_cast<long long>(std::ceil(c - w));
      long long hi = static_cast<long long>(std::floor(c + w));
      if (hi >= lo) (*counts)[k] += static_cast<Count>(hi - lo + 1);
    }
    tick();
  }

  void level(int i, LD partial) {
    if (i == 0) {
      innermost(partial);
      return;
    }
    const LD c = center(i);
    const LD rem = bounds.back() - partial;
    if (rem < 0) return;
    const LD w = std::sqrt(rem / dec.D[i]);
    long long lo = static_cast<long long>(std::ceil(a[i] + c - w));
    long long hi = static_cast<long long>(std::floor(a[i] + c + w));
    for (long long x = lo; x <= hi; ++x) {
      y[i] = static_cast<LD>(x) - a[i];
      LD z = y[i] - c;
      tick();
      level(i - 1, partial + dec.D[i] * z * z);
    }
  }
};

std::vector<Count> enumerate_counts(const QuadraticForm& form, const Vec& a_red, const std::vector<double>& sorted_s,
                                    const CountOptions& opt, std::uint64_t& visited_out) {
  Decomposition dec = decompose(form.matrix());
  const int d = dec.d;
  std::vector<LD> a(d);
  for (int i = 0; i < d; ++i) a[i] = a_red[dec.perm[i]];
  std::vector<LD> bounds;
  for (double s : sorted_s) bounds.push_back(static_cast<LD>(s) + boundary_slack(s));

  // Outermost level values are split round-robin over workers.
  const int top = d - 1;
  const LD w_top = std::sqrt(bounds.back() / dec.D[top]);
  long long lo = static_cast<long long>(std::ceil(a[top] - w_top));
  long long hi = static_cast<long long>(std::floor(a[top] + w_top));
  int workers = std::max(1, opt.workers);
  std::vector<std::vector<Count>> per(workers, std::vector<Count>(bounds.size(), 0));
  std::atomic<std::uint64_t> global{0};
  std::vector<std::uint64_t> visited(workers, 0);
  run_workers(workers, [&](int w) {
    Walker wk{dec, a, bounds, &per[w], std::vector<LD>(d, 0), 0, 1 << 14, 0, &global, opt.budget};
    if (d == 1) {
      if (w == 0) wk.innermost(0);
    } else {
      for (long long x = lo + w; x <= hi; x += workers) {
        wk.y[top] = static_cast<LD>(x) - a[top];
        wk.tick();
        wk.level(top - 1, dec.D[top] * wk.y[top] * wk.y[top]);
      }
    }
    wk.flush();
    visited[w] = wk.visited;
  });
  std::vector<Count> out(bounds.size(), 0);
  for (auto& p : per)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += p[k];
  visited_out = std::accumulate(visited.begin(), visited.end(), std::uint64_t{0});
  return out;
}

// Exact DP path: integer value axis after scaling by L.
struct DpSetup {
  bool ok = false;
  mpz_class L;
  std::vector<std::vector<std::pair<long long, Count>>> atoms;  // per coordinate (scaled value, count)
};

bool dyadic(double v, int max_exp, long long& num, int& exp) {
  for (exp = 0; exp <= max_exp; ++exp) {
    double scaled = std::ldexp(v, exp);
    if (scaled == std::floor(scaled)) {
      num = static_cast<long long>(scaled);
      return true;
    }
  }
  return false;
}

DpSetup dp_setup(const QuadraticForm& form, const Vec& a_red, double s_max, std::size_t cap) {
  DpSetup st;
  if (!form.is_diagonal() || !form.exact_is_literal() || !form.is_positive()) return st;
  const int d = form.dim();
  std::vector<mpq_class> q(d), aq(d);
  for (int i = 0; i < d; ++i) {
    const ExactScalar& e = (*form.exact())(i, i);
    if (!e.is_rational()) return st;
    q[i] = e.rational_part();
    long long num;
    int ex;
    if (!dyadic(a_red[i], 10, num, ex)) return st;
    aq[i] = mpq_class(mpz_class(static_cast<long>(num)), mpz_class(1) << ex);
    aq[i].canonicalize();
  }
  mpz_class L = 1;
  for (int i = 0; i < d; ++i) {
    mpz_class den = q[i].get_den() * aq[i].get_den() * aq[i].get_den();
    L = lcm(L, den);
  }
  // value axis 0..floor(L*s_max)
  mpq_class top = mpq_class(L) * mpq_class(s_max);
  if (top > mpq_class(static_cast<double>(cap))) return st;
  long long V = static_cast<long long>(std::floor(L.get_d() * s_max + boundary_slack(L.get_d() * s_max)));
  st.atoms.resize(d);
  for (int i = 0; i < d; ++i) {
    double qi = q[i].get_d();
    double ai = aq[i].get_d();
    long long lo = static_cast<long long>(std::ceil(ai - std::sqrt(s_max / qi) - 1));
    long long hi = static_cast<long long>(std::floor(ai + std::sqrt(s_max / qi) + 1));
    std::vector<std::pair<long long, Count>> at;
    for (long long x = lo; x <= hi; ++x) {
      mpq_class y = mpq_class(static_cast<long>(x)) - aq[i];
      mpq_class v = mpq_class(L) * q[i] * y * y;
      v.canonicalize();
      if (v.get_den() != 1) return st;
      if (v > mpq_class(static_cast<long>(V))) continue;
      at.emplace_back(v.get_num().get_si(), 1);
    }
    std::sort(at.begin(), at.end());
    std::vector<std::pair<long long, Count>> merged;
    for (auto& p : at) {
      if (!merged.empty() && merged.back().first == p.first) merged.back().second += 1;
      else merged.push_back(p);
    }
    st.atoms[i] = std::move(merged);
  }
  st.L = L;
  st.ok = true;
  return st;
}

std::vector<Count> dp_counts(const DpSetup& st, const std::vector<double>& sorted_s, std::uint64_t budget,
                             std::uint64_t& visited) {
  double Ld = st.L.get_d();
  long long V = static_cast<long long>(std::floor(Ld * sorted_s.back() + boundary_slack(Ld * sorted_s.back())));
  std::vector<Count> cur(V + 1, 0), nxt(V + 1, 0);
  cur[0] = 1;
  visited = 0;
  for (const auto& at : st.atoms) {
    std::fill(nxt.begin(), nxt.end(), 0);
    for (long long v = 0; v <= V; ++v) {
      if (cur[v] == 0) continue;
      for (const auto& [val, c] : at) {
        if (v + val > V) break;
        nxt[v + val] += cur[v] * c;
      }
      visited += at.size();
      if (visited > budget) throw BudgetExceeded("budget exceeded in diagonal DP", visited);
    }
    std::swap(cur, nxt);
  }
  std::vector<Count> prefix(V + 1);
  Count run = 0;
  for (long long v = 0; v <= V; ++v) prefix[v] = (run += cur[v]);
  std::vector<Count> out;
  for (double s : sorted_s) {
    if (s < 0) {
      out.push_back(0);
      continue;
    }
    long long k = static_cast<long long>(std::floor(Ld * s + boundary_slack(Ld * s)));
    k = std::min(k, V);
    out.push_back(prefix[k]);
  }
  return out;
}

// Approximate DP for general diagonal forms: values binned on a grid of
// width q*s/2^20.
std::vector<Count> dp_counts_approx(const QuadraticForm& form, const Vec& a_red, const std::vector<double>& sorted_s,
                                    std::uint64_t budget, std::uint64_t& visited) {
  const int d = form.dim();
  const double s_max = sorted_s.back();
  const double h = form.q() * std::max(s_max, 1e-300) / 1048576.0;
  const long long V = static_cast<long long>(std::floor(s_max / h + 0.5));
  std::vector<Count> cur(V + 1, 0), nxt(V + 1, 0);
  cur[0] = 1;
  visited = 0;
  for (int i = 0; i < d; ++i) {
    double qi = form.entry(i, i);
    double ai = a_red[i];
    long long lo = static_cast<long long>(std::ceil(ai - std::sqrt(s_max / qi) - 1));
    long long hi = static_cast<long long>(std::floor(ai + std::sqrt(s_max / qi) + 1));
    std::vector<long long> at;
    for (long long x = lo; x <= hi; ++x) {
      double v = qi * (x - ai) * (x - ai);
      long long b = static_cast<long long>(std::llround(v / h));
      if (b <= V) at.push_back(b);
    }
    std::sort(at.begin(), at.end());
    std::fill(nxt.begin(), nxt.end(), 0);
    for (long long v = 0; v <= V; ++v) {
      if (cur[v] == 0) continue;
      for (long long b : at) {
        if (v + b > V) break;
        nxt[v + b] += cur[v];
      }
      visited += at.size();
      if (visited > budget) throw BudgetExceeded("budget exceeded in approximate DP", visited);
    }
    std::swap(cur, nxt);
  }
  std::vector<Count> out;
  Count run = 0;
  long long v = 0;
  for (double s : sorted_s) {
    long long k = std::min(V, static_cast<long long>(std::floor(s / h + 0.5)));
    for (; v <= k; ++v) run += cur[v];
    out.push_back(run);
  }
  return out;
}

constexpr std::size_t kDpCap = 4'000'000;

}  // namespace

bool diagonal_dp_applicable(const QuadraticForm& form, const ShiftVector& a, double s_max) {
  return dp_setup(form, a.reduced(), s_max, kDpCap).ok;
}

std::vector<CountResult> count_ellipsoid_multi(const QuadraticForm& form, const ShiftVector& a,
                                               const std::vector<double>& s, const CountOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  if (!form.is_positive()) fail(Reason::not_elliptic, "not elliptic: form is not positive definite");
  if (a.a.size() != static_cast<std::size_t>(form.dim())) fail(Reason::invalid_argument, "shift dimension mismatch");
  if (s.empty()) return {};
  for (double v : s)
    if (!(v >= 0) || !std::isfinite(v)) fail(Reason::invalid_argument, "s must be finite and >= 0");
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return s[i] < s[j]; });
  std::vector<double> sorted;
  for (auto i : order) sorted.push_back(s[i]);
  Vec a_red = a.reduced();

  CountMethod method = opt.method;
  DpSetup st;
  if (method == CountMethod::automatic || method == CountMethod::diagonal_dp) {
    st = dp_setup(form, a_red, sorted.back(), method == CountMethod::diagonal_dp ? kDpCap * 16 : kDpCap);
    if (st.ok) method = CountMethod::diagonal_dp;
    else if (method == CountMethod::diagonal_dp)
      fail(Reason::mode_mismatch, "diagonal DP requires an exact rational diagonal form with dyadic shift");
    else method = CountMethod::enumeration;
  }
  if (method == CountMethod::diagonal_dp_approx && !form.is_diagonal())
    fail(Reason::mode_mismatch, "approximate diagonal DP requires a diagonal form");

  std::uint64_t visited = 0;
  std::vector<Count> counts;
  if (method == CountMethod::diagonal_dp) counts = dp_counts(st, sorted, opt.budget, visited);
  else if (method == CountMethod::diagonal_dp_approx) counts = dp_counts_approx(form, a_red, sorted, opt.budget, visited);
  else counts = enumerate_counts(form, a_red, sorted, opt, visited);

  double wall = seconds_since(t0);
  std::vector<CountResult> out(s.size());
  for (std::size_t k = 0; k < order.size(); ++k) out[order[k]] = {counts[k], sorted[k], method, visited, wall};
  return out;
}

CountResult count_ellipsoid(const QuadraticForm& form, const ShiftVector& a, double s, const CountOptions& opt) {
  return count_ellipsoid_multi(form, a, {s}, opt)[0];
}

CountResult count_shell(const QuadraticForm& form, const ShiftVector& a, double tau, double delta,
                        const CountOptions& opt) {
  if (!(delta > 0)) fail(Reason::invalid_argument, "shell width must be positive");
  if (!(tau >= 0)) fail(Reason::invalid_argument, "tau must be >= 0");
  auto r = count_ellipsoid_multi(form, a, {tau, tau + delta}, opt);
  CountResult out = r[1];
  out.count = r[1].count - r[0].count;
  out.s = tau + delta;
  return out;
}

long double ValueSpectrum::max_gap() const {
  long double g = 0;
  for (std::size_t i = 1; i < values.size(); ++i) g = std::max(g, values[i].value - values[i - 1].value);
  return g;
}

long double ValueSpectrum::min_gap() const {
  if (values.size() < 2) return 0;
  long double g = values[1].value - values[0].value;
  for (std::size_t i = 1; i < values.size(); ++i) g = std::min(g, values[i].value - values[i - 1].value);
  return g;
}

Count ValueSpectrum::total_multiplicity() const {
  Count c = 0;
  for (const auto& v : values) c += v.multiplicity;
  return c;
}

std::vector<ValueEntry> coalesce_values(std::vector<ValueEntry> raw, long double abs_tol) {
  std::sort(raw.begin(), raw.end(), [](const ValueEntry& x, const ValueEntry& y) { return x.value < y.value; });
  std::vector<ValueEntry> out;
  for (const auto& v : raw) {
    if (!out.empty() && v.value - out.back().value <= abs_tol) out.back().multiplicity += v.multiplicity;
    else out.push_back(v);
  }
  return out;
}

ValueSpectrum enumerate_values(const QuadraticForm& form, const ShiftVector& a, double r, double alpha, double beta,
                               const EnumerateOptions& opt) {
  if (!(r >= 0)) fail(Reason::invalid_argument, "r must be >= 0");
  if (!(alpha < beta)) fail(Reason::invalid_argument, "window requires alpha < beta");
  const int d = form.dim();
  if (a.a.size() != static_cast<std::size_t>(d)) fail(Reason::invalid_argument, "shift dimension mismatch");
  const long long R = static_cast<long long>(std::floor(r));
  long double need = std::pow(static_cast<long double>(2 * R + 1), d);
  if (need > static_cast<long double>(opt.budget)) {
    std::uint64_t req = need > 1.8e19L ? std::numeric_limits<std::uint64_t>::max() : static_cast<std::uint64_t>(need);
    throw BudgetExceeded("budget exceeded: box needs " + std::to_string(static_cast<double>(need)) + " points", 0, req);
  }
  ValueSpectrum vs;
  vs.r = r;
  vs.alpha = alpha;
  vs.beta = beta;
  vs.a = a.a;
  const double tol_rel = opt.merge_tol < 0 ? 1e-9 : opt.merge_tol;
  const long double tol = tol_rel * std::max({1.0, std::abs(alpha), std::abs(beta)});

  const Eigen::MatrixXd& A = form.matrix();
  std::vector<long long> x(d, -R);
  std::vector<ValueEntry> raw;
  std::vector<LD> y(d);
  std::uint64_t visited = 0;
  while (true) {
    // Q as a quadratic in y0 given y1..y_{d-1}
    LD c = 0, b = 0;
    for (int i = 1; i < d; ++i) {
      y[i] = static_cast<LD>(x[i]) - a.a[i];
      b += A(0, i) * y[i];
    }
    for (int i = 1; i < d; ++i)
      for (int j = 1; j < d; ++j) c += A(i, j) * y[i] * y[j];
    for (long long x0 = -R; x0 <= R; ++x0) {
      LD y0 = static_cast<LD>(x0) - a.a[0];
      LD v = A(0, 0) * y0 * y0 + 2 * b * y0 + c;
      if (v > alpha && v <= beta) raw.push_back({v, 1});
    }
    visited += 2 * R + 1;
    int i = 1;
    while (i < d && x[i] == R) x[i++] = -R;
    if (i >= d) break;
    ++x[i];
  }
  vs.values = coalesce_values(std::move(raw), tol);
  vs.visited = visited;
  return vs;
}

}  // namespace qfl
