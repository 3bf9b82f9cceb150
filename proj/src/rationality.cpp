#include "qflab/rationality.hpp"

#include <fftw3.h>
#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "qflab/trig.hpp"
#include "qflab/weights.hpp"

namespace qfl {

namespace {

using IVec = std::vector<long long>;
using LMat = std::vector<std::vector<long double>>;

[[noreturn]] void broken(const std::string& what) { throw std::logic_error("internal check failed: " + what); }

// columns of the map y -> (P (tQx - m), x / P)
LMat norm_basis(const Eigen::MatrixXd& Q, double t, double P) {
  const int d = static_cast<int>(Q.rows()), n = 2 * d;
  LMat B(n, std::vector<long double>(n, 0));
  for (int k = 0; k < d; ++k) {
    for (int j = 0; j < d; ++j) B[k][j] = static_cast<long double>(P) * t * Q(j, k);
    B[k][d + k] = 1.0L / P;
  }
  for (int j = 0; j < d; ++j) B[d + j][j] = -static_cast<long double>(P);
  return B;
}

long double dot(const std::vector<long double>& a, const std::vector<long double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// LLL on the columns of B (stored as rows here), tracking the integer
// coordinates of every vector.
void lll(LMat& B, std::vector<IVec>& Y, long double delta) {
  const int n = static_cast<int>(B.size());
  LMat Bs(n), mu(n, std::vector<long double>(n, 0));
  std::vector<long double> nrm(n);
  auto gso = [&] {
    for (int i = 0; i < n; ++i) {
      Bs[i] = B[i];
      for (int j = 0; j < i; ++j) {
        mu[i][j] = nrm[j] > 0 ? dot(B[i], Bs[j]) / nrm[j] : 0;
        for (int c = 0; c < n; ++c) Bs[i][c] -= mu[i][j] * Bs[j][c];
      }
      nrm[i] = dot(Bs[i], Bs[i]);
    }
  };
  gso();
  int k = 1, guard = 0;
  while (k < n) {
    if (++guard > 1000000) broken("lattice reduction does not terminate");
    for (int j = k - 1; j >= 0; --j) {
      long double c = std::nearbyint(mu[k][j]);
      if (c == 0) continue;
      const long long ci = static_cast<long long>(c);
      for (int e = 0; e < n; ++e) {
        B[k][e] -= c * B[j][e];
        Y[k][e] -= ci * Y[j][e];
      }
      gso();
    }
    if (nrm[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * nrm[k - 1]) {
      ++k;
    } else {
      std::swap(B[k], B[k - 1]);
      std::swap(Y[k], Y[k - 1]);
      gso();
      k = std::max(k - 1, 1);
    }
  }
}

// Integer basis of the orthogonal complement of the rows of S.
std::vector<IVec> complement(const std::vector<IVec>& S, int n) {
  std::vector<std::vector<mpq_class>> M;
  for (const auto& s : S) {
    std::vector<mpq_class> row(n);
    for (int i = 0; i < n; ++i) row[i] = static_cast<long>(s[i]);
    M.push_back(std::move(row));
  }
  std::vector<int> pivot_col;
  int row = 0;
  for (int c = 0; c < n && row < static_cast<int>(M.size()); ++c) {
    int p = -1;
    for (int i = row; i < static_cast<int>(M.size()); ++i)
      if (M[i][c] != 0) {
        p = i;
        break;
      }
    if (p < 0) continue;
    std::swap(M[p], M[row]);
    mpq_class inv = 1 / M[row][c];
    for (auto& v : M[row]) v *= inv;
    for (int i = 0; i < static_cast<int>(M.size()); ++i) {
      if (i == row || M[i][c] == 0) continue;
      mpq_class f = M[i][c];
      for (int e = 0; e < n; ++e) M[i][e] -= f * M[row][e];
    }
    pivot_col.push_back(c);
    ++row;
  }
  std::vector<IVec> out;
  for (int f = 0; f < n; ++f) {
    if (std::find(pivot_col.begin(), pivot_col.end(), f) != pivot_col.end()) continue;
    std::vector<mpq_class> w(n);
    w[f] = 1;
    for (std::size_t i = 0; i < pivot_col.size(); ++i) w[pivot_col[i]] = -M[i][f];
    mpz_class l = 1;
    for (const auto& v : w) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), v.get_den_mpz_t());
    IVec iw(n);
    for (int i = 0; i < n; ++i) {
      mpq_class s = w[i] * l;
      iw[i] = s.get_num().get_si();
    }
    out.push_back(std::move(iw));
  }
  return out;
}

bool in_span(const std::vector<IVec>& W, const IVec& y) {
  for (const auto& w : W) {
    __int128 s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<__int128>(w[i]) * y[i];
    if (s != 0) return false;
  }
  return true;
}

void check_minima(const MinimaResult& res) {
  if (res.minima.empty() || res.minima.front() < (1 - 1e-9) / res.P) broken("M_1 >= 1/P");
  for (std::size_t i = 1; i < res.minima.size(); ++i)
    if (res.minima[i] < res.minima[i - 1]) broken("minima nondecreasing");
}

struct Candidate {
  double F;
  IVec y;
};

void exact_minima(const QuadraticForm& form, double t, MinimaResult& res, std::uint64_t budget) {
  const int d = form.dim(), n = 2 * d;
  const double P = res.P;
  const auto& Q = form.matrix();
  const double rho_max = res.minima.back() * (1 + 1e-12);
  std::vector<IVec> chosen;
  std::vector<double> vals;
  std::vector<IVec> W = complement({}, n);
  double prev = 0, rho = res.minima.front() * (1 + 1e-12);
  std::uint64_t visited = 0;
  while (static_cast<int>(chosen.size()) < n) {
    rho = std::min(rho, rho_max);
    std::vector<Candidate> band;
    const long long X = static_cast<long long>(std::floor(rho * P));
    IVec x(d, -X), mlo(d), mhi(d);
    bool done = false;
    while (!done) {
      // canonical sign: first nonzero coordinate of (x, m) positive
      int first = -1;
      for (int i = 0; i < d; ++i)
        if (x[i] != 0) {
          first = i;
          break;
        }
      if (first < 0 || x[first] > 0) {
        std::uint64_t combos = 1;
        std::vector<long double> z(d);
        for (int j = 0; j < d; ++j) {
          long double s = 0;
          for (int k = 0; k < d; ++k) s += static_cast<long double>(t) * Q(j, k) * x[k];
          z[j] = s;
          mlo[j] = static_cast<long long>(std::ceil(s - rho / P));
          mhi[j] = static_cast<long long>(std::floor(s + rho / P));
          if (mhi[j] < mlo[j]) combos = 0;
          else combos *= static_cast<std::uint64_t>(mhi[j] - mlo[j] + 1);
        }
        visited += std::max<std::uint64_t>(combos, 1);
        if (visited > budget) throw BudgetExceeded("exact successive minima", visited);
        if (combos > 0) {
          IVec m(mlo);
          while (true) {
            IVec y(n);
            for (int i = 0; i < d; ++i) {
              y[i] = x[i];
              y[d + i] = m[i];
            }
            bool nonzero = first >= 0;
            if (!nonzero) {
              int fm = -1;
              for (int i = 0; i < d; ++i)
                if (m[i] != 0) {
                  fm = i;
                  break;
                }
              nonzero = fm >= 0 && m[fm] > 0;
            }
            if (nonzero) {
              double F = minima_norm(form, t, P, y);
              if (F <= rho && F > prev && !in_span(W, y)) band.push_back({F, std::move(y)});
            }
            int c = 0;
            while (c < d && ++m[c] > mhi[c]) {
              m[c] = mlo[c];
              ++c;
            }
            if (c == d) break;
          }
        }
      }
      int c = 0;
      while (c < d && ++x[c] > X) {
        x[c] = -X;
        ++c;
      }
      done = c == d;
    }
    std::stable_sort(band.begin(), band.end(), [](const Candidate& a, const Candidate& b) { return a.F < b.F; });
    for (auto& c : band) {
      if (static_cast<int>(chosen.size()) == n) break;
      if (in_span(W, c.y)) continue;
      chosen.push_back(c.y);
      vals.push_back(c.F);
      W = complement(chosen, n);
    }
    if (rho >= rho_max && static_cast<int>(chosen.size()) < n) broken("enumeration radius covers 2d minima");
    prev = rho;
    rho *= 2;
  }
  res.minima = vals;
  res.vectors = chosen;
  res.quality = 1;
  res.visited = visited;
  res.mode = MinimaMode::exact;
}

}  // namespace

double minima_norm(const QuadraticForm& form, double t, double P, const std::vector<long long>& y) {
  const int d = form.dim();
  require(static_cast<int>(y.size()) == 2 * d, "vector must have 2d coordinates");
  const auto& Q = form.matrix();
  long double F = 0;
  for (int j = 0; j < d; ++j) {
    long double s = 0;
    for (int k = 0; k < d; ++k) s += static_cast<long double>(t) * Q(j, k) * y[k];
    F = std::max(F, P * std::abs(s - y[d + j]));
    F = std::max(F, std::abs(static_cast<long double>(y[j])) / P);
  }
  return static_cast<double>(F);
}

MinimaResult successive_minima(const QuadraticForm& form, double t, double r, MinimaMode mode,
                               std::uint64_t budget) {
  require(t != 0, "successive minima need t != 0");
  require(r >= 1, "successive minima need r >= 1");
  const int d = form.dim(), n = 2 * d;
  if (mode == MinimaMode::exact && n > 8) fail(Reason::invalid_argument, "exact successive minima only for 2d <= 8");
  MinimaResult res;
  res.P = 4 * r;
  LMat B = norm_basis(form.matrix(), t, res.P);
  std::vector<IVec> Y(n, IVec(n, 0));
  for (int i = 0; i < n; ++i) Y[i][i] = 1;
  lll(B, Y, 0.99L);
  std::vector<std::size_t> order(n);
  std::vector<double> F(n);
  for (int i = 0; i < n; ++i) {
    order[i] = i;
    F[i] = minima_norm(form, t, res.P, Y[i]);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return F[a] < F[b]; });
  for (auto i : order) {
    res.minima.push_back(F[i]);
    res.vectors.push_back(Y[i]);
  }
  res.quality = std::pow(2.0, (n - 1) / 2.0) * std::sqrt(static_cast<double>(n));
  if (mode == MinimaMode::exact) exact_minima(form, t, res, budget);
  check_minima(res);
  return res;
}

std::uint64_t count_H(const QuadraticForm& form, double t, double r, std::uint64_t budget) {
  require(r > 0, "count_H needs r > 0");
  const int d = form.dim();
  const long long X = static_cast<long long>(std::floor(4 * r));
  long double total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<long double>(2 * X + 1);
  if (total > static_cast<long double>(budget))
    throw BudgetExceeded("count_H box", 0, static_cast<std::uint64_t>(std::min(total, 1.8e19L)));
  const auto& Q = form.matrix();
  const long double lim = 1.0L / (4 * r);
  IVec x(d, -X);
  std::uint64_t count = 0;
  while (true) {
    bool ok = true;
    for (int j = 0; j < d && ok; ++j) {
      long double z = 0;
      for (int k = 0; k < d; ++k) z += static_cast<long double>(t) * Q(j, k) * x[k];
      ok = std::abs(z - std::nearbyint(z)) < lim;
    }
    count += ok;
    int c = 0;
    while (c < d && ++x[c] > X) {
      x[c] = -X;
      ++c;
    }
    if (c == d) break;
  }
  return count;
}

const char* verdict_name(ProbeVerdict v) {
  switch (v) {
    case ProbeVerdict::irrational_consistent: return "irrational-consistent";
    case ProbeVerdict::rational_consistent: return "rational-consistent";
    default: return "inconclusive";
  }
}

namespace {

std::mutex fftw_planner;

// G(tau) = sum_x mt(x) DS(n, 2 tau x)^k sampled at tau = i pi / N, i < N.
// G is a trigonometric polynomial in 2 tau of degree L = 4 n^2 k, so the
// samples come exactly from one FFT of its coefficients.
std::vector<double> factor_table(int n, int k, double resolution, std::size_t& N) {
  const int L = 4 * n * n * k;
  std::size_t want = static_cast<std::size_t>(std::ceil(resolution * (2.0 * L + 1)));
  N = 64;
  while (N < want) N *= 2;
  // DS(n, z) = sum_{|j| <= 2n} (2n + 1 - |j|)/(2n + 1)^2 e^{ijz}, raised to k
  std::vector<double> a = {1.0};
  const double den = (2.0 * n + 1) * (2.0 * n + 1);
  for (int it = 0; it < k; ++it) {
    std::vector<double> next(a.size() + 4 * n, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (int j = -2 * n; j <= 2 * n; ++j) next[i + j + 2 * n] += a[i] * (2 * n + 1 - std::abs(j)) / den;
    a = std::move(next);
  }
  const int J = 2 * n * k;  // a[j + J]
  auto mt = convolve_weights(n, 2);
  fftw_complex* buf = fftw_alloc_complex(N);
  for (std::size_t i = 0; i < N; ++i) buf[i][0] = buf[i][1] = 0;
  for (int x = -2 * n; x <= 2 * n; ++x) {
    const double w = mt(x);
    if (w == 0) continue;
    for (int j = -J; j <= J; ++j) {
      long long l = static_cast<long long>(j) * x;
      std::size_t idx = static_cast<std::size_t>(((l % static_cast<long long>(N)) + N) % N);
      buf[idx][0] += w * a[j + J];
    }
  }
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner);
    plan = fftw_plan_dft_1d(static_cast<int>(N), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::vector<double> G(N + 1);
  for (std::size_t i = 0; i < N; ++i) G[i] = buf[i][0];
  G[N] = G[0];
  {
    std::lock_guard<std::mutex> lock(fftw_planner);
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return G;
}

double table_at(const std::vector<double>& G, std::size_t N, double tau) {
  double u = std::fmod(std::abs(tau), std::numbers::pi) / std::numbers::pi * N;
  std::size_t i = std::min(static_cast<std::size_t>(u), N - 1);
  double f = u - i;
  return G[i] * (1 - f) + G[i + 1] * f;
}

double golden_max(const std::function<double(double)>& f, double a, double b, double& arg) {
  const double g = (std::sqrt(5.0) - 1) / 2;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 60 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  if (fc >= fd) {
    arg = c;
    return fc;
  }
  arg = d;
  return fd;
}

}  // namespace

ProbePoint phi_sym_sup(const QuadraticForm& form, double lo, double hi, double r, const ProbeOptions& opt) {
  require(lo <= hi, "empty t window");
  require(r >= 1 && opt.k >= 1 && opt.t_resolution > 0, "need r >= 1, k >= 1, t_resolution > 0");
  const int d = form.dim();
  const int n = static_cast<int>(std::floor(r));
  auto direct = [&](double t) { return phi_symmetrized(form, t, r, opt.k, opt.budget); };

  std::vector<double> ts, vals;
  double h;
  if (form.is_diagonal()) {
    std::size_t N = 0;
    auto G = factor_table(n, opt.k, opt.t_resolution, N);
    Vec q = form.diagonal();
    double qmax = 0;
    for (double v : q) qmax = std::max(qmax, std::abs(v));
    h = std::numbers::pi / (N * std::max(qmax, 1e-300));
    std::size_t M = static_cast<std::size_t>(std::ceil((hi - lo) / h)) + 1;
    h = M > 1 ? (hi - lo) / (M - 1) : 0;
    ts.resize(M);
    vals.resize(M);
    for (std::size_t i = 0; i < M; ++i) {
      double t = lo + h * i, v = 1;
      for (int j = 0; j < d; ++j) v *= table_at(G, N, t * q[j]);
      ts[i] = t;
      vals[i] = v;
    }
  } else {
    const auto& A = form.matrix();
    double row = 0;
    for (int i = 0; i < d; ++i) row = std::max(row, A.row(i).cwiseAbs().sum());
    const double omega = 8.0 * n * n * opt.k * row;
    h = omega > 0 ? std::numbers::pi / (opt.t_resolution * omega) : hi - lo;
    std::size_t M = static_cast<std::size_t>(std::ceil((hi - lo) / std::max(h, 1e-300))) + 1;
    if (M > opt.budget) throw BudgetExceeded("probe grid", 0, M);
    h = M > 1 ? (hi - lo) / (M - 1) : 0;
    ts.resize(M);
    vals.resize(M);
    for (std::size_t i = 0; i < M; ++i) {
      ts[i] = lo + h * i;
      vals[i] = direct(ts[i]);
    }
  }

  // local maxima of the grid, best `refine` of them polished directly
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    bool left = i == 0 || vals[i] >= vals[i - 1];
    bool right = i + 1 == vals.size() || vals[i] >= vals[i + 1];
    if (left && right) peaks.push_back(i);
  }
  std::size_t keep = std::min<std::size_t>(peaks.size(), static_cast<std::size_t>(std::max(opt.refine, 1)));
  std::partial_sort(peaks.begin(), peaks.begin() + keep, peaks.end(),
                    [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
  ProbePoint out;
  out.r = r;
  out.grid = ts.size();
  for (double t : {lo, hi}) {
    double v = direct(t);
    if (v > out.sup) {
      out.sup = v;
      out.t_arg = t;
    }
  }
  for (std::size_t p = 0; p < keep; ++p) {
    double t0 = ts[peaks[p]];
    double a = std::max(lo, t0 - h), b = std::min(hi, t0 + h), arg = t0;
    double v = b > a ? golden_max(direct, a, b, arg) : direct(t0);
    double v0 = direct(t0);
    if (v0 > v) {
      v = v0;
      arg = t0;
    }
    if (v > out.sup) {
      out.sup = v;
      out.t_arg = arg;
    }
  }
  return out;
}

ProbeReport rationality_probe(const QuadraticForm& form, double delta0, double delta,
                              const std::vector<double>& r_schedule, const ProbeOptions& opt) {
  require(r_schedule.size() >= 3, "rationality probe needs at least 3 schedule entries");
  require(delta0 > 0 && delta0 <= delta, "need 0 < delta0 <= delta");
  for (std::size_t i = 1; i < r_schedule.size(); ++i)
    require(r_schedule[i] > r_schedule[i - 1], "r schedule must increase");
  ProbeReport rep;
  rep.curve.resize(r_schedule.size());
  const int W = std::max(1, opt.workers);
  run_workers(W, [&](int w) {
    for (std::size_t i = static_cast<std::size_t>(w); i < r_schedule.size(); i += static_cast<std::size_t>(W))
      rep.curve[i] = phi_sym_sup(form, delta0, delta, r_schedule[i], opt);
  });
  const double first = rep.curve.front().sup, last = rep.curve.back().sup;
  rep.decrease = last > 0 ? first / last : INFINITY;
  const double prev = rep.curve[rep.curve.size() - 2].sup;
  if (last >= 0.9 && prev >= 0.9) {
    rep.verdict = ProbeVerdict::rational_consistent;
    rep.detail = "sup stays >= 0.9 over the last two radii";
  } else if (rep.decrease >= 4 && last <= 0.1) {
    rep.verdict = ProbeVerdict::irrational_consistent;
    rep.detail = "sup falls by >= 4x and ends <= 0.1";
  } else {
    rep.detail = "neither threshold met";
  }
  return rep;
}

DirichletResult dirichlet_approx(const Vec& v, std::int64_t N) {
  require(N >= 1, "dirichlet_approx needs N >= 1");
  require(!v.empty(), "dirichlet_approx needs a nonempty vector");
  const long double root = std::pow(static_cast<long double>(N), 1.0L / v.size());
  for (std::int64_t q = 1; q <= N; ++q) {
    DirichletResult res;
    res.q = q;
    res.bound = static_cast<double>(1 / (q * root));
    long double worst = 0;
    for (double vs : v) {
      long double qv = static_cast<long double>(q) * vs;
      std::int64_t u = std::llround(qv);
      res.u.push_back(u);
      worst = std::max(worst, std::abs(static_cast<long double>(vs) - static_cast<long double>(u) / q));
    }
    if (worst < 1 / (q * root)) {
      res.max_error = static_cast<double>(worst);
      return res;
    }
  }
  broken("Dirichlet approximation within q <= N");
}

}  // namespace qfl
