#include "qflab/trig.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

namespace qfl {

namespace {

using cplx = std::complex<double>;
constexpr long double kTwoPi = 2.0L * std::numbers::pi_v<long double>;

inline cplx cis(long double phase) {
  double p = static_cast<double>(std::fmod(phase, kTwoPi));
  return {std::cos(p), std::sin(p)};
}

// FFTW's planner is not thread safe; executing plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int next_pow2(int v) {
  int n = 16;
  while (n < v) n *= 2;
  return n;
}

// Evaluates H(theta) = sum_{|m|<=h} c_m e^{-i m theta} for symmetric c
// (c_m = c_{-m}), by FFT on a grid and golden refinement at the peaks.
class ShiftScanner {
 public:
  ShiftScanner(const WeightTable& w, int oversample) : w_(w), h_(w.half_support()) {
    N_ = next_pow2(std::max(1, oversample) * (2 * h_ + 1));
    in_ = fftw_alloc_complex(N_);
    out_ = fftw_alloc_complex(N_);
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_ = fftw_plan_dft_1d(N_, in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
    std::fill(in_[0], in_[0] + 2 * N_, 0.0);
    c_.resize(h_ + 1);
  }
  ShiftScanner(const ShiftScanner&) = delete;
  ShiftScanner& operator=(const ShiftScanner&) = delete;
  ~ShiftScanner() {
    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }

  int half() const { return h_; }
  int size() const { return N_; }
  std::vector<cplx>& coeffs() { return c_; }

  // c_m = w(m) e^{i t q m^2}
  void set_exact(double q, long double t) {
    for (int m = 0; m <= h_; ++m) c_[m] = w_(m) * cis(t * q * static_cast<long double>(m) * m);
  }

  // max over the FFT grid of |H|^2
  double grid_max2() {
    load();
    fftw_execute(plan_);
    double best = 0;
    for (int k = 0; k <= N_ / 2; ++k) best = std::max(best, norm2(k));
    return best;
  }

  // sup over theta of |H|, with the maximizing theta
  std::pair<double, double> sup(int rounds) {
    load();
    fftw_execute(plan_);
    // local maxima over k in [0, N/2] (|X_k| is symmetric in k)
    std::vector<std::pair<double, int>> peaks;
    for (int k = 0; k <= N_ / 2; ++k) {
      double v = norm2(k);
      double l = norm2((k - 1 + N_) % N_), r = norm2((k + 1) % N_);
      if (v >= l && v >= r) peaks.emplace_back(v, k);
    }
    std::sort(peaks.begin(), peaks.end(), [](auto& x, auto& y) { return x.first > y.first || (x.first == y.first && x.second < y.second); });
    if (peaks.size() > 3) peaks.resize(3);
    double best = -1, best_theta = 0;
    const double step = 2 * std::numbers::pi / N_;
    for (auto [v, k] : peaks) {
      double th = k * step;
      double val = std::abs(eval(th));
      if (val > best) {
        best = val;
        best_theta = th;
      }
      if (rounds > 0) {
        auto [tv, tth] = golden(th - step, th + step, rounds);
        if (tv > best) {
          best = tv;
          best_theta = tth;
        }
      }
    }
    return {best, best_theta};
  }

  cplx eval(double theta) const {
    // Chebyshev recurrence for cos(m theta)
    double c1 = std::cos(theta);
    double cp = 1.0, cc = c1;
    cplx acc = c_[0];
    for (int m = 1; m <= h_; ++m) {
      acc += 2.0 * cc * c_[m];
      double nx = 2 * c1 * cc - cp;
      cp = cc;
      cc = nx;
    }
    return acc;
  }

 private:
  void load() {
    in_[0][0] = c_[0].real();
    in_[0][1] = c_[0].imag();
    for (int m = 1; m <= h_; ++m) {
      in_[m][0] = in_[N_ - m][0] = c_[m].real();
      in_[m][1] = in_[N_ - m][1] = c_[m].imag();
    }
  }
  double norm2(int k) const { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }

  std::pair<double, double> golden(double lo, double hi, int rounds) const {
    const double g = (std::sqrt(5.0) - 1) / 2;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = std::abs(eval(x1)), f2 = std::abs(eval(x2));
    for (int i = 0; i < rounds; ++i) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = std::abs(eval(x2));
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = std::abs(eval(x1));
      }
    }
    return f1 >= f2 ? std::pair{f1, x1} : std::pair{f2, x2};
  }

  const WeightTable& w_;
  int h_;
  int N_;
  fftw_complex* in_;
  fftw_complex* out_;
  fftw_plan plan_;
  std::vector<cplx> c_;
};

// a in [0, pi/(t q)) from theta = 2 t q a
double theta_to_shift(double theta, double q, double t) {
  double tq = t * q;
  if (tq == 0) return 0;
  double period = std::numbers::pi / std::abs(tq);
  double a = theta / (2 * tq);
  a = std::fmod(a, period);
  if (a < 0) a += period;
  return a;
}

// sum_m w(m) e^{i t (q (m - a)^2 + b m)}
cplx one_dim_sum(const WeightTable& w, double q, double t, double a, double b) {
  cplx acc = 0;
  const int h = w.half_support();
  for (int m = -h; m <= h; ++m) {
    long double y = static_cast<long double>(m) - a;
    acc += w(m) * cis(static_cast<long double>(t) * (q * y * y + static_cast<long double>(b) * m));
  }
  return acc;
}

std::uint64_t checked_pow(std::uint64_t base, int d, std::uint64_t budget, const char* what) {
  long double v = std::pow(static_cast<long double>(base), d);
  if (v > static_cast<long double>(budget))
    throw BudgetExceeded(std::string(what) + ": direct sum needs " + std::to_string(static_cast<double>(v)) +
                             " terms, over budget",
                         0, static_cast<std::uint64_t>(std::min(v, 1.8e19L)));
  return static_cast<std::uint64_t>(v);
}

// Odometer over [-h, h]^d calling fn(y).
template <class Fn>
void for_box(int d, int h, Fn&& fn) {
  std::vector<int> y(d, -h);
  while (true) {
    fn(y);
    int i = 0;
    while (i < d && y[i] == h) y[i++] = -h;
    if (i == d) return;
    ++y[i];
  }
}

void check_dims(const QuadraticForm& form, const Vec& a) {
  if (a.size() != static_cast<std::size_t>(form.dim())) fail(Reason::invalid_argument, "shift dimension mismatch");
}

}  // namespace

const char* mode_name(PhiMode m) {
  switch (m) {
    case PhiMode::factorized: return "factorized";
    case PhiMode::direct: return "direct";
    case PhiMode::monte_carlo: return "monte-carlo";
  }
  return "?";
}

int isqrt_floor(double s) {
  require(s >= 0 && std::isfinite(s), "s must be finite and >= 0");
  long long n = static_cast<long long>(std::floor(std::sqrt(s)));
  while (static_cast<double>(n + 1) * (n + 1) <= s) ++n;
  while (n > 0 && static_cast<double>(n) * n > s) --n;
  return static_cast<int>(n);
}

PhiValue phi(const QuadraticForm& form, const Vec& a, double t, double s, const PhiOptions& opt) {
  check_dims(form, a);
  const int d = form.dim();
  const int n = isqrt_floor(s);
  PhiValue out;
  switch (opt.mode) {
    case PhiMode::factorized: {
      if (!form.is_diagonal()) fail(Reason::mode_mismatch, "factorized mode needs a diagonal form");
      auto w3 = convolve_weights(n, 3);
      Vec q = form.diagonal();
      double v = 1;
      for (int j = 0; j < d; ++j) v *= std::abs(one_dim_sum(w3, q[j], t, a[j], 0));
      out.value = v;
      return out;
    }
    case PhiMode::direct: {
      checked_pow(6ULL * n + 1, d, opt.budget, "phi");
      auto w3 = convolve_weights(n, 3);
      const auto& A = form.matrix();
      std::complex<long double> acc = 0;
      Vec y(d);
      for_box(d, 3 * n, [&](const std::vector<int>& m) {
        double wt = 1;
        for (int j = 0; j < d; ++j) {
          wt *= w3(m[j]);
          y[j] = m[j] - a[j];
        }
        long double Q = 0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) Q += static_cast<long double>(A(i, j)) * y[i] * y[j];
        cplx z = cis(static_cast<long double>(t) * Q);
        acc += std::complex<long double>(wt * z.real(), wt * z.imag());
      });
      out.value = static_cast<double>(std::abs(acc));
      return out;
    }
    case PhiMode::monte_carlo: {
      if (opt.samples < 2) fail(Reason::invalid_argument, "mc mode needs samples >= 2");
      auto rng = make_rng(opt.seed, 0x7419);
      std::uniform_int_distribution<int> u(-n, n);
      Vec y(d);
      double sr = 0, si = 0, sr2 = 0, si2 = 0;
      for (std::uint64_t k = 0; k < opt.samples; ++k) {
        for (int j = 0; j < d; ++j) y[j] = static_cast<double>(u(rng) + u(rng) + u(rng));
        cplx z = cis(static_cast<long double>(t) * form.shifted_ld(y, a));
        sr += z.real();
        si += z.imag();
        sr2 += z.real() * z.real();
        si2 += z.imag() * z.imag();
      }
      const double N = static_cast<double>(opt.samples);
      double mr = sr / N, mi = si / N;
      double var = std::max(0.0, sr2 / N - mr * mr) + std::max(0.0, si2 / N - mi * mi);
      out.value = std::hypot(mr, mi);
      out.std_error = std::sqrt(var / (N - 1));
      return out;
    }
  }
  return out;
}

double f_sum(const QuadraticForm& form, const Vec& b, double t, double r, int k, std::uint64_t budget) {
  check_dims(form, b);
  require(r >= 0 && k >= 0, "need r >= 0 and k >= 0");
  const int d = form.dim();
  const int n = static_cast<int>(std::floor(r));
  auto w = convolve_weights(n, 2 * k + 1);
  if (form.is_diagonal()) {
    Vec q = form.diagonal();
    double v = 1;
    for (int j = 0; j < d; ++j) v *= std::abs(one_dim_sum(w, q[j], t, 0, b[j]));
    return v;
  }
  const int h = w.half_support();
  checked_pow(2ULL * h + 1, d, budget, "f_sum");
  const auto& A = form.matrix();
  std::complex<long double> acc = 0;
  for_box(d, h, [&](const std::vector<int>& m) {
    double wt = 1;
    long double P = 0;
    for (int i = 0; i < d; ++i) {
      wt *= w(m[i]);
      P += static_cast<long double>(b[i]) * m[i];
      for (int j = 0; j < d; ++j) P += static_cast<long double>(A(i, j)) * m[i] * m[j];
    }
    cplx z = cis(static_cast<long double>(t) * P);
    acc += std::complex<long double>(wt * z.real(), wt * z.imag());
  });
  return static_cast<double>(std::abs(acc));
}

double dirichlet_square(int n, double z) {
  long double zr = std::fmod(static_cast<long double>(z), kTwoPi);
  if (zr > std::numbers::pi_v<long double>) zr -= kTwoPi;
  if (zr < -std::numbers::pi_v<long double>) zr += kTwoPi;
  const long double N = 2.0L * n + 1;
  long double D;
  if (std::abs(zr) < 1e-7L) {
    D = 1 - static_cast<long double>(n) * (n + 1) * zr * zr / 6;
  } else {
    D = std::sin(N * zr / 2) / (N * std::sin(zr / 2));
  }
  return static_cast<double>(D * D);
}

double phi_symmetrized(const QuadraticForm& form, double t, double r, int k, std::uint64_t budget) {
  require(r >= 0 && k >= 1, "need r >= 0 and k >= 1");
  const int d = form.dim();
  const int n = static_cast<int>(std::floor(r));
  auto mt = convolve_weights(n, 2);  // autocorrelation of the box weight
  const int h = mt.half_support();
  if (form.is_diagonal()) {
    Vec q = form.diagonal();
    double v = 1;
    for (int j = 0; j < d; ++j) {
      double acc = 0;
      for (int x = -h; x <= h; ++x) acc += mt(x) * std::pow(dirichlet_square(n, 2 * t * q[j] * x), k);
      v *= acc;
    }
    return v;
  }
  checked_pow(2ULL * h + 1, d, budget, "phi_symmetrized");
  const auto& A = form.matrix();
  double acc = 0;
  for_box(d, h, [&](const std::vector<int>& x) {
    double wt = 1;
    for (int i = 0; i < d; ++i) wt *= mt(x[i]);
    double inner = 1;
    for (int i = 0; i < d; ++i) {
      double z = 0;
      for (int j = 0; j < d; ++j) z += A(i, j) * x[j];
      inner *= std::pow(dirichlet_square(n, 2 * t * z), k);
    }
    acc += wt * inner;
  });
  return acc;
}

namespace {

ShiftSup scanner_sup(ShiftScanner& sc, double q, double t, int rounds) {
  sc.set_exact(q, t);
  auto [v, th] = sc.sup(rounds);
  return {v, theta_to_shift(th, q, t)};
}

}  // namespace

ShiftSup coordinate_shift_sup(double q, double t, const WeightTable& w, int oversample, int rounds) {
  ShiftScanner sc(w, oversample);
  return scanner_sup(sc, q, t, rounds);
}

namespace {

struct Candidate {
  double value = -1;
  double t = 0;
  Vec a;
};

bool better(const Candidate& x, const Candidate& y) {
  return x.value > y.value || (x.value == y.value && x.t < y.t);
}

GammaResult gamma_diagonal(const QuadraticForm& form, double s, double T, const GammaOptions& opt) {
  const int d = form.dim();
  const int n = isqrt_floor(s);
  const Vec q = form.diagonal();
  const auto w3 = convolve_weights(n, 3);
  const double t0 = 1 / std::sqrt(s);
  double h = opt.t_step > 0 ? opt.t_step : std::min(1 / (4 * s), (T - t0) / 65536.0);
  if (!(h > 0)) h = 1 / (4 * s);
  const std::size_t G = static_cast<std::size_t>(std::floor((T - t0) / h + 1e-9)) + 1;

  GammaResult res;
  auto& prof = res.profile;
  prof.s = s;
  prof.T = T;
  prof.mode = PhiMode::factorized;
  prof.a_grid = "exact per-coordinate period reduction, FFT x" + std::to_string(opt.fft_oversample) + " + golden";
  prof.t.resize(G);
  prof.values.assign(G, 1.0);
  for (std::size_t i = 0; i < G; ++i) prof.t[i] = t0 + static_cast<double>(i) * h;

  const int workers = std::max(1, std::min<int>(opt.workers, static_cast<int>(G)));
  run_workers(workers, [&](int wk) {
    // chunks aligned to the resync blocks keep the result independent of workers
    const std::size_t blocks = (G + 255) / 256;
    std::size_t g0 = std::min(G, blocks * wk / workers * 256), g1 = std::min(G, blocks * (wk + 1) / workers * 256);
    if (g0 >= g1) return;
    ShiftScanner sc(w3, opt.fft_oversample);
    const int H = sc.half();
    std::vector<cplx> rot(H + 1);
    for (int j = 0; j < d; ++j) {
      for (int m = 0; m <= H; ++m) rot[m] = cis(static_cast<long double>(h) * q[j] * static_cast<long double>(m) * m);
      auto& c = sc.coeffs();
      for (std::size_t g = g0; g < g1; ++g) {
        if (g % 256 == 0) {
          sc.set_exact(q[j], static_cast<long double>(t0) + static_cast<long double>(g) * h);
        } else {
          for (int m = 0; m <= H; ++m) c[m] *= rot[m];
        }
        prof.values[g] *= std::sqrt(sc.grid_max2());
      }
    }
  });
  for (auto& v : prof.values) v = std::min(v, 1.0);

  Candidate best;
  for (std::size_t i = 0; i < G; ++i)
    if (prof.values[i] > best.value) best = {prof.values[i], prof.t[i], {}};

  auto eval = [&](ShiftScanner& sc, double t, Vec* a_out) {
    double v = 1;
    if (a_out) a_out->assign(d, 0.0);
    for (int j = 0; j < d; ++j) {
      auto r = scanner_sup(sc, q[j], t, 40);
      v *= r.value;
      if (a_out) (*a_out)[j] = r.a;
    }
    return std::min(v, 1.0);
  };

  if (opt.refine_rounds > 0 && opt.top > 0) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < G; ++i) {
      double l = i > 0 ? prof.values[i - 1] : -1, r = i + 1 < G ? prof.values[i + 1] : -1;
      if (prof.values[i] >= l && prof.values[i] >= r) idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
      return prof.values[x] > prof.values[y] || (prof.values[x] == prof.values[y] && x < y);
    });
    if (idx.size() > static_cast<std::size_t>(opt.top)) idx.resize(opt.top);
    std::vector<Candidate> refined(idx.size());
    run_workers(std::min<int>(std::max(1, opt.workers), static_cast<int>(idx.size())), [&](int wk) {
      for (std::size_t c = wk; c < idx.size(); c += std::max(1, std::min<int>(opt.workers, static_cast<int>(idx.size())))) {
        ShiftScanner sc(w3, opt.fft_oversample);
        double tc = prof.t[idx[c]];
        double lo = std::max(t0, tc - h), hi = std::min(T, tc + h);
        Candidate cand{eval(sc, tc, nullptr), tc, {}};
        const double gr = (std::sqrt(5.0) - 1) / 2;
        double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        double f1 = eval(sc, x1, nullptr), f2 = eval(sc, x2, nullptr);
        for (int it = 0; it < opt.refine_rounds; ++it) {
          if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = eval(sc, x2, nullptr);
          } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = eval(sc, x1, nullptr);
          }
        }
        Candidate g1{f1, x1, {}}, g2{f2, x2, {}};
        if (better(g1, cand)) cand = g1;
        if (better(g2, cand)) cand = g2;
        refined[c] = cand;
      }
    });
    for (const auto& c : refined)
      if (better(c, best)) best = c;
  }
  res.gamma = best.value;
  res.t_star = best.t;
  ShiftScanner sc(w3, opt.fft_oversample);
  eval(sc, best.t, &res.a_star);
  return res;
}

GammaResult gamma_general(const QuadraticForm& form, double s, double T, const GammaOptions& opt) {
  const int d = form.dim();
  const int n = isqrt_floor(s);
  PhiOptions po;
  po.budget = opt.budget;
  po.seed = opt.seed;
  long double terms = std::pow(static_cast<long double>(6 * n + 1), d);
  if (terms <= opt.budget) {
    po.mode = PhiMode::direct;
  } else if (opt.mc_samples > 0) {
    po.mode = PhiMode::monte_carlo;
    po.samples = opt.mc_samples;
  } else {
    fail(Reason::mode_mismatch, "non-diagonal form: direct sum over budget and no mc samples given");
  }
  const double t0 = 1 / std::sqrt(s);
  double h = opt.t_step > 0 ? opt.t_step : std::min(1 / (4 * s), (T - t0) / 65536.0);
  if (!(h > 0)) h = 1 / (4 * s);
  const std::size_t G = static_cast<std::size_t>(std::floor((T - t0) / h + 1e-9)) + 1;
  const int A = std::max(1, opt.a_grid);
  std::size_t na = 1;
  for (int j = 0; j < d; ++j) na *= A;

  GammaResult res;
  res.heuristic = true;
  auto& prof = res.profile;
  prof.s = s;
  prof.T = T;
  prof.mode = po.mode;
  prof.heuristic = true;
  prof.a_grid = "heuristic sup: " + std::to_string(A) + "^" + std::to_string(d) + " grid on [0,1)^d";
  prof.t.resize(G);
  prof.values.assign(G, 0.0);
  if (po.mode == PhiMode::monte_carlo) prof.std_error.assign(G, 0.0);
  std::vector<std::size_t> arg(G, 0);
  auto shift_of = [&](std::size_t code) {
    Vec a(d);
    for (int j = 0; j < d; ++j) {
      a[j] = static_cast<double>(code % A) / A;
      code /= A;
    }
    return a;
  };
  const int workers = std::max(1, std::min<int>(opt.workers, static_cast<int>(G)));
  run_workers(workers, [&](int wk) {
    for (std::size_t g = wk; g < G; g += workers) {
      double t = t0 + static_cast<double>(g) * h;
      prof.t[g] = t;
      for (std::size_t c = 0; c < na; ++c) {
        auto v = phi(form, shift_of(c), t, s, po);
        if (v.value > prof.values[g]) {
          prof.values[g] = v.value;
          arg[g] = c;
          if (!prof.std_error.empty()) prof.std_error[g] = v.std_error;
        }
      }
    }
  });
  std::size_t bi = 0;
  for (std::size_t g = 1; g < G; ++g)
    if (prof.values[g] > prof.values[bi]) bi = g;
  res.gamma = prof.values[bi];
  res.t_star = prof.t[bi];
  res.a_star = shift_of(arg[bi]);
  if (opt.refine_rounds > 0) {
    double lo = std::max(t0, res.t_star - h), hi = std::min(T, res.t_star + h);
    auto f = [&](double t) { return phi(form, res.a_star, t, s, po).value; };
    const double gr = (std::sqrt(5.0) - 1) / 2;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo), f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < opt.refine_rounds; ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = f(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = f(x1);
      }
    }
    if (f1 > res.gamma) {
      res.gamma = f1;
      res.t_star = x1;
    }
    if (f2 > res.gamma) {
      res.gamma = f2;
      res.t_star = x2;
    }
  }
  return res;
}

}  // namespace

GammaResult gamma_estimate(const QuadraticForm& form, double s, double T, const GammaOptions& opt) {
  require(s > 0, "s must be > 0");
  if (!(T >= 1 / std::sqrt(s))) fail(Reason::invalid_argument, "T must be >= s^{-1/2}");
  return form.is_diagonal() ? gamma_diagonal(form, s, T, opt) : gamma_general(form, s, T, opt);
}

double mm(double t, double s) {
  require(s > 0, "s must be > 0");
  if (t == 0) fail(Reason::invalid_argument, "M(t; s) is infinite at t = 0");
  double at = std::abs(t);
  return at <= 1 / std::sqrt(s) ? 1 / (at * s) : at;
}

double rho_of_s(double s, double Ts, double gamma, int d, double eps) {
  require(s > 0, "s must be > 0");
  require(d >= 9, "rho needs d >= 9");
  const double e = 1 - 8.0 / d;
  require(eps > 0 && eps < e, "eps must lie in (0, 1 - 8/d)");
  require(gamma >= 0 && gamma <= 1, "gamma must lie in [0, 1]");
  require(Ts >= 1, "T(s) must be >= 1");
  const double zeta = 0.5 * ((d - 1) / 2);
  double Tp = Ts;
  if (gamma > 0) Tp = std::min(Ts, std::pow(gamma, -(e - eps) / (2 * eps)));
  double third = gamma > 0 ? std::pow(gamma, e - eps) * std::pow(Tp, eps) : 0.0;
  return std::pow(s, 1 - zeta) + 1 / Tp + third;
}

BasicInequalityReport check_basic_inequality(const QuadraticForm& form, const std::optional<Vec>& a, double s,
                                             std::uint64_t samples, std::uint64_t seed, double t_range) {
  if (!form.is_diagonal()) fail(Reason::not_diagonal, "basic inequality check uses the factorized sum");
  require(s >= 1 && t_range > 1 / s, "need s >= 1 and t_range > 1/s");
  const int d = form.dim();
  if (a) check_dims(form, *a);
  const Vec q = form.diagonal();
  const auto w3 = convolve_weights(isqrt_floor(s), 3);
  ShiftScanner sc(w3, 4);
  auto value = [&](double t) {
    double v = 1;
    for (int j = 0; j < d; ++j) {
      if (a) v *= std::abs(one_dim_sum(w3, q[j], t, (*a)[j], 0));
      else v *= scanner_sup(sc, q[j], t, 30).value;
    }
    return std::min(v, 1.0);
  };
  const double qd = std::pow(form.q(), d / 2.0);
  auto rng = make_rng(seed, 0xb1);
  std::uniform_real_distribution<double> ut(-t_range, t_range), ul(std::log(1 / s), std::log(t_range));
  std::bernoulli_distribution sign;
  BasicInequalityReport rep;
  rep.samples = samples;
  for (std::uint64_t i = 0; i < samples; ++i) {
    double t = ut(rng);
    double tau = std::exp(ul(rng)) * (sign(rng) ? 1 : -1);
    double env = qd * std::pow(mm(tau, s), d / 2.0);
    double ft = value(t), ftt = value(t + tau), fta = value(tau);
    double pair = ft * ftt / env, single = fta / env;
    if (pair > rep.max_ratio_pair) {
      rep.max_ratio_pair = pair;
      rep.t_max_pair = t;
      rep.tau_max_pair = tau;
    }
    if (single > rep.max_ratio_single) {
      rep.max_ratio_single = single;
      rep.tau_max_single = tau;
    }
  }
  return rep;
}

Lemma64Report check_lemma64(int n, int k, const Vec& z, int truncation) {
  require(n >= 0 && k >= 1 && truncation >= 0, "need n >= 0, k >= 1, truncation >= 0");
  Lemma64Report rep;
  rep.lhs = 1;
  rep.rhs = 1;
  for (double zj : z) {
    rep.lhs *= std::pow(dirichlet_square(n, zj), k);
    double acc = 0;
    for (int m = -truncation; m <= truncation; ++m) {
      double u = zj - 2 * std::numbers::pi * m;
      acc += std::pow(1 + static_cast<double>(n) * n * u * u, -k);
    }
    rep.rhs *= acc;
  }
  rep.ratio = rep.lhs / rep.rhs;
  return rep;
}

}  // namespace qfl
