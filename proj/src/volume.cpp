#include "qflab/volume.hpp"

#include <cmath>
#include <numbers>

namespace qfl {

MinkowskiFunctional MinkowskiFunctional::sup_norm() { return {}; }

MinkowskiFunctional MinkowskiFunctional::euclidean(int d) {
  MinkowskiFunctional m;
  m.kind_ = Kind::euclidean;
  m.m_ = std::sqrt(static_cast<double>(d));
  m.name_ = "euclidean";
  return m;
}

MinkowskiFunctional MinkowskiFunctional::weighted_sup(Vec weights) {
  MinkowskiFunctional m;
  m.kind_ = Kind::weighted_sup;
  m.m_ = 1.0;
  for (double w : weights) {
    if (!(w >= 1.0)) fail(Reason::invalid_argument, "weighted sup-norm needs weights >= 1");
    m.m_ = std::max(m.m_, w);
  }
  m.weights_ = std::move(weights);
  m.name_ = "weighted-sup";
  return m;
}

MinkowskiFunctional MinkowskiFunctional::custom(std::function<double(const Vec&)> fn, double m, std::string name) {
  MinkowskiFunctional out;
  out.kind_ = Kind::custom;
  out.fn_ = std::move(fn);
  out.m_ = m;
  out.name_ = std::move(name);
  return out;
}

double MinkowskiFunctional::operator()(const Vec& x) const {
  switch (kind_) {
    case Kind::sup: {
      double v = 0;
      for (double c : x) v = std::max(v, std::abs(c));
      return v;
    }
    case Kind::euclidean: {
      double v = 0;
      for (double c : x) v += c * c;
      return std::sqrt(v);
    }
    case Kind::weighted_sup: {
      if (weights_.size() != x.size()) fail(Reason::invalid_argument, "weight dimension mismatch");
      double v = 0;
      for (std::size_t i = 0; i < x.size(); ++i) v = std::max(v, weights_[i] * std::abs(x[i]));
      return v;
    }
    case Kind::custom: return fn_(x);
  }
  return 0;
}

double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

static double sphere_area(int k) {  // area of S^{k-1} in R^k
  return 2.0 * std::pow(std::numbers::pi, k / 2.0) / std::tgamma(k / 2.0);
}

double ellipsoid_volume(const QuadraticForm& form, double s) {
  if (!form.is_positive()) fail(Reason::not_elliptic, "not elliptic: form is not positive definite");
  if (!(s >= 0)) fail(Reason::invalid_argument, "s must be >= 0");
  return std::pow(s, form.dim() / 2.0) * unit_ball_volume(form.dim()) / std::sqrt(form.det());
}

double delta_from_count(const QuadraticForm& form, Count count, double s) {
  double vol = ellipsoid_volume(form, s);
  return std::abs(to_double(count) - vol) / vol;
}

double delta_error(const QuadraticForm& form, const ShiftVector& a, double s, const CountOptions& opt) {
  if (!(s > 0)) fail(Reason::invalid_argument, "s must be > 0");
  return delta_from_count(form, count_ellipsoid(form, a, s, opt).count, s);
}

namespace {

struct Moments {
  double sum = 0, sum2 = 0;
  std::uint64_t n = 0;
};

McEstimate finish(const std::vector<Moments>& parts, double scale, std::uint64_t seed) {
  Moments t;
  for (const auto& p : parts) {
    t.sum += p.sum;
    t.sum2 += p.sum2;
    t.n += p.n;
  }
  McEstimate e;
  e.samples = t.n;
  e.seed = seed;
  if (t.n == 0) return e;
  double mean = t.sum / t.n;
  double var = std::max(0.0, t.sum2 / t.n - mean * mean);
  e.mean = scale * mean;
  e.std_error = scale * std::sqrt(var / t.n);
  return e;
}

std::uint64_t share(std::uint64_t total, int workers, int w) {
  std::uint64_t base = total / workers;
  return base + (static_cast<std::uint64_t>(w) < total % workers ? 1 : 0);
}

}  // namespace

McEstimate indefinite_volume_mc(const QuadraticForm& form, const ShiftVector& a, const MinkowskiFunctional& M,
                                double R, Interval I0, Interval I, std::uint64_t samples, std::uint64_t seed,
                                int workers) {
  if (!form.is_indefinite()) fail(Reason::not_indefinite, "not indefinite");
  if (samples < 1000) fail(Reason::invalid_argument, "at least 1000 samples required");
  if (!(R > 0)) fail(Reason::invalid_argument, "R must be positive");
  const int d = form.dim();
  if (a.a.size() != static_cast<std::size_t>(d)) fail(Reason::invalid_argument, "shift dimension mismatch");
  McEstimate zero;
  zero.samples = samples;
  zero.seed = seed;
  if (!(I0.hi > I0.lo) || !(I.hi > I.lo) || I0.hi <= 0) return zero;
  const double half = R * I0.hi;
  const double box = std::pow(2 * half, d);
  workers = std::max(1, workers);
  std::vector<Moments> parts(workers);
  run_workers(workers, [&](int w) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(w));
    std::uniform_real_distribution<double> u(-half, half);
    Vec x(d);
    Moments m;
    std::uint64_t n = share(samples, workers, w);
    for (std::uint64_t k = 0; k < n; ++k) {
      for (auto& c : x) c = u(rng);
      double g = M(x);
      double hit = 0;
      if (g >= R * I0.lo && g <= R * I0.hi) {
        double v = form.shifted(x, a.a);
        if (v >= I.lo && v <= I.hi) hit = 1;
      }
      m.sum += hit;
      m.sum2 += hit;
      ++m.n;
    }
    parts[w] = m;
  });
  return finish(parts, box, seed);
}

double rescaled_gauge(const QuadraticForm& form, const MinkowskiFunctional& M, const Vec& y) {
  const int d = form.dim();
  Vec x(d, 0.0);
  const auto& V = form.eigenvectors();
  const auto& q = form.eigenvalues();
  for (int j = 0; j < d; ++j) {
    double c = y[j] / std::sqrt(std::abs(q(j)));
    for (int i = 0; i < d; ++i) x[i] += V(i, j) * c;
  }
  return M(x);
}

McEstimate indefinite_limit_formula(const QuadraticForm& form, const MinkowskiFunctional& M, Interval I0,
                                    Interval I, std::uint64_t samples, std::uint64_t seed, int workers,
                                    int u_nodes) {
  if (!form.is_indefinite()) fail(Reason::not_indefinite, "not indefinite");
  const int d = form.dim();
  if (d < 3) fail(Reason::invalid_argument, "limit formula needs d >= 3");
  if (u_nodes < 2) fail(Reason::invalid_argument, "need at least 2 radial nodes");
  McEstimate zero;
  zero.samples = samples;
  zero.seed = seed;
  if (!(I0.hi > I0.lo) || !(I.hi > I.lo) || I0.hi <= 0) return zero;

  // orientation with n_pos <= d/2 (negating Q and I leaves beta - alpha alone)
  const auto& q = form.eigenvalues();
  int sign = 2 * form.signature().positive > d ? -1 : 1;
  std::vector<int> pos, neg;
  for (int j = 0; j < d; ++j) (sign * q(j) > 0 ? pos : neg).push_back(j);
  const int n = static_cast<int>(pos.size());

  const double umax = M.sandwich() * std::sqrt(d * form.q()) * I0.hi * 1.1;
  const double h = umax / (u_nodes - 1);
  std::vector<double> prefix(u_nodes + 1, 0.0);
  for (int i = 0; i < u_nodes; ++i) {
    double ui = i * h;
    double wi = (i == 0 || i == u_nodes - 1) ? h / 2 : h;
    prefix[i + 1] = prefix[i] + wi * std::pow(ui, d - 3);
  }
  const double scale = std::pow(std::abs(form.det()), -0.5) * I.length() / 2 * sphere_area(n) * sphere_area(d - n);

  workers = std::max(1, workers);
  std::vector<Moments> parts(workers);
  run_workers(workers, [&](int w) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(w) + 0x51ed);
    std::normal_distribution<double> g;
    Vec y(d);
    Moments m;
    std::uint64_t cnt = share(samples, workers, w);
    for (std::uint64_t k = 0; k < cnt; ++k) {
      double n1 = 0, n2 = 0;
      for (int j : pos) {
        y[j] = g(rng);
        n1 += y[j] * y[j];
      }
      for (int j : neg) {
        y[j] = g(rng);
        n2 += y[j] * y[j];
      }
      n1 = std::sqrt(n1);
      n2 = std::sqrt(n2);
      for (int j : pos) y[j] /= n1;
      for (int j : neg) y[j] /= n2;
      double m0 = rescaled_gauge(form, M, y);
      // nodes with u*m0 in I0
      long long lo = static_cast<long long>(std::ceil(I0.lo / m0 / h - 1e-12));
      long long hi = static_cast<long long>(std::floor(I0.hi / m0 / h + 1e-12));
      lo = std::max(lo, 0LL);
      hi = std::min(hi, static_cast<long long>(u_nodes - 1));
      double v = hi >= lo ? prefix[hi + 1] - prefix[lo] : 0.0;
      m.sum += v;
      m.sum2 += v * v;
      ++m.n;
    }
    parts[w] = m;
  });
  return finish(parts, scale, seed);
}

Lemma82Report check_lemma82(const QuadraticForm& form, const ShiftVector& a, const MinkowskiFunctional& M, double R,
                            double lambda, Interval I, std::uint64_t samples, std::uint64_t seed, int workers) {
  if (!(lambda >= 0)) fail(Reason::invalid_argument, "lambda must be >= 0");
  const int d = form.dim();
  Lemma82Report rep;
  // a0 = (sqrt|q_j| abar_j) with abar the eigen coordinates of a
  const auto& V = form.eigenvectors();
  const auto& q = form.eigenvalues();
  double a0 = 0;
  for (int j = 0; j < d; ++j) {
    double c = 0;
    for (int i = 0; i < d; ++i) c += V(i, j) * a.a[i];
    a0 += std::abs(q(j)) * c * c;
  }
  rep.a0_norm = std::sqrt(a0);
  const double m = M.sandwich();
  rep.tau = lambda + rep.a0_norm / R;
  rep.sigma = lambda / m - rep.a0_norm / R;
  rep.volume = indefinite_volume_mc(form, a, M, R, {0.0, lambda}, I, samples, seed, workers);
  const double qq = form.q();
  rep.upper = I.length() * std::pow(qq, (d - 2) / 2.0) * std::pow(rep.tau, d - 2) * std::pow(R, d - 2);
  rep.ratio_upper = rep.upper > 0 ? rep.volume.mean / rep.upper : 0.0;
  if (rep.sigma > 0 && std::abs(I.lo) + std::abs(I.hi) <= rep.sigma * rep.sigma * R * R / 5) {
    rep.lower_valid = true;
    rep.lower = I.length() * std::pow(qq, -d / 2.0) * std::pow(rep.sigma, d - 2) * std::pow(R, d - 2);
    rep.ratio_lower = rep.volume.mean / rep.lower;
  }
  return rep;
}

}  // namespace qfl
