#include "qflab/gaps.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "qflab/lattice.hpp"

namespace qfl {

const char* gap_method_name(GapMethod m) { return m == GapMethod::value_dp ? "value-dp" : "enumeration"; }

namespace {

using LD = long double;

// Values of an exact diagonal form are integer combinations of sqrt(n_k)
// after scaling by L; the DP tracks which coefficient vectors occur.
struct ValueDp {
  bool ok = false;
  std::vector<long double> weight;          // sqrt(n_k)
  std::vector<std::vector<long>> coef;      // coef[i][k]
  long double unit = 1;                     // real value = sum e_k weight_k / unit
};

ValueDp value_dp_setup(const QuadraticForm& form, const ShiftVector& a) {
  ValueDp dp;
  if (!form.is_diagonal() || !form.is_positive() || !form.exact()) return dp;
  for (double r : a.reduced())
    if (r != 0) return dp;
  const auto& E = *form.exact();
  const int d = form.dim();
  std::map<std::uint64_t, int> basis{{1, 0}};
  for (int i = 0; i < d; ++i)
    for (const auto& [n, c] : E(i, i).surd_terms()) basis.emplace(n, 0);
  int idx = 0;
  for (auto& [n, k] : basis) {
    k = idx++;
    dp.weight.push_back(std::sqrt(static_cast<long double>(n)));
  }
  mpz_class L = 1;
  for (int i = 0; i < d; ++i)
    for (const auto& [n, k] : basis) {
      mpq_class c = E(i, i).coefficient(n);
      mpz_lcm(L.get_mpz_t(), L.get_mpz_t(), c.get_den_mpz_t());
    }
  dp.coef.assign(d, std::vector<long>(basis.size(), 0));
  for (int i = 0; i < d; ++i) {
    bool any = false;
    for (const auto& [n, k] : basis) {
      mpq_class c = E(i, i).coefficient(n) * L;
      if (c < 0 || !c.get_num().fits_slong_p()) return dp;
      dp.coef[i][k] = c.get_num().get_si();
      any = any || dp.coef[i][k] > 0;
    }
    if (!any) return dp;
  }
  dp.unit = static_cast<long double>(L.get_d()) * form.exact_scale();
  dp.ok = true;
  return dp;
}

// dst |= src << shift (bit offsets, word arrays of equal length)
void or_shifted(std::vector<std::uint64_t>& dst, const std::vector<std::uint64_t>& src, std::size_t shift) {
  const std::size_t q = shift / 64, r = shift % 64, n = src.size();
  if (q >= n) return;
  for (std::size_t i = n; i-- > q;) {
    std::uint64_t w = src[i - q] << r;
    if (r && i - q > 0) w |= src[i - q - 1] >> (64 - r);
    dst[i] |= w;
  }
}

// Values of Q[x] inside [lo, hi], one per reachable coefficient vector;
// false when the grid exceeds the budget.
bool dp_values(const ValueDp& dp, double radius, double lo, double hi, std::uint64_t budget,
               std::vector<long double>& out) {
  const int m = static_cast<int>(dp.weight.size());
  const int d = static_cast<int>(dp.coef.size());
  const long double V = static_cast<long double>(hi) * dp.unit * (1 + 1e-15L) + 1e-12L;
  std::vector<long> top(m);
  std::vector<std::size_t> size(m), stride(m);
  long double bits = 1;
  for (int k = 0; k < m; ++k) {
    top[k] = static_cast<long>(std::floor(V / dp.weight[k]));
    size[k] = 2 * static_cast<std::size_t>(top[k]) + 1;
    bits *= size[k];
  }
  if (bits > static_cast<long double>(budget)) return false;
  std::size_t total = 1;
  for (int k = 0; k < m; ++k) {
    stride[k] = total;
    total *= size[k];
  }
  const std::size_t words = (total + 63) / 64;
  // mask: sum e_k w_k <= V
  std::vector<std::uint64_t> mask(words, 0);
  {
    std::vector<long> e(m, 0);
    // odometer over the top dimensions, contiguous run in dimension 0
    while (true) {
      long double rest = 0;
      std::size_t base = 0;
      for (int k = 1; k < m; ++k) {
        rest += e[k] * dp.weight[k];
        base += e[k] * stride[k];
      }
      if (rest <= V) {
        long run = std::min<long>(top[0], static_cast<long>(std::floor((V - rest) / dp.weight[0])));
        for (long e0 = 0; e0 <= run; ++e0) {
          std::size_t b = base + static_cast<std::size_t>(e0);
          mask[b / 64] |= 1ULL << (b % 64);
        }
      }
      int k = 1;
      while (k < m && ++e[k] > top[k]) e[k++] = 0;
      if (k >= m) break;
    }
  }
  std::vector<std::uint64_t> state(words, 0), next;
  state[0] = 1;
  const long X = static_cast<long>(std::floor(radius));
  for (int i = 0; i < d; ++i) {
    next = state;
    for (long x = 1; x <= X; ++x) {
      std::size_t shift = 0;
      bool fits = true;
      for (int k = 0; k < m; ++k) {
        long step = dp.coef[i][k] * x * x;
        if (step > top[k]) fits = false;
        shift += static_cast<std::size_t>(step) * stride[k];
      }
      if (!fits) break;
      or_shifted(next, state, shift);
    }
    for (std::size_t w = 0; w < words; ++w) state[w] = next[w] & mask[w];
  }
  const long double lo_s = static_cast<long double>(lo), hi_s = static_cast<long double>(hi);
  for (std::size_t w = 0; w < words; ++w) {
    std::uint64_t bitsw = state[w];
    while (bitsw) {
      int b = __builtin_ctzll(bitsw);
      bitsw &= bitsw - 1;
      std::size_t cell = w * 64 + static_cast<std::size_t>(b);
      long double v = 0;
      for (int k = m - 1; k >= 0; --k) {
        std::size_t ek = cell / stride[k];
        cell -= ek * stride[k];
        v += static_cast<long double>(ek) * dp.weight[k];
      }
      v /= dp.unit;
      if (v >= lo_s && v <= hi_s) out.push_back(v);
    }
  }
  return true;
}

void fill_gaps(GapWindow& g, std::vector<ValueEntry> vals, const GapOptions& opt) {
  g.values = vals.size();
  for (std::size_t i = 1; i < vals.size(); ++i) {
    long double gap = vals[i].value - vals[i - 1].value;
    if (gap > g.max_gap) {
      g.max_gap = gap;
      g.u = vals[i - 1].value;
      g.v = vals[i].value;
    }
    if (g.successors.size() < opt.sample) g.successors.push_back({vals[i - 1].value, vals[i].value});
  }
  if (g.values < 2) fail(Reason::insufficient_values, "insufficient values: window holds fewer than two values");
  if (!(g.max_gap > 0)) fail(Reason::insufficient_values, "degenerate gap scan");
}

}  // namespace

GapWindow max_gap_positive(const QuadraticForm& form, const ShiftVector& a, double tau, double horizon,
                           const GapOptions& opt) {
  if (!form.is_positive()) fail(Reason::not_elliptic, "max_gap_positive needs a positive definite form");
  require(horizon > 0, "horizon must be positive");
  require(std::isfinite(tau) && tau >= 0, "tau must be finite and >= 0");
  require(a.a.size() == static_cast<std::size_t>(form.dim()), "shift dimension mismatch");
  const double hi = tau + horizon;
  double amax = 0;
  for (double v : a.a) amax = std::max(amax, std::abs(v));
  const double bound = std::sqrt(hi / form.q0()) + amax + 1;
  GapWindow g;
  g.tau = tau;
  g.end = hi;
  g.radius = opt.radius > 0 ? opt.radius : bound;
  g.complete = g.radius >= bound;
  const long double tol = opt.merge_tol * std::max(1.0, hi);

  if (opt.allow_dp) {
    ValueDp dp = value_dp_setup(form, a);
    std::vector<long double> vals;
    if (dp.ok && dp_values(dp, g.radius, tau, hi, opt.budget, vals)) {
      std::vector<ValueEntry> raw;
      raw.reserve(vals.size());
      for (auto v : vals) raw.push_back({v, 1});
      g.method = GapMethod::value_dp;
      fill_gaps(g, coalesce_values(std::move(raw), tol), opt);
      return g;
    }
  }
  EnumerateOptions eo;
  eo.budget = opt.budget;
  eo.merge_tol = opt.merge_tol;
  const double alpha = std::nextafter(tau, -std::numeric_limits<double>::infinity());
  auto spec = enumerate_values(form, a, g.radius, alpha, hi, eo);
  g.method = GapMethod::enumeration;
  fill_gaps(g, std::move(spec.values), opt);
  return g;
}

GapCurve gap_curve(const QuadraticForm& form, const ShiftVector& a, const std::vector<double>& taus, double horizon,
                   const GapOptions& opt) {
  GapCurve c;
  c.form = form.describe();
  c.a = a.a;
  c.horizon = horizon;
  for (double t : taus) c.windows.push_back(max_gap_positive(form, a, t, horizon, opt));
  return c;
}

long double max_successor_gap(std::vector<long double> values, long double abs_tol) {
  std::vector<ValueEntry> raw;
  for (auto v : values) raw.push_back({v, 1});
  auto c = coalesce_values(std::move(raw), abs_tol);
  if (c.size() < 2) fail(Reason::insufficient_values, "insufficient values: need at least two distinct values");
  long double g = 0;
  for (std::size_t i = 1; i < c.size(); ++i) g = std::max(g, c[i].value - c[i - 1].value);
  return g;
}

IndefiniteGap max_gap_indefinite(const QuadraticForm& form, const ShiftVector& a, double r, Interval window,
                                 std::uint64_t budget, double merge_tol) {
  if (!form.is_indefinite()) fail(Reason::not_indefinite, "max_gap_indefinite needs an indefinite form");
  require(r >= 0, "r must be >= 0");
  require(window.lo < window.hi, "window must have lo < hi");
  require(a.a.size() == static_cast<std::size_t>(form.dim()), "shift dimension mismatch");
  double amax = 0;
  for (double v : a.a) amax = std::max(amax, std::abs(v));
  const double reach = form.q() * form.dim() * (r + amax) * (r + amax);
  require(window.lo >= -reach && window.hi <= reach, "window must lie inside [-q d (r + |a|)^2, q d (r + |a|)^2]");
  EnumerateOptions eo;
  eo.budget = budget;
  eo.merge_tol = merge_tol;
  auto spec = enumerate_values(form, a, r, std::nextafter(window.lo, -std::numeric_limits<double>::infinity()),
                               window.hi, eo);
  if (spec.size() < 2) fail(Reason::insufficient_values, "insufficient values: window holds fewer than two values");
  IndefiniteGap out;
  out.r = r;
  out.window = window;
  out.spectrum_size = spec.size();
  for (std::size_t i = 1; i < spec.values.size(); ++i) {
    long double gap = spec.values[i].value - spec.values[i - 1].value;
    if (gap > out.d) {
      out.d = gap;
      out.u = spec.values[i - 1].value;
      out.v = spec.values[i].value;
    }
  }
  return out;
}

namespace {

// real solutions of A y^2 + B y + C = 0
std::vector<LD> real_roots(LD A, LD B, LD C) {
  if (A == 0) {
    if (B == 0) return {};
    return {-C / B};
  }
  LD disc = B * B - 4 * A * C;
  if (disc < 0) return {};
  LD s = std::sqrt(disc);
  LD q = -(B + (B >= 0 ? s : -s)) / 2;
  std::vector<LD> out;
  if (q != 0) out.push_back(C / q);
  out.push_back(q / A);
  return out;
}

}  // namespace

OppenheimResult oppenheim_scan(const QuadraticForm& form, const ShiftVector& a, const OppenheimTarget& target,
                               const std::vector<double>& r_schedule, std::uint64_t budget) {
  if (!form.is_indefinite()) fail(Reason::not_indefinite, "oppenheim_scan needs an indefinite form");
  require(target.lo < target.hi, "target must be a nonempty interval");
  require(!r_schedule.empty(), "r schedule must not be empty");
  const int d = form.dim();
  require(a.a.size() == static_cast<std::size_t>(d), "shift dimension mismatch");
  const auto& Q = form.matrix();
  const LD zero_tol = 1e-12L;
  OppenheimResult res;
  std::uint64_t total = 0;
  for (double r : r_schedule) {
    require(r >= 0, "schedule radii must be >= 0");
    const long long R = static_cast<long long>(std::floor(r));
    long double need = std::pow(static_cast<long double>(2 * R + 1), d - 1);
    if (total + need > static_cast<long double>(budget))
      throw BudgetExceeded("oppenheim scan budget", total, static_cast<std::uint64_t>(std::min(total + need, 1.8e19L)));
    OppenheimStep step;
    step.r = r;
    step.min_abs = std::numeric_limits<LD>::infinity();
    LD best_hit = std::numeric_limits<LD>::infinity();
    std::vector<long long> x(d, -R), hit_x;
    LD hit_v = 0;
    std::vector<LD> y(d);
    while (true) {
      LD B = 0, C = 0;
      for (int i = 1; i < d; ++i) y[i] = static_cast<LD>(x[i]) - a.a[i];
      for (int i = 1; i < d; ++i) {
        B += 2 * static_cast<LD>(Q(0, i)) * y[i];
        for (int j = 1; j < d; ++j) C += static_cast<LD>(Q(i, j)) * y[i] * y[j];
      }
      const LD A = Q(0, 0), a0 = a.a[0];
      bool rest_zero = std::all_of(x.begin() + 1, x.end(), [](long long v) { return v == 0; });
      auto value = [&](long long x0) {
        LD y0 = static_cast<LD>(x0) - a0;
        return A * y0 * y0 + B * y0 + C;
      };
      auto consider = [&](long long x0, bool for_hit) {
        if (x0 < -R || x0 > R) return;
        if (rest_zero && x0 == 0) return;
        LD v = value(x0);
        bool isz = std::abs(v) <= zero_tol;
        if (!isz) step.min_abs = std::min(step.min_abs, std::abs(v));
        if (for_hit && v > target.lo && v < target.hi && !(target.exclude_zero && isz)) {
          if (std::abs(v) < best_hit) {
            best_hit = std::abs(v);
            hit_x = x;
            hit_x[0] = x0;
            hit_v = v;
          }
        }
      };
      // smallest |value|: integers next to the roots and the vertex
      std::vector<LD> marks = real_roots(A, B, C);
      if (A != 0) marks.push_back(-B / (2 * A));
      for (LD m : marks) {
        long long c = static_cast<long long>(std::floor(m + a0));
        for (long long x0 = c - 1; x0 <= c + 2; ++x0) consider(x0, false);
      }
      consider(-R, false);
      consider(R, false);
      // hits: on each piece between level crossings the target test is
      // constant, and three consecutive integers contain a nonzero value
      std::vector<LD> cuts = {static_cast<LD>(-R) - a0, static_cast<LD>(R) - a0};
      for (LD level : {static_cast<LD>(target.lo), static_cast<LD>(target.hi)})
        for (LD rt : real_roots(A, B, C - level)) cuts.push_back(rt);
      std::sort(cuts.begin(), cuts.end());
      for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
        long double left = std::max(cuts[p], static_cast<LD>(-R) - a0);
        long double right = std::min(cuts[p + 1], static_cast<LD>(R) - a0);
        if (left > right) continue;
        long long first = static_cast<long long>(std::ceil(left + a0));
        long long last = static_cast<long long>(std::floor(right + a0));
        for (long long x0 = first; x0 <= std::min(last, first + 2); ++x0) consider(x0, true);
        for (long long x0 = std::max(first + 3, last - 2); x0 <= last; ++x0) consider(x0, true);
      }
      step.visited += 1;
      int i = 1;
      while (i < d && x[i] == R) x[i++] = -R;
      if (i >= d) break;
      ++x[i];
    }
    total += step.visited;
    step.hit = !hit_x.empty();
    res.progress.push_back(step);
    if (step.hit) {
      res.found = true;
      res.r = r;
      res.witness = hit_x;
      res.value = hit_v;
      res.detail = "target met";
      return res;
    }
  }
  res.detail = "schedule exhausted without a value in the target (not a falsification)";
  return res;
}

}  // namespace qfl
