#include "qflab/bounds.hpp"

#include <algorithm>
#include <cmath>

namespace qfl {

long long theta(long long s) {
  require(s >= 0, "theta needs s >= 0");
  return s % 2 == 0 ? s / 2 : (s + 1) / 2;
}

Thm51Bound thm51_bound(double gamma, double Lambda, double kappa, double s, double T, double alpha) {
  require(kappa > 4, "kappa must be > 4");
  require(Lambda >= 1, "Lambda must be >= 1");
  require(T >= 1, "T must be >= 1");
  require(alpha >= -1 && alpha <= 0, "alpha must lie in [-1, 0]");
  require(gamma > 0 && gamma <= 1, "gamma must lie in (0, 1]");
  require(s > 1, "s must be > 1");
  const double ex = kappa / (kappa - 4);
  Thm51Bound b;
  bool main;
  if (alpha > -1) {
    b.threshold = std::pow(4.0, ex) * std::pow(s, -kappa / 4);
    main = gamma > b.threshold;
  } else {
    b.threshold = std::pow(4.0, ex) * std::pow(s, -kappa / 4) * std::pow(1 + std::log(s), ex);
    main = gamma * std::pow(1 + std::log(1 / gamma), ex) > b.threshold;
  }
  const double g = std::pow(gamma / Lambda, 1 - 4 / kappa);
  if (main) {
    b.branch = Branch::main;
    b.value = alpha > -1 ? g * std::pow(T, alpha + 1) * Lambda / s
                         : g * (1 + std::log(Lambda / gamma)) * (1 + std::log(T)) * Lambda / s;
  } else {
    b.branch = Branch::trivial;
    b.value = alpha > -1 ? gamma * std::pow(T, alpha + 1) : gamma * (1 + std::log(s)) * (1 + std::log(T));
  }
  return b;
}

double integrate_J(const TrigProfile& profile, double s, double T, double alpha) {
  require(s > 0 && T > 0, "need s > 0 and T > 0");
  const auto& t = profile.t;
  const auto& v = profile.values;
  if (t.size() != v.size()) fail(Reason::invalid_argument, "profile size mismatch");
  const double t0 = 1 / std::sqrt(s);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t0 * (1 - 1e-12) && t[i] <= T) idx.push_back(i);
  if (idx.size() < 2) fail(Reason::coverage_gap, "profile has fewer than two points in [s^{-1/2}, T]");
  double hmax = 0;
  for (std::size_t k = 1; k < idx.size(); ++k) hmax = std::max(hmax, t[idx[k]] - t[idx[k - 1]]);
  if (t[idx.front()] - t0 > hmax + 1e-12 * t0 || T - t[idx.back()] > hmax * (1 + 1e-9))
    fail(Reason::coverage_gap, "profile does not cover [s^{-1/2}, T]");
  auto f = [&](std::size_t i) { return v[i] * std::pow(t[i], alpha); };
  // exact t^alpha integral for the end pieces with constant phi
  auto power_int = [&](double a, double b) {
    if (b <= a) return 0.0;
    return alpha == -1 ? std::log(b / a) : (std::pow(b, alpha + 1) - std::pow(a, alpha + 1)) / (alpha + 1);
  };
  double J = v[idx.front()] * power_int(t0, t[idx.front()]);
  for (std::size_t k = 1; k < idx.size(); ++k)
    J += 0.5 * (t[idx[k]] - t[idx[k - 1]]) * (f(idx[k]) + f(idx[k - 1]));
  J += v[idx.back()] * power_int(t[idx.back()], T);
  return J;
}

std::size_t ClusterAnalysis::total_violations() const {
  std::size_t n = 0;
  for (const auto& l : levels) n += l.violation_count;
  return n;
}

ClusterAnalysis cluster_structure(const TrigProfile& profile, double s, double kappa, double Lambda, int max_levels,
                                  double alpha) {
  require(kappa > 4, "kappa must be > 4");
  require(Lambda >= 1, "Lambda must be >= 1");
  require(alpha >= -1 && alpha <= 0, "alpha must lie in [-1, 0]");
  ClusterAnalysis out;
  const auto& t = profile.t;
  const double t0 = 1 / std::sqrt(s);
  const double T = profile.T > 0 ? profile.T : (t.empty() ? 0 : t.back());
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t0 * (1 - 1e-12) && t[i] <= T) idx.push_back(i);
  double g = 0;
  for (auto i : idx) g = std::max(g, profile.values[i] / Lambda);
  out.gamma_normalized = g;
  if (g <= 0) return out;
  out.l_gamma = static_cast<int>(std::floor(std::log2(1 / g)));
  while (std::ldexp(1.0, -out.l_gamma) < g) --out.l_gamma;
  double G, F;
  if (alpha > -1) {
    G = F = std::pow(std::max(T, 1.0), alpha + 1);
  } else {
    G = std::log(std::max(T, 1.0)) + std::log(s);
    F = (1 + std::log(std::max(T, 1.0))) * (1 + std::log(1 / g));
  }
  out.m = static_cast<int>(std::ceil(std::log2(s * G / (std::pow(g, 1 - 4 / kappa) * F))));
  const int last = std::min(out.m, out.l_gamma + max_levels - 1);
  for (int l = out.l_gamma; l <= last; ++l) {
    const double hi = std::ldexp(1.0, -l), lo = std::ldexp(1.0, -l - 1);
    ClusterReport rep;
    rep.level = l;
    rep.delta = std::pow(4.0, (l + 1) / kappa) / s;
    rep.rho = std::pow(4.0, -(l + 1) / kappa);
    std::vector<double> pts;
    std::size_t prev = static_cast<std::size_t>(-1);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      double v = profile.values[idx[k]] / Lambda;
      if (v < lo || v > hi) continue;
      double tt = t[idx[k]];
      pts.push_back(tt);
      if (prev != static_cast<std::size_t>(-1) && prev + 1 == k) {
        rep.clusters.back().hi = tt;
        ++rep.clusters.back().points;
      } else {
        rep.clusters.push_back({tt, tt, 1});
      }
      prev = k;
    }
    rep.points = pts.size();
    if (pts.empty()) continue;
    // a violation is a pair with delta < t' - t < rho
    for (std::size_t a = 0; a < pts.size(); ++a) {
      auto it = std::upper_bound(pts.begin() + a, pts.end(), pts[a] + rep.delta);
      if (it != pts.end() && *it - pts[a] < rep.rho && *it - pts[a] > rep.delta) {
        ++rep.violation_count;
        if (rep.violations.size() < 16) rep.violations.push_back({pts[a], *it});
      }
    }
    out.levels.push_back(std::move(rep));
  }
  return out;
}

namespace {

double need(const std::optional<double>& v, const char* name, const char* kind) {
  if (!v) fail(Reason::invalid_argument, std::string(kind) + " envelope needs input '" + name + "'");
  return *v;
}

}  // namespace

double error_envelope(EnvelopeKind kind, const EnvelopeInputs& in) {
  switch (kind) {
    case EnvelopeKind::thm13: {
      double s = need(in.s, "s", "thm13"), d = need(in.d, "d", "thm13"), q = need(in.q, "q", "thm13"),
             rho = need(in.rho, "rho", "thm13");
      require(s > 0, "s must be > 0");
      return std::pow(s + 1, d / 2) * std::pow(q, d) * rho / s;
    }
    case EnvelopeKind::cor14: {
      double d = need(in.d, "d", "cor14"), q = need(in.q, "q", "cor14"), rho0 = need(in.rho0, "rho0", "cor14");
      return std::pow(q, 1.5 * d) * rho0;
    }
    case EnvelopeKind::thm15: {
      double d = need(in.d, "d", "thm15"), q = need(in.q, "q", "thm15"), rho = need(in.rho, "rho", "thm15");
      return std::pow(q, 1.5 * d) * rho;
    }
    case EnvelopeKind::thm21: {
      const char* k = "thm21";
      double r = need(in.r, "r", k), d = need(in.d, "d", k), q = need(in.q, "q", k), T = need(in.T, "T", k),
             R = need(in.R, "R", k), p = need(in.p, "p", k), a = need(in.a_norm, "a_norm", k),
             g = need(in.gamma, "gamma", k), e = need(in.eps, "eps", k);
      require(r > 0 && T > 0, "r and T must be > 0");
      double r2 = r * r;
      double t1 = std::pow(q, d / 2) / (r2 * T);
      double t2 = std::pow(R, p) / std::pow(r, 2 * p) * std::pow(1 + a / r, p) * std::pow(q, p + d / 2);
      double t3 = g > 0 ? std::pow(g, 1 - 8 / d - e) * std::pow(T, e) * std::pow(q, d / 2) / r2 : 0.0;
      return t1 + t2 + t3;
    }
  }
  return 0;
}

double rho0_from_grid(const std::vector<std::pair<double, double>>& tau_rho, double s) {
  double best = -1;
  for (auto [tau, rho] : tau_rho)
    if (tau >= s) best = std::max(best, rho);
  if (best < 0) fail(Reason::coverage_gap, "no grid point tau >= s");
  return best;
}

}  // namespace qfl
