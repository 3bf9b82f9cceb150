#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>

#include "qflab/bounds.hpp"
#include "qflab/forms.hpp"
#include "qflab/gaps.hpp"
#include "qflab/lattice.hpp"
#include "qflab/rationality.hpp"
#include "qflab/smoothing.hpp"
#include "qflab/trig.hpp"
#include "qflab/volume.hpp"
#include "schema.hpp"

namespace qfl::cli {

namespace {

struct Ctx {
  const ExperimentConfig& cfg;
  Params p;
  ExperimentReport& rep;

  std::uint64_t budget(std::uint64_t def) const { return cfg.budget ? cfg.budget : def; }

  QuadraticForm form() const { return build_form(parse_form_text(cfg.form_text), p.boolean("normalize")); }

  ShiftVector shift(int d) const {
    Vec a = p.reals("a");
    if (a.empty()) a.assign(static_cast<std::size_t>(d), 0.0);
    if (static_cast<int>(a.size()) != d)
      fail(Reason::invalid_argument,
           "params.a: " + std::to_string(a.size()) + " entries for a form of dimension " + std::to_string(d));
    return ShiftVector{a};
  }

  void row(std::vector<Cell> r) { rep.rows.push_back(std::move(r)); }
  void fit(const std::string& k, double v) { rep.fitted.emplace_back(k, v); }
  void verdict(const std::string& k, const std::string& v) { rep.verdicts.emplace_back(k, v); }
};

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

bool nonincreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1]) return false;
  return true;
}

const char* yes_no(bool b) { return b ? "yes" : "no"; }

CountMethod count_method(const std::string& m) {
  if (m == "enumeration") return CountMethod::enumeration;
  if (m == "diagonal-dp") return CountMethod::diagonal_dp;
  return CountMethod::automatic;
}

MinkowskiFunctional gauge(const std::string& name, int d) {
  return name == "euclidean" ? MinkowskiFunctional::euclidean(d) : MinkowskiFunctional::sup_norm();
}

void delta_curve(Ctx& c) {
  auto form = c.form();
  auto a = c.shift(form.dim());
  auto s = c.p.reals("s");
  CountOptions co;
  co.workers = c.cfg.workers;
  co.method = count_method(c.p.text("method"));
  if (c.cfg.budget) co.budget = c.cfg.budget;
  auto res = count_ellipsoid_multi(form, a, s, co);
  c.rep.columns = {"s", "count", "volume", "delta", "s_delta", "method", "visited"};
  std::vector<double> sd;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double delta = delta_from_count(form, res[i].count, s[i]);
    sd.push_back(s[i] * delta);
    c.row({s[i], count_cell(res[i].count), ellipsoid_volume(form, s[i]), delta, s[i] * delta,
           method_name(res[i].method), res[i].visited});
  }
  double med = median(sd);
  c.fit("s_delta_max", *std::max_element(sd.begin(), sd.end()));
  c.fit("s_delta_median", med);
  if (med > 0) c.fit("s_delta_max_over_median", *std::max_element(sd.begin(), sd.end()) / med);
  if (sd.size() >= 3) {
    std::size_t third = sd.size() / 3;
    c.fit("s_delta_median_first_third", median({sd.begin(), sd.begin() + static_cast<long>(third)}));
    c.fit("s_delta_median_last_third", median({sd.end() - static_cast<long>(third), sd.end()}));
  }
}

GammaOptions gamma_options(const Ctx& c) {
  GammaOptions g;
  g.t_step = c.p.real("t_step");
  g.refine_rounds = static_cast<int>(c.p.integer("refine_rounds"));
  g.a_grid = static_cast<int>(c.p.integer("a_grid"));
  g.workers = c.cfg.workers;
  g.seed = c.cfg.seed;
  g.budget = c.budget(g.budget);
  return g;
}

void gamma_curve(Ctx& c) {
  auto form = c.form();
  GammaOptions g = gamma_options(c);
  g.fft_oversample = static_cast<int>(c.p.integer("fft_oversample"));
  g.top = static_cast<int>(c.p.integer("top"));
  g.mc_samples = static_cast<std::uint64_t>(c.p.integer("mc_samples"));
  double T = c.p.real("T");
  c.rep.columns = {"s", "T", "gamma", "t_star", "mode", "heuristic", "points"};
  std::vector<double> gs;
  for (double s : c.p.reals("s")) {
    auto r = gamma_estimate(form, s, T, g);
    gs.push_back(r.gamma);
    c.row({s, T, r.gamma, r.t_star, mode_name(r.profile.mode), r.heuristic, r.profile.t.size()});
  }
  c.verdict("strictly_decreasing", yes_no(strictly_decreasing(gs)));
}

void gap_curve(Ctx& c) {
  auto form = c.form();
  auto a = c.shift(form.dim());
  std::vector<double> gaps;
  if (c.p.text("mode") == "positive") {
    GapOptions o;
    o.radius = c.p.real("radius");
    o.merge_tol = c.p.real("merge_tol");
    o.budget = c.budget(o.budget);
    auto curve = gap_curve(form, a, c.p.reals("tau"), c.p.real("horizon"), o);
    c.rep.columns = {"tau", "end", "max_gap", "u", "v", "values", "radius", "complete", "method"};
    for (const auto& w : curve.windows) {
      gaps.push_back(static_cast<double>(w.max_gap));
      c.row({w.tau, w.end, w.max_gap, w.u, w.v, w.values, w.radius, w.complete, gap_method_name(w.method)});
    }
    c.verdict("strictly_decreasing", yes_no(strictly_decreasing(gaps)));
  } else {
    Interval win{c.p.real("window_lo"), c.p.real("window_hi")};
    c.rep.columns = {"r", "d", "u", "v", "spectrum_size"};
    for (double r : c.p.reals("r")) {
      auto g = max_gap_indefinite(form, a, r, win, c.budget(200000000), c.p.real("merge_tol"));
      gaps.push_back(static_cast<double>(g.d));
      c.row({r, g.d, g.u, g.v, g.spectrum_size});
    }
    c.verdict("nonincreasing", yes_no(nonincreasing(gaps)));
    c.verdict("strictly_decreasing", yes_no(strictly_decreasing(gaps)));
  }
}

void expansion(Ctx& c) {
  auto form = c.form();
  auto a = c.shift(form.dim());
  auto scheme = build_scheme(c.p.real("R"), c.p.real("r"), static_cast<int>(c.p.integer("k")));
  MonteCarloOptions mc;
  mc.samples = static_cast<std::uint64_t>(c.p.integer("samples"));
  mc.seed = c.cfg.seed;
  mc.workers = c.cfg.workers;
  ExpansionOptions eo;
  eo.T = c.p.real("T");
  eo.eps = c.p.real("eps");
  eo.strict = c.p.boolean("strict");
  eo.budget = c.budget(eo.budget);
  eo.gamma.workers = c.cfg.workers;
  eo.gamma.seed = c.cfg.seed;
  auto rep = expansion_residual(form, a, c.p.reals("s"), scheme, static_cast<int>(c.p.integer("p")), mc, eo);
  c.rep.columns = {"s", "F", "F0", "F0_se", "lead", "lead_se", "residual", "residual_se"};
  for (int j : rep.orders) {
    c.rep.columns.push_back("F" + std::to_string(j));
    c.rep.columns.push_back("F" + std::to_string(j) + "_se");
  }
  std::size_t improved = 0;
  for (const auto& pt : rep.points) {
    std::vector<Cell> r = {pt.s,         pt.F,           pt.F0.mean,          pt.F0.std_error,
                           pt.lead.mean, pt.lead.std_error, pt.residual.mean, pt.residual.std_error};
    for (const auto& f : pt.Fj) {
      r.emplace_back(f.mean);
      r.emplace_back(f.std_error);
    }
    if (std::fabs(pt.residual.mean) <= std::fabs(pt.lead.mean)) ++improved;
    c.row(std::move(r));
  }
  c.fit("gamma", rep.gamma);
  c.fit("envelope", rep.envelope);
  c.fit("fitted_constant", rep.fitted_constant);
  if (!rep.points.empty())
    c.fit("improved_fraction", static_cast<double>(improved) / static_cast<double>(rep.points.size()));
  c.rep.flags = rep.flags;
}

void thm51(Ctx& c) {
  auto form = c.form();
  double s = c.p.real("s"), kappa = c.p.real("kappa"), alpha = c.p.real("alpha");
  double Lambda = c.p.real("Lambda");
  if (Lambda <= 0) {
    auto bi = check_basic_inequality(form, std::nullopt, s, static_cast<std::uint64_t>(c.p.integer("lambda_samples")),
                                     c.cfg.seed);
    double C = std::max(bi.max_ratio_pair, bi.max_ratio_single);
    Lambda = std::max(1.0, C * std::pow(form.q(), form.dim() / 2.0));
    c.fit("basic_inequality_constant", C);
  }
  c.fit("Lambda", Lambda);
  GammaOptions g = gamma_options(c);
  c.rep.columns = {"T", "gamma", "J", "bound", "branch", "ratio", "levels", "violations"};
  std::vector<double> ratios;
  std::size_t violations = 0;
  for (double T : c.p.reals("T")) {
    auto gr = gamma_estimate(form, s, T, g);
    double J = integrate_J(gr.profile, s, T, alpha);
    auto b = thm51_bound(gr.gamma, Lambda, kappa, s, T, alpha);
    auto cl = cluster_structure(gr.profile, s, kappa, Lambda, 64, alpha);
    double ratio = b.value > 0 ? J / b.value : 0;
    ratios.push_back(ratio);
    violations += cl.total_violations();
    c.row({T, gr.gamma, J, b.value, b.branch == Branch::main ? "main" : "trivial", ratio, cl.levels.size(),
           cl.total_violations()});
  }
  double hi = *std::max_element(ratios.begin(), ratios.end());
  double lo = *std::min_element(ratios.begin(), ratios.end());
  c.fit("fitted_C", hi);
  if (lo > 0) c.fit("C_variation", hi / lo);
  c.verdict("cluster_violations", violations == 0 ? "none" : std::to_string(violations));
}

void rationality(Ctx& c) {
  auto form = c.form();
  ProbeOptions o;
  o.k = static_cast<int>(c.p.integer("k"));
  o.t_resolution = static_cast<double>(c.p.integer("t_resolution"));
  o.refine = static_cast<int>(c.p.integer("refine"));
  o.workers = c.cfg.workers;
  o.budget = c.budget(o.budget);
  auto rep = rationality_probe(form, c.p.real("delta0"), c.p.real("delta"), c.p.reals("r"), o);
  c.rep.columns = {"r", "sup", "t_arg", "grid"};
  for (const auto& pt : rep.curve) c.row({pt.r, pt.sup, pt.t_arg, pt.grid});
  c.fit("decrease", rep.decrease);
  c.verdict("verdict", verdict_name(rep.verdict));
  if (!rep.detail.empty()) c.rep.flags.push_back(rep.detail);
}

void volume8(Ctx& c) {
  auto form = c.form();
  auto a = c.shift(form.dim());
  int d = form.dim();
  auto M = gauge(c.p.text("gauge"), d);
  Interval I0{c.p.real("I0_lo"), c.p.real("I0_hi")};
  Interval I{c.p.real("I_lo"), c.p.real("I_hi")};
  auto samples = static_cast<std::uint64_t>(c.p.integer("samples"));
  const std::string& mode = c.p.text("mode");
  if (mode == "envelope") {
    c.rep.columns = {"R", "volume", "stderr", "tau", "sigma", "upper", "lower", "ratio_upper", "lower_valid",
                     "ratio_lower"};
    for (double R : c.p.reals("R")) {
      auto r = check_lemma82(form, a, M, R, c.p.real("lambda"), I, samples, c.cfg.seed, c.cfg.workers);
      c.row({R, r.volume.mean, r.volume.std_error, r.tau, r.sigma, r.upper, r.lower, r.ratio_upper, r.lower_valid,
             r.lower_valid ? Cell(r.ratio_lower) : Cell()});
    }
    return;
  }
  auto lim = indefinite_limit_formula(form, M, I0, I, samples, c.cfg.seed, c.cfg.workers,
                                      static_cast<int>(c.p.integer("u_nodes")));
  c.fit("limit", lim.mean);
  c.fit("limit_se", lim.std_error);
  if (mode == "limit") {
    c.rep.columns = {"limit", "stderr"};
    c.row({lim.mean, lim.std_error});
    return;
  }
  c.rep.columns = {"R", "volume", "stderr", "scaled", "scaled_se", "relative_deviation", "combined_se"};
  for (double R : c.p.reals("R")) {
    auto e = indefinite_volume_mc(form, a, M, R, I0, I, samples, c.cfg.seed, c.cfg.workers);
    double f = std::pow(R, 2.0 - d);
    double scaled = e.mean * f, se = e.std_error * f;
    c.row({R, e.mean, e.std_error, scaled, se, lim.mean != 0 ? (scaled - lim.mean) / lim.mean : 0.0,
           std::hypot(se, lim.std_error)});
  }
}

// raw-op: each operation fills columns and one row per output record.
using OpFn = std::function<void(Ctx&)>;

const std::vector<std::pair<std::string, OpFn>>& ops() {
  static const std::vector<std::pair<std::string, OpFn>> t = {
      {"count_ellipsoid",
       [](Ctx& c) {
         auto f = c.form();
         CountOptions co;
         co.workers = c.cfg.workers;
         co.method = count_method(c.p.text("method"));
         if (c.cfg.budget) co.budget = c.cfg.budget;
         auto r = count_ellipsoid(f, c.shift(f.dim()), c.p.real("s"), co);
         c.rep.columns = {"s", "count", "method", "visited"};
         c.row({r.s, count_cell(r.count), method_name(r.method), r.visited});
       }},
      {"count_shell",
       [](Ctx& c) {
         auto f = c.form();
         CountOptions co;
         co.workers = c.cfg.workers;
         if (c.cfg.budget) co.budget = c.cfg.budget;
         auto r = count_shell(f, c.shift(f.dim()), c.p.real("tau"), c.p.real("delta"), co);
         c.rep.columns = {"tau", "delta", "count", "method", "visited"};
         c.row({c.p.real("tau"), c.p.real("delta"), count_cell(r.count), method_name(r.method), r.visited});
       }},
      {"enumerate_values",
       [](Ctx& c) {
         auto f = c.form();
         EnumerateOptions eo;
         if (c.cfg.budget) eo.budget = c.cfg.budget;
         auto sp = enumerate_values(f, c.shift(f.dim()), c.p.real("r"), c.p.real("alpha"), c.p.real("beta"), eo);
         c.rep.columns = {"value", "multiplicity"};
         for (const auto& e : sp.values) c.row({e.value, count_cell(e.multiplicity)});
         c.fit("visited", static_cast<double>(sp.visited));
       }},
      {"ellipsoid_volume",
       [](Ctx& c) {
         auto f = c.form();
         c.rep.columns = {"s", "volume"};
         c.row({c.p.real("s"), ellipsoid_volume(f, c.p.real("s"))});
       }},
      {"delta_error",
       [](Ctx& c) {
         auto f = c.form();
         CountOptions co;
         co.workers = c.cfg.workers;
         if (c.cfg.budget) co.budget = c.cfg.budget;
         c.rep.columns = {"s", "delta"};
         c.row({c.p.real("s"), delta_error(f, c.shift(f.dim()), c.p.real("s"), co)});
       }},
      {"phi",
       [](Ctx& c) {
         auto f = c.form();
         PhiOptions po;
         const std::string& m = c.p.text("mode");
         po.mode = m == "direct" ? PhiMode::direct : m == "monte-carlo" ? PhiMode::monte_carlo : PhiMode::factorized;
         po.samples = static_cast<std::uint64_t>(c.p.integer("samples"));
         po.seed = c.cfg.seed;
         po.budget = c.budget(po.budget);
         auto v = phi(f, c.shift(f.dim()).a, c.p.real("t"), c.p.real("s"), po);
         c.rep.columns = {"t", "s", "phi", "stderr"};
         c.row({c.p.real("t"), c.p.real("s"), v.value, v.std_error});
       }},
      {"phi_symmetrized",
       [](Ctx& c) {
         auto f = c.form();
         double v = phi_symmetrized(f, c.p.real("t"), c.p.real("r"), static_cast<int>(c.p.integer("k")),
                                    c.budget(10000000));
         c.rep.columns = {"t", "r", "k", "value"};
         c.row({c.p.real("t"), c.p.real("r"), c.p.integer("k"), v});
       }},
      {"f_sum",
       [](Ctx& c) {
         auto f = c.form();
         Vec b = c.p.reals("b");
         if (b.empty()) b.assign(static_cast<std::size_t>(f.dim()), 0.0);
         require(static_cast<int>(b.size()) == f.dim(), "params.b: dimension mismatch");
         double v = f_sum(f, b, c.p.real("t"), c.p.real("r"), static_cast<int>(c.p.integer("k")), c.budget(10000000));
         c.rep.columns = {"t", "r", "k", "value"};
         c.row({c.p.real("t"), c.p.real("r"), c.p.integer("k"), v});
       }},
      {"gamma_estimate",
       [](Ctx& c) {
         auto f = c.form();
         GammaOptions g;
         g.workers = c.cfg.workers;
         g.seed = c.cfg.seed;
         g.budget = c.budget(g.budget);
         auto r = gamma_estimate(f, c.p.real("s"), c.p.real("T"), g);
         c.rep.columns = {"s", "T", "gamma", "t_star", "heuristic"};
         c.row({c.p.real("s"), c.p.real("T"), r.gamma, r.t_star, r.heuristic});
       }},
      {"classify_rationality",
       [](Ctx& c) {
         auto f = c.form();
         auto v = classify_rationality(f);
         const char* k = v.kind == RationalityKind::rational     ? "rational"
                         : v.kind == RationalityKind::irrational ? "irrational"
                                                                 : "unknown";
         c.rep.columns = {"kind", "M", "M_value", "detail"};
         c.row({k, v.kind == RationalityKind::rational ? v.M.to_string() : "", v.M_value, v.detail});
       }},
      {"successive_minima",
       [](Ctx& c) {
         auto f = c.form();
         auto mode = c.p.text("mode") == "exact" ? MinimaMode::exact : MinimaMode::reduction;
         auto r = successive_minima(f, c.p.real("t"), c.p.real("r"), mode, c.budget(200000000));
         c.rep.columns = {"i", "M", "vector"};
         for (std::size_t i = 0; i < r.minima.size(); ++i) {
           std::string v;
           for (std::size_t j = 0; j < r.vectors[i].size(); ++j) v += (j ? " " : "") + std::to_string(r.vectors[i][j]);
           c.row({static_cast<long long>(i + 1), r.minima[i], v});
         }
         c.fit("P", r.P);
         c.fit("quality", r.quality);
       }},
      {"count_H",
       [](Ctx& c) {
         auto f = c.form();
         c.rep.columns = {"t", "r", "count"};
         c.row({c.p.real("t"), c.p.real("r"), count_H(f, c.p.real("t"), c.p.real("r"), c.budget(100000000))});
       }},
      {"max_gap_positive",
       [](Ctx& c) {
         auto f = c.form();
         GapOptions o;
         o.budget = c.budget(o.budget);
         auto w = max_gap_positive(f, c.shift(f.dim()), c.p.real("tau"), c.p.real("horizon"), o);
         c.rep.columns = {"tau", "end", "max_gap", "u", "v", "values", "method"};
         c.row({w.tau, w.end, w.max_gap, w.u, w.v, w.values, gap_method_name(w.method)});
       }},
      {"max_gap_indefinite",
       [](Ctx& c) {
         auto f = c.form();
         auto g = max_gap_indefinite(f, c.shift(f.dim()), c.p.real("r"), {c.p.real("window_lo"), c.p.real("window_hi")},
                                     c.budget(200000000));
         c.rep.columns = {"r", "d", "u", "v", "spectrum_size"};
         c.row({g.r, g.d, g.u, g.v, g.spectrum_size});
       }},
      {"oppenheim_scan",
       [](Ctx& c) {
         auto f = c.form();
         OppenheimTarget tg{c.p.real("lo"), c.p.real("hi"), c.p.boolean("exclude_zero")};
         auto r = oppenheim_scan(f, c.shift(f.dim()), tg, c.p.reals("r"), c.budget(2000000000ULL));
         c.rep.columns = {"r", "hit", "min_abs", "visited"};
         for (const auto& st : r.progress) c.row({st.r, st.hit, st.min_abs, st.visited});
         c.verdict("found", yes_no(r.found));
         if (r.found) {
           std::string w;
           for (std::size_t i = 0; i < r.witness.size(); ++i) w += (i ? " " : "") + std::to_string(r.witness[i]);
           c.verdict("witness", w);
           c.fit("r", r.r);
           c.fit("value", static_cast<double>(r.value));
         }
         if (!r.detail.empty()) c.rep.flags.push_back(r.detail);
       }},
      {"F_mu",
       [](Ctx& c) {
         auto f = c.form();
         auto sc = build_scheme(c.p.real("R"), c.p.real("r"), static_cast<int>(c.p.integer("k")));
         c.rep.columns = {"s", "F"};
         c.row({c.p.real("s"), F_mu(f, c.shift(f.dim()), c.p.real("s"), sc, c.budget(100000000))});
       }},
      {"mm",
       [](Ctx& c) {
         c.rep.columns = {"t", "s", "M"};
         c.row({c.p.real("t"), c.p.real("s"), mm(c.p.real("t"), c.p.real("s"))});
       }},
      {"rho_of_s",
       [](Ctx& c) {
         c.rep.columns = {"rho"};
         c.row({rho_of_s(c.p.real("s"), c.p.real("Ts"), c.p.real("gamma"), static_cast<int>(c.p.integer("d")),
                         c.p.real("eps"))});
       }},
      {"theta",
       [](Ctx& c) {
         c.rep.columns = {"s", "theta"};
         c.row({c.p.integer("s"), theta(c.p.integer("s"))});
       }},
      {"thm51_bound",
       [](Ctx& c) {
         auto b = thm51_bound(c.p.real("gamma"), c.p.real("Lambda"), c.p.real("kappa"), c.p.real("s"), c.p.real("T"),
                              c.p.real("alpha"));
         c.rep.columns = {"branch", "value", "threshold"};
         c.row({b.branch == Branch::main ? "main" : "trivial", b.value, b.threshold});
       }},
      {"moments_pi",
       [](Ctx& c) {
         std::vector<int> orders;
         for (double o : c.p.reals("orders")) {
           require(o >= 0 && o == std::floor(o), "params.orders: nonnegative integers expected");
           orders.push_back(static_cast<int>(o));
         }
         auto exact = moments_pi_exact(static_cast<int>(c.p.integer("k")), orders);
         c.rep.columns = {"value", "exact"};
         c.row({exact.get_d(), exact.get_str()});
       }},
      {"dirichlet_approx",
       [](Ctx& c) {
         auto r = dirichlet_approx(c.p.reals("v"), c.p.integer("N"));
         std::string u;
         for (std::size_t i = 0; i < r.u.size(); ++i) u += (i ? " " : "") + std::to_string(r.u[i]);
         c.rep.columns = {"q", "u", "max_error", "bound"};
         c.row({static_cast<long long>(r.q), u, r.max_error, r.bound});
       }},
      {"dirichlet_square",
       [](Ctx& c) {
         c.rep.columns = {"n", "z", "value"};
         c.row({c.p.integer("n"), c.p.real("z"),
                dirichlet_square(static_cast<int>(c.p.integer("n")), c.p.real("z"))});
       }},
      {"check_lemma64",
       [](Ctx& c) {
         auto r = check_lemma64(static_cast<int>(c.p.integer("n")), static_cast<int>(c.p.integer("k")),
                                c.p.reals("z"), static_cast<int>(c.p.integer("truncation")));
         c.rep.columns = {"lhs", "rhs", "ratio"};
         c.row({r.lhs, r.rhs, r.ratio});
       }},
      {"error_envelope",
       [](Ctx& c) {
         const std::string& k = c.p.text("kind");
         EnvelopeKind kind = k == "thm13"   ? EnvelopeKind::thm13
                             : k == "cor14" ? EnvelopeKind::cor14
                             : k == "thm15" ? EnvelopeKind::thm15
                                            : EnvelopeKind::thm21;
         EnvelopeInputs in;
         in.s = c.p.maybe_real("s");
         in.r = c.p.maybe_real("r");
         in.d = c.p.maybe_real("d");
         in.q = c.p.maybe_real("q");
         in.eps = c.p.maybe_real("eps");
         in.rho = c.p.maybe_real("rho");
         in.rho0 = c.p.maybe_real("rho0");
         in.T = c.p.maybe_real("T");
         in.R = c.p.maybe_real("R");
         in.p = c.p.maybe_real("p");
         in.a_norm = c.p.maybe_real("a_norm");
         in.gamma = c.p.maybe_real("gamma");
         c.rep.columns = {"kind", "value"};
         c.row({k, error_envelope(kind, in)});
       }},
  };
  return t;
}

void raw_op(Ctx& c) {
  const std::string& op = c.p.text("op");
  for (const auto& [name, fn] : ops())
    if (name == op) return fn(c);
  fail(Reason::invalid_argument, "params.op: unknown operation '" + op + "'");
}

}  // namespace

ExperimentReport run(const ExperimentConfig& input) {
  auto start = std::chrono::steady_clock::now();
  ExperimentReport rep;
  rep.config = input;
  validate(rep.config);
  rep.version = QFLAB_VERSION;
  Ctx c{rep.config, Params(rep.config.params), rep};
  switch (rep.config.kind) {
    case Kind::delta_curve: delta_curve(c); break;
    case Kind::gamma_curve: gamma_curve(c); break;
    case Kind::gap_curve: gap_curve(c); break;
    case Kind::expansion: expansion(c); break;
    case Kind::thm51: thm51(c); break;
    case Kind::rationality: rationality(c); break;
    case Kind::volume8: volume8(c); break;
    case Kind::raw_op: raw_op(c); break;
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace qfl::cli
