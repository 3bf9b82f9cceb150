#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "qflab/forms.hpp"
#include "schema.hpp"

namespace qfl::cli {

namespace {

const std::vector<std::pair<Kind, const char*>> kKinds = {
    {Kind::delta_curve, "delta-curve"}, {Kind::gamma_curve, "gamma-curve"}, {Kind::gap_curve, "gap-curve"},
    {Kind::expansion, "expansion"},     {Kind::thm51, "thm51"},             {Kind::rationality, "rationality"},
    {Kind::volume8, "volume-8"},        {Kind::raw_op, "raw-op"},
};

ParamSpec req(std::string n, PType t) { return {std::move(n), t, "", true, {}}; }
ParamSpec opt(std::string n, PType t, std::string def) { return {std::move(n), t, std::move(def), false, {}}; }
ParamSpec choice(std::string n, std::vector<std::string> c, std::string def) {
  bool required = def.empty();
  return {std::move(n), PType::choice, std::move(def), required, std::move(c)};
}

const ParamSpec kShift = opt("a", PType::reals, "");
const ParamSpec kNormalize = opt("normalize", PType::boolean, "false");

struct OpSchema {
  const char* name;
  bool form;
  std::vector<ParamSpec> params;
};

const std::vector<OpSchema>& op_table() {
  static const std::vector<OpSchema> t = {
      {"count_ellipsoid", true,
       {req("s", PType::real), kShift, choice("method", {"auto", "enumeration", "diagonal-dp"}, "auto")}},
      {"count_shell", true, {req("tau", PType::real), req("delta", PType::real), kShift}},
      {"enumerate_values", true,
       {req("r", PType::real), req("alpha", PType::real), req("beta", PType::real), kShift}},
      {"ellipsoid_volume", true, {req("s", PType::real)}},
      {"delta_error", true, {req("s", PType::real), kShift}},
      {"phi", true,
       {req("t", PType::real), req("s", PType::real), kShift,
        choice("mode", {"factorized", "direct", "monte-carlo"}, "factorized"),
        opt("samples", PType::integer, "100000")}},
      {"phi_symmetrized", true, {req("t", PType::real), req("r", PType::real), req("k", PType::integer)}},
      {"f_sum", true,
       {req("t", PType::real), req("r", PType::real), req("k", PType::integer), opt("b", PType::reals, "")}},
      {"gamma_estimate", true, {req("s", PType::real), opt("T", PType::real, "4")}},
      {"classify_rationality", true, {}},
      {"successive_minima", true,
       {req("t", PType::real), req("r", PType::real), choice("mode", {"reduction", "exact"}, "reduction")}},
      {"count_H", true, {req("t", PType::real), req("r", PType::real)}},
      {"max_gap_positive", true, {req("tau", PType::real), req("horizon", PType::real), kShift}},
      {"max_gap_indefinite", true,
       {req("r", PType::real), req("window_lo", PType::real), req("window_hi", PType::real), kShift}},
      {"oppenheim_scan", true,
       {req("lo", PType::real), req("hi", PType::real), opt("exclude_zero", PType::boolean, "false"),
        req("r", PType::reals), kShift}},
      {"F_mu", true,
       {req("R", PType::real), req("r", PType::real), req("k", PType::integer), req("s", PType::real), kShift}},
      {"mm", false, {req("t", PType::real), req("s", PType::real)}},
      {"rho_of_s", false,
       {req("s", PType::real), req("Ts", PType::real), req("gamma", PType::real), req("d", PType::integer),
        req("eps", PType::real)}},
      {"theta", false, {req("s", PType::integer)}},
      {"thm51_bound", false,
       {req("gamma", PType::real), req("Lambda", PType::real), req("kappa", PType::real), req("s", PType::real),
        req("T", PType::real), opt("alpha", PType::real, "0")}},
      {"moments_pi", false, {req("k", PType::integer), req("orders", PType::reals)}},
      {"dirichlet_approx", false, {req("v", PType::reals), req("N", PType::integer)}},
      {"dirichlet_square", false, {req("n", PType::integer), req("z", PType::real)}},
      {"check_lemma64", false,
       {req("n", PType::integer), req("k", PType::integer), req("z", PType::reals),
        req("truncation", PType::integer)}},
      {"error_envelope", false,
       {choice("kind", {"thm13", "cor14", "thm15", "thm21"}, ""), opt("s", PType::real, ""),
        opt("r", PType::real, ""), opt("d", PType::real, ""), opt("q", PType::real, ""),
        opt("eps", PType::real, ""), opt("rho", PType::real, ""), opt("rho0", PType::real, ""),
        opt("T", PType::real, ""), opt("R", PType::real, ""), opt("p", PType::real, ""),
        opt("a_norm", PType::real, ""), opt("gamma", PType::real, "")}},
  };
  return t;
}

const OpSchema* find_op(const std::string& name) {
  for (const auto& o : op_table())
    if (name == o.name) return &o;
  return nullptr;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Reason::invalid_argument, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// (kind, whitespace-joined entries) of a form file, comments dropped.
std::pair<std::string, std::string> flatten_form(const std::string& text) {
  std::istringstream in(text);
  std::string line, kind, entries;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.rfind("kind:", 0) == 0) {
      kind = trim(line.substr(5));
      continue;
    }
    if (!entries.empty()) entries += ' ';
    entries += line;
  }
  return {kind, entries};
}

bool valid_value(const ParamSpec& p, const std::string& v) {
  switch (p.type) {
    case PType::real: return (v.empty() && !p.required) || parse_real(v).has_value();
    case PType::reals: return parse_reals(v).has_value();
    case PType::integer: return parse_integer(v).has_value();
    case PType::boolean: return parse_bool(v).has_value();
    case PType::text: return true;
    case PType::choice: return std::find(p.choices.begin(), p.choices.end(), v) != p.choices.end();
  }
  return false;
}

const char* type_name(PType t) {
  switch (t) {
    case PType::real: return "a real number";
    case PType::reals: return "a comma-separated list of reals";
    case PType::integer: return "an integer";
    case PType::boolean: return "true or false";
    case PType::text: return "text";
    case PType::choice: return "one of";
  }
  return "";
}

void need(const Params& p, const std::string& k, const std::string& why) {
  if (!p.has(k) || trim(p.text(k)).empty()) fail(Reason::invalid_argument, "params." + k + ": required " + why);
}

// Requirements that depend on other parameters.
void cross_check(const ExperimentConfig& cfg) {
  Params p(cfg.params);
  auto positive = [&](const std::string& k) {
    if (p.has(k) && !p.text(k).empty() && !(p.real(k) > 0))
      fail(Reason::invalid_argument, "params." + k + ": must be > 0");
  };
  auto nonempty = [&](const std::string& k) {
    if (p.reals(k).empty()) fail(Reason::invalid_argument, "params." + k + ": list must not be empty");
  };
  switch (cfg.kind) {
    case Kind::delta_curve:
    case Kind::gamma_curve:
      nonempty("s");
      break;
    case Kind::gap_curve:
      if (p.text("mode") == "positive") {
        need(p, "tau", "when mode = positive");
        need(p, "horizon", "when mode = positive");
        nonempty("tau");
        positive("horizon");
      } else {
        need(p, "r", "when mode = indefinite");
        need(p, "window_lo", "when mode = indefinite");
        need(p, "window_hi", "when mode = indefinite");
        nonempty("r");
        if (!(p.real("window_lo") <= p.real("window_hi")))
          fail(Reason::invalid_argument, "params.window_lo: must not exceed window_hi");
      }
      break;
    case Kind::expansion:
      nonempty("s");
      if (p.integer("samples") <= 0) fail(Reason::invalid_argument, "params.samples: must be > 0");
      break;
    case Kind::thm51:
      nonempty("T");
      break;
    case Kind::rationality:
      if (p.reals("r").size() < 3) fail(Reason::invalid_argument, "params.r: at least three radii");
      break;
    case Kind::volume8:
      if (p.text("mode") != "limit") {
        need(p, "R", "when mode = " + p.text("mode"));
        nonempty("R");
      }
      if (p.text("mode") == "envelope") need(p, "lambda", "when mode = envelope");
      if (p.integer("samples") <= 0) fail(Reason::invalid_argument, "params.samples: must be > 0");
      break;
    case Kind::raw_op:
      break;
  }
}

}  // namespace

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string c;
  while (std::getline(ss, c, ','))
    if (!trim(c).empty()) out.push_back(trim(c));
  return out;
}

std::optional<double> parse_real(const std::string& text) {
  std::string s = trim(text);
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::vector<double>> parse_reals(const std::string& text) {
  std::vector<double> out;
  std::string s = trim(text);
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto v = parse_real(item);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  if (s.back() == ',') return std::nullopt;
  return out;
}

std::optional<long long> parse_integer(const std::string& text) {
  std::string s = trim(text);
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    // accept integral floats such as 1e6
    auto r = parse_real(s);
    if (!r || *r != std::floor(*r) || std::fabs(*r) > 9.0e18) return std::nullopt;
    return static_cast<long long>(*r);
  }
  return v;
}

std::optional<bool> parse_bool(const std::string& text) {
  std::string s = trim(text);
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  return std::nullopt;
}

double Params::real(const std::string& k) const {
  auto v = maybe_real(k);
  if (!v) fail(Reason::invalid_argument, "params." + k + ": missing");
  return *v;
}
std::optional<double> Params::maybe_real(const std::string& k) const {
  auto it = m_.find(k);
  if (it == m_.end()) return std::nullopt;
  return parse_real(it->second);
}
std::vector<double> Params::reals(const std::string& k) const {
  auto it = m_.find(k);
  if (it == m_.end()) return {};
  return parse_reals(it->second).value_or(std::vector<double>{});
}
long long Params::integer(const std::string& k) const {
  auto v = parse_integer(text(k));
  if (!v) fail(Reason::invalid_argument, "params." + k + ": not an integer");
  return *v;
}
bool Params::boolean(const std::string& k) const { return parse_bool(text(k)).value_or(false); }
const std::string& Params::text(const std::string& k) const {
  auto it = m_.find(k);
  if (it == m_.end()) fail(Reason::invalid_argument, "params." + k + ": missing");
  return it->second;
}
bool Params::has(const std::string& k) const { return m_.count(k) != 0; }

const char* kind_name(Kind k) {
  for (const auto& [kk, n] : kKinds)
    if (kk == k) return n;
  return "?";
}

std::optional<Kind> parse_kind(const std::string& name) {
  for (const auto& [kk, n] : kKinds)
    if (name == n) return kk;
  return std::nullopt;
}

std::vector<std::string> kind_names() {
  std::vector<std::string> out;
  for (const auto& kv : kKinds) out.emplace_back(kv.second);
  return out;
}

std::vector<std::string> raw_op_names() {
  std::vector<std::string> out;
  for (const auto& o : op_table()) out.emplace_back(o.name);
  return out;
}

std::vector<ParamSpec> schema_for(Kind kind, const std::string& op) {
  switch (kind) {
    case Kind::delta_curve:
      return {req("s", PType::reals), kShift, kNormalize,
              choice("method", {"auto", "enumeration", "diagonal-dp"}, "auto")};
    case Kind::gamma_curve:
      return {req("s", PType::reals),
              opt("T", PType::real, "4"),
              opt("t_step", PType::real, "0"),
              opt("fft_oversample", PType::integer, "4"),
              opt("refine_rounds", PType::integer, "40"),
              opt("top", PType::integer, "8"),
              opt("a_grid", PType::integer, "4"),
              opt("mc_samples", PType::integer, "0"),
              kNormalize};
    case Kind::gap_curve:
      return {choice("mode", {"positive", "indefinite"}, "positive"),
              opt("tau", PType::reals, ""),
              opt("horizon", PType::real, ""),
              opt("radius", PType::real, "0"),
              opt("merge_tol", PType::real, "1e-9"),
              opt("r", PType::reals, ""),
              opt("window_lo", PType::real, ""),
              opt("window_hi", PType::real, ""),
              kShift,
              kNormalize};
    case Kind::expansion:
      return {req("R", PType::real),
              req("r", PType::real),
              req("k", PType::integer),
              req("p", PType::integer),
              req("s", PType::reals),
              opt("samples", PType::integer, "1000000"),
              opt("T", PType::real, "4"),
              opt("eps", PType::real, "0.05"),
              opt("strict", PType::boolean, "true"),
              kShift,
              kNormalize};
    case Kind::thm51:
      return {req("s", PType::real),
              req("T", PType::reals),
              opt("kappa", PType::real, "4.5"),
              opt("Lambda", PType::real, "0"),
              opt("lambda_samples", PType::integer, "10000"),
              opt("alpha", PType::real, "0"),
              opt("t_step", PType::real, "0"),
              opt("refine_rounds", PType::integer, "40"),
              opt("a_grid", PType::integer, "4"),
              kNormalize};
    case Kind::rationality:
      return {opt("delta0", PType::real, "0.5"),
              req("delta", PType::real),
              req("r", PType::reals),
              opt("k", PType::integer, "2"),
              opt("t_resolution", PType::integer, "4"),
              opt("refine", PType::integer, "16"),
              kNormalize};
    case Kind::volume8:
      return {choice("mode", {"mc", "limit", "envelope"}, "mc"),
              choice("gauge", {"sup", "euclidean"}, "sup"),
              opt("R", PType::reals, ""),
              opt("I0_lo", PType::real, "0"),
              opt("I0_hi", PType::real, "1"),
              req("I_lo", PType::real),
              req("I_hi", PType::real),
              opt("samples", PType::integer, "1000000"),
              opt("u_nodes", PType::integer, "2048"),
              opt("lambda", PType::real, ""),
              kShift,
              kNormalize};
    case Kind::raw_op: {
      std::vector<ParamSpec> out = {choice("op", raw_op_names(), "")};
      if (const OpSchema* o = find_op(op)) {
        out.insert(out.end(), o->params.begin(), o->params.end());
        if (o->form) out.push_back(kNormalize);
      }
      return out;
    }
  }
  return {};
}

bool needs_form(const ExperimentConfig& cfg) {
  if (cfg.kind != Kind::raw_op) return true;
  auto it = cfg.params.find("op");
  const OpSchema* o = it == cfg.params.end() ? nullptr : find_op(it->second);
  return o && o->form;
}

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError("config: " + e.message(), static_cast<int>(e.line()), 1);
  }
  ExperimentConfig cfg;
  bool have_kind = false;
  std::string form_kind, form_entries;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      fail(Reason::invalid_argument, "config: key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      std::string v = trim(node.data());
      std::string where = section + "." + key;
      if (section == "experiment") {
        if (key == "kind") {
          auto k = parse_kind(v);
          if (!k) fail(Reason::invalid_argument, where + ": unknown experiment kind '" + v + "'");
          cfg.kind = *k;
          have_kind = true;
        } else if (key == "form") {
          cfg.form_path = v;
        } else if (key == "seed" || key == "budget") {
          auto n = parse_integer(v);
          if (!n || *n < 0) fail(Reason::invalid_argument, where + ": expected a nonnegative integer");
          (key == "seed" ? cfg.seed : cfg.budget) = static_cast<std::uint64_t>(*n);
        } else if (key == "workers") {
          auto n = parse_integer(v);
          if (!n || *n < 1 || *n > 1024) fail(Reason::invalid_argument, where + ": expected 1..1024");
          cfg.workers = static_cast<int>(*n);
        } else {
          fail(Reason::invalid_argument, "config: unknown key " + where);
        }
      } else if (section == "params") {
        cfg.params[key] = v;
      } else if (section == "output") {
        if (key == "path") {
          cfg.out = v.empty() ? "-" : v;
        } else if (key == "format") {
          if (v != "csv" && v != "json") fail(Reason::invalid_argument, where + ": expected csv or json");
          cfg.format = v == "csv" ? Format::csv : Format::json;
        } else if (key == "columns") {
          cfg.columns = split_names(v);
        } else {
          fail(Reason::invalid_argument, "config: unknown key " + where);
        }
      } else if (section == "form") {
        if (key == "kind") form_kind = v;
        else if (key == "entries") form_entries = v;
        else fail(Reason::invalid_argument, "config: unknown key " + where);
      } else {
        fail(Reason::invalid_argument, "config: unknown section [" + section + "]");
      }
    }
  }
  if (!have_kind) fail(Reason::invalid_argument, "config: experiment.kind is required");
  if (!form_kind.empty() || !form_entries.empty())
    cfg.form_text = "kind: " + form_kind + "\n" + form_entries + "\n";
  if (!cfg.form_path.empty() && !base_dir.empty() && std::filesystem::path(cfg.form_path).is_relative())
    cfg.form_path = (std::filesystem::path(base_dir) / cfg.form_path).lexically_normal().string();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::string text = read_file(path);
  return parse_config(text, std::filesystem::path(path).parent_path().string());
}

void validate(ExperimentConfig& cfg) {
  for (auto& kv : cfg.params) kv.second = trim(kv.second);
  std::string op;
  if (cfg.kind == Kind::raw_op) {
    auto it = cfg.params.find("op");
    if (it == cfg.params.end()) fail(Reason::invalid_argument, "params.op: required for raw-op");
    op = it->second;
    if (!find_op(op)) fail(Reason::invalid_argument, "params.op: unknown operation '" + op + "'");
  }
  auto schema = schema_for(cfg.kind, op);
  std::set<std::string> known;
  for (const auto& p : schema) known.insert(p.name);
  for (const auto& [k, v] : cfg.params)
    if (!known.count(k))
      fail(Reason::invalid_argument,
           "params." + k + ": not a parameter of " + std::string(kind_name(cfg.kind)) + (op.empty() ? "" : " " + op));
  for (const auto& p : schema) {
    auto it = cfg.params.find(p.name);
    if (it == cfg.params.end()) {
      if (p.required) fail(Reason::invalid_argument, "params." + p.name + ": required");
      cfg.params[p.name] = p.def;
      continue;
    }
    if (!valid_value(p, it->second)) {
      std::string msg = "params." + p.name + ": expected " + type_name(p.type);
      if (p.type == PType::choice) {
        for (std::size_t i = 0; i < p.choices.size(); ++i) msg += (i ? ", " : " ") + p.choices[i];
      }
      fail(Reason::invalid_argument, msg + ", got '" + it->second + "'");
    }
  }
  cross_check(cfg);
  if (needs_form(cfg)) {
    if (cfg.form_text.empty()) {
      if (cfg.form_path.empty()) fail(Reason::invalid_argument, "experiment.form: required");
      cfg.form_text = read_file(cfg.form_path);
    }
    std::string src = cfg.form_path.empty() ? "[form]" : cfg.form_path;
    try {
      build_form(parse_form_text(cfg.form_text), false);
    } catch (const ParseError& e) {
      std::string m = e.what();
      auto at = m.rfind(" at ");
      if (at != std::string::npos) m.resize(at);
      throw ParseError(src + ": " + m, e.line(), e.column());
    }
  }
}

std::string config_text(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "[experiment]\nkind = " << kind_name(cfg.kind) << "\n";
  if (!cfg.form_path.empty()) os << "form = " << cfg.form_path << "\n";
  os << "seed = " << cfg.seed << "\nworkers = " << cfg.workers << "\nbudget = " << cfg.budget << "\n";
  os << "\n[params]\n";
  for (const auto& [k, v] : cfg.params) os << k << " = " << v << "\n";
  os << "\n[output]\npath = " << cfg.out << "\nformat = " << (cfg.format == Format::csv ? "csv" : "json") << "\n";
  if (!cfg.columns.empty()) {
    os << "columns = ";
    for (std::size_t i = 0; i < cfg.columns.size(); ++i) os << (i ? ", " : "") << cfg.columns[i];
    os << "\n";
  }
  if (!cfg.form_text.empty()) {
    auto [kind, entries] = flatten_form(cfg.form_text);
    os << "\n[form]\nkind = " << kind << "\nentries = " << entries << "\n";
  }
  return os.str();
}

}  // namespace qfl::cli
