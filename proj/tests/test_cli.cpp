#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "qflab/cli.hpp"
#include "qflab/lattice.hpp"

using namespace qfl;
using namespace qfl::cli;

namespace {

std::string temp_file(const std::string& name, const std::string& text) {
  auto dir = std::filesystem::temp_directory_path() / "qflab_cli_tests";
  std::filesystem::create_directories(dir);
  auto p = dir / name;
  std::ofstream(p) << text;
  return p.string();
}

ExperimentConfig make(Kind k, std::map<std::string, std::string> params, const std::string& form_text = "") {
  ExperimentConfig c;
  c.kind = k;
  c.params = std::move(params);
  c.form_text = form_text;
  return c;
}

const std::string kIdentity2 = "kind: exact\n1 0\n0 1\n";

long long brute_disc_count(double s) {
  long long n = 0;
  int r = static_cast<int>(std::sqrt(s)) + 1;
  for (int x = -r; x <= r; ++x)
    for (int y = -r; y <= r; ++y)
      if (x * x + y * y <= s) ++n;
  return n;
}

template <class F>
Reason reason_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.reason();
  }
  FAIL("no error thrown");
  return Reason::invalid_argument;
}

}  // namespace

TEST_CASE("config text parsing") {
  std::string text =
      "# comment\n[experiment]\nkind = delta-curve\nform = f.txt\nseed = 7\nworkers = 2\nbudget = 1000\n"
      "\n[params]\ns = 25, 100\n\n[output]\nformat = json\ncolumns = s, count\n";
  auto c = parse_config(text, "/tmp/base");
  CHECK(c.kind == Kind::delta_curve);
  CHECK(c.form_path == "/tmp/base/f.txt");
  CHECK(c.seed == 7);
  CHECK(c.workers == 2);
  CHECK(c.budget == 1000);
  CHECK(c.format == Format::json);
  CHECK(c.columns == std::vector<std::string>{"s", "count"});
  CHECK(c.params.at("s") == "25, 100");

  CHECK(reason_of([] { parse_config("[experiment]\nkind = nope\n"); }) == Reason::invalid_argument);
  CHECK(reason_of([] { parse_config("[params]\ns = 1\n"); }) == Reason::invalid_argument);  // no kind
  CHECK(reason_of([] { parse_config("[experiment]\nkind = raw-op\n[extra]\nx = 1\n"); }) ==
        Reason::invalid_argument);
  CHECK(reason_of([] { parse_config("[experiment]\nkind = raw-op\nworkers = 0\n"); }) == Reason::invalid_argument);
  try {
    parse_config("[experiment]\nkind = raw-op\nthis line has no equals sign\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("config validation") {
  auto c = make(Kind::delta_curve, {{"s", "25"}}, kIdentity2);
  validate(c);
  CHECK(c.params.at("method") == "auto");
  CHECK(c.params.at("normalize") == "false");

  auto bad_type = make(Kind::delta_curve, {{"s", "25, x"}}, kIdentity2);
  CHECK(reason_of([&] { validate(bad_type); }) == Reason::invalid_argument);
  auto unknown = make(Kind::delta_curve, {{"s", "25"}, {"t", "1"}}, kIdentity2);
  CHECK(reason_of([&] { validate(unknown); }) == Reason::invalid_argument);
  auto missing = make(Kind::delta_curve, {}, kIdentity2);
  CHECK(reason_of([&] { validate(missing); }) == Reason::invalid_argument);
  auto bad_choice = make(Kind::delta_curve, {{"s", "25"}, {"method", "magic"}}, kIdentity2);
  CHECK(reason_of([&] { validate(bad_choice); }) == Reason::invalid_argument);
  auto no_form = make(Kind::delta_curve, {{"s", "25"}});
  CHECK(reason_of([&] { validate(no_form); }) == Reason::invalid_argument);
  auto gap = make(Kind::gap_curve, {{"mode", "indefinite"}, {"r", "10"}}, kIdentity2);
  CHECK(reason_of([&] { validate(gap); }) == Reason::invalid_argument);  // window missing
  auto probe = make(Kind::rationality, {{"delta", "4"}, {"r", "10, 20"}}, kIdentity2);
  CHECK(reason_of([&] { validate(probe); }) == Reason::invalid_argument);
  auto op = make(Kind::raw_op, {{"op", "nonsense"}});
  CHECK(reason_of([&] { validate(op); }) == Reason::invalid_argument);
  auto formless = make(Kind::raw_op, {{"op", "theta"}, {"s", "10"}});
  validate(formless);
  CHECK(formless.form_text.empty());
}

TEST_CASE("invalid form file reports its location") {
  auto path = temp_file("bad_form.txt", "kind: exact\n1 0\n0 2/0x\n");
  auto c = make(Kind::delta_curve, {{"s", "25"}});
  c.form_path = path;
  try {
    run(c);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() >= 3);
    CHECK(exit_code(e) == 1);
    auto j = nlohmann::json::parse(error_json(e));
    CHECK(j["error"]["reason"] == "parse_error");
    CHECK(j["error"]["line"] == 3);
    CHECK(std::string(j["error"]["message"]).find(path) != std::string::npos);
  }
  auto nonsquare = make(Kind::delta_curve, {{"s", "25"}}, "kind: exact\n1 0 0\n");
  CHECK_THROWS_AS(run(nonsquare), ParseError);
  auto dim = make(Kind::delta_curve, {{"s", "25"}, {"a", "0.5"}}, kIdentity2);
  CHECK(reason_of([&] { run(dim); }) == Reason::invalid_argument);
}

TEST_CASE("delta-curve on the identity") {
  auto path = temp_file("identity2.txt", kIdentity2);
  auto c = make(Kind::delta_curve, {{"s", "25, 100, 57.5"}});
  c.form_path = path;
  auto rep = run(c);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.number(0, "count") == 81);
  CHECK(rep.number(1, "count") == 317);
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    double s = rep.number(i, "s");
    CHECK(rep.number(i, "count") == brute_disc_count(s));
    CHECK(rep.number(i, "volume") == doctest::Approx(M_PI * s).epsilon(1e-12));
  }
  CHECK(rep.version == QFLAB_VERSION);
  CHECK(rep.config.form_text == kIdentity2);
}

TEST_CASE("budget refusal maps to exit code 2") {
  auto c = make(Kind::delta_curve, {{"s", "1e6"}}, kIdentity2);
  c.budget = 100;
  try {
    run(c);
    FAIL("expected a budget refusal");
  } catch (const BudgetExceeded& e) {
    CHECK(exit_code(e) == 2);
    CHECK(nlohmann::json::parse(error_json(e))["error"]["reason"] == "budget_exceeded");
  }
  CHECK(exit_code(Error(Reason::invalid_argument, "x")) == 1);
  CHECK(exit_code(std::runtime_error("x")) == 1);
}

TEST_CASE("reruns are reproducible") {
  auto surd = "kind: exact\n1 0\n0 sqrt(2)\n";
  auto g = make(Kind::gamma_curve, {{"s", "100, 400"}, {"T", "4"}}, surd);
  CHECK(to_csv(run(g)) == to_csv(run(g)));

  // monte carlo paths: same seed and workers give identical bytes
  auto v = make(Kind::volume8, {{"R", "8"}, {"I_lo", "-0.1"}, {"I_hi", "0.1"}, {"samples", "20000"}},
                "kind: exact\n1 0 0\n0 -1 0\n0 0 -1\n");
  v.workers = 2;
  std::string first = to_csv(run(v));
  CHECK(first == to_csv(run(v)));
  v.seed = 2;
  CHECK(first != to_csv(run(v)));
}

TEST_CASE("config echo reruns the experiment") {
  auto c = make(Kind::gap_curve, {{"mode", "indefinite"}, {"r", "10, 20"}, {"window_lo", "-10"}, {"window_hi", "10"}},
                "kind: exact\n# comment\n1 0\n0 -sqrt(2)\n");
  auto rep = run(c);
  auto again = parse_config(config_text(rep.config));
  auto rep2 = run(again);
  CHECK(to_csv(rep) == to_csv(rep2));
  CHECK(rep2.config.params == rep.config.params);

  auto j = nlohmann::json::parse(to_json(rep));
  CHECK(j["config"]["kind"] == "gap-curve");
  CHECK(j["rows"].size() == 2);
  CHECK(j["rows"][0]["r"] == 10.0);
  CHECK(to_csv(run(parse_config(std::string(j["config"]["text"])))) == to_csv(rep));
}

TEST_CASE("emit_plotdata") {
  auto c = make(Kind::delta_curve, {{"s", "25, 100"}}, kIdentity2);
  auto rep = run(c);
  CHECK(emit_plotdata(rep, {"s", "count"}) == "s,count\n25,81\n100,317\n");
  CHECK(emit_plotdata(rep, {"count", "s"}) == "count,s\n81,25\n317,100\n");
  std::string two = emit_plotdata(rep, {"s", "delta"});
  CHECK(two.rfind("s,delta\n25,", 0) == 0);
  // 17 significant digits round-trip the double
  auto line = two.substr(two.find("\n25,") + 4);
  line = line.substr(0, line.find('\n'));
  CHECK(std::stod(line) == rep.number(0, "delta"));
  CHECK(line.size() >= 17);
  CHECK(reason_of([&] { emit_plotdata(rep, {"s", "nope"}); }) == Reason::unknown_column);

  ExperimentReport empty;
  empty.columns = {"s", "delta"};
  CHECK(emit_plotdata(empty, {"s", "delta"}) == "s,delta\n");
  CHECK(emit_plotdata(empty, {}) == "\n");

  ExperimentReport quoted;
  quoted.columns = {"a", "b"};
  quoted.rows.push_back({Cell("x,y"), Cell("say \"hi\"")});
  quoted.rows.push_back({Cell(), Cell(true)});
  CHECK(emit_plotdata(quoted, {"a", "b"}) == "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n,true\n");

  c.columns = {"count"};
  CHECK(to_csv(run(c)) == "count\n81\n317\n");
}

TEST_CASE("raw operations") {
  auto d = run(make(Kind::raw_op, {{"op", "dirichlet_approx"}, {"v", "1.4142135623730951"}, {"N", "10"}}));
  CHECK(d.number(0, "q") == 5);
  CHECK(std::get<std::string>(d.rows[0][d.column("u")].v) == "7");
  auto th = run(make(Kind::raw_op, {{"op", "mm"}, {"t", "2"}, {"s", "100"}}));
  CHECK(th.number(0, "M") == doctest::Approx(2));
  auto ce = run(make(Kind::raw_op, {{"op", "count_ellipsoid"}, {"s", "100"}, {"method", "enumeration"}}, kIdentity2));
  CHECK(ce.number(0, "count") == 317);
  auto ev = run(make(Kind::raw_op, {{"op", "enumerate_values"}, {"r", "2"}, {"alpha", "0"}, {"beta", "5"}}, kIdentity2));
  // x^2 + y^2 in (0, 5] over |x|, |y| <= 2: 1, 2, 4, 5
  REQUIRE(ev.rows.size() == 4);
  CHECK(ev.number(3, "value") == 5);
  CHECK(ev.number(3, "multiplicity") == 8);
  auto cls = run(make(Kind::raw_op, {{"op", "classify_rationality"}}, "kind: exact\n1 0\n0 sqrt(2)\n"));
  CHECK(std::get<std::string>(cls.rows[0][0].v) == "irrational");
  auto gap = run(make(Kind::raw_op,
                      {{"op", "max_gap_indefinite"}, {"r", "10"}, {"window_lo", "-20"}, {"window_hi", "20"}},
                      "kind: exact\n1 0\n0 -1\n"));
  CHECK(gap.number(0, "d") == 2);
  auto refused = make(Kind::raw_op, {{"op", "successive_minima"}, {"t", "1"}, {"r", "1"}, {"mode", "exact"}},
                      "kind: exact\n1 0 0 0 0\n0 1 0 0 0\n0 0 1 0 0\n0 0 0 1 0\n0 0 0 0 1\n");
  CHECK_THROWS(run(refused));
}
