// Experiment runner. Exit codes: 0 ok, 1 validation/parse error, 2 budget refusal.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "qflab/cli.hpp"

namespace cli = qfl::cli;

namespace {

void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) qfl::fail(qfl::Reason::invalid_argument, "cannot write " + path);
  out << text;
}

int report_error(const std::exception& e) {
  std::cerr << cli::error_json(e);
  return cli::exit_code(e);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qflab: lattice points, trigonometric sums and gaps of quadratic forms"};
  std::string kind, config_path, form_path, out, format, columns;
  std::uint64_t seed = 0, budget = 0;
  int workers = 0;
  std::vector<std::string> params;
  bool print_config = false, list = false;
  app.add_option("kind", kind, "experiment kind (overrides the config)");
  app.add_option("--config", config_path, "config file");
  app.add_option("--form", form_path, "form file (overrides the config)");
  auto* seed_opt = app.add_option("--seed", seed, "random seed");
  auto* workers_opt = app.add_option("--workers", workers, "worker threads")->check(CLI::Range(1, 1024));
  auto* budget_opt = app.add_option("--budget", budget, "work budget applied to every operation");
  app.add_option("--out", out, "output path, - for stdout");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--columns", columns, "comma-separated CSV columns");
  app.add_option("-p,--param", params, "parameter override key=value (repeatable)");
  app.add_flag("--print-config", print_config, "print the resolved config and exit");
  app.add_flag("--list", list, "list experiment kinds and raw operations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(qfl::Error(qfl::Reason::invalid_argument, e.what()));
  }

  if (list) {
    std::cout << "kinds:";
    for (const auto& k : cli::kind_names()) std::cout << ' ' << k;
    std::cout << "\nraw-op:";
    for (const auto& o : cli::raw_op_names()) std::cout << ' ' << o;
    std::cout << "\n";
    return 0;
  }

  try {
    cli::ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = cli::load_config(config_path);
    } else if (kind.empty()) {
      qfl::fail(qfl::Reason::invalid_argument, "no experiment: give a kind or --config");
    }
    if (!kind.empty()) {
      auto k = cli::parse_kind(kind);
      if (!k) qfl::fail(qfl::Reason::invalid_argument, "unknown experiment kind '" + kind + "'");
      cfg.kind = *k;
    }
    if (!form_path.empty()) {
      cfg.form_path = form_path;
      cfg.form_text.clear();
    }
    if (*seed_opt) cfg.seed = seed;
    if (*workers_opt) cfg.workers = workers;
    if (*budget_opt) cfg.budget = budget;
    if (!out.empty()) cfg.out = out;
    if (!format.empty()) cfg.format = format == "csv" ? cli::Format::csv : cli::Format::json;
    if (!columns.empty()) cfg.columns = cli::split_names(columns);
    for (const auto& kv : params) {
      auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0)
        qfl::fail(qfl::Reason::invalid_argument, "--param expects key=value, got '" + kv + "'");
      cfg.params[kv.substr(0, eq)] = kv.substr(eq + 1);
    }

    if (print_config) {
      cli::validate(cfg);
      std::cout << cli::config_text(cfg);
      return 0;
    }
    auto report = cli::run(cfg);
    write_output(report.config.out,
                 report.config.format == cli::Format::csv ? cli::to_csv(report) : cli::to_json(report));
  } catch (const std::exception& e) {
    return report_error(e);
  }
  return 0;
}
