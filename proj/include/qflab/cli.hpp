#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qflab/common.hpp"

namespace qfl::cli {

enum class Kind { delta_curve, gamma_curve, gap_curve, expansion, thm51, rationality, volume8, raw_op };
enum class Format { csv, json };

const char* kind_name(Kind k);
std::optional<Kind> parse_kind(const std::string& name);
std::vector<std::string> kind_names();
std::vector<std::string> raw_op_names();
// Comma-separated names, blanks dropped.
std::vector<std::string> split_names(const std::string& text);

struct ExperimentConfig {
  Kind kind = Kind::raw_op;
  std::string form_path;  // as written in the config
  std::string form_text;  // resolved form file contents; wins over form_path when set
  std::uint64_t seed = 1;
  int workers = 1;
  std::uint64_t budget = 0;  // 0: per-operation defaults
  std::string out = "-";
  Format format = Format::csv;
  std::vector<std::string> columns;  // empty: all
  std::map<std::string, std::string> params;
};

// Flat key-value text with sections [experiment], [params], [output] and an
// optional inline [form] (kind, entries). Relative form paths resolve
// against base_dir. Throws ParseError on syntax, Error on unknown keys.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = "");
ExperimentConfig load_config(const std::string& path);

// Checks every parameter against the schema of the experiment kind, fills
// defaults and reads the form file into form_text. Error(invalid_argument)
// or ParseError on failure.
void validate(ExperimentConfig& cfg);

// Canonical config text; parse_config(config_text(c)) runs the same experiment.
std::string config_text(const ExperimentConfig& cfg);

struct Cell {
  std::variant<std::monostate, long long, double, std::string> v;
  Cell() = default;
  Cell(long long x) : v(x) {}  // NOLINT
  Cell(int x) : v(static_cast<long long>(x)) {}  // NOLINT
  Cell(std::uint64_t x) : v(static_cast<long long>(x)) {}  // NOLINT
  Cell(long x) : v(static_cast<long long>(x)) {}  // NOLINT
  Cell(double x) : v(x) {}  // NOLINT
  Cell(long double x) : v(static_cast<double>(x)) {}  // NOLINT
  Cell(std::string x) : v(std::move(x)) {}  // NOLINT
  Cell(const char* x) : v(std::string(x)) {}  // NOLINT
  Cell(bool x) : v(std::string(x ? "true" : "false")) {}  // NOLINT
};

Cell count_cell(Count c);

struct ExperimentReport {
  ExperimentConfig config;
  std::string version;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::pair<std::string, double>> fitted;
  std::vector<std::pair<std::string, std::string>> verdicts;
  std::vector<std::string> flags;
  double wall_seconds = 0;

  std::size_t column(const std::string& name) const;  // Error(unknown_column)
  double number(std::size_t row, const std::string& name) const;
  std::optional<double> fitted_value(const std::string& name) const;
  std::optional<std::string> verdict(const std::string& name) const;
};

ExperimentReport run(const ExperimentConfig& cfg);

// Selected columns, in the requested order, as CSV with a header row.
// Floating values carry 17 significant digits.
std::string emit_plotdata(const ExperimentReport& report, const std::vector<std::string>& columns);
// Plot data for the configured columns (all when none are configured).
std::string to_csv(const ExperimentReport& report);
std::string to_json(const ExperimentReport& report);

// 2 budget refusal, 1 validation or parse error, 0 otherwise.
int exit_code(const std::exception& e);
// One-object JSON error record: reason, message and, for parse errors, line and column.
std::string error_json(const std::exception& e);

}  // namespace qfl::cli
