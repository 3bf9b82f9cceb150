#include <cstdio>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "qflab/cli.hpp"

namespace qfl::cli {

namespace {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(const Cell& c) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, long long>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(x);
        } else {
          if (x.find_first_of(",\"\r\n") == std::string::npos) return x;
          std::string out = "\"";
          for (char ch : x) {
            if (ch == '"') out += '"';
            out += ch;
          }
          return out + "\"";
        }
      },
      c.v);
}

nlohmann::ordered_json json_cell(const Cell& c) {
  return std::visit(
      [](const auto& x) -> nlohmann::ordered_json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else return x;
      },
      c.v);
}

}  // namespace

Cell count_cell(Count c) {
  if (c <= static_cast<Count>(std::numeric_limits<long long>::max())) return Cell(static_cast<long long>(c));
  return Cell(to_string(c));
}

std::size_t ExperimentReport::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  fail(Reason::unknown_column, "unknown column '" + name + "'");
}

double ExperimentReport::number(std::size_t row, const std::string& name) const {
  const Cell& c = rows.at(row).at(column(name));
  if (auto p = std::get_if<double>(&c.v)) return *p;
  if (auto p = std::get_if<long long>(&c.v)) return static_cast<double>(*p);
  fail(Reason::invalid_argument, "column '" + name + "' is not numeric");
}

std::optional<double> ExperimentReport::fitted_value(const std::string& name) const {
  for (const auto& [k, v] : fitted)
    if (k == name) return v;
  return std::nullopt;
}

std::optional<std::string> ExperimentReport::verdict(const std::string& name) const {
  for (const auto& [k, v] : verdicts)
    if (k == name) return v;
  return std::nullopt;
}

std::string emit_plotdata(const ExperimentReport& report, const std::vector<std::string>& columns) {
  std::vector<std::size_t> idx;
  for (const auto& c : columns) idx.push_back(report.column(c));
  std::ostringstream os;
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << csv_field(Cell(columns[i]));
  os << "\n";
  for (const auto& row : report.rows) {
    for (std::size_t i = 0; i < idx.size(); ++i) os << (i ? "," : "") << csv_field(row[idx[i]]);
    os << "\n";
  }
  return os.str();
}

std::string to_csv(const ExperimentReport& report) {
  return emit_plotdata(report, report.config.columns.empty() ? report.columns : report.config.columns);
}

std::string to_json(const ExperimentReport& report) {
  using nlohmann::ordered_json;
  const ExperimentConfig& c = report.config;
  ordered_json cfg;
  cfg["kind"] = kind_name(c.kind);
  cfg["form"] = c.form_path;
  cfg["seed"] = c.seed;
  cfg["workers"] = c.workers;
  cfg["budget"] = c.budget;
  ordered_json params = ordered_json::object();
  for (const auto& [k, v] : c.params) params[k] = v;
  cfg["params"] = params;
  cfg["output"] = {{"path", c.out}, {"format", c.format == Format::csv ? "csv" : "json"}, {"columns", c.columns}};
  cfg["form_text"] = c.form_text;
  cfg["text"] = config_text(c);

  ordered_json j;
  j["version"] = report.version;
  j["config"] = cfg;
  j["columns"] = report.columns;
  ordered_json rows = ordered_json::array();
  for (const auto& row : report.rows) {
    ordered_json r = ordered_json::object();
    for (std::size_t i = 0; i < report.columns.size() && i < row.size(); ++i) r[report.columns[i]] = json_cell(row[i]);
    rows.push_back(r);
  }
  j["rows"] = rows;
  ordered_json fitted = ordered_json::object();
  for (const auto& [k, v] : report.fitted) fitted[k] = v;
  j["fitted"] = fitted;
  ordered_json verdicts = ordered_json::object();
  for (const auto& [k, v] : report.verdicts) verdicts[k] = v;
  j["verdicts"] = verdicts;
  j["flags"] = report.flags;
  j["wall_seconds"] = report.wall_seconds;
  return j.dump(2) + "\n";
}

int exit_code(const std::exception& e) {
  if (auto err = dynamic_cast<const Error*>(&e)) return err->reason() == Reason::budget_exceeded ? 2 : 1;
  return 1;
}

std::string error_json(const std::exception& e) {
  nlohmann::ordered_json j;
  j["reason"] = "internal_error";
  if (auto err = dynamic_cast<const Error*>(&e)) j["reason"] = std::string(reason_name(err->reason()));
  else if (dynamic_cast<const std::invalid_argument*>(&e)) j["reason"] = "invalid_argument";
  j["message"] = e.what();
  if (auto pe = dynamic_cast<const ParseError*>(&e)) {
    j["line"] = pe->line();
    j["column"] = pe->column();
  }
  if (auto be = dynamic_cast<const BudgetExceeded*>(&e)) {
    j["visited"] = be->visited();
    j["required"] = be->required();
  }
  j["exit_code"] = exit_code(e);
  return nlohmann::ordered_json{{"error", j}}.dump() + "\n";
}

}  // namespace qfl::cli
