#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qflab/cli.hpp"

namespace qfl::cli {

enum class PType { real, reals, integer, boolean, text, choice };

struct ParamSpec {
  std::string name;
  PType type = PType::real;
  // Default value text. `required` marks no default; an empty default on a
  // real parameter means "absent".
  std::string def;
  bool required = false;
  std::vector<std::string> choices;
};

// Parameters of an experiment kind, or of the raw-op named by `op`.
std::vector<ParamSpec> schema_for(Kind kind, const std::string& op = "");
bool needs_form(const ExperimentConfig& cfg);

// Typed view of validated parameters.
class Params {
 public:
  explicit Params(const std::map<std::string, std::string>& m) : m_(m) {}
  double real(const std::string& k) const;
  std::optional<double> maybe_real(const std::string& k) const;
  std::vector<double> reals(const std::string& k) const;
  long long integer(const std::string& k) const;
  bool boolean(const std::string& k) const;
  const std::string& text(const std::string& k) const;
  bool has(const std::string& k) const;

 private:
  const std::map<std::string, std::string>& m_;
};

std::optional<double> parse_real(const std::string& s);
std::optional<std::vector<double>> parse_reals(const std::string& s);
std::optional<long long> parse_integer(const std::string& s);
std::optional<bool> parse_bool(const std::string& s);
std::string trim(const std::string& s);

}  // namespace qfl::cli
