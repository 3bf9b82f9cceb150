#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qfl {

using Vec = std::vector<double>;
using Count = unsigned __int128;

enum class Reason {
  invalid_argument,
  not_symmetric,
  degenerate_form,
  not_elliptic,
  not_indefinite,
  not_diagonal,
  budget_exceeded,
  mode_mismatch,
  parse_error,
  hypothesis_violation,
  coverage_gap,
  insufficient_values,
  unknown_column,
};

std::string_view reason_name(Reason r);

class Error : public std::runtime_error {
 public:
  Error(Reason reason, const std::string& msg) : std::runtime_error(msg), reason_(reason) {}
  Reason reason() const { return reason_; }

 private:
  Reason reason_;
};

// Thrown when a computation would exceed its work budget. `visited` is the
// work done before giving up, `required` an estimate of what would be needed
// (0 when unknown).
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& msg, std::uint64_t visited, std::uint64_t required = 0,
                 Count partial = 0)
      : Error(Reason::budget_exceeded, msg), visited_(visited), required_(required), partial_(partial) {}
  std::uint64_t visited() const { return visited_; }
  std::uint64_t required() const { return required_; }
  Count partial() const { return partial_; }

 private:
  std::uint64_t visited_;
  std::uint64_t required_;
  Count partial_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : Error(Reason::parse_error, msg + " at " + std::to_string(line) + ":" + std::to_string(column)),
        line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

[[noreturn]] inline void fail(Reason r, const std::string& msg) { throw Error(r, msg); }
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(Reason::invalid_argument, msg);
}

std::string to_string(Count c);
double to_double(Count c);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

// Independent deterministic stream per (seed, stream) pair.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0);

// Runs fn(worker_index) on `workers` threads (inline when workers <= 1).
template <class Fn>
void run_workers(int workers, Fn&& fn);

}  // namespace qfl

#include "qflab/detail/workers.hpp"
