#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qflab/common.hpp"
#include "qflab/forms.hpp"

namespace qfl {

struct GapOptions {
  double radius = 0;       // box radius; 0 derives sqrt((tau + horizon)/q0) + |a|_inf + 1
  double merge_tol = 1e-9;  // relative to max(1, tau + horizon)
  std::uint64_t budget = 2000000000ULL;  // box points, or DP grid bits
  std::size_t sample = 16;  // successor pairs kept in the report
  bool allow_dp = true;
};

enum class GapMethod { value_dp, enumeration };
const char* gap_method_name(GapMethod m);

struct GapWindow {
  double tau = 0, end = 0;
  long double max_gap = 0;
  long double u = 0, v = 0;  // achieving consecutive pair
  std::size_t values = 0;    // distinct values inside the window
  double radius = 0;
  bool complete = true;  // radius at or above the completeness bound
  GapMethod method = GapMethod::enumeration;
  std::vector<std::pair<long double, long double>> successors;  // (s, n(s)) sample
};

// Windowed d(tau; Q, a): max gap between consecutive values of Q[x - a] in
// [tau, tau + horizon]. Exact-surd diagonal forms with integral shift use a
// DP over the integer coordinates of the values on the surd basis.
GapWindow max_gap_positive(const QuadraticForm& form, const ShiftVector& a, double tau, double horizon,
                           const GapOptions& opt = {});

struct GapCurve {
  std::string form;
  Vec a;
  double horizon = 0;
  std::vector<GapWindow> windows;
};

GapCurve gap_curve(const QuadraticForm& form, const ShiftVector& a, const std::vector<double>& taus, double horizon,
                   const GapOptions& opt = {});

struct IndefiniteGap {
  double r = 0;
  Interval window;
  long double d = 0;  // max nearest-successor gap
  long double u = 0, v = 0;
  std::size_t spectrum_size = 0;
};

// d(r) over V = {Q[x - a] : x in B(r)} cap window; the largest value has no
// successor and does not count.
IndefiniteGap max_gap_indefinite(const QuadraticForm& form, const ShiftVector& a, double r, Interval window,
                                 std::uint64_t budget = 200000000, double merge_tol = 1e-9);

// d of an explicit value list (sorted or not): largest successor gap.
long double max_successor_gap(std::vector<long double> values, long double abs_tol = 0);

struct OppenheimTarget {
  double lo = 0, hi = 0;  // open interval (lo, hi)
  bool exclude_zero = false;
};

struct OppenheimStep {
  double r = 0;
  bool hit = false;
  long double min_abs = 0;  // smallest nonzero |Q[x - a]| over x in B(r), x != 0
  std::uint64_t visited = 0;
};

struct OppenheimResult {
  bool found = false;
  double r = 0;
  std::vector<long long> witness;
  long double value = 0;
  std::vector<OppenheimStep> progress;
  std::string detail;
};

// First schedule radius whose box has a value in the target. Exhaustion is
// reported, not thrown.
OppenheimResult oppenheim_scan(const QuadraticForm& form, const ShiftVector& a, const OppenheimTarget& target,
                               const std::vector<double>& r_schedule, std::uint64_t budget = 2000000000ULL);

}  // namespace qfl
