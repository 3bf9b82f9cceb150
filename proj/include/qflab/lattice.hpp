#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "qflab/common.hpp"
#include "qflab/forms.hpp"

namespace qfl {

enum class CountMethod { automatic, enumeration, diagonal_dp, diagonal_dp_approx };
const char* method_name(CountMethod m);

struct CountOptions {
  std::uint64_t budget = std::numeric_limits<std::uint64_t>::max();
  int workers = 1;
  CountMethod method = CountMethod::automatic;
};

struct CountResult {
  Count count = 0;
  double s = 0;
  CountMethod method = CountMethod::enumeration;
  std::uint64_t visited = 0;
  double wall_seconds = 0;
};

// Points on the boundary Q[x-a] = s count as inside; values are compared with
// a relative slack of boundary_slack(s) so integral boundary values are exact.
inline double boundary_slack(double s) { return 1e-11 * (s > 1.0 ? s : 1.0); }

CountResult count_ellipsoid(const QuadraticForm& form, const ShiftVector& a, double s,
                            const CountOptions& opt = {});
// One traversal for several thresholds (any order); result i belongs to s[i].
std::vector<CountResult> count_ellipsoid_multi(const QuadraticForm& form, const ShiftVector& a,
                                               const std::vector<double>& s, const CountOptions& opt = {});
CountResult count_shell(const QuadraticForm& form, const ShiftVector& a, double tau, double delta,
                        const CountOptions& opt = {});

// Whether the exact diagonal DP applies (exact rational diagonal, dyadic
// reduced shift, value axis small enough).
bool diagonal_dp_applicable(const QuadraticForm& form, const ShiftVector& a, double s_max);

struct ValueEntry {
  long double value;
  Count multiplicity;
};

struct ValueSpectrum {
  std::vector<ValueEntry> values;  // strictly increasing
  double r = 0;
  double alpha = 0, beta = 0;  // window (alpha, beta]
  Vec a;
  std::uint64_t visited = 0;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
  // Largest difference of consecutive values (0 if fewer than two).
  long double max_gap() const;
  long double min_gap() const;
  Count total_multiplicity() const;
};

struct EnumerateOptions {
  std::uint64_t budget = std::numeric_limits<std::uint64_t>::max();
  // Relative merge tolerance; values closer than tol*max(1,|alpha|,|beta|)
  // coalesce. Negative selects the default 1e-9.
  double merge_tol = -1;
};

// Values Q[x-a], x in B(r) = {|x|_inf <= r} cap Z^d, that fall into (alpha, beta].
ValueSpectrum enumerate_values(const QuadraticForm& form, const ShiftVector& a, double r, double alpha,
                               double beta, const EnumerateOptions& opt = {});

// Sorts raw (value, multiplicity) pairs and merges neighbours closer than abs_tol.
std::vector<ValueEntry> coalesce_values(std::vector<ValueEntry> raw, long double abs_tol);

}  // namespace qfl
