#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qflab/common.hpp"
#include "qflab/forms.hpp"

namespace qfl {

enum class MinimaMode { reduction, exact };

// Successive minima of F(x, m) = max(P |(tQx)_j - m_j|, |x|_inf / P) on Z^2d.
struct MinimaResult {
  double P = 0;
  MinimaMode mode = MinimaMode::reduction;
  std::vector<double> minima;                   // M_1 <= ... <= M_2d
  std::vector<std::vector<long long>> vectors;  // (x, m) attaining each M_s
  // reduction: M_s / lambda_s lies in [1, quality]; exact: 1
  double quality = 1;
  std::uint64_t visited = 0;  // exact mode enumeration size
};

// P = 4r. Exact mode enumerates the sup-norm ball whose radius is the
// largest reduced minimum; refused for 2d > 8.
MinimaResult successive_minima(const QuadraticForm& form, double t, double r, MinimaMode mode,
                               std::uint64_t budget = 200000000);

// F of one lattice vector (x, m)
double minima_norm(const QuadraticForm& form, double t, double P, const std::vector<long long>& y);

// #{x in B(4r) : ||(tQx)_j|| < 1/(4r) for all j}, one m per x.
std::uint64_t count_H(const QuadraticForm& form, double t, double r, std::uint64_t budget = 100000000);

enum class ProbeVerdict { irrational_consistent, rational_consistent, inconclusive };
const char* verdict_name(ProbeVerdict v);

struct ProbeOptions {
  int k = 2;
  // samples per shortest period of the per-coordinate factors
  double t_resolution = 4;
  int refine = 16;  // grid maxima refined by golden search
  int workers = 1;
  std::uint64_t budget = 10000000;  // non-diagonal forms: lattice terms per evaluation
};

struct ProbePoint {
  double r = 0;
  double sup = 0;
  double t_arg = 0;  // where the sup is attained
  std::size_t grid = 0;
};

struct ProbeReport {
  ProbeVerdict verdict = ProbeVerdict::inconclusive;
  std::vector<ProbePoint> curve;
  double decrease = 0;  // first sup / last sup
  std::string detail;
};

// sup over delta0 <= t <= delta of phi_symmetrized(t; r) per schedule entry.
// Thresholds: irrational-consistent when the curve falls by >= 4x and ends
// <= 0.1, rational-consistent when the last two entries stay >= 0.9.
ProbeReport rationality_probe(const QuadraticForm& form, double delta0, double delta,
                              const std::vector<double>& r_schedule, const ProbeOptions& opt = {});

// sup of phi_symmetrized over [lo, hi] at one r
ProbePoint phi_sym_sup(const QuadraticForm& form, double lo, double hi, double r, const ProbeOptions& opt = {});

struct DirichletResult {
  std::int64_t q = 0;
  std::vector<std::int64_t> u;
  double max_error = 0;  // max_s |v_s - u_s / q|
  double bound = 0;      // 1 / (q N^{1/d})
};

// First q in 1..N with |v_s - u_s/q| < 1/(q N^{1/d}) for all s, u_s = round(q v_s).
DirichletResult dirichlet_approx(const Vec& v, std::int64_t N);

}  // namespace qfl
