#pragma once

#include <optional>
#include <string>

#include "qflab/common.hpp"
#include "qflab/forms.hpp"
#include "qflab/weights.hpp"

namespace qfl {

enum class PhiMode { factorized, direct, monte_carlo };
const char* mode_name(PhiMode m);

// [sqrt(s)] computed without rounding surprises
int isqrt_floor(double s);

struct PhiOptions {
  PhiMode mode = PhiMode::factorized;
  std::uint64_t samples = 100000;  // mc
  std::uint64_t seed = 1;
  std::uint64_t budget = 10000000;  // direct: number of lattice terms
};

struct PhiValue {
  double value = 0;
  double std_error = 0;  // mc only
};

// |sum_y w3(y) e^{i t Q[y - a]}|, w3 the 3-fold box weight of half width [sqrt s].
PhiValue phi(const QuadraticForm& form, const Vec& a, double t, double s, const PhiOptions& opt = {});

// |sum_x w(x) e^{i t (Q[x] + <b, x>)}| with w the (2k+1)-fold weight of
// half width [r]. Factorized for diagonal forms, direct (within budget)
// otherwise.
double f_sum(const QuadraticForm& form, const Vec& b, double t, double r, int k,
             std::uint64_t budget = 10000000);

// sum_x sum_y e^{2it<Qx,y>} mu~(x) mu~^{*k}(y), mu~ the autocorrelation of
// the box weight of half width [r]. The y-sum is done in closed form.
double phi_symmetrized(const QuadraticForm& form, double t, double r, int k, std::uint64_t budget = 10000000);

// (sin((2n+1)z/2) / ((2n+1) sin(z/2)))^2
double dirichlet_square(int n, double z);

struct ShiftSup {
  double value = 0;
  double a = 0;  // a maximizing shift in one period
};

// sup over a of |sum_m w(m) e^{i t q (m - a)^2}|
ShiftSup coordinate_shift_sup(double q, double t, const WeightTable& w, int oversample = 4, int rounds = 60);

struct TrigProfile {
  double s = 0;
  double T = 0;
  Vec t;
  Vec values;     // sup_a phi_a(t; s) on the grid
  Vec std_error;  // mc only, else empty
  std::string a_grid;
  PhiMode mode = PhiMode::factorized;
  bool heuristic = false;
};

struct GammaOptions {
  double t_step = 0;      // 0: min(1/(4s), (T - s^{-1/2}) / 2^16)
  int fft_oversample = 4;
  int refine_rounds = 40;  // golden iterations (0 disables refinement)
  int top = 8;
  int workers = 1;
  // non-diagonal forms only
  int a_grid = 4;               // points per coordinate in [0,1)^d
  std::uint64_t mc_samples = 0;  // nonzero enables mc when direct is too big
  std::uint64_t budget = 10000000;
  std::uint64_t seed = 1;
};

struct GammaResult {
  double gamma = 0;
  double t_star = 0;
  Vec a_star;
  TrigProfile profile;
  bool heuristic = false;
};

GammaResult gamma_estimate(const QuadraticForm& form, double s, double T, const GammaOptions& opt = {});

// M(t; s)
double mm(double t, double s);

double rho_of_s(double s, double Ts, double gamma, int d, double eps);

struct BasicInequalityReport {
  double max_ratio_pair = 0;
  double max_ratio_single = 0;
  std::uint64_t samples = 0;
  double t_max_pair = 0, tau_max_pair = 0, tau_max_single = 0;
};

// Samples (t, tau) with t uniform in [-t_range, t_range] and |tau|
// log-uniform in [1/s, t_range] with a random sign. a = nullopt uses sup_a
// of each factor separately.
BasicInequalityReport check_basic_inequality(const QuadraticForm& form, const std::optional<Vec>& a, double s,
                                             std::uint64_t samples, std::uint64_t seed, double t_range = 4.0);

struct Lemma64Report {
  double lhs = 0, rhs = 0, ratio = 0;
};

Lemma64Report check_lemma64(int n, int k, const Vec& z, int truncation);

}  // namespace qfl
