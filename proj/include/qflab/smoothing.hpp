#pragma once

#include <gmpxx.h>

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "qflab/common.hpp"
#include "qflab/forms.hpp"
#include "qflab/piecewise.hpp"
#include "qflab/trig.hpp"
#include "qflab/volume.hpp"

namespace qfl {

// Box measure of size R smoothed k times by the box measure of size r, in
// its lattice (mu) and continuous (nu) versions. Everything is a product of
// identical one-dimensional factors.
struct SmoothingScheme {
  double R = 0, r = 0;
  int k = 0;
  int R_floor = 0, r_floor = 0;
  mpq_class R_bar, r_bar;  // [R] + 1/2, [r] + 1/2

  // mu per coordinate: lattice_counts[i] / lattice_denominator at m = i - lattice_half()
  std::vector<mpz_class> lattice_counts;
  mpz_class lattice_denominator;
  std::vector<double> lattice_weights;

  Piecewise density;                 // g, the coordinate factor of D
  std::vector<Piecewise> derivatives;  // g^(n), n = 0..k
  Piecewise cdf;
  Piecewise cell;  // coordinate marginal of the (k+1)-fold cell convolution

  int lattice_half() const { return R_floor + k * r_floor; }
  double weight(int m) const;
  double support() const;  // R_bar + k r_bar
  // D is constant on |x|_inf <= core(); negative when there is no core
  double core() const;
  int lattice_core() const { return R_floor - k * r_floor; }
  double core_value(int d) const;
  double D(const Vec& x) const;
};

// k >= 1 is accepted; r = 0 makes the lattice smoothing a point mass.
SmoothingScheme build_scheme(double R, double r, int k);

// Product of coordinate moments int u^{n_i} of the (k+1)-fold cell
// convolution; zero as soon as one order is odd.
mpq_class moments_pi_exact(int k, const std::vector<int>& orders);
double moments_pi(int k, const std::vector<int>& orders);

struct CorrectionTerm {
  mpq_class coefficient;
  std::vector<int> orders;  // derivative order per coordinate, all even
};

// D_j as a sum of products of coordinate derivatives of g.
class CorrectionDensity {
 public:
  int j = 0, d = 0;
  std::vector<CorrectionTerm> terms;

  double operator()(const Vec& x) const;

 private:
  friend CorrectionDensity correction_density(const SmoothingScheme&, int, int);
  std::vector<Piecewise> derivs_;
  std::vector<double> coef_;
};

// Collects the Sigma** sum over ordered representations of j as a sum of
// even parts >= 2 with moment tensors of the cell convolution.
CorrectionDensity correction_density(const SmoothingScheme& scheme, int d, int j);

// Distribution function of Q[x - a] under mu. Exact weighted lattice sum;
// diagonal forms use a meet-in-the-middle join over coordinate value lists.
double F_mu(const QuadraticForm& form, const ShiftVector& a, double s, const SmoothingScheme& scheme,
            std::uint64_t budget = 100000000);
std::vector<double> F_mu_grid(const QuadraticForm& form, const ShiftVector& a, const std::vector<double>& s,
                              const SmoothingScheme& scheme, std::uint64_t budget = 100000000);
// Exact rational value.
mpq_class F_mu_exact(const QuadraticForm& form, const ShiftVector& a, double s, const SmoothingScheme& scheme,
                     std::uint64_t budget = 100000000);
// F(beta) - F(alpha)
double F_mu_window(const QuadraticForm& form, const ShiftVector& a, double alpha, double beta,
                   const SmoothingScheme& scheme, std::uint64_t budget = 100000000);

struct MonteCarloOptions {
  std::uint64_t samples = 1000000;
  std::uint64_t seed = 1;
  int workers = 1;
};

// F0 under nu and F_j under the signed density D_j. Samples come from nu;
// the last coordinate is integrated exactly given the others.
McEstimate F_nu(const QuadraticForm& form, const ShiftVector& a, double s, const SmoothingScheme& scheme,
                const MonteCarloOptions& mc = {});
McEstimate F_j(const QuadraticForm& form, const ShiftVector& a, double s, const SmoothingScheme& scheme, int j,
               const MonteCarloOptions& mc = {});

struct ExpansionOptions {
  double T = 4;
  double eps = 0.05;
  // false: a violated k >= 2p + 2 is reported in flags instead of thrown
  bool strict = true;
  std::uint64_t budget = 100000000;
  GammaOptions gamma;
};

struct ExpansionPoint {
  double s = 0;
  double F = 0;
  McEstimate F0;
  std::vector<McEstimate> Fj;  // one per order in ExpansionReport::orders
  McEstimate lead;             // F - F0
  McEstimate residual;         // F - F0 - sum F_j
  std::vector<double> fj_ratio;  // |F_j| over R^j r^{-2j} (1 + |a|/r)^j q^{j + d/2}
};

struct ExpansionReport {
  std::vector<int> orders;
  std::vector<ExpansionPoint> points;
  double gamma = 0;
  double envelope = 0;  // remainder bound with unit constant
  double fitted_constant = 0;
  std::vector<std::string> flags;
};

ExpansionReport expansion_residual(const QuadraticForm& form, const ShiftVector& a, const std::vector<double>& s_grid,
                                   const SmoothingScheme& scheme, int p, const MonteCarloOptions& mc = {},
                                   const ExpansionOptions& opt = {});

// int e{t Q[x - a]} mu(dx), diagonal forms.
std::complex<double> F_hat(const QuadraticForm& form, const ShiftVector& a, double t, const SmoothingScheme& scheme);

struct FourierReport {
  double s = 0, T = 0;
  double reconstructed = 0;
  double exact = 0;
  double error = 0;
  double remainder_bound = 0;  // (1/T) int_{-T}^T |F_hat|
  double quadrature_tolerance = 0;
  std::size_t nodes = 0;
  bool within = false;
  std::vector<std::string> flags;
};

// Truncated inversion 1/2 - (1/pi) int_0^T Im(e{-st} F_hat(t)) / t dt, the
// symmetric principal value folded onto (0, T]. t_nodes = 0 picks the node
// count from the largest frequency max|Q[x-a] - s| on the support.
FourierReport fourier_inversion_check(const QuadraticForm& form, const ShiftVector& a, double s,
                                      const SmoothingScheme& scheme, double T, std::size_t t_nodes = 0);

}  // namespace qfl
