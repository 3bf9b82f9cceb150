#pragma once

#include <functional>

#include "qflab/common.hpp"
#include "qflab/forms.hpp"
#include "qflab/lattice.hpp"

namespace qfl {

// Gauge with |x|_inf <= M(x) <= m |x|_inf.
class MinkowskiFunctional {
 public:
  enum class Kind { sup, euclidean, weighted_sup, custom };

  static MinkowskiFunctional sup_norm();
  static MinkowskiFunctional euclidean(int d);
  // max_i w_i |x_i|, all w_i >= 1
  static MinkowskiFunctional weighted_sup(Vec weights);
  static MinkowskiFunctional custom(std::function<double(const Vec&)> fn, double m, std::string name);

  double operator()(const Vec& x) const;
  double sandwich() const { return m_; }
  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }

 private:
  Kind kind_ = Kind::sup;
  Vec weights_;
  std::function<double(const Vec&)> fn_;
  double m_ = 1.0;
  std::string name_ = "sup";
};

struct McEstimate {
  double mean = 0;
  double std_error = 0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
};

double unit_ball_volume(int d);
double ellipsoid_volume(const QuadraticForm& form, double s);
double delta_error(const QuadraticForm& form, const ShiftVector& a, double s, const CountOptions& opt = {});
// Same as delta_error but reusing a precomputed count.
double delta_from_count(const QuadraticForm& form, Count count, double s);

// vol{x : M(x) in R*I0, Q[x-a] in I} by uniform sampling of the box
// [-R sup I0, R sup I0]^d.
McEstimate indefinite_volume_mc(const QuadraticForm& form, const ShiftVector& a, const MinkowskiFunctional& M,
                                double R, Interval I0, Interval I, std::uint64_t samples, std::uint64_t seed,
                                int workers = 1);

// Limit of R^{2-d} vol A as R -> infinity, by sampling the sphere product
// and a trapezoid rule in the radial variable.
McEstimate indefinite_limit_formula(const QuadraticForm& form, const MinkowskiFunctional& M, Interval I0,
                                    Interval I, std::uint64_t samples, std::uint64_t seed, int workers = 1,
                                    int u_nodes = 2048);

// M0(y) = M(V diag(|q|^{-1/2}) y) in eigen coordinates.
double rescaled_gauge(const QuadraticForm& form, const MinkowskiFunctional& M, const Vec& y);

struct Lemma82Report {
  McEstimate volume;
  double tau = 0, sigma = 0, a0_norm = 0;
  double upper = 0, lower = 0;
  double ratio_upper = 0;  // volume / upper (0 if upper == 0)
  bool lower_valid = false;
  double ratio_lower = 0;  // volume / lower, only when lower_valid
};

Lemma82Report check_lemma82(const QuadraticForm& form, const ShiftVector& a, const MinkowskiFunctional& M, double R,
                            double lambda, Interval I, std::uint64_t samples, std::uint64_t seed, int workers = 1);

}  // namespace qfl
