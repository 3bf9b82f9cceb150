#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qflab/common.hpp"
#include "qflab/trig.hpp"

namespace qfl {

long long theta(long long s);

enum class Branch { main, trivial };

struct Thm51Bound {
  Branch branch = Branch::trivial;
  double value = 0;
  double threshold = 0;  // right-hand side of the gamma condition
};

// Bound on J = int_{s^{-1/2}}^T phi(t) t^alpha dt with all constants 1.
// Equality in the gamma condition falls to the trivial branch.
Thm51Bound thm51_bound(double gamma, double Lambda, double kappa, double s, double T, double alpha);

// Trapezoid rule on phi(t) t^alpha over the profile points in
// [s^{-1/2}, T]; the piece after the last grid point uses the last value.
double integrate_J(const TrigProfile& profile, double s, double T, double alpha);

struct Cluster {
  double lo = 0, hi = 0;  // first and last sampled point of the run
  std::size_t points = 0;
};

struct Violation {
  double t = 0, t2 = 0;
};

struct ClusterReport {
  int level = 0;
  double delta = 0, rho = 0;
  std::size_t points = 0;
  std::vector<Cluster> clusters;
  std::size_t violation_count = 0;
  std::vector<Violation> violations;  // first few only
};

struct ClusterAnalysis {
  double gamma_normalized = 0;
  int l_gamma = 0;
  int m = 0;
  std::vector<ClusterReport> levels;  // l_gamma..min(m, l_gamma + max_levels - 1), empty sets skipped
  std::size_t total_violations() const;
};

// Level-set analysis of phi / Lambda on the sampled profile.
ClusterAnalysis cluster_structure(const TrigProfile& profile, double s, double kappa, double Lambda,
                                  int max_levels = 64, double alpha = 0);

enum class EnvelopeKind { thm13, cor14, thm15, thm21 };

struct EnvelopeInputs {
  std::optional<double> s, r, d, q, eps, rho, rho0, T, R, p, a_norm, gamma;
};

double error_envelope(EnvelopeKind kind, const EnvelopeInputs& in);

// rho_0(s) = sup of rho(tau) over the supplied grid points tau >= s.
double rho0_from_grid(const std::vector<std::pair<double, double>>& tau_rho, double s);

}  // namespace qfl
