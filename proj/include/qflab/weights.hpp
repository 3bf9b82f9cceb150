#pragma once

#include <gmpxx.h>

#include <vector>

namespace qfl {

// Uniform weight on {-n..n} convolved `fold` times with itself.
struct WeightTable {
  int fold = 1;
  int n = 0;
  std::vector<double> w;  // w[m + fold*n]

  int half_support() const { return fold * n; }
  double operator()(int m) const {
    int h = half_support();
    return (m < -h || m > h) ? 0.0 : w[static_cast<std::size_t>(m + h)];
  }
};

WeightTable convolve_weights(int n, int fold);

// Exact counts of the convolution of the indicator functions of
// {-h..h} for each h in half_widths; entry i belongs to m = i - sum(h).
std::vector<mpz_class> box_convolution_counts(const std::vector<int>& half_widths);

}  // namespace qfl
