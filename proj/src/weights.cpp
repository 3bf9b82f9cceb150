#include "qflab/weights.hpp"

#include "qflab/common.hpp"

namespace qfl {

std::vector<mpz_class> box_convolution_counts(const std::vector<int>& half_widths) {
  std::vector<mpz_class> cur{mpz_class(1)};
  for (int h : half_widths) {
    require(h >= 0, "half width must be >= 0");
    // sliding box sum through prefix sums
    const std::size_t L = cur.size(), out_len = L + 2 * static_cast<std::size_t>(h);
    std::vector<mpz_class> prefix(L + 1);
    for (std::size_t i = 0; i < L; ++i) prefix[i + 1] = prefix[i] + cur[i];
    std::vector<mpz_class> next(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
      // next[i] = sum cur[j] for j in [i - 2h, i]
      long hi = static_cast<long>(i), lo = hi - 2L * h;
      long a = std::max(lo, 0L), b = std::min(hi, static_cast<long>(L) - 1);
      if (b >= a) next[i] = prefix[b + 1] - prefix[a];
    }
    cur.swap(next);
  }
  return cur;
}

WeightTable convolve_weights(int n, int fold) {
  require(n >= 0, "n must be >= 0");
  require(fold >= 1, "fold must be >= 1");
  WeightTable t;
  t.n = n;
  t.fold = fold;
  auto counts = box_convolution_counts(std::vector<int>(fold, n));
  mpz_class total;
  mpz_ui_pow_ui(total.get_mpz_t(), 2UL * n + 1, static_cast<unsigned long>(fold));
  t.w.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) t.w[i] = mpq_class(counts[i], total).get_d();
  return t;
}

}  // namespace qfl
