#include "qflab/common.hpp"

#include <algorithm>

namespace qfl {

std::string_view reason_name(Reason r) {
  switch (r) {
    case Reason::invalid_argument: return "invalid_argument";
    case Reason::not_symmetric: return "not_symmetric";
    case Reason::degenerate_form: return "degenerate_form";
    case Reason::not_elliptic: return "not_elliptic";
    case Reason::not_indefinite: return "not_indefinite";
    case Reason::not_diagonal: return "not_diagonal";
    case Reason::budget_exceeded: return "budget_exceeded";
    case Reason::mode_mismatch: return "mode_mismatch";
    case Reason::parse_error: return "parse_error";
    case Reason::hypothesis_violation: return "hypothesis_violation";
    case Reason::coverage_gap: return "coverage_gap";
    case Reason::insufficient_values: return "insufficient_values";
    case Reason::unknown_column: return "unknown_column";
  }
  return "unknown";
}

std::string to_string(Count c) {
  if (c == 0) return "0";
  std::string s;
  while (c > 0) {
    s.push_back(char('0' + int(c % 10)));
    c /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

double to_double(Count c) {
  auto hi = static_cast<std::uint64_t>(c >> 64);
  auto lo = static_cast<std::uint64_t>(c);
  return static_cast<double>(hi) * 18446744073709551616.0 + static_cast<double>(lo);
}

static std::uint64_t splitmix(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (stream * 0xd1b54a32d192ed03ULL);
  std::vector<std::uint32_t> words;
  for (int i = 0; i < 4; ++i) {
    std::uint64_t v = splitmix(x);
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace qfl
