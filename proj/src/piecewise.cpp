#include "qflab/piecewise.hpp"

#include <algorithm>

#include "qflab/common.hpp"

namespace qfl {

namespace {

using Poly = std::vector<mpq_class>;

// q(y) = p(y + delta)
Poly shift(const Poly& p, const mpq_class& delta) {
  Poly q;
  for (auto it = p.rbegin(); it != p.rend(); ++it) {
    // q <- q * (y + delta) + c
    Poly next(q.size() + 1);
    for (std::size_t i = 0; i < q.size(); ++i) {
      next[i + 1] += q[i];
      next[i] += q[i] * delta;
    }
    next[0] += *it;
    q = std::move(next);
  }
  return q;
}

mpq_class horner(const Poly& p, const mpq_class& y) {
  mpq_class v = 0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * y + *it;
  return v;
}

// int_0^w p(y) dy
mpq_class integrate(const Poly& p, const mpq_class& w) {
  mpq_class v = 0, wp = w;
  for (std::size_t n = 0; n < p.size(); ++n) {
    v += p[n] * wp / static_cast<long>(n + 1);
    wp *= w;
  }
  return v;
}

Poly sub(const Poly& a, const Poly& b) {
  Poly r(std::max(a.size(), b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
  while (r.size() > 1 && r.back() == 0) r.pop_back();
  return r;
}

}  // namespace

Piecewise Piecewise::box(const mpq_class& h) {
  require(h > 0, "box half-width must be positive");
  Piecewise p;
  p.breaks_ = {-h, h};
  p.pieces_ = {{mpq_class(1) / (2 * h)}};
  p.finish();
  return p;
}

std::vector<mpq_class> Piecewise::local_at(const mpq_class& x, const mpq_class& origin) const {
  if (breaks_.empty() || x < breaks_.front()) return {0};
  if (x >= breaks_.back()) return {tail_};
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - breaks_.begin()) - 1;
  return shift(pieces_[i], origin - breaks_[i]);
}

Piecewise Piecewise::convolve_box(const mpq_class& h) const {
  require(h > 0, "box half-width must be positive");
  require(tail_ == 0, "convolution needs an integrable function");
  Piecewise P = antiderivative();
  std::vector<mpq_class> nb;
  for (const auto& b : breaks_) {
    nb.push_back(b - h);
    nb.push_back(b + h);
  }
  std::sort(nb.begin(), nb.end());
  nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  Piecewise out;
  out.breaks_ = nb;
  const mpq_class scale = mpq_class(1) / (2 * h);
  for (std::size_t j = 0; j + 1 < nb.size(); ++j) {
    mpq_class mid = (nb[j] + nb[j + 1]) / 2;
    Poly plus = P.local_at(mid + h, nb[j] + h);
    Poly minus = P.local_at(mid - h, nb[j] - h);
    Poly d = sub(plus, minus);
    for (auto& c : d) c *= scale;
    out.pieces_.push_back(std::move(d));
  }
  out.finish();
  return out;
}

Piecewise Piecewise::derivative() const {
  Piecewise out;
  out.breaks_ = breaks_;
  for (const auto& p : pieces_) {
    Poly d;
    for (std::size_t n = 1; n < p.size(); ++n) d.push_back(p[n] * static_cast<long>(n));
    if (d.empty()) d.push_back(0);
    out.pieces_.push_back(std::move(d));
  }
  out.finish();
  return out;
}

Piecewise Piecewise::antiderivative() const {
  require(tail_ == 0, "antiderivative needs an integrable function");
  Piecewise out;
  out.breaks_ = breaks_;
  mpq_class acc = 0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const Poly& p = pieces_[i];
    Poly a(p.size() + 1);
    a[0] = acc;
    for (std::size_t n = 0; n < p.size(); ++n) a[n + 1] = p[n] / static_cast<long>(n + 1);
    acc += integrate(p, breaks_[i + 1] - breaks_[i]);
    out.pieces_.push_back(std::move(a));
  }
  out.tail_ = acc;
  out.finish();
  return out;
}

void Piecewise::finish() {
  dbreaks_.clear();
  dpieces_.clear();
  for (const auto& b : breaks_) dbreaks_.push_back(b.get_d());
  for (const auto& p : pieces_) {
    std::vector<double> d;
    for (const auto& c : p) d.push_back(c.get_d());
    dpieces_.push_back(std::move(d));
  }
  dtail_ = tail_.get_d();
  lo_ = dbreaks_.empty() ? 0 : dbreaks_.front();
  hi_ = dbreaks_.empty() ? 0 : dbreaks_.back();
}

double Piecewise::operator()(double x) const {
  if (dbreaks_.empty() || x < lo_) return 0.0;
  if (x >= hi_) return dtail_;
  auto it = std::upper_bound(dbreaks_.begin(), dbreaks_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - dbreaks_.begin()) - 1;
  const auto& p = dpieces_[i];
  double y = x - dbreaks_[i], v = 0;
  for (auto c = p.rbegin(); c != p.rend(); ++c) v = v * y + *c;
  return v;
}

mpq_class Piecewise::exact(const mpq_class& x) const {
  if (breaks_.empty() || x < breaks_.front()) return 0;
  if (x >= breaks_.back()) return tail_;
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - breaks_.begin()) - 1;
  return horner(pieces_[i], x - breaks_[i]);
}

mpq_class Piecewise::integral() const { return moment(0); }

mpq_class Piecewise::moment(int n) const {
  require(tail_ == 0, "moment needs an integrable function");
  require(n >= 0, "moment order must be >= 0");
  mpq_class total = 0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    // p(y) (y + b)^n in y
    Poly xn = {1};
    for (int r = 0; r < n; ++r) {
      Poly next(xn.size() + 1);
      for (std::size_t c = 0; c < xn.size(); ++c) {
        next[c + 1] += xn[c];
        next[c] += xn[c] * breaks_[i];
      }
      xn = std::move(next);
    }
    const Poly& p = pieces_[i];
    Poly prod(p.size() + xn.size() - 1);
    for (std::size_t a = 0; a < p.size(); ++a)
      for (std::size_t b = 0; b < xn.size(); ++b) prod[a + b] += p[a] * xn[b];
    total += integrate(prod, breaks_[i + 1] - breaks_[i]);
  }
  return total;
}

int Piecewise::degree() const {
  int deg = 0;
  for (const auto& p : pieces_) {
    int dp = static_cast<int>(p.size()) - 1;
    while (dp > 0 && p[static_cast<std::size_t>(dp)] == 0) --dp;
    deg = std::max(deg, dp);
  }
  return deg;
}

}  // namespace qfl
