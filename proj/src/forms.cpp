#include "qflab/forms.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace qfl {

ExactMatrix ExactMatrix::diagonal(const std::vector<ExactScalar>& diag) {
  ExactMatrix m(static_cast<int>(diag.size()));
  for (int i = 0; i < m.dim; ++i) m(i, i) = diag[i];
  return m;
}

Eigen::MatrixXd ExactMatrix::to_double() const {
  Eigen::MatrixXd out(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) out(i, j) = (*this)(i, j).to_double();
  return out;
}

double QuadraticForm::operator()(const Vec& x) const {
  double acc = 0;
  for (int i = 0; i < dim_; ++i) {
    double row = 0;
    for (int j = 0; j < dim_; ++j) row += matrix_(i, j) * x[j];
    acc += x[i] * row;
  }
  return acc;
}

double QuadraticForm::shifted(const Vec& x, const Vec& a) const {
  return static_cast<double>(shifted_ld(x, a));
}

long double QuadraticForm::shifted_ld(const Vec& x, const Vec& a) const {
  long double acc = 0;
  for (int i = 0; i < dim_; ++i) {
    long double yi = static_cast<long double>(x[i]) - a[i];
    long double row = 0;
    for (int j = 0; j < dim_; ++j) row += matrix_(i, j) * (static_cast<long double>(x[j]) - a[j]);
    acc += yi * row;
  }
  return acc;
}

double QuadraticForm::eigen_evaluate(const Vec& x) const {
  Eigen::Map<const Eigen::VectorXd> v(x.data(), dim_);
  Eigen::VectorXd y = eigenvectors_.transpose() * v;
  double acc = 0;
  for (int i = 0; i < dim_; ++i) acc += eigenvalues_(i) * y(i) * y(i);
  return acc;
}

Vec QuadraticForm::diagonal() const {
  Vec out(dim_);
  for (int i = 0; i < dim_; ++i) out[i] = matrix_(i, i);
  return out;
}

double QuadraticForm::det() const {
  double p = 1;
  for (int i = 0; i < dim_; ++i) p *= eigenvalues_(i);
  return p;
}

std::string QuadraticForm::describe() const {
  std::ostringstream os;
  os << "d=" << dim_ << " sig=(" << signature_.positive << "," << signature_.negative << ")"
     << " q0=" << q0_ << " q=" << q_ << (diagonal_ ? " diagonal" : "");
  return os.str();
}

namespace {

void finish_spectrum(QuadraticForm& f, Eigen::MatrixXd& m, Eigen::VectorXd& evals, Eigen::MatrixXd& evecs,
                     double& q0, double& q, Signature& sig) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) fail(Reason::invalid_argument, "eigensolver failed");
  evals = es.eigenvalues();
  evecs = es.eigenvectors();
  q0 = std::numeric_limits<double>::infinity();
  q = 0;
  for (int i = 0; i < evals.size(); ++i) {
    q0 = std::min(q0, std::abs(evals(i)));
    q = std::max(q, std::abs(evals(i)));
  }
  if (!(q > 0) || q0 <= 1e-10 * q) fail(Reason::degenerate_form, "degenerate form");
  sig = {};
  for (int i = 0; i < evals.size(); ++i) (evals(i) > 0 ? sig.positive : sig.negative)++;
  (void)f;
}

bool off_diagonal_zero(const Eigen::MatrixXd& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

}  // namespace

QuadraticForm build_form(const FormEntries& entries, bool normalize) {
  QuadraticForm f;
  if (auto* ex = std::get_if<ExactMatrix>(&entries)) {
    if (ex->dim < 1 || ex->entries.size() != static_cast<std::size_t>(ex->dim) * ex->dim)
      fail(Reason::invalid_argument, "matrix must be d x d with d >= 1");
    for (int i = 0; i < ex->dim; ++i)
      for (int j = i + 1; j < ex->dim; ++j)
        if ((*ex)(i, j) != (*ex)(j, i))
          fail(Reason::not_symmetric, "not symmetric: entry (" + std::to_string(i) + "," + std::to_string(j) + ")");
    f.dim_ = ex->dim;
    f.exact_ = *ex;
    f.matrix_ = ex->to_double();
  } else {
    const auto& m = std::get<Eigen::MatrixXd>(entries);
    if (m.rows() < 1 || m.rows() != m.cols()) fail(Reason::invalid_argument, "matrix must be d x d with d >= 1");
    double scale = m.cwiseAbs().maxCoeff();
    double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (!std::isfinite(scale) || asym > 1e-9 * scale) fail(Reason::not_symmetric, "not symmetric");
    f.dim_ = static_cast<int>(m.rows());
    f.matrix_ = 0.5 * (m + m.transpose());
  }
  f.diagonal_ = off_diagonal_zero(f.matrix_);
  finish_spectrum(f, f.matrix_, f.eigenvalues_, f.eigenvectors_, f.q0_, f.q_, f.signature_);

  if (normalize) {
    if (f.exact_ && f.diagonal_) {
      // exact division by the smallest |q_j|
      int best = 0;
      for (int i = 1; i < f.dim_; ++i)
        if (std::abs(f.matrix_(i, i)) < std::abs(f.matrix_(best, best))) best = i;
      ExactScalar q0e = (*f.exact_)(best, best);
      if (q0e.sign() < 0) q0e = -q0e;
      ExactScalar inv = q0e.inverse();
      for (auto& e : f.exact_->entries)
        if (!e.is_zero()) e *= inv;
      f.matrix_ = f.exact_->to_double();
    } else {
      if (f.exact_) f.exact_scale_ *= f.q0_;
      f.matrix_ /= f.q0_;
    }
    finish_spectrum(f, f.matrix_, f.eigenvalues_, f.eigenvectors_, f.q0_, f.q_, f.signature_);
  }
  return f;
}

QuadraticForm diagonal_form(const std::vector<ExactScalar>& diag, bool normalize) {
  return build_form(ExactMatrix::diagonal(diag), normalize);
}

QuadraticForm diagonal_form(const Vec& diag, bool normalize) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<int>(diag.size()), static_cast<int>(diag.size()));
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return build_form(m, normalize);
}

// c * Q; for exact forms the exact entries are scaled (any float scale from
// normalization is dropped).
QuadraticForm scaled(const QuadraticForm& form, const ExactScalar& c) {
  if (form.exact()) {
    ExactMatrix m = *form.exact();
    for (auto& e : m.entries)
      if (!e.is_zero()) e *= c;
    return build_form(m, false);
  }
  return build_form(Eigen::MatrixXd(form.matrix() * c.to_double()), false);
}

RationalityVerdict classify_rationality(const QuadraticForm& form) {
  RationalityVerdict v;
  if (!form.exact()) {
    v.kind = RationalityKind::unknown;
    v.detail = "float entries";
    return v;
  }
  const ExactMatrix& m = *form.exact();
  int d = m.dim;
  int bi = -1, bj = -1;
  for (int i = 0; i < d && bi < 0; ++i)
    for (int j = 0; j < d; ++j)
      if (!m(i, j).is_zero()) {
        bi = i;
        bj = j;
        break;
      }
  ExactScalar base = m(bi, bj);
  if (base.sign() < 0) base = -base;
  mpz_class num_gcd = 0, den_lcm = 1;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (m(i, j).is_zero()) continue;
      auto r = m(i, j).rational_ratio(base);
      if (!r) {
        v.kind = RationalityKind::irrational;
        v.witness_a = {bi, bj};
        v.witness_b = {i, j};
        v.detail = "entry (" + std::to_string(i) + "," + std::to_string(j) + ") / entry (" + std::to_string(bi) +
                   "," + std::to_string(bj) + ") = " + (m(i, j) / m(bi, bj)).to_string() + " is irrational";
        return v;
      }
      mpz_class n = abs(r->get_num());
      num_gcd = gcd(num_gcd, n);
      den_lcm = lcm(den_lcm, r->get_den());
    }
  // entries = base * B with B rational; minimal c with c*B integral is
  // lcm(den)/gcd(num), and M = c / base.
  mpq_class c(den_lcm, num_gcd);
  c.canonicalize();
  v.kind = RationalityKind::rational;
  v.M = ExactScalar(c) * base.inverse();
  v.M_value = v.M.to_double() * form.exact_scale();
  v.detail = "M = " + v.M.to_string();
  return v;
}

FormEntries parse_form_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::string kind;
  struct Tok {
    std::string s;
    int line, col;
  };
  std::vector<Tok> toks;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line.compare(first, 5, "kind:") == 0) {
      if (!kind.empty()) throw ParseError("duplicate kind header", lineno, static_cast<int>(first) + 1);
      std::string k = line.substr(first + 5);
      k.erase(0, k.find_first_not_of(" \t"));
      k.erase(k.find_last_not_of(" \t\r") + 1);
      if (k != "exact" && k != "float")
        throw ParseError("kind must be exact or float", lineno, static_cast<int>(first) + 6);
      kind = k;
      continue;
    }
    if (kind.empty()) throw ParseError("missing 'kind: exact|float' header", lineno, static_cast<int>(first) + 1);
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == ',' || line[i] == '\r')) ++i;
      if (i >= line.size()) break;
      std::size_t start = i;
      int depth = 0;
      while (i < line.size()) {
        char ch = line[i];
        if (ch == '(') ++depth;
        if (ch == ')') --depth;
        if (depth == 0 && (ch == ' ' || ch == '\t' || ch == ',' || ch == '\r')) break;
        ++i;
      }
      toks.push_back({line.substr(start, i - start), lineno, static_cast<int>(start) + 1});
    }
  }
  if (kind.empty()) throw ParseError("missing 'kind: exact|float' header", lineno, 1);
  std::size_t n = toks.size();
  int d = static_cast<int>(std::llround(std::sqrt(static_cast<double>(n))));
  if (n == 0 || static_cast<std::size_t>(d) * d != n)
    throw ParseError("entry count " + std::to_string(n) + " is not a perfect square", lineno, 1);
  ExactMatrix ex(d);
  Eigen::MatrixXd fl(d, d);
  for (std::size_t k = 0; k < n; ++k) {
    const Tok& t = toks[k];
    ExactScalar v;
    try {
      v = ExactScalar::parse(t.s);
    } catch (const ParseError& e) {
      throw ParseError("bad scalar '" + t.s + "'", t.line, t.col + e.column() - 1);
    }
    ex.entries[k] = v;
    fl(static_cast<int>(k) / d, static_cast<int>(k) % d) = v.to_double();
  }
  if (kind == "exact") return ex;
  return fl;
}

QuadraticForm load_form_file(const std::string& path, bool normalize) {
  std::ifstream in(path);
  if (!in) fail(Reason::invalid_argument, "cannot open form file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return build_form(parse_form_text(ss.str()), normalize);
}

Vec ShiftVector::reduced() const {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = a[i] - std::floor(a[i]);
    if (out[i] >= 1.0) out[i] = 0.0;
  }
  return out;
}

std::vector<long long> ShiftVector::integer_part() const {
  std::vector<long long> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = static_cast<long long>(std::floor(a[i]));
  return out;
}

}  // namespace qfl
